#include "swgf/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "swgf/error.hpp"
#include "swgf/rng.hpp"
#include "swgf/simd/kernels.hpp"

namespace swgf {

// Shortest augmenting path with dual potentials (Hungarian method in the
// Jonker-Volgenant formulation). Rows are inserted one at a time; each
// insertion runs a Dijkstra-like search over reduced costs.
std::vector<std::size_t> solve_assignment(std::span<const double> cost, std::size_t n) {
  require(cost.size() == n * n, "solve_assignment: cost matrix must be n x n");
  constexpr double kInf = std::numeric_limits<double>::infinity();
  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

  // Column n is a virtual column used as the root of each search.
  std::vector<double> row_pot(n, 0.0), col_pot(n + 1, 0.0), min_slack(n + 1);
  std::vector<std::size_t> col_owner(n + 1, kNone), prev_col(n + 1);
  std::vector<char> used(n + 1);

  for (std::size_t row = 0; row < n; ++row) {
    col_owner[n] = row;
    std::size_t col = n;
    std::fill(min_slack.begin(), min_slack.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[col] = 1;
      const std::size_t i = col_owner[col];
      const double* cost_row = cost.data() + i * n;
      double delta = kInf;
      std::size_t next = kNone;
      for (std::size_t j = 0; j < n; ++j) {
        if (used[j]) continue;
        const double reduced = cost_row[j] - row_pot[i] - col_pot[j];
        if (reduced < min_slack[j]) {
          min_slack[j] = reduced;
          prev_col[j] = col;
        }
        if (min_slack[j] < delta) {
          delta = min_slack[j];
          next = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          row_pot[col_owner[j]] += delta;
          col_pot[j] -= delta;
        } else {
          min_slack[j] -= delta;
        }
      }
      col = next;
    } while (col_owner[col] != kNone);
    // Flip the alternating path back to the root.
    while (col != n) {
      const std::size_t from = prev_col[col];
      col_owner[col] = col_owner[from];
      col = from;
    }
  }

  std::vector<std::size_t> assignment(n);
  for (std::size_t j = 0; j < n; ++j) assignment[col_owner[j]] = j;
  return assignment;
}

W2Result w2_exact(const ParticleMeasure& m, const ParticleMeasure& n) {
  if (m.size() != n.size())
    fail(ErrorKind::kInvalidArgument, "w2_exact: unsupported pair, particle counts differ (" +
                                          std::to_string(m.size()) + " vs " + std::to_string(n.size()) + ")");
  require(m.dim() == n.dim(), "w2_exact: dimension mismatch");
  const std::size_t size = m.size();
  if (size > kMaxExactTransportSize)
    fail(ErrorKind::kInvalidArgument, "w2_exact: " + std::to_string(size) + " particles exceed the cap of " +
                                          std::to_string(kMaxExactTransportSize) + "; subsample both clouds first");
  const std::size_t d = m.dim();

  std::vector<double> target_planes(size * d);
  for (std::size_t j = 0; j < size; ++j) {
    auto p = n.point(j);
    for (std::size_t k = 0; k < d; ++k) target_planes[k * size + j] = p[k];
  }
  std::vector<double> cost(size * size);
  const auto& kernels = simd::active_kernels();
  for (std::size_t i = 0; i < size; ++i) kernels.sq_dist_row(m.point(i), target_planes, {cost.data() + i * size, size});

  W2Result result;
  result.plan.target = solve_assignment(cost, size);
  double total = 0.0;
  for (std::size_t i = 0; i < size; ++i) total += cost[i * size + result.plan.target[i]];
  result.plan.cost = total / static_cast<double>(size);
  result.distance = std::sqrt(result.plan.cost);
  return result;
}

double w2_1d(const ParticleMeasure& m, const ParticleMeasure& n) {
  require(m.dim() == 1 && n.dim() == 1, "w2_1d: both measures must be one-dimensional");
  require(m.size() == n.size(), "w2_1d: particle counts differ");
  std::vector<double> a(m.coords().begin(), m.coords().end());
  std::vector<double> b(n.coords().begin(), n.coords().end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) total += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(total / static_cast<double>(a.size()));
}

namespace {

Eigen::SelfAdjointEigenSolver<Matrix> checked_eigen(const Matrix& s, const char* what) {
  require(s.rows() == s.cols(), std::string(what) + ": matrix must be square");
  const double asym = (s - s.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10 * std::max(1.0, s.cwiseAbs().maxCoeff()))
    fail(ErrorKind::kNumerical, std::string(what) + ": matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (s + s.transpose()));
  const double most_negative = eig.eigenvalues().minCoeff();
  if (most_negative < -1e-10) {
    std::ostringstream msg;
    msg << what << ": matrix is not positive semidefinite (most negative eigenvalue " << most_negative << ")";
    fail(ErrorKind::kNumerical, msg.str());
  }
  return eig;
}

}  // namespace

Matrix psd_sqrt(const Matrix& s) {
  const auto eig = checked_eigen(s, "psd_sqrt");
  // Eigenvalues at round-off level are zeros of a rank-deficient input; their
  // square roots would otherwise inject O(sqrt(eps)) noise.
  const double top = std::max(eig.eigenvalues().cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  const double floor = 64.0 * std::numeric_limits<double>::epsilon() * static_cast<double>(s.rows()) * top;
  const Vector roots = eig.eigenvalues().unaryExpr([floor](double l) { return l > floor ? std::sqrt(l) : 0.0; });
  return eig.eigenvectors() * roots.asDiagonal() * eig.eigenvectors().transpose();
}

double bures_distance(const Matrix& s1, const Matrix& s2) {
  require(s1.rows() == s2.rows() && s1.cols() == s2.cols(), "bures_distance: dimension mismatch");
  // tr((S1^1/2 S2 S1^1/2)^1/2) is the nuclear norm of S1^1/2 S2^1/2, which an
  // SVD resolves without square-rooting near-zero eigenvalues.
  const Matrix product = psd_sqrt(s1) * psd_sqrt(s2);
  const double cross_trace = Eigen::JacobiSVD<Matrix>(product).singularValues().sum();
  const double total = s1.trace() + s2.trace();
  const double squared = total - 2.0 * cross_trace;
  // Below the round-off of the traces the difference carries no information.
  const double resolution = 16.0 * std::numeric_limits<double>::epsilon() * static_cast<double>(s1.rows()) * total;
  return squared <= resolution ? 0.0 : std::sqrt(squared);
}

double gelbrich_lower_bound(const ParticleMeasure& m, const ParticleMeasure& n) {
  require(m.dim() == n.dim(), "gelbrich_lower_bound: dimension mismatch");
  const double mean_gap = (mean(m) - mean(n)).squaredNorm();
  const double bures = bures_distance(covariance(m), covariance(n));
  return std::sqrt(mean_gap + bures * bures);
}

std::vector<std::size_t> subsample_indices(std::size_t n, std::size_t k, std::uint64_t seed) {
  require(k <= n, "subsample_indices: cannot draw more indices than available");
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  CounterRng rng(seed, StreamPurpose::kSubsample);
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.next_u64() % (n - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return pool;
}

}  // namespace swgf
