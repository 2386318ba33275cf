#pragma once

#include <cstdint>
#include <vector>

#include "swgf/measures.hpp"

namespace swgf {

/// Largest particle count accepted by w2_exact. Larger clouds must be
/// subsampled (see subsample_indices).
inline constexpr std::size_t kMaxExactTransportSize = 4096;

/// Optimal coupling between two equal-weight clouds of the same size, given
/// as a permutation: source particle i is sent to target particle target[i].
struct TransportPlan {
  std::vector<std::size_t> target;
  double cost = 0.0;  // (1/N) sum_i |x_i - y_target[i]|^2
};

struct W2Result {
  double distance = 0.0;
  TransportPlan plan;
};

/// Solves the linear assignment problem min_sigma sum_i cost(i, sigma(i)) for a
/// dense n x n row-major cost matrix. Returns sigma. O(n^3).
std::vector<std::size_t> solve_assignment(std::span<const double> cost, std::size_t n);

/// Exact 2-Wasserstein distance between equal-size particle measures.
W2Result w2_exact(const ParticleMeasure& m, const ParticleMeasure& n);

/// 2-Wasserstein distance in one dimension via the sorted coupling.
double w2_1d(const ParticleMeasure& m, const ParticleMeasure& n);

/// Bures distance sqrt(tr(S1 + S2 - 2 (S1^1/2 S2 S1^1/2)^1/2)) between PSD
/// matrices. Inputs with an eigenvalue below -1e-10 raise kNumerical.
double bures_distance(const Matrix& s1, const Matrix& s2);

/// Symmetric PSD square root with negative eigenvalues clamped to zero.
Matrix psd_sqrt(const Matrix& s);

/// Gelbrich lower bound sqrt(|m_mu - m_nu|^2 + bures(S_mu, S_nu)^2) <= W2.
double gelbrich_lower_bound(const ParticleMeasure& m, const ParticleMeasure& n);

/// k distinct indices from [0, n), reproducible per seed, in sampling order.
std::vector<std::size_t> subsample_indices(std::size_t n, std::size_t k, std::uint64_t seed);

}  // namespace swgf
