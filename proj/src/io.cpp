#include "swgf/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "swgf/error.hpp"

namespace swgf::io {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_fields(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.emplace_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kData, "cannot open '" + path.string() + "' for reading");
  return in;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view field) {
  field = trim(field);
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (field.empty() || res.ec != std::errc() || res.ptr != field.data() + field.size())
    fail(ErrorKind::kData, "not a number: '" + std::string(field) + "'");
  return v;
}

CsvTable read_csv(std::istream& in) {
  CsvTable table;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    auto fields = split_fields(line);
    if (!have_header) {
      table.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != table.header.size())
      fail(ErrorKind::kData, "csv: row " + std::to_string(table.rows.size() + 1) + " has " +
                                 std::to_string(fields.size()) + " fields, header has " +
                                 std::to_string(table.header.size()));
    table.rows.push_back(std::move(fields));
  }
  if (!have_header) fail(ErrorKind::kData, "csv: missing header");
  return table;
}

CsvTable read_csv_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  try {
    return read_csv(in);
  } catch (const Error& e) {
    fail(e.kind(), path.string() + ": " + e.what());
  }
}

void write_csv_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t k = 0; k < fields.size(); ++k) {
    if (k) out << ',';
    out << fields[k];
  }
  out << '\n';
}

void write_particles(std::ostream& out, const ParticleMeasure& m) {
  std::vector<std::string> header;
  for (std::size_t j = 0; j < m.dim(); ++j) header.push_back("x" + std::to_string(j + 1));
  write_csv_row(out, header);
  std::vector<std::string> row(m.dim());
  for (std::size_t i = 0; i < m.size(); ++i) {
    auto p = m.point(i);
    for (std::size_t j = 0; j < m.dim(); ++j) row[j] = format_double(p[j]);
    write_csv_row(out, row);
  }
}

void write_particles_file(const std::filesystem::path& path, const ParticleMeasure& m) {
  std::ostringstream out;
  write_particles(out, m);
  write_file_atomically(path, out.str());
}

ParticleMeasure read_particles(std::istream& in) {
  const CsvTable table = read_csv(in);
  const std::size_t d = table.header.size();
  for (std::size_t j = 0; j < d; ++j) {
    if (table.header[j] != "x" + std::to_string(j + 1))
      fail(ErrorKind::kData, "particles: expected header x1,...,xd, got '" + table.header[j] + "'");
  }
  if (table.rows.empty()) fail(ErrorKind::kData, "particles: file holds no particles");
  std::vector<double> coords;
  coords.reserve(table.rows.size() * d);
  for (const auto& row : table.rows) {
    for (const auto& field : row) {
      const double v = parse_double(field);
      if (!std::isfinite(v)) fail(ErrorKind::kData, "particles: non-finite coordinate");
      coords.push_back(v);
    }
  }
  return ParticleMeasure(d, std::move(coords));
}

ParticleMeasure read_particles_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  try {
    return read_particles(in);
  } catch (const Error& e) {
    fail(e.kind(), path.string() + ": " + e.what());
  }
}

KeyValues read_key_values(std::istream& in) {
  KeyValues kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos)
      fail(ErrorKind::kConfig, "line " + std::to_string(lineno) + ": expected 'key = value'");
    const auto key = trim(view.substr(0, eq));
    if (key.empty()) fail(ErrorKind::kConfig, "line " + std::to_string(lineno) + ": empty key");
    kv[std::string(key)] = std::string(trim(view.substr(eq + 1)));
  }
  return kv;
}

KeyValues read_key_values_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kConfig, "cannot open '" + path.string() + "' for reading");
  try {
    return read_key_values(in);
  } catch (const Error& e) {
    fail(e.kind(), path.string() + ": " + e.what());
  }
}

void write_key_values(std::ostream& out, const KeyValues& kv) {
  for (const auto& [key, value] : kv) out << key << " = " << value << '\n';
}

void write_file_atomically(const std::filesystem::path& path, const std::string& contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::kData, "cannot open '" + tmp.string() + "' for writing");
    out << contents;
    if (!out) fail(ErrorKind::kData, "write to '" + tmp.string() + "' failed");
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace swgf::io
