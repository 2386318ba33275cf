#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "swgf/measures.hpp"

namespace swgf::io {

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

/// Strict parse of a full field; throws kData on failure.
double parse_double(std::string_view field);

/// Simple CSV table: header plus rows of raw string fields.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::filesystem::path& path);

/// Writes a line of comma-joined fields terminated by '\n'.
void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);

/// Particle checkpoint format: header x1,...,xd then one row per particle.
void write_particles(std::ostream& out, const ParticleMeasure& m);
void write_particles_file(const std::filesystem::path& path, const ParticleMeasure& m);
ParticleMeasure read_particles(std::istream& in);
ParticleMeasure read_particles_file(const std::filesystem::path& path);

/// `key = value` lines; '#' starts a comment; blank lines ignored.
using KeyValues = std::map<std::string, std::string>;
KeyValues read_key_values(std::istream& in);
KeyValues read_key_values_file(const std::filesystem::path& path);
void write_key_values(std::ostream& out, const KeyValues& kv);

/// Writes through a temporary file and renames, so readers never see a
/// partially written file.
void write_file_atomically(const std::filesystem::path& path, const std::string& contents);

}  // namespace swgf::io
