#ifndef WORMSIM_IO_HPP_
#define WORMSIM_IO_HPP_

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace wormsim {

/// Writes to a sibling temporary file, then renames over `path`.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);
void write_json_atomic(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

/// Shortest text that parses back to the same double; nan and inf spelled
/// out, empty for "no value" is left to callers.
std::string format_double(double v);
double parse_double(const std::string& text);

/// "# wormsim <schema> v<version>"
std::string csv_version_line(const std::string& schema, int version);

struct CsvTable {
  std::string version_line;
  std::vector<std::string> notes;  // "# ..." lines between version line and header
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a header column; throws if absent.
  std::size_t column(const std::string& name) const;
};

/// Reads a CSV whose first line is a version comment, optionally followed by
/// "# note" lines before the header. Fields never contain
/// commas or quotes in this project's files.
CsvTable read_csv(const std::filesystem::path& path);
std::string join_csv(const std::vector<std::string>& fields);

}  // namespace wormsim

#endif  // WORMSIM_IO_HPP_
