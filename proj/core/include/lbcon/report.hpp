#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lbcon/run.hpp"

namespace lbcon {

using KeyValues = std::vector<std::pair<std::string, std::string>>;

// One "key=value" per line, in order. Keys may not contain '=' or newlines,
// values may not contain newlines.
std::string emit_kv(const KeyValues& kv);
KeyValues parse_kv(std::string_view text);

KeyValues report_fields(const RunReport& r);

// Condition lines read "<id>  PASS  margin=<value>".
std::string format_text(const RunReport& r);
std::string format_kv(const RunReport& r);

// Shortest decimal that round-trips to the same double.
std::string format_double(double v);

// Writes to a sibling temporary and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

// <dir>/report.txt and <dir>/report.kv; creates `dir` if needed.
void write_reports(const RunReport& r, const std::filesystem::path& dir);

}  // namespace lbcon
