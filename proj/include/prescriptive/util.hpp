#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace prescriptive {

// Shortest decimal text that parses back to the identical double.
std::string format_double(double v);

// Fixed-point text with the given number of decimals.
std::string format_fixed(double v, int decimals);

bool parse_double(std::string_view text, double& out);

std::string trim(std::string_view s);

// RFC-4180-ish CSV: quoted fields may contain commas, quotes ("") and newlines are not supported.
std::vector<std::string> split_csv_line(std::string_view line);
std::string csv_escape(std::string_view field);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

std::string sha256_hex(std::string_view data);

// Diagnostics sink for non-fatal conditions (e.g. degenerate cohorts). Default writes to stderr.
using WarningHandler = std::function<void(std::string_view)>;
void set_warning_handler(WarningHandler handler);
void warn(std::string_view message);

// Runs fn(i) for i in [0, n). Work is split across hardware threads; callers must
// make each index independent so results do not depend on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace prescriptive
