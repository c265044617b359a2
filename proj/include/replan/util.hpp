#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace replan {

// Canonical decimal formatting used by every text format in the project.
// Integers print without exponent or decimal point; everything else uses
// the shortest representation that parses back to the same double.
std::string format_number(double value);

// Strict full-token parse. Rejects NaN/inf and trailing garbage.
std::optional<double> parse_number(std::string_view token);

std::vector<std::string> split_ws(std::string_view line);
std::vector<std::string_view> split_lines(std::string_view text);

bool starts_with(std::string_view s, std::string_view prefix);

// 64-bit mix used to derive independent child seeds from a master seed
// and a stable key (so results do not depend on scheduling order).
std::uint64_t mix_seed(std::uint64_t seed, std::string_view key);
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

std::string read_file(const std::string& path);
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace replan
