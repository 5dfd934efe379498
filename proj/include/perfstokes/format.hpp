#pragma once

#include <string>
#include <vector>

namespace perfstokes {

/// 17 significant digits, so that parsing the text returns the same double.
std::string format_real(double value);

/// Shortest text that round-trips.
std::string format_shortest(double value);

/// Parses "0.25", "1e-3" or an exact fraction "1/16".
double parse_real(const std::string& text);

/// Parses a comma-separated list of reals (fractions allowed).
std::vector<double> parse_real_list(const std::string& text);

std::vector<std::string> split(const std::string& text, char separator);

}  // namespace perfstokes
