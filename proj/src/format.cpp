#include "perfstokes/format.hpp"

#include <charconv>
#include <cstdio>
#include <cstdint>

#include "perfstokes/errors.hpp"

namespace perfstokes {

std::string format_real(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

std::string format_shortest(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc()) return format_real(value);
    return std::string(buf, ptr);
}

namespace {

double parse_plain(const std::string& text) {
    double value = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    if (first != last && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) fail(ErrorCode::ConfigError, "not a number: '" + text + "'");
    return value;
}

bool parse_integer(const std::string& text, std::int64_t& out) {
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc() && ptr == text.data() + text.size();
}

}  // namespace

double parse_real(const std::string& text) {
    const auto slash = text.find('/');
    if (slash == std::string::npos) return parse_plain(text);
    const std::string num = text.substr(0, slash);
    const std::string den = text.substr(slash + 1);
    std::int64_t p = 0;
    std::int64_t q = 0;
    if (parse_integer(num, p) && parse_integer(den, q)) {
        if (q == 0) fail(ErrorCode::ConfigError, "zero denominator in '" + text + "'");
        // One correctly rounded division of two exact integers.
        return static_cast<double>(p) / static_cast<double>(q);
    }
    const double d = parse_plain(den);
    if (d == 0.0) fail(ErrorCode::ConfigError, "zero denominator in '" + text + "'");
    return parse_plain(num) / d;
}

std::vector<std::string> split(const std::string& text, char separator) {
    std::vector<std::string> parts;
    std::string current;
    for (char ch : text) {
        if (ch == separator) {
            parts.push_back(current);
            current.clear();
        } else {
            current.push_back(ch);
        }
    }
    parts.push_back(current);
    return parts;
}

std::vector<double> parse_real_list(const std::string& text) {
    std::vector<double> values;
    for (const auto& part : split(text, ',')) {
        if (part.empty()) fail(ErrorCode::ConfigError, "empty entry in list '" + text + "'");
        values.push_back(parse_real(part));
    }
    return values;
}

}  // namespace perfstokes
