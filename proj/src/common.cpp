#include "chartqa/common.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>

namespace chartqa {

std::string Fnv1a::hex() const { return to_hex(state_); }

uint64_t fnv1a(const void* data, size_t n) {
    Fnv1a h;
    h.update(data, n);
    return h.value();
}

uint64_t fnv1a(const std::string& s) { return fnv1a(s.data(), s.size()); }

std::string to_hex(uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return std::string(buf);
}

std::string format_value(double v) {
    if (!std::isfinite(v)) throw InputError("format_value: non-finite value");
    long long cents = std::llround(v * 100.0);
    bool neg = cents < 0;
    unsigned long long mag = neg ? static_cast<unsigned long long>(-cents)
                                 : static_cast<unsigned long long>(cents);
    unsigned long long units = mag / 100;
    unsigned long long frac = mag % 100;
    std::string out;
    if (neg && mag != 0) out += '-';
    out += std::to_string(units);
    if (frac != 0) {
        out += '.';
        if (frac % 10 == 0) {
            out += static_cast<char>('0' + frac / 10);
        } else {
            out += static_cast<char>('0' + frac / 10);
            out += static_cast<char>('0' + frac % 10);
        }
    }
    return out;
}

std::string trim(const std::string& s) {
    size_t b = 0;
    size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::string lower(const std::string& s) {
    std::string out = s;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string collapse_whitespace(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    bool in_space = false;
    for (char c : s) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            in_space = true;
            continue;
        }
        if (in_space && !out.empty()) out += ' ';
        in_space = false;
        out += c;
    }
    return out;
}

bool starts_with(const std::string& s, const std::string& prefix) {
    return s.size() >= prefix.size() && s.compare(0, prefix.size(), prefix) == 0;
}

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() &&
           s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    size_t start = 0;
    while (true) {
        size_t pos = s.find(sep, start);
        if (pos == std::string::npos) {
            parts.push_back(s.substr(start));
            break;
        }
        parts.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
    return parts;
}

}  // namespace chartqa
