#ifndef CHARTQA_COMMON_HPP_
#define CHARTQA_COMMON_HPP_

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace chartqa {

using Mat = Eigen::MatrixXd;

// Error taxonomy. Every module throws one of these; the CLI maps them to
// a message on stderr and a nonzero exit code.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};
struct InputError : std::runtime_error {
    explicit InputError(const std::string& msg) : std::runtime_error(msg) {}
};
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};
struct CorruptionError : std::runtime_error {
    explicit CorruptionError(const std::string& msg) : std::runtime_error(msg) {}
};

// 64-bit FNV-1a. Content digests only, not security.
class Fnv1a {
  public:
    void update(const void* data, size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (size_t i = 0; i < n; ++i) {
            state_ ^= p[i];
            state_ *= 0x100000001b3ULL;
        }
    }
    void update(const std::string& s) { update(s.data(), s.size()); }
    uint64_t value() const { return state_; }
    std::string hex() const;

  private:
    uint64_t state_ = 0xcbf29ce484222325ULL;
};

uint64_t fnv1a(const void* data, size_t n);
uint64_t fnv1a(const std::string& s);
std::string to_hex(uint64_t v);

// Deterministic draws on top of mt19937_64. The standard distributions are
// implementation-defined, so all sampling goes through these.
class Rng {
  public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    // [0, 1)
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // [0, n)
    size_t index(size_t n) { return static_cast<size_t>(uniform() * static_cast<double>(n)) % n; }

    // Box-Muller; draws two uniforms per call.
    double normal(double mean = 0.0, double stddev = 1.0) {
        double u1 = 0.0;
        do { u1 = uniform(); } while (u1 <= 0.0);
        double u2 = uniform();
        double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
        return mean + stddev * z;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[index(i)]);
        }
    }

  private:
    std::mt19937_64 engine_;
};

// Canonical numeric form used for gold answers, table cells and axis ticks:
// round to 2 fractional digits (ties away from zero), then drop trailing
// zeros and a bare decimal point. "-0" collapses to "0".
std::string format_value(double v);

// String helpers shared by the evaluator and the dataset adapters.
std::string trim(const std::string& s);
std::string lower(const std::string& s);
std::string collapse_whitespace(const std::string& s);
bool starts_with(const std::string& s, const std::string& prefix);
bool ends_with(const std::string& s, const std::string& suffix);
std::vector<std::string> split(const std::string& s, char sep);

}  // namespace chartqa

#endif  // CHARTQA_COMMON_HPP_
