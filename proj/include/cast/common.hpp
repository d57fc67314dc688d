// Shared basics: token types, style labels, errors, deterministic RNG.

#ifndef CAST_COMMON_HPP
#define CAST_COMMON_HPP

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace cast {

using Token = std::string;
using TokenSeq = std::vector<Token>;
using IdSeq = std::vector<int>;

// The task always has exactly two styles; display names are data-dependent
// (informal/formal, offensive/non-offensive, ...).
enum class StyleLabel { kStyleA = 0, kStyleB = 1 };

inline StyleLabel opposite(StyleLabel l) {
  return l == StyleLabel::kStyleA ? StyleLabel::kStyleB : StyleLabel::kStyleA;
}

// Maps the two labels to their task-specific display names.
struct StylePair {
  std::string a;
  std::string b;

  const std::string& name_of(StyleLabel l) const {
    return l == StyleLabel::kStyleA ? a : b;
  }
  StyleLabel label_of(const std::string& name) const {
    if (name == a) return StyleLabel::kStyleA;
    if (name == b) return StyleLabel::kStyleB;
    throw std::invalid_argument("unknown style name: '" + name + "'");
  }
  bool knows(const std::string& name) const { return name == a || name == b; }
};

// Configuration problems (bad keys, invalid values, inconsistent settings).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input data; carries file and line when available.
struct DataError : std::runtime_error {
  DataError(const std::string& file, std::size_t line, const std::string& what)
      : std::runtime_error(file + ":" + std::to_string(line) + ": " + what),
        file_path(file),
        line_number(line) {}
  explicit DataError(const std::string& what)
      : std::runtime_error(what), file_path(), line_number(0) {}

  std::string file_path;
  std::size_t line_number;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Deterministic RNG. Uses hand-rolled draw functions instead of the std
// distributions so streams are stable across standard library versions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), state_(splitmix64(seed)) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() {
    // xorshift* on a splitmix-initialized state
    std::uint64_t x = state_;
    x ^= x >> 12;
    x ^= x << 25;
    x ^= x >> 27;
    state_ = x;
    return x * 0x2545f4914f6cdd1dULL;
  }

  // uniform in [0, 1) with 53-bit resolution
  double uniform01() { return double(next_u64() >> 11) * 0x1.0p-53; }

  // uniform integer in [lo, hi], inclusive
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    if (lo > hi) throw std::invalid_argument("uniform_int: empty range");
    std::uint64_t span = std::uint64_t(hi - lo) + 1;
    return lo + std::int64_t(next_u64() % span);
  }

  bool bernoulli(double p) { return uniform01() < p; }

  // Box-Muller; one value per call
  double gaussian(double mean = 0.0, double stddev = 1.0);

  // Fisher-Yates
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = std::size_t(uniform_int(0, std::int64_t(i) - 1));
      std::swap(v[i - 1], v[j]);
    }
  }

  template <typename T>
  const T& pick(const std::vector<T>& v) {
    if (v.empty()) throw std::invalid_argument("pick: empty vector");
    return v[std::size_t(uniform_int(0, std::int64_t(v.size()) - 1))];
  }

  // Independent substream for a named purpose.
  Rng child(std::uint64_t salt) const {
    return Rng(splitmix64(seed_ ^ (salt * 0x9e3779b97f4a7c15ULL)));
  }

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
};

inline double Rng::gaussian(double mean, double stddev) {
  // avoid log(0)
  double u1 = 1.0 - uniform01();
  double u2 = uniform01();
  double r = std::sqrt(-2.0 * std::log(u1));
  return mean + stddev * r * std::cos(6.283185307179586 * u2);
}

}  // namespace cast

#endif  // CAST_COMMON_HPP
