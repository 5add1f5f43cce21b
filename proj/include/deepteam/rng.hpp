#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include "deepteam/linalg.hpp"

namespace deepteam {

// Counter-based Gaussian noise. Every draw is a pure function of
// (master seed, rollout, agent, t, kind, component): the key is folded with
// the SplitMix64 finalizer, and each standard normal is produced by the
// cosine branch of Box-Muller from two hashed 53-bit uniforms. Nothing is
// carried between draws, so results do not depend on evaluation order,
// thread count or how many rollouts are requested.

enum class NoiseKind : std::uint64_t { InitialState = 1, Process = 2, Measurement = 3 };

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

inline constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t fold(std::uint64_t key, std::uint64_t value) {
  return splitmix64(key ^ (value * kGolden + 0x632BE59BD9B4E019ull));
}

inline constexpr std::uint64_t noise_key(std::uint64_t seed, std::uint64_t rollout,
                                         std::uint64_t agent, std::uint64_t t, NoiseKind kind) {
  std::uint64_t k = splitmix64(seed + kGolden);
  k = fold(k, rollout);
  k = fold(k, agent);
  k = fold(k, t);
  return fold(k, static_cast<std::uint64_t>(kind));
}

// Uniform on (0, 1].
inline double open_unit(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

inline double standard_normal(std::uint64_t key, std::uint64_t component) {
  const std::uint64_t h1 = splitmix64(key + (2 * component + 1) * kGolden);
  const std::uint64_t h2 = splitmix64(key + (2 * component + 2) * kGolden);
  const double r = std::sqrt(-2.0 * std::log(open_unit(h1)));
  const double angle = 2.0 * std::numbers::pi * static_cast<double>(h2 >> 11) * 0x1.0p-53;
  return r * std::cos(angle);
}

// rows x n block of standard normals, column i drawn from agent i's stream.
inline Matrix standard_normal_block(std::uint64_t seed, std::uint64_t rollout, int t,
                                    NoiseKind kind, Eigen::Index rows, int n) {
  Matrix out(rows, n);
  for (int i = 0; i < n; ++i) {
    const std::uint64_t key = noise_key(seed, rollout, static_cast<std::uint64_t>(i),
                                        static_cast<std::uint64_t>(t), kind);
    for (Eigen::Index r = 0; r < rows; ++r)
      out(r, i) = standard_normal(key, static_cast<std::uint64_t>(r));
  }
  return out;
}

// Small sequential generator for model and parameter sampling in tests and
// the verification suite (not used for rollout noise).
class SplitMixStream {
 public:
  explicit SplitMixStream(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += kGolden;
    return splitmix64(state_);
  }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal() { return standard_normal(next(), 0); }
  int integer(int lo, int hi) {  // inclusive
    return lo + static_cast<int>(next() % static_cast<std::uint64_t>(hi - lo + 1));
  }
  Matrix normal_matrix(Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
    Matrix m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
      for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = scale * normal();
    return m;
  }

 private:
  std::uint64_t state_;
};

}  // namespace deepteam
