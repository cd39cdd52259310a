#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <string_view>

namespace dipls {

// 64-bit FNV-1a, optionally chained.  Sub-seeds for conditions are derived by
// hashing (suite seed little-endian bytes, condition id bytes) so adding or
// renaming one condition never perturbs another condition's draws.
inline std::uint64_t fnv1a64(const void* data, std::size_t n,
                             std::uint64_t h = 14695981039346656037ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::uint64_t hash_seed(std::uint64_t seed, std::string_view tag) {
  unsigned char le[8];
  for (int i = 0; i < 8; ++i) le[i] = static_cast<unsigned char>(seed >> (8 * i));
  std::uint64_t h = fnv1a64(le, sizeof le);
  return fnv1a64(tag.data(), tag.size(), h);
}

// SplitMix64 stream with Box-Muller normals.  Deliberately hand-rolled:
// std::<random> distributions are not bit-identical across standard library
// implementations, and byte-stable output is a hard requirement here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform on [0, 1)
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    // u1 in (0, 1] keeps the log finite
    double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    double u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925287 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  double normal(double mu, double sd) { return mu + sd * normal(); }

  // fill order is row-major regardless of Eigen's storage, so the stream is
  // layout-independent
  Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols,
                                double mu = 0.0, double sd = 1.0) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = normal(mu, sd);
    return m;
  }

  Eigen::VectorXd normal_vector(Eigen::Index n, double mu = 0.0, double sd = 1.0) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = normal(mu, sd);
    return v;
  }

  Eigen::VectorXd uniform_vector(Eigen::Index n, double a, double b) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = uniform(a, b);
    return v;
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace dipls
