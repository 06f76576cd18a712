#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "otpalm/types.hpp"

namespace otpalm {

// Seeded generator with explicit uniform/normal transforms so that streams
// do not depend on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  // uniform on (0, 1]
  double uniform01() { return (static_cast<double>(eng_() >> 11) + 1.0) * 0x1.0p-53; }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  double lognormal(double mu, double sd) { return std::exp(mu + sd * normal()); }

  Vector uniform_vec(int n) {
    Vector v(n);
    for (int i = 0; i < n; ++i) v[i] = uniform01();
    return v;
  }

  Vector normal_vec(int n) {
    Vector v(n);
    for (int i = 0; i < n; ++i) v[i] = normal();
    return v;
  }

  std::uint64_t raw() { return eng_(); }

 private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace otpalm
