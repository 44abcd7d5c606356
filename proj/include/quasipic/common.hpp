#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace quasipic {

// Small phase-space vector. Dimension is a runtime property of the grid
// (1, 2 or 3); unused components stay zero so arithmetic never branches.
struct Vec {
  std::array<double, 3> c{0.0, 0.0, 0.0};

  double& operator[](int i) { return c[static_cast<size_t>(i)]; }
  double operator[](int i) const { return c[static_cast<size_t>(i)]; }

  Vec& operator+=(const Vec& o) {
    c[0] += o.c[0];
    c[1] += o.c[1];
    c[2] += o.c[2];
    return *this;
  }
  Vec& operator-=(const Vec& o) {
    c[0] -= o.c[0];
    c[1] -= o.c[1];
    c[2] -= o.c[2];
    return *this;
  }
  Vec& operator*=(double s) {
    c[0] *= s;
    c[1] *= s;
    c[2] *= s;
    return *this;
  }

  friend Vec operator+(Vec a, const Vec& b) { return a += b; }
  friend Vec operator-(Vec a, const Vec& b) { return a -= b; }
  friend Vec operator*(double s, Vec a) { return a *= s; }
  friend Vec operator*(Vec a, double s) { return a *= s; }

  double dot(const Vec& o) const { return c[0] * o.c[0] + c[1] * o.c[1] + c[2] * o.c[2]; }
  double norm2() const { return dot(*this); }
  double norm() const { return std::sqrt(norm2()); }
};

// Neumaier-compensated accumulator; reductions over particles and modes go
// through this so tolerances in the 1e-12 range survive 1e5-term sums.
class KahanSum {
 public:
  void add(double x) {
    double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline uint64_t splitmix64(uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Counter-based generator: the n-th draw of stream (seed, stream) is a pure
// function of its indices, so sampling is reproducible bit-for-bit no matter
// how work is split.
class CounterRng {
 public:
  CounterRng(uint64_t seed, uint64_t stream = 0)
      : key_(splitmix64(seed ^ splitmix64(stream + 0x853C49E6748FEA9Bull))) {}

  uint64_t next_u64() { return splitmix64(key_ ^ splitmix64(counter_++)); }

  // uniform in [0, 1)
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // uniform in [a, b)
  double uniform(double a, double b) { return a + (b - a) * next_double(); }

  // standard normal, Box-Muller on two fresh draws
  double normal() {
    double u1 = next_double();
    double u2 = next_double();
    while (u1 <= 0.0) u1 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

 private:
  uint64_t key_;
  uint64_t counter_ = 0;
};

struct QuasineutralParams {
  double epsilon = 1.0;     // Debye-length ratio, in (0, 1]
  double gamma = 1.0;       // velocity-support growth exponent, >= 0
  double alpha = 0.5;       // 2D envelope exponent, in (0, 1)
  double beta = 3.0;        // 2D density exponent, > 2
  double cap_k = 1.0;       // threshold constant K > 0
  double c0 = 1.5;          // stability constant, > 1 pinned at calibration
  double c_alpha = 1.0;     // 2D support envelope constant, > 0
  double final_time = 1.0;  // horizon T > 0

  void validate() const {
    if (!(epsilon > 0.0 && epsilon <= 1.0)) throw std::invalid_argument("epsilon must be in (0,1]");
    if (!(gamma >= 0.0)) throw std::invalid_argument("gamma must be >= 0");
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must be in (0,1)");
    if (!(beta > 2.0)) throw std::invalid_argument("beta must be > 2");
    if (!(cap_k > 0.0)) throw std::invalid_argument("cap_k must be > 0");
    if (!(c0 > 1.0)) throw std::invalid_argument("c0 must be > 1");
    if (!(c_alpha > 0.0)) throw std::invalid_argument("c_alpha must be > 0");
    if (!(final_time > 0.0)) throw std::invalid_argument("final_time must be > 0");
  }
};

}  // namespace quasipic
