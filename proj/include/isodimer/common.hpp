#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace isodimer {

using Complex = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

// A computation failed for numerical reasons (singular system, quadrature
// that does not converge). The CLI maps this to exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An input violates a structural precondition (non-isoradial embedding,
// malformed tiling, invalid height field). The CLI maps this to exit code 4.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
  a = std::fmod(a, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  if (a > kPi) a -= 2.0 * kPi;
  return a;
}

inline Complex unit_vector(double angle) { return {std::cos(angle), std::sin(angle)}; }

inline double cross(Complex a, Complex b) {
  return a.real() * b.imag() - a.imag() * b.real();
}

inline double dot(Complex a, Complex b) {
  return a.real() * b.real() + a.imag() * b.imag();
}

// Counter-based pseudo-random stream: a splitmix64-style finalizer applied to
// key + counter * odd constant. A fixed (seed, stream) pair always produces
// the same sequence, independently of any other stream, which makes
// multi-threaded Monte Carlo runs reproducible by assigning one stream per
// sample index.
struct RngStream {
  std::uint64_t key = 0;
  std::uint64_t counter = 0;

  static RngStream make(std::uint64_t seed, std::uint64_t stream) {
    RngStream r;
    r.key = mix(seed + 0x632be59bd9b4e019ull) ^ mix(stream + 0x9e3779b97f4a7c15ull);
    return r;
  }

  std::uint64_t next_u64() { return mix(key + (++counter) * 0x9e3779b97f4a7c15ull); }

  // Uniform in [0, 1).
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
};

}  // namespace isodimer
