#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace contact_hj {

// Points, covectors and velocities share one small fixed-size type. Problems
// are posed in dimension 1 or 2; in dimension 1 the second slot stays zero.
using Point = std::array<double, 2>;

inline constexpr int kMaxDim = 2;

inline double Dot(const Point& a, const Point& b) { return a[0] * b[0] + a[1] * b[1]; }
inline double Norm(const Point& a) { return std::sqrt(Dot(a, a)); }
inline Point operator+(const Point& a, const Point& b) { return {a[0] + b[0], a[1] + b[1]}; }
inline Point operator-(const Point& a, const Point& b) { return {a[0] - b[0], a[1] - b[1]}; }
inline Point operator*(double s, const Point& a) { return {s * a[0], s * a[1]}; }

// Error taxonomy. Everything derives from std::runtime_error so callers that
// only care about "it failed" can catch one type.

// Malformed or inconsistent Hamiltonian model (bad expression, wrong dim).
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Query outside of a grid mask, or measure support escaping a field.
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid numerical setup: thin masks, bad schedules, schema violations.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Legendre transform maximizer sits on the p-grid boundary even at the
// largest allowed extent.
class ExtentTooSmallError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Ergodic iteration keeps drifting at the anchor: the supplied constant is
// not the critical value.
class CriticalValueMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string FormatPoint(const Point& x, int dim);

}  // namespace contact_hj
