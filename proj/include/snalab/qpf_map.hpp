#pragma once

// Quasiperiodically forced fiber maps over an irrational rotation.
// The concrete family is f_{beta,theta}(x) = (2/pi)·arctan(a·x) − beta·(1 + cos 2πθ)
// on the phase interval X = [x_lo, 1]. A linear control family with constant
// slope is provided for calibration and infeasibility tests.

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "snalab/common.hpp"
#include "snalab/torus.hpp"

namespace snalab {

// Slack for near-singular inverse arguments: |arg| in [1, 1 + kInverseSlack]
// is treated as rounding and clamped; larger excess is a domain escape.
inline constexpr double kInverseSlack = 1e-9;
inline constexpr double kClampMargin = 1e-12;  // clamp target pi/2 - kClampMargin
inline constexpr double kDomainSlack = 1e-12;  // tolerance on the X membership check

struct ArctanMap {
  double a = 40.0;
  double beta = 0.0;
  double x_lo_ = -3.0;

  double x_lo() const { return x_lo_; }
  double x_hi() const { return 1.0; }

  void check_domain(double x) const {
    if (x < x_lo_ - kDomainSlack || x > 1.0 + kDomainSlack)
      throw DomainError("x outside the phase interval X");
  }

  double forcing(double theta) const { return beta * (1.0 + std::cos(2.0 * kPi * theta)); }

  double apply(double theta, double x) const {
    check_domain(x);
    return (2.0 / kPi) * std::atan(a * x) - forcing(theta);
  }

  // x with apply(theta, x) = y; clamped = true marks a near-singular argument
  // that was pulled back to the domain edge (pure-rounding case).
  double apply_inverse(double theta, double y, bool* clamped = nullptr) const {
    double arg = y + forcing(theta);
    double excess = std::fabs(arg) - 1.0;
    if (excess >= 0.0) {
      if (excess > kInverseSlack) throw InverseDomainError(theta, y, excess);
      double t = (arg > 0.0 ? 1.0 : -1.0) * (kPi / 2.0 - kClampMargin);
      if (clamped) *clamped = true;
      return std::tan(t) / a;
    }
    if (clamped) *clamped = false;
    return std::tan((kPi / 2.0) * arg) / a;
  }

  double fiber_derivative(double theta, double x) const {
    (void)theta;
    check_domain(x);
    return (2.0 * a / kPi) / (1.0 + a * a * x * x);
  }

  // sup_theta |d f / d theta| = 2*pi*beta (closed form for the cosine forcing)
  double theta_lipschitz_bound() const { return 2.0 * kPi * beta; }

  // the slope-1 point of the fiber map: f'(x*) = 1 on x > 0
  double x_star() const { return std::sqrt(2.0 * a / kPi - 1.0) / a; }
};

// g_theta(x) = slope·x + amplitude·cos(2πθ): constant fiber slope. With
// amplitude = 0 the fiber map is the unforced x/2 control used in tests.
struct LinearControlMap {
  double slope = 0.5;
  double amplitude = 0.0;
  double x_lo_ = -3.0;

  double x_lo() const { return x_lo_; }
  double x_hi() const { return 1.0; }
  void check_domain(double) const {}
  double apply(double theta, double x) const { return slope * x + amplitude * std::cos(2.0 * kPi * theta); }
  double apply_inverse(double theta, double y, bool* clamped = nullptr) const {
    if (clamped) *clamped = false;
    return (y - amplitude * std::cos(2.0 * kPi * theta)) / slope;
  }
  double fiber_derivative(double, double) const { return slope; }
  double theta_lipschitz_bound() const { return 2.0 * kPi * std::fabs(amplitude); }
};

// spec-facing free functions
template <class Map>
double apply(const Map& map, double theta, double x) {
  return map.apply(theta, x);
}
template <class Map>
double apply_inverse(const Map& map, double theta, double y, bool* clamped = nullptr) {
  return map.apply_inverse(theta, y, clamped);
}
template <class Map>
double fiber_derivative(const Map& map, double theta, double x) {
  return map.fiber_derivative(theta, x);
}

struct OrbitPoint {
  double theta;
  double x;
};

// Orbit segment of length |n|+1 including the start. Forward steps apply the
// fiber map at the current base; a backward step applies the fiber inverse at
// the landing base theta - omega (the inverse skew product's convention).
template <class Map>
std::vector<OrbitPoint> iterate(const Map& map, double omega, double theta0, double x0,
                                std::int64_t n) {
  std::vector<OrbitPoint> orbit;
  orbit.reserve(static_cast<std::size_t>(std::llabs(n)) + 1);
  double theta = frac(theta0);
  double x = x0;
  orbit.push_back({theta, x});
  if (n >= 0) {
    for (std::int64_t k = 0; k < n; ++k) {
      x = map.apply(theta, x);
      theta = frac(theta + omega);
      orbit.push_back({theta, x});
    }
  } else {
    for (std::int64_t k = 0; k < -n; ++k) {
      double base = frac(theta - omega);
      try {
        x = map.apply_inverse(base, x);
      } catch (InverseDomainError& e) {
        e.step = k + 1;
        throw;
      }
      theta = base;
      orbit.push_back({theta, x});
    }
  }
  return orbit;
}

}  // namespace snalab
