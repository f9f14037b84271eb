#pragma once

namespace cylattract {

// C-infinity step: 0 for t <= 0, 1 for t >= 1, strictly increasing on
// (0,1), built from sigma(t) = exp(-1/t) as sigma(t)/(sigma(t)+sigma(1-t)).
double smooth_step(double t);
double smooth_step_d1(double t);
double smooth_step_d2(double t);

// sup |s'| = 2 exactly, attained at t = 1/2
inline constexpr double kStepD1Sup = 2.0;
// sup |s''| <= 9.85 (dense-scan bound, re-checked in the test suite)
inline constexpr double kStepD2Sup = 9.85;

// Quintic monomial polynomial in u = x - x0 on [x0, x1], used for the
// C^2 tails of the fiber maps: both endpoint curvatures are zero, so
// splicing against affine pieces stays C^2.
struct Quintic {
  double x0 = 0.0;
  double x1 = 0.0;
  double c[6] = {0, 0, 0, 0, 0, 0};

  double eval(double x) const;
  double d1(double x) const;
  double d2(double x) const;

  // sup of |p'| / |p''| over [x0, x1] via closed-form critical points
  double d1_abs_max() const;
  double d2_abs_max() const;
  // min of p' over [x0, x1] (>= 0 certifies monotonicity)
  double d1_min() const;
};

// Hermite data: value/slope at both ends, curvature zero at both ends.
Quintic hermite_tail(double x0, double v0, double m0, double x1, double v1,
                     double m1);

}  // namespace cylattract
