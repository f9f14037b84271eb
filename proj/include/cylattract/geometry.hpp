#pragma once

#include <cstddef>
#include <vector>

#include "cylattract/errors.hpp"

namespace cylattract {

// Point on the short cylinder S^1 x [-1,1]; theta normalized to [0,1).
struct CylinderPoint {
  double theta = 0.0;
  double y = 0.0;
};

// Point on the d-fold cover; theta_lift lives in [0,d).
struct LiftPoint {
  double theta_lift = 0.0;
  double y = 0.0;
};

struct ConeConfig {
  double eta = 0.05;    // vertical cone aperture |v_theta| <= eta |v_y|
  double kappa = 4.0;   // horizontal cone aperture |v_y| <= kappa |v_theta|
  double delta = 0.1;   // bound on horizontal projection of a curve

  void validate() const;  // throws ParamError
};

enum class CurveSpace { ShortCylinder, LongCylinder };

// wrap to [0,1)
double wrap01(double x);
// shortest-arc distance on the unit circle
double circle_dist(double t0, double t1);
// max-norm cylinder distance (circle arc in theta, absolute in y)
double cyl_dist(const CylinderPoint& p, const CylinderPoint& q);

CylinderPoint project(const LiftPoint& p);

// Almost vertical curve as a polyline monotone in y.
//
// Internally each vertex keeps a fundamental circle coordinate in [0,1)
// plus an integer lift offset, so projecting a lifted curve back down
// returns the original coordinates bitwise. For short-cylinder curves
// the offsets unwrap theta continuously around the first vertex (valid
// because the horizontal diameter is < 1/2).
class VerticalCurve {
 public:
  // theta: circle coordinates (short space, any reals, reduced mod 1)
  //        or lift coordinates (long space).
  // y: strictly increasing, inside [-1,1].
  VerticalCurve(std::vector<double> theta, std::vector<double> y,
                CurveSpace space, const ConeConfig& cone);

  std::size_t size() const { return y_.size(); }
  CurveSpace space() const { return space_; }
  const ConeConfig& cone() const { return cone_; }

  double theta(std::size_t i) const { return th_[i]; }
  double theta_lift(std::size_t i) const {
    return th_[i] + static_cast<double>(off_[i]);
  }
  double y(std::size_t i) const { return y_[i]; }

  double y_min() const { return y_.front(); }
  double y_max() const { return y_.back(); }
  double extent() const { return y_.back() - y_.front(); }
  // max - min of the unwrapped theta coordinates
  double horizontal_diameter() const;
  double theta_lift_min() const;
  double theta_lift_max() const;

  // theta at a given y by linear interpolation (unwrapped coordinate)
  double theta_at(double y) const;

  // n >= 2 vertices, y equally spaced over [y_min, y_max]; vertices lie
  // exactly on the original polyline and endpoints are preserved.
  VerticalCurve resample(std::size_t n) const;

  // drop the lift offsets; result lives on the short cylinder
  VerticalCurve to_short() const;

 private:
  VerticalCurve() = default;

  std::vector<double> th_;   // fundamental coordinates in [0,1)
  std::vector<int> off_;     // integer lift offsets
  std::vector<double> y_;
  CurveSpace space_ = CurveSpace::ShortCylinder;
  ConeConfig cone_;

  void check_invariants() const;

  friend VerticalCurve lift_curve(const VerticalCurve& c, int window_k,
                                  double delta);
};

// Choose the integer shift putting c inside [window_k - delta,
// window_k + 1 + delta]; ties broken toward the window midpoint.
VerticalCurve lift_curve(const VerticalCurve& c, int window_k, double delta);

// true iff c reaches y_bottom from above and y_top from below
bool curve_cuts(const VerticalCurve& c, double y_bottom, double y_top);

}  // namespace cylattract
