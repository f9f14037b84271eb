#include "cylattract/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace cylattract {

void ConeConfig::validate() const {
  if (!(eta > 0.0) || !(kappa > 0.0))
    throw ParamError("cone apertures must be positive");
  if (!(delta > 0.0 && delta < 0.5))
    throw ParamError("cone delta must lie in (0, 1/2)");
  if (!(2.0 * eta <= delta))
    throw ParamError("cone requires 2*eta <= delta");
}

double wrap01(double x) {
  double r = x - std::floor(x);
  if (r >= 1.0) r = 0.0;  // guards x = -tiny, where the subtraction rounds up
  return r;
}

double circle_dist(double t0, double t1) {
  double d = std::fabs(wrap01(t0) - wrap01(t1));
  return std::min(d, 1.0 - d);
}

double cyl_dist(const CylinderPoint& p, const CylinderPoint& q) {
  return std::max(circle_dist(p.theta, q.theta), std::fabs(p.y - q.y));
}

CylinderPoint project(const LiftPoint& p) { return {wrap01(p.theta_lift), p.y}; }

VerticalCurve::VerticalCurve(std::vector<double> theta, std::vector<double> y,
                             CurveSpace space, const ConeConfig& cone)
    : y_(std::move(y)), space_(space), cone_(cone) {
  cone_.validate();
  if (theta.size() != y_.size())
    throw ParamError("curve: theta/y length mismatch");
  if (y_.size() < 2) throw ParamError("curve needs at least 2 vertices");

  const std::size_t n = y_.size();
  th_.resize(n);
  off_.resize(n);
  if (space_ == CurveSpace::LongCylinder) {
    for (std::size_t i = 0; i < n; ++i) {
      double fl = std::floor(theta[i]);
      th_[i] = theta[i] - fl;
      if (th_[i] >= 1.0) {  // rounding at the seam
        th_[i] = 0.0;
        fl += 1.0;
      }
      off_[i] = static_cast<int>(fl);
    }
  } else {
    // unwrap continuously around the first vertex
    th_[0] = wrap01(theta[0]);
    off_[0] = 0;
    double prev = th_[0];
    for (std::size_t i = 1; i < n; ++i) {
      th_[i] = wrap01(theta[i]);
      double u = th_[i] + static_cast<double>(off_[i - 1]);
      // shift by +-1 until within 1/2 of the previous unwrapped value
      int o = off_[i - 1];
      while (u - prev > 0.5) {
        u -= 1.0;
        --o;
      }
      while (u - prev < -0.5) {
        u += 1.0;
        ++o;
      }
      off_[i] = o;
      prev = u;
    }
  }
  check_invariants();
}

void VerticalCurve::check_invariants() const {
  const std::size_t n = y_.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (!(y_[i] >= -1.0 && y_[i] <= 1.0))
      throw ParamError("curve vertex outside the fiber [-1,1]");
    if (i > 0 && !(y_[i] > y_[i - 1]))
      throw ParamError("curve y-coordinates must be strictly increasing");
  }
  // slope bound per segment, with a 1-ulp-scale tolerance so curves
  // produced by exact-at-vertices pullback steps are not rejected for
  // roundoff on the quotient
  const double slope_cap = cone_.eta * (1.0 + 1e-9);
  for (std::size_t i = 1; i < n; ++i) {
    double dth = theta_lift(i) - theta_lift(i - 1);
    double dy = y_[i] - y_[i - 1];
    if (std::fabs(dth) > slope_cap * dy)
      throw ParamError("curve segment violates the vertical-cone slope bound");
  }
  if (horizontal_diameter() > cone_.delta * (1.0 + 1e-9))
    throw DiameterExceeded("curve horizontal diameter exceeds delta");
}

double VerticalCurve::horizontal_diameter() const {
  return theta_lift_max() - theta_lift_min();
}

double VerticalCurve::theta_lift_min() const {
  double m = theta_lift(0);
  for (std::size_t i = 1; i < size(); ++i) m = std::min(m, theta_lift(i));
  return m;
}

double VerticalCurve::theta_lift_max() const {
  double m = theta_lift(0);
  for (std::size_t i = 1; i < size(); ++i) m = std::max(m, theta_lift(i));
  return m;
}

double VerticalCurve::theta_at(double yq) const {
  if (yq <= y_.front()) return theta_lift(0);
  if (yq >= y_.back()) return theta_lift(size() - 1);
  auto it = std::upper_bound(y_.begin(), y_.end(), yq);
  std::size_t j = static_cast<std::size_t>(it - y_.begin());
  if (y_[j - 1] == yq) return theta_lift(j - 1);
  double t = (yq - y_[j - 1]) / (y_[j] - y_[j - 1]);
  return theta_lift(j - 1) + t * (theta_lift(j) - theta_lift(j - 1));
}

VerticalCurve VerticalCurve::resample(std::size_t n) const {
  if (n < 2) throw ParamError("resample needs n >= 2");
  std::vector<double> th(n), yy(n);
  const double y0 = y_.front(), y1 = y_.back();
  for (std::size_t i = 0; i < n; ++i) {
    double y = (i == 0) ? y0
               : (i == n - 1)
                   ? y1
                   : y0 + (y1 - y0) * (static_cast<double>(i) /
                                       static_cast<double>(n - 1));
    yy[i] = y;
    th[i] = theta_at(y);
  }
  VerticalCurve out;
  out.space_ = space_;
  out.cone_ = cone_;
  out.y_ = std::move(yy);
  out.th_.resize(n);
  out.off_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double fl = std::floor(th[i]);
    out.th_[i] = th[i] - fl;
    if (out.th_[i] >= 1.0) {
      out.th_[i] = 0.0;
      fl += 1.0;
    }
    out.off_[i] = static_cast<int>(fl);
  }
  // endpoints keep their exact stored coordinates (interpolation in the
  // unwrapped chart can drift by an ulp)
  out.th_[0] = th_.front();
  out.off_[0] = off_.front();
  out.th_[n - 1] = th_.back();
  out.off_[n - 1] = off_.back();
  out.check_invariants();
  return out;
}

VerticalCurve VerticalCurve::to_short() const {
  // th_ + off_ is already a continuous unwrapping, so rebasing the
  // offsets at the first vertex keeps every fundamental coordinate
  // bitwise intact
  VerticalCurve out = *this;
  out.space_ = CurveSpace::ShortCylinder;
  const int base = off_.front();
  for (auto& o : out.off_) o -= base;
  return out;
}

VerticalCurve lift_curve(const VerticalCurve& c, int window_k, double delta) {
  if (c.horizontal_diameter() > delta)
    throw DiameterExceeded("curve horizontal diameter exceeds delta");
  const double lo = c.theta_lift_min();
  const double hi = c.theta_lift_max();
  const double mid = 0.5 * (lo + hi);
  const double target = static_cast<double>(window_k) + 0.5;
  // candidate integer shifts near the gap; scan a small neighbourhood
  // and pick the one whose shifted midpoint is closest to the window
  // midpoint, ties toward the smaller shift
  int best = 0;
  double best_err = -1.0;
  const int base = static_cast<int>(std::floor(target - mid));
  for (int m = base - 2; m <= base + 2; ++m) {
    double err = std::fabs(mid + static_cast<double>(m) - target);
    if (best_err < 0.0 || err < best_err) {
      best_err = err;
      best = m;
    }
  }
  const double wlo = static_cast<double>(window_k) - delta;
  const double whi = static_cast<double>(window_k) + 1.0 + delta;
  if (lo + best < wlo || hi + best > whi)
    throw WindowMiss("no representative of the curve fits the window");

  VerticalCurve out = c;
  for (std::size_t i = 0; i < out.off_.size(); ++i) out.off_[i] += best;
  out.space_ = CurveSpace::LongCylinder;
  return out;
}

bool curve_cuts(const VerticalCurve& c, double y_bottom, double y_top) {
  if (!(y_bottom < y_top)) throw ParamError("curve_cuts: empty stripe");
  return c.y_min() <= y_bottom && c.y_max() >= y_top;
}

}  // namespace cylattract
