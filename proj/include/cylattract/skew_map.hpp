#pragma once

#include <cstdint>
#include <vector>

#include "cylattract/geometry.hpp"
#include "cylattract/smooth.hpp"

namespace cylattract {

struct ArcInterval {
  double lo = 0.0;
  double hi = 0.0;
};

// Affine core on J_out plus C^2 saturation tails toward y = -1 / +1.
struct Psi12Spec {
  double slope = 0.0;
  double offset = 0.0;
  double sat_lo = 0.0;  // value held at y = -1 (zero slope/curvature there)
  double sat_hi = 0.0;  // value held at y = +1
};

struct SkewParams {
  double a = 0.0;
  double b = 0.0;
  int d = 2;
  ArcInterval arcs[4];
  double eps_arc = 0.0;
  double alpha = 0.0;  // psi4 = alpha y^2 + beta
  double beta = 0.0;
  Psi12Spec psi1, psi2;
  double psi3_slope = 0.0;
  ConeConfig cone;
  int k[4] = {0, 0, 0, 0};

  // derived segments
  double j1_lo() const { return -a; }
  double j1_hi() const { return b; }
  double j2_lo() const { return -b; }
  double j2_hi() const { return a; }
  double jout_lo() const { return -2.0 * a; }
  double jout_hi() const { return 2.0 * a; }
  double jin_lo() const { return -0.5 * a; }
  double jin_hi() const { return 0.5 * a; }
};

SkewParams build_default();

// One displacement term amp * sin(2*pi*m*theta + ph_t) * cos(pi/2*n*y + ph_y).
struct TrigTerm {
  int m = 1;
  int n = 0;
  double amp = 0.0;
  double ph_t = 0.0;
  double ph_y = 0.0;
};

// Trigonometric-polynomial displacement of both coordinates:
//   theta' = d*theta + u(theta, y),  y' = f_theta(y) + v(theta, y).
struct Perturbation {
  std::vector<TrigTerm> u;
  std::vector<TrigTerm> v;

  bool empty() const { return u.empty() && v.empty(); }
  // upper bound for max(sup|w|, sup|w_theta|, sup|w_y|) over both components
  double c1_bound() const;
  // upper bound for the second derivatives (Lipschitz slack of Jacobians)
  double c2_bound() const;

  double eval_u(double theta, double y) const;
  double eval_v(double theta, double y) const;
  double du_dtheta(double theta, double y) const;
  double du_dy(double theta, double y) const;
  double dv_dtheta(double theta, double y) const;
  double dv_dy(double theta, double y) const;

  // 6 terms per component, amplitudes rescaled so c1_bound() == c1_target
  static Perturbation random(std::uint64_t seed, std::uint64_t index,
                             double c1_target);
};

// Global analytic bounds of the fiber family, used for Lipschitz slack in
// the certification grids (perturbation bounds are added separately).
struct FiberBounds {
  double value_abs = 0.0;   // sup |f|
  double dy_abs = 0.0;      // sup |df/dy|
  double dyy_abs = 0.0;     // sup |d2f/dy2|
  double dth_abs = 0.0;     // sup |df/dtheta|
  double dthth_abs = 0.0;   // sup |d2f/dtheta2|
  double dthy_abs = 0.0;    // sup |d2f/dtheta dy|
};

struct JacobianMat {
  double j11 = 0.0, j12 = 0.0;
  double j21 = 0.0, j22 = 0.0;
  double det() const { return j11 * j22 - j12 * j21; }
};

struct MapHandle {
  SkewParams params;
  Perturbation pert;

  // precomputed saturation tails of psi1/psi2
  Quintic p1_lo, p1_hi, p2_lo, p2_hi;
  bool psi12_monotone = false;  // all four tails have d1 >= 0
  FiberBounds bounds;
};

// Structural sanity only (arc ordering, interval shapes); the dynamical
// conditions are certified separately, so degenerate maps can be built
// on purpose to exercise FAIL paths.
MapHandle make_map(const SkewParams& p);
MapHandle make_map(const SkewParams& p, const Perturbation& pert);

// piecewise fiber family --------------------------------------------------

// Region of a circle coordinate: inside arc i, or inside the gap after
// arc i with blend parameter t in [0,1].
struct ThetaRegion {
  bool in_arc = true;
  int i = 0;
  double t = 0.0;
};
ThetaRegion theta_region(const SkewParams& p, double theta);
// arc endpoints in increasing order (region boundaries for cell splitting)
std::vector<double> region_breakpoints(const SkewParams& p);
// width of the gap after arc g (g = 3 wraps around the seam)
double gap_width(const SkewParams& p, int g);

// psi_i evaluated with the C^2 extension to |y| <= 1.1 (i in 1..4)
double psi_value(const MapHandle& m, int i, double y);
double psi_d1(const MapHandle& m, int i, double y);
// rigorous value range of psi_i over [ylo, yhi] (exact for monotone
// pieces and for the parabola; padded dense scan otherwise)
void psi_range(const MapHandle& m, int i, double ylo, double yhi, double& lo,
               double& hi);

// fiber value; DomainError if |y| > 1
double fiber_map(const MapHandle& m, double theta, double y);
// extension to |y| <= 1.1 used by the torus embedding
double fiber_ext(const MapHandle& m, double theta, double y);
double fiber_dtheta(const MapHandle& m, double theta, double y);
double fiber_dy(const MapHandle& m, double theta, double y);

// map evaluation -----------------------------------------------------------

LiftPoint lift_apply(const MapHandle& m, const CylinderPoint& p);
CylinderPoint apply(const MapHandle& m, const CylinderPoint& p);
JacobianMat jacobian(const MapHandle& m, const CylinderPoint& p);

// unique preimage under inverse branch 1/2/3; OutOfBranch, NoConvergence
CylinderPoint inverse_branch(const MapHandle& m, int branch,
                             const LiftPoint& target);

MapHandle perturb(const MapHandle& m, const Perturbation& spec);

// torus embedding ----------------------------------------------------------

struct TorusPoint {
  double x = 0.0;
  double y = 0.0;
};

// Annulus chart around the square's center: the cylinder sits at radii
// R(y) = 0.25 + 0.05*y in [0.2, 0.3]; outside a collar-scaled
// neighbourhood of the annulus the torus map is the identity.
struct TorusMap {
  MapHandle map;
  double collar = 0.1;
  double r_pad = 0.0;  // radial half-width of the bump's ramp
};

TorusMap embed_torus(const MapHandle& m, double collar);
TorusPoint torus_chart(const CylinderPoint& p);
CylinderPoint torus_chart_inv(const TorusPoint& q);  // DomainError off-annulus
TorusPoint torus_apply(const TorusMap& tm, const TorusPoint& q);

}  // namespace cylattract
