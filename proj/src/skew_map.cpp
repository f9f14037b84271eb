#include "cylattract/skew_map.hpp"

#include <algorithm>
#include <cmath>

#include "cylattract/rng.hpp"

namespace cylattract {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kHalfPi = kPi / 2.0;
constexpr double kTwoPi = 2.0 * kPi;
}  // namespace

SkewParams build_default() {
  SkewParams p;
  p.a = 0.1;
  p.b = 0.25;
  p.d = 16;
  p.arcs[0] = {0.05, 0.20};
  p.arcs[1] = {0.30, 0.45};
  p.arcs[2] = {0.55, 0.70};
  p.arcs[3] = {0.80, 0.95};
  p.eps_arc = 0.05;
  p.alpha = -0.04;
  p.beta = 0.95;
  p.psi1 = {0.925, 0.075, -0.85, 0.85};
  p.psi2 = {0.925, -0.075, -0.85, 0.85};
  p.psi3_slope = 0.04;
  p.cone = ConeConfig{0.05, 4.0, 0.1};
  p.k[0] = 1;
  p.k[1] = 5;
  p.k[2] = 9;
  p.k[3] = 13;
  return p;
}

// perturbation --------------------------------------------------------------

namespace {
double term_value(const TrigTerm& t, double theta, double y) {
  return t.amp * std::sin(kTwoPi * t.m * theta + t.ph_t) *
         std::cos(kHalfPi * t.n * y + t.ph_y);
}
double term_dtheta(const TrigTerm& t, double theta, double y) {
  return t.amp * kTwoPi * t.m * std::cos(kTwoPi * t.m * theta + t.ph_t) *
         std::cos(kHalfPi * t.n * y + t.ph_y);
}
double term_dy(const TrigTerm& t, double theta, double y) {
  return -t.amp * kHalfPi * t.n * std::sin(kTwoPi * t.m * theta + t.ph_t) *
         std::sin(kHalfPi * t.n * y + t.ph_y);
}

double comp_c1(const std::vector<TrigTerm>& terms) {
  double s0 = 0.0, st = 0.0, sy = 0.0;
  for (const auto& t : terms) {
    const double a = std::fabs(t.amp);
    s0 += a;
    st += a * kTwoPi * t.m;
    sy += a * kHalfPi * t.n;
  }
  return std::max({s0, st, sy});
}

double comp_c2(const std::vector<TrigTerm>& terms) {
  double stt = 0.0, sty = 0.0, syy = 0.0;
  for (const auto& t : terms) {
    const double a = std::fabs(t.amp);
    const double wt = kTwoPi * t.m, wy = kHalfPi * t.n;
    stt += a * wt * wt;
    sty += a * wt * wy;
    syy += a * wy * wy;
  }
  return std::max({stt, sty, syy});
}
}  // namespace

double Perturbation::c1_bound() const {
  return std::max(comp_c1(u), comp_c1(v));
}

double Perturbation::c2_bound() const {
  return std::max(comp_c2(u), comp_c2(v));
}

double Perturbation::eval_u(double theta, double y) const {
  double s = 0.0;
  for (const auto& t : u) s += term_value(t, theta, y);
  return s;
}
double Perturbation::eval_v(double theta, double y) const {
  double s = 0.0;
  for (const auto& t : v) s += term_value(t, theta, y);
  return s;
}
double Perturbation::du_dtheta(double theta, double y) const {
  double s = 0.0;
  for (const auto& t : u) s += term_dtheta(t, theta, y);
  return s;
}
double Perturbation::du_dy(double theta, double y) const {
  double s = 0.0;
  for (const auto& t : u) s += term_dy(t, theta, y);
  return s;
}
double Perturbation::dv_dtheta(double theta, double y) const {
  double s = 0.0;
  for (const auto& t : v) s += term_dtheta(t, theta, y);
  return s;
}
double Perturbation::dv_dy(double theta, double y) const {
  double s = 0.0;
  for (const auto& t : v) s += term_dy(t, theta, y);
  return s;
}

Perturbation Perturbation::random(std::uint64_t seed, std::uint64_t index,
                                  double c1_target) {
  CounterRng rng{seed, streams::kPerturb + index};
  Perturbation p;
  auto draw = [&](std::uint64_t base) {
    TrigTerm t;
    t.m = 1 + static_cast<int>(rng.raw(base) & 3);
    t.n = static_cast<int>(rng.raw(base + 1) & 3);
    t.amp = rng.uniform(base + 2, -1.0, 1.0);
    t.ph_t = rng.uniform(base + 3, 0.0, kTwoPi);
    t.ph_y = rng.uniform(base + 4, 0.0, kTwoPi);
    return t;
  };
  for (int i = 0; i < 6; ++i) p.u.push_back(draw(8 * i));
  for (int i = 0; i < 6; ++i) p.v.push_back(draw(64 + 8 * i));
  const double b = p.c1_bound();
  const double scale = b > 0.0 ? c1_target / b : 0.0;
  for (auto& t : p.u) t.amp *= scale;
  for (auto& t : p.v) t.amp *= scale;
  return p;
}

// handle construction --------------------------------------------------------

double gap_width(const SkewParams& p, int g) {
  if (g < 3) return p.arcs[g + 1].lo - p.arcs[g].hi;
  return p.arcs[0].lo + 1.0 - p.arcs[3].hi;
}

namespace {
// value range of piece i over [-1,1], using the already-built tails
void piece_range_full(const MapHandle& m, int i, double& lo, double& hi);
}  // namespace

MapHandle make_map(const SkewParams& p, const Perturbation& pert) {
  if (p.d < 1) throw ParamError("degree must be >= 1");
  if (!(p.a > 0.0) || !(p.b > 0.0))
    throw ParamError("segment parameters a, b must be positive");
  for (int i = 0; i < 4; ++i) {
    if (!(p.arcs[i].lo >= 0.0 && p.arcs[i].lo <= p.arcs[i].hi &&
          p.arcs[i].hi < 1.0))
      throw ParamError("arcs must satisfy 0 <= lo <= hi < 1");
    if (i > 0 && !(p.arcs[i].lo > p.arcs[i - 1].hi))
      throw ParamError("arcs must be ordered with positive gaps");
  }
  p.cone.validate();

  MapHandle m;
  m.params = p;
  m.pert = pert;

  const double jlo = p.jout_lo(), jhi = p.jout_hi();
  if (!(jlo > -1.0 && jhi < 1.0))
    throw ParamError("J_out must lie strictly inside the fiber");
  m.p1_lo = hermite_tail(-1.0, p.psi1.sat_lo, 0.0, jlo,
                         p.psi1.slope * jlo + p.psi1.offset, p.psi1.slope);
  m.p1_hi = hermite_tail(jhi, p.psi1.slope * jhi + p.psi1.offset, p.psi1.slope,
                         1.0, p.psi1.sat_hi, 0.0);
  m.p2_lo = hermite_tail(-1.0, p.psi2.sat_lo, 0.0, jlo,
                         p.psi2.slope * jlo + p.psi2.offset, p.psi2.slope);
  m.p2_hi = hermite_tail(jhi, p.psi2.slope * jhi + p.psi2.offset, p.psi2.slope,
                         1.0, p.psi2.sat_hi, 0.0);
  m.psi12_monotone = p.psi1.slope >= 0.0 && p.psi2.slope >= 0.0 &&
                     m.p1_lo.d1_min() >= 0.0 && m.p1_hi.d1_min() >= 0.0 &&
                     m.p2_lo.d1_min() >= 0.0 && m.p2_hi.d1_min() >= 0.0;

  // global analytic bounds over theta in [0,1), y in [-1,1]
  double rlo[4], rhi[4], dy_piece[4];
  for (int i = 0; i < 4; ++i) piece_range_full(m, i + 1, rlo[i], rhi[i]);
  dy_piece[0] = std::max({std::fabs(p.psi1.slope), m.p1_lo.d1_abs_max(),
                          m.p1_hi.d1_abs_max()});
  dy_piece[1] = std::max({std::fabs(p.psi2.slope), m.p2_lo.d1_abs_max(),
                          m.p2_hi.d1_abs_max()});
  dy_piece[2] = std::fabs(p.psi3_slope);
  dy_piece[3] = 2.0 * std::fabs(p.alpha);
  double dyy_piece[4] = {
      std::max(m.p1_lo.d2_abs_max(), m.p1_hi.d2_abs_max()),
      std::max(m.p2_lo.d2_abs_max(), m.p2_hi.d2_abs_max()), 0.0,
      2.0 * std::fabs(p.alpha)};

  FiberBounds& b = m.bounds;
  for (int i = 0; i < 4; ++i) {
    b.value_abs = std::max({b.value_abs, std::fabs(rlo[i]), std::fabs(rhi[i])});
    b.dy_abs = std::max(b.dy_abs, dy_piece[i]);
    b.dyy_abs = std::max(b.dyy_abs, dyy_piece[i]);
  }
  for (int g = 0; g < 4; ++g) {
    const int i = g, j = (g + 1) % 4;
    const double w = gap_width(p, g);
    const double diff = std::max(rhi[i] - rlo[j], rhi[j] - rlo[i]);
    const double ddiff = dy_piece[i] + dy_piece[j];
    b.dth_abs = std::max(b.dth_abs, kStepD1Sup / w * diff);
    b.dthth_abs = std::max(b.dthth_abs, kStepD2Sup / (w * w) * diff);
    b.dthy_abs = std::max(b.dthy_abs, kStepD1Sup / w * ddiff);
  }
  return m;
}

MapHandle make_map(const SkewParams& p) { return make_map(p, Perturbation{}); }

// piecewise fiber family ------------------------------------------------------

ThetaRegion theta_region(const SkewParams& p, double theta) {
  const double th = wrap01(theta);
  for (int i = 0; i < 4; ++i)
    if (th >= p.arcs[i].lo && th <= p.arcs[i].hi) return {true, i, 0.0};
  for (int g = 0; g < 3; ++g)
    if (th > p.arcs[g].hi && th < p.arcs[g + 1].lo)
      return {false, g, (th - p.arcs[g].hi) / gap_width(p, g)};
  // wrap gap
  const double w = gap_width(p, 3);
  if (th > p.arcs[3].hi) return {false, 3, (th - p.arcs[3].hi) / w};
  return {false, 3, (th + 1.0 - p.arcs[3].hi) / w};
}

std::vector<double> region_breakpoints(const SkewParams& p) {
  std::vector<double> b;
  for (int i = 0; i < 4; ++i) {
    b.push_back(p.arcs[i].lo);
    b.push_back(p.arcs[i].hi);
  }
  return b;
}

double psi_value(const MapHandle& m, int i, double y) {
  const SkewParams& p = m.params;
  switch (i) {
    case 1:
      if (y <= -1.0) return p.psi1.sat_lo;
      if (y >= 1.0) return p.psi1.sat_hi;
      if (y < p.jout_lo()) return m.p1_lo.eval(y);
      if (y <= p.jout_hi()) return p.psi1.slope * y + p.psi1.offset;
      return m.p1_hi.eval(y);
    case 2:
      if (y <= -1.0) return p.psi2.sat_lo;
      if (y >= 1.0) return p.psi2.sat_hi;
      if (y < p.jout_lo()) return m.p2_lo.eval(y);
      if (y <= p.jout_hi()) return p.psi2.slope * y + p.psi2.offset;
      return m.p2_hi.eval(y);
    case 3:
      return p.psi3_slope * y;
    case 4:
      return p.alpha * y * y + p.beta;
    default:
      throw ParamError("psi index must be 1..4");
  }
}

double psi_d1(const MapHandle& m, int i, double y) {
  const SkewParams& p = m.params;
  switch (i) {
    case 1:
      if (y <= -1.0 || y >= 1.0) return 0.0;
      if (y < p.jout_lo()) return m.p1_lo.d1(y);
      if (y <= p.jout_hi()) return p.psi1.slope;
      return m.p1_hi.d1(y);
    case 2:
      if (y <= -1.0 || y >= 1.0) return 0.0;
      if (y < p.jout_lo()) return m.p2_lo.d1(y);
      if (y <= p.jout_hi()) return p.psi2.slope;
      return m.p2_hi.d1(y);
    case 3:
      return p.psi3_slope;
    case 4:
      return 2.0 * p.alpha * y;
    default:
      throw ParamError("psi index must be 1..4");
  }
}

void psi_range(const MapHandle& m, int i, double ylo, double yhi, double& lo,
               double& hi) {
  if (!(ylo <= yhi)) throw ParamError("psi_range: empty interval");
  if (i == 3) {
    const double v0 = psi_value(m, 3, ylo), v1 = psi_value(m, 3, yhi);
    lo = std::min(v0, v1);
    hi = std::max(v0, v1);
    return;
  }
  if (i == 4) {
    const double v0 = psi_value(m, 4, ylo), v1 = psi_value(m, 4, yhi);
    lo = std::min(v0, v1);
    hi = std::max(v0, v1);
    if (ylo <= 0.0 && 0.0 <= yhi) {
      lo = std::min(lo, m.params.beta);
      hi = std::max(hi, m.params.beta);
    }
    return;
  }
  if (i != 1 && i != 2) throw ParamError("psi index must be 1..4");
  if (m.psi12_monotone) {
    lo = psi_value(m, i, ylo);
    hi = psi_value(m, i, yhi);
    return;
  }
  // conservative fallback: dense scan with a Lipschitz pad
  const Quintic& qlo = (i == 1) ? m.p1_lo : m.p2_lo;
  const Quintic& qhi = (i == 1) ? m.p1_hi : m.p2_hi;
  const double L =
      std::max({std::fabs(i == 1 ? m.params.psi1.slope : m.params.psi2.slope),
                qlo.d1_abs_max(), qhi.d1_abs_max()});
  const int n = 256;
  const double h = (yhi - ylo) / n;
  double mn = psi_value(m, i, ylo), mx = mn;
  for (int k = 1; k <= n; ++k) {
    const double v = psi_value(m, i, ylo + h * k);
    mn = std::min(mn, v);
    mx = std::max(mx, v);
  }
  lo = mn - 0.5 * L * h;
  hi = mx + 0.5 * L * h;
}

namespace {
void piece_range_full(const MapHandle& m, int i, double& lo, double& hi) {
  psi_range(m, i, -1.0, 1.0, lo, hi);
}

void check_fiber_domain(double y, double cap) {
  if (!(std::fabs(y) <= cap)) throw DomainError("fiber coordinate out of range");
}
}  // namespace

double fiber_ext(const MapHandle& m, double theta, double y) {
  check_fiber_domain(y, 1.1 + 1e-9);
  const ThetaRegion r = theta_region(m.params, theta);
  if (r.in_arc) return psi_value(m, r.i + 1, y);
  const double s = smooth_step(r.t);
  const int i = r.i + 1, j = (r.i + 1) % 4 + 1;
  return (1.0 - s) * psi_value(m, i, y) + s * psi_value(m, j, y);
}

double fiber_map(const MapHandle& m, double theta, double y) {
  check_fiber_domain(y, 1.0);
  return fiber_ext(m, theta, y);
}

double fiber_dtheta(const MapHandle& m, double theta, double y) {
  const ThetaRegion r = theta_region(m.params, theta);
  if (r.in_arc) return 0.0;
  const int i = r.i + 1, j = (r.i + 1) % 4 + 1;
  const double w = gap_width(m.params, r.i);
  return smooth_step_d1(r.t) / w *
         (psi_value(m, j, y) - psi_value(m, i, y));
}

double fiber_dy(const MapHandle& m, double theta, double y) {
  const ThetaRegion r = theta_region(m.params, theta);
  if (r.in_arc) return psi_d1(m, r.i + 1, y);
  const double s = smooth_step(r.t);
  const int i = r.i + 1, j = (r.i + 1) % 4 + 1;
  return (1.0 - s) * psi_d1(m, i, y) + s * psi_d1(m, j, y);
}

// map evaluation --------------------------------------------------------------

namespace {
double wrapd(double x, int d) {
  const double dd = static_cast<double>(d);
  while (x < 0.0) x += dd;
  while (x >= dd) x -= dd;
  return x;
}
}  // namespace

LiftPoint lift_apply(const MapHandle& m, const CylinderPoint& p) {
  const double th = wrap01(p.theta);
  double x = static_cast<double>(m.params.d) * th;
  double yv = fiber_ext(m, th, p.y);
  if (!m.pert.empty()) {
    x = wrapd(x + m.pert.eval_u(th, p.y), m.params.d);
    yv += m.pert.eval_v(th, p.y);
  }
  return {x, yv};
}

CylinderPoint apply(const MapHandle& m, const CylinderPoint& p) {
  return project(lift_apply(m, p));
}

JacobianMat jacobian(const MapHandle& m, const CylinderPoint& p) {
  const double th = wrap01(p.theta);
  JacobianMat J;
  J.j11 = static_cast<double>(m.params.d);
  J.j12 = 0.0;
  J.j21 = fiber_dtheta(m, th, p.y);
  J.j22 = fiber_dy(m, th, p.y);
  if (!m.pert.empty()) {
    J.j11 += m.pert.du_dtheta(th, p.y);
    J.j12 += m.pert.du_dy(th, p.y);
    J.j21 += m.pert.dv_dtheta(th, p.y);
    J.j22 += m.pert.dv_dy(th, p.y);
  }
  return J;
}

namespace {
// root of a continuous function with a sign change on [lo, hi]:
// Newton clipped to the shrinking bracket, bisection otherwise
template <class F, class FD>
bool solve_bracketed(const F& f, const FD& fd, double lo, double hi,
                     double flo, double fhi, double tol, double& root) {
  if (flo == 0.0) {
    root = lo;
    return true;
  }
  if (fhi == 0.0) {
    root = hi;
    return true;
  }
  if ((flo < 0.0) == (fhi < 0.0)) return false;
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 100; ++it) {
    const double fx = f(x);
    if (std::fabs(fx) <= tol) {
      root = x;
      return true;
    }
    if ((fx < 0.0) == (flo < 0.0)) {
      lo = x;
      flo = fx;
    } else {
      hi = x;
      fhi = fx;
    }
    const double dfx = fd(x);
    double xn = (dfx != 0.0) ? x - fx / dfx : lo;
    if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);
    x = xn;
  }
  root = x;
  return std::fabs(f(x)) <= tol;
}
}  // namespace

CylinderPoint inverse_branch(const MapHandle& m, int branch,
                             const LiftPoint& target) {
  const SkewParams& p = m.params;
  if (branch < 1 || branch > 3) throw ParamError("branch must be 1, 2 or 3");
  const int k = p.k[branch - 1];
  const double delta = p.cone.delta;
  const double wlo = static_cast<double>(k) - delta;
  const double whi = static_cast<double>(k) + 1.0 + delta;
  if (!(target.theta_lift >= wlo && target.theta_lift <= whi))
    throw OutOfBranch("target circle coordinate outside the branch window");
  double ylo_t, yhi_t;
  if (branch == 1) {
    ylo_t = p.j1_lo();
    yhi_t = p.j1_hi();
  } else if (branch == 2) {
    ylo_t = p.j2_lo();
    yhi_t = p.j2_hi();
  } else {
    // the perturbed image band can poke past the unperturbed segment by
    // at most the perturbation's sup bound
    const double widen = m.pert.c1_bound();
    ylo_t = std::min(-p.psi3_slope, p.psi3_slope) - widen;
    yhi_t = std::max(-p.psi3_slope, p.psi3_slope) + widen;
  }
  if (!(target.y >= ylo_t && target.y <= yhi_t))
    throw OutOfBranch("target fiber coordinate outside the branch segment");

  const double T = target.theta_lift, Y = target.y;
  const double dd = static_cast<double>(p.d);
  const double umax = m.pert.empty() ? 0.0 : m.pert.c1_bound();

  double th = T / dd;
  double y = 0.0;
  for (int outer = 0; outer < 100; ++outer) {
    if (!m.pert.empty()) {
      auto g = [&](double t) { return dd * t + m.pert.eval_u(t, y) - T; };
      auto gd = [&](double t) { return dd + m.pert.du_dtheta(t, y); };
      const double lo = (T - umax) / dd - 1e-15, hi = (T + umax) / dd + 1e-15;
      double root;
      if (!solve_bracketed(g, gd, lo, hi, g(lo), g(hi), 1e-14, root))
        throw NoConvergence("circle-coordinate solve lost its bracket");
      th = root;
    }
    {
      auto g = [&](double yy) {
        double r = fiber_ext(m, th, yy) - Y;
        if (!m.pert.empty()) r += m.pert.eval_v(th, yy);
        return r;
      };
      auto gd = [&](double yy) {
        double r = fiber_dy(m, th, yy);
        if (!m.pert.empty()) r += m.pert.dv_dy(th, yy);
        return r;
      };
      double root;
      if (!solve_bracketed(g, gd, -1.0, 1.0, g(-1.0), g(1.0), 1e-14, root))
        throw NoConvergence("fiber-coordinate solve lost its bracket");
      y = root;
    }
    const LiftPoint img = lift_apply(m, {th, y});
    // circle residual measured in the cover (no wrap: both sit in the
    // same window)
    double rth = std::fabs(img.theta_lift - T);
    rth = std::min(rth, dd - rth);  // distance on the d-cover circle
    const double ry = std::fabs(img.y - Y);
    if (rth <= 1e-12 && ry <= 1e-12) return {wrap01(th), y};
  }
  throw NoConvergence("inverse branch did not reach the residual target");
}

MapHandle perturb(const MapHandle& m, const Perturbation& spec) {
  return make_map(m.params, spec);
}

// torus embedding ---------------------------------------------------------------

TorusMap embed_torus(const MapHandle& m, double collar) {
  if (!(collar > 0.0 && collar < 0.25))
    throw DomainError("collar must lie in (0, 0.25)");
  TorusMap tm;
  tm.map = m;
  tm.collar = collar;
  // fiber halfwidth grows by 0.4*collar (<= 0.1), radius by 0.05 of that
  tm.r_pad = 0.05 * (0.4 * collar);
  return tm;
}

TorusPoint torus_chart(const CylinderPoint& p) {
  const double R = 0.25 + 0.05 * p.y;
  return {0.5 + R * std::cos(kTwoPi * p.theta),
          0.5 + R * std::sin(kTwoPi * p.theta)};
}

CylinderPoint torus_chart_inv(const TorusPoint& q) {
  const double dx = q.x - 0.5, dy = q.y - 0.5;
  const double r = std::hypot(dx, dy);
  if (!(r >= 0.195 - 1e-9 && r <= 0.305 + 1e-9))
    throw DomainError("point outside the annulus chart");
  const double th = wrap01(std::atan2(dy, dx) / kTwoPi);
  return {th, (r - 0.25) / 0.05};
}

TorusPoint torus_apply(const TorusMap& tm, const TorusPoint& q) {
  const double dx = q.x - 0.5, dy = q.y - 0.5;
  const double r = std::hypot(dx, dy);
  const double lo = 0.2 - tm.r_pad, hi = 0.3 + tm.r_pad;
  if (!(r > lo && r < hi)) return q;  // identity off the collar band

  const double th = wrap01(std::atan2(dy, dx) / kTwoPi);
  const double yv = (r - 0.25) / 0.05;
  const MapHandle& m = tm.map;
  double x1 = static_cast<double>(m.params.d) * th;
  double y1 = fiber_ext(m, th, yv);
  if (!m.pert.empty()) {
    x1 = wrapd(x1 + m.pert.eval_u(th, yv), m.params.d);
    y1 += m.pert.eval_v(th, yv);
  }
  const TorusPoint f = torus_chart({wrap01(x1), y1});

  const double phi = smooth_step((r - lo) / tm.r_pad) *
                     smooth_step((hi - r) / tm.r_pad);
  return {q.x + phi * (f.x - q.x), q.y + phi * (f.y - q.y)};
}

}  // namespace cylattract
