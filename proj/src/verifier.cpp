#include "cylattract/verifier.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "cylattract/errors.hpp"
#include "cylattract/smooth.hpp"
#include "json.hpp"

namespace cylattract {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string loc_str(double th, double y) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "(theta=%.17g, y=%.17g)", th, y);
  return buf;
}

// blend parameter of theta inside gap g; endpoints of a segment share the
// wrap branch of the segment's midpoint classification
double gap_t(const SkewParams& p, int g, double th) {
  const double w = gap_width(p, g);
  if (g < 3) return (th - p.arcs[g].hi) / w;
  return th >= p.arcs[3].hi ? (th - p.arcs[3].hi) / w : (th + 1.0 - p.arcs[3].hi) / w;
}

double clamp01(double t) { return t < 0.0 ? 0.0 : (t > 1.0 ? 1.0 : t); }

// backward vertical-cone data certified over one branch rectangle by
// interval arithmetic on the Jacobian entries (j21 vanishes on arcs, so
// only the perturbation enters the off-diagonal)
struct SigmaCert {
  bool domain_ok = false;
  double det_lo = -1.0;
  double sigma_lo = 0.0;
  double vert_margin = -1.0;
};

SigmaCert certify_branch_rect(const MapHandle& m, int piece, double t0,
                              double t1, double y0, double y1, double eta) {
  SigmaCert c;
  const SkewParams& p = m.params;
  const ArcInterval& A = p.arcs[piece - 1];
  c.domain_ok = t0 <= t1 && y0 <= y1 && t0 >= A.lo && t1 <= A.hi &&
                y0 >= -1.0 && y1 <= 1.0;
  if (!c.domain_ok) return c;

  const double pc = m.pert.c1_bound();
  const double d = static_cast<double>(p.d);
  double q_lo = 0.0, q_hi = 0.0;
  if (piece == 3) {
    q_lo = q_hi = p.psi3_slope;
  } else {
    const Psi12Spec& s = piece == 1 ? p.psi1 : p.psi2;
    if (y0 >= p.jout_lo() && y1 <= p.jout_hi()) {
      q_lo = q_hi = s.slope;  // rectangle inside the affine zone
    } else {
      const Quintic& tl = piece == 1 ? m.p1_lo : m.p2_lo;
      const Quintic& tu = piece == 1 ? m.p1_hi : m.p2_hi;
      q_lo = std::min({s.slope, tl.d1_min(), tu.d1_min()});
      q_hi = std::max({s.slope, tl.d1_abs_max(), tu.d1_abs_max()});
    }
  }

  const double j11_lo = d - pc, j11_hi = d + pc;
  if (j11_lo <= 0.0) return c;
  const double j22_lo = q_lo - pc, j22_hi = q_hi + pc;
  c.det_lo = (j22_lo >= 0.0 ? j11_lo * j22_lo : j11_hi * j22_lo) - pc * pc;
  const double det_hi =
      (j22_hi >= 0.0 ? j11_hi * j22_hi : j11_lo * j22_hi) + pc * pc;
  if (!(c.det_lo > 0.0)) return c;
  c.sigma_lo = (j11_lo - eta * pc) / det_hi;
  const double j22_abs = std::max(std::fabs(j22_lo), std::fabs(j22_hi));
  c.vert_margin = eta * (j11_lo - eta * pc) - (eta * j22_abs + pc);
  return c;
}

bool rect_ok(const SigmaCert& s) {
  return s.domain_ok && s.det_lo > 0.0 && s.sigma_lo > 1.0 &&
         s.vert_margin > 0.0;
}

}  // namespace

double CheckFragment::get(const std::string& name) const {
  for (const auto& kv : constants)
    if (kv.first == name) return kv.second;
  throw ParamError("fragment '" + id + "' has no constant '" + name + "'");
}

const CheckFragment* CheckReport::find(const std::string& id) const {
  for (const auto& f : fragments)
    if (f.id == id) return &f;
  return nullptr;
}

double lambda_h_point(const JacobianMat& J, double eta, double kappa) {
  // rho(u) is a ratio of piecewise-affine functions of u, hence monotone
  // between the kinks of the two absolute values; the minimum over
  // [-kappa, kappa] is attained at an endpoint, at u = 0 (kink of the
  // denominator), or where a numerator term vanishes.
  const auto rho = [&](double u) {
    return (std::fabs(J.j11 + J.j12 * u) + eta * std::fabs(J.j21 + J.j22 * u)) /
           (1.0 + eta * std::fabs(u));
  };
  double best = std::min({rho(-kappa), rho(kappa), rho(0.0)});
  if (J.j12 != 0.0) {
    const double u = -J.j11 / J.j12;
    if (u > -kappa && u < kappa) best = std::min(best, rho(u));
  }
  if (J.j22 != 0.0) {
    const double u = -J.j21 / J.j22;
    if (u > -kappa && u < kappa) best = std::min(best, rho(u));
  }
  return best;
}

void fiber_cell_bounds(const MapHandle& m, double th_lo, double th_hi,
                       double y_lo, double y_hi, double& lo, double& hi) {
  const SkewParams& p = m.params;
  if (!(th_hi >= th_lo) || !(y_hi >= y_lo) || th_lo < 0.0 || th_hi > 1.0 ||
      y_lo < -1.0 || y_hi > 1.0)
    throw ParamError("fiber_cell_bounds: cell outside the cylinder");

  // split at arc endpoints so each segment lies in one region
  double cuts[10];
  int nc = 0;
  cuts[nc++] = th_lo;
  for (int i = 0; i < 4; ++i) {
    if (p.arcs[i].lo > th_lo && p.arcs[i].lo < th_hi) cuts[nc++] = p.arcs[i].lo;
    if (p.arcs[i].hi > th_lo && p.arcs[i].hi < th_hi) cuts[nc++] = p.arcs[i].hi;
  }
  cuts[nc++] = th_hi;

  double plo[5], phi[5];
  bool have[5] = {false, false, false, false, false};
  const auto prange = [&](int piece) {
    if (!have[piece]) {
      psi_range(m, piece, y_lo, y_hi, plo[piece], phi[piece]);
      have[piece] = true;
    }
  };

  double vlo = kInf, vhi = -kInf;
  for (int s = 0; s + 1 < nc; ++s) {
    const double a = cuts[s], b = cuts[s + 1];
    if (b < a) continue;
    if (b == a && nc > 2) continue;  // keep one segment for a point cell
    const ThetaRegion reg = theta_region(p, wrap01(0.5 * (a + b)));
    if (reg.in_arc) {
      prange(reg.i + 1);
      vlo = std::min(vlo, plo[reg.i + 1]);
      vhi = std::max(vhi, phi[reg.i + 1]);
    } else {
      const int g = reg.i;
      const int i1 = g + 1, i2 = (g + 1) % 4 + 1;
      prange(i1);
      prange(i2);
      // the blend is a convex combination with weight s(t); over the
      // segment s ranges between its endpoint values, and the combination
      // is affine in s, so the endpoints bound it
      const double s0 = smooth_step(clamp01(gap_t(p, g, a)));
      const double s1 = smooth_step(clamp01(gap_t(p, g, b)));
      for (const double ss : {s0, s1}) {
        vhi = std::max(vhi, (1.0 - ss) * phi[i1] + ss * phi[i2]);
        vlo = std::min(vlo, (1.0 - ss) * plo[i1] + ss * plo[i2]);
      }
    }
  }

  if (m.pert.empty()) {
    lo = vlo;
    hi = vhi;
    return;
  }
  // evaluate the perturbation at the cell center and pad by its Lipschitz
  // bound times the half-widths; a blanket sup-norm pad would drown the
  // fold gap for even tiny perturbations
  const double pc = m.pert.c1_bound();
  const double vc =
      m.pert.eval_v(wrap01(0.5 * (th_lo + th_hi)), 0.5 * (y_lo + y_hi));
  const double pad = pc * (0.5 * (th_hi - th_lo) + 0.5 * (y_hi - y_lo));
  lo = vlo + vc - pad;
  hi = vhi + vc + pad;
}

void fold_region(const SkewParams& p, double& th_lo, double& th_hi) {
  th_lo = 0.5 * (p.arcs[2].hi + p.arcs[3].lo);
  th_hi = 0.5 * (p.arcs[3].hi + p.arcs[0].lo + 1.0);
}

FoldScan fold_scan(const MapHandle& m, int nt, int ny, bool parallel) {
  if (nt < 2 || ny < 2) throw ParamError("fold_scan: grid too small");
  const SkewParams& p = m.params;
  double plo, phi;
  fold_region(p, plo, phi);
  const double ylo = p.jout_lo(), yhi = p.jout_hi();
  const double tc = wrap01(plo + 0.5 * (phi - plo));
  const double yc = 0.5 * (ylo + yhi);

  const auto inside = [&](double th, double y) {
    const bool t_in = (th > plo && th < phi) || (th + 1.0 > plo && th + 1.0 < phi);
    return t_in && y > ylo && y < yhi;
  };

  struct Row {
    double max = -kInf;
    double arg_t = 0.0, arg_y = 0.0, arg_d2 = kInf;
    double omax = -kInf;
    bool has_o = false;
  };
  std::vector<Row> rows(ny + 1);

  const auto do_row = [&](int j) {
    Row r;
    const double y = -1.0 + 2.0 * j / ny;
    for (int i = 0; i < nt; ++i) {
      const double th = static_cast<double>(i) / nt;
      const double v = lift_apply(m, {th, y}).y;
      const double dt = circle_dist(th, tc);
      const double d2 = dt * dt + (y - yc) * (y - yc);
      // total order: value desc, distance to the fold center asc, theta asc
      if (v > r.max || (v == r.max && (d2 < r.arg_d2 ||
                                       (d2 == r.arg_d2 && th < r.arg_t)))) {
        r.max = v;
        r.arg_t = th;
        r.arg_y = y;
        r.arg_d2 = d2;
      }
      if (!inside(th, y)) {
        r.has_o = true;
        r.omax = std::max(r.omax, v);
      }
    }
    rows[j] = r;
  };

  if (parallel) {
#pragma omp parallel for
    for (int j = 0; j <= ny; ++j) do_row(j);
  } else {
    for (int j = 0; j <= ny; ++j) do_row(j);
  }

  FoldScan out;
  out.max_value = -kInf;
  double bd2 = kInf, bt = 0.0, by = 0.0;
  for (int j = 0; j <= ny; ++j) {
    const Row& r = rows[j];
    if (r.max > out.max_value ||
        (r.max == out.max_value &&
         (r.arg_d2 < bd2 || (r.arg_d2 == bd2 &&
                             (r.arg_t < bt || (r.arg_t == bt && r.arg_y < by)))))) {
      out.max_value = r.max;
      bt = r.arg_t;
      by = r.arg_y;
      bd2 = r.arg_d2;
    }
    if (r.has_o) {
      out.has_outside = true;
      out.outside_node_max = std::max(out.outside_node_max, r.omax);
    }
  }
  if (!out.has_outside) out.outside_node_max = -kInf;
  out.argmax = {bt, by};
  return out;
}

CheckFragment check_segment_inclusions(const SkewParams& p) {
  CheckFragment f;
  f.id = "segments";
  const double i_lo = std::max(p.j1_lo(), p.j2_lo());
  const double i_hi = std::min(p.j1_hi(), p.j2_hi());
  const double u_lo = std::min(p.j1_lo(), p.j2_lo());
  const double u_hi = std::max(p.j1_hi(), p.j2_hi());
  const std::pair<const char*, double> clauses[] = {
      {"1 - 3a", 1.0 - 3.0 * p.a},
      {"3a - b", 3.0 * p.a - p.b},
      {"b - 2a", p.b - 2.0 * p.a},
      {"2a", 2.0 * p.a},
      {"J_in inside J1 cap J2", std::min(p.jin_lo() - i_lo, i_hi - p.jin_hi())},
      {"J1 cap J2 inside J_out",
       std::min(i_lo - p.jout_lo(), p.jout_hi() - i_hi)},
      {"J_out inside J1 cup J2",
       std::min(p.jout_lo() - u_lo, u_hi - p.jout_hi())},
  };
  double margin = kInf;
  const char* worst = nullptr;
  for (const auto& c : clauses) {
    if (c.second < margin) {
      margin = c.second;
      worst = c.first;
    }
  }
  const bool d_ok = p.d >= 2;
  f.pass = d_ok && margin > 0.0;
  f.margin = margin;
  if (!d_ok)
    f.witness = "degree below 2";
  else if (!(margin > 0.0))
    f.witness = std::string("violated: ") + worst;
  f.constants = {{"a", p.a},
                 {"b", p.b},
                 {"d", static_cast<double>(p.d)},
                 {"jin_slack", clauses[4].second},
                 {"mid_slack", clauses[5].second},
                 {"out_slack", clauses[6].second}};
  return f;
}

CheckFragment check_arc_windows(const SkewParams& p) {
  CheckFragment f;
  f.id = "arc_windows";
  double gap_min = kInf;
  for (int g = 0; g < 4; ++g)
    gap_min = std::min(gap_min, gap_width(p, g) - p.eps_arc);
  double w_slack = kInf;
  bool k_ok = true;
  for (int i = 0; i < 4; ++i) {
    k_ok = k_ok && p.k[i] >= 0 && p.k[i] <= p.d - 1;
    const double wlo = (p.k[i] - p.cone.delta) / p.d;
    const double whi = (p.k[i] + 1 + p.cone.delta) / p.d;
    w_slack = std::min(w_slack,
                       std::min(wlo - p.arcs[i].lo, p.arcs[i].hi - whi));
  }
  const double sat_max = std::max(p.psi1.sat_hi, p.psi2.sat_hi);
  const std::pair<const char*, double> clauses[] = {
      {"eps_arc", p.eps_arc},
      {"arc gaps exceed eps_arc", gap_min},
      {"expanded windows inside arcs", w_slack},
      {"beta above the saturation levels", p.beta - sat_max},
      {"beta below 1", 1.0 - p.beta},
      {"alpha negative", -p.alpha},
      {"fold image above -1", 1.0 + p.alpha + p.beta},
  };
  double margin = kInf;
  const char* worst = nullptr;
  for (const auto& c : clauses) {
    if (c.second < margin) {
      margin = c.second;
      worst = c.first;
    }
  }
  f.pass = k_ok && margin > 0.0;
  f.margin = margin;
  if (!k_ok)
    f.witness = "window index outside 0..d-1";
  else if (!(margin > 0.0))
    f.witness = std::string("violated: ") + worst;
  f.constants = {{"eps_arc", p.eps_arc},
                 {"gap_slack", gap_min},
                 {"window_slack", w_slack},
                 {"alpha", p.alpha},
                 {"beta", p.beta}};
  return f;
}

CheckFragment check_cone_hyperbolicity(const MapHandle& m,
                                       const ConeConfig& cone, int nt,
                                       int ny) {
  if (nt < 256 || ny < 64)
    throw ParamError("cone certification needs a grid of at least 256x64");
  cone.validate();
  const SkewParams& p = m.params;
  const double eta = cone.eta, kap = cone.kappa;
  const double pc2 = m.pert.c2_bound();
  const FiberBounds& B = m.bounds;
  const double ht = 1.0 / nt, hy = 2.0 / ny;

  // Lipschitz slack of each Jacobian entry over a half-cell
  const double d11 = 0.5 * ht * pc2 + 0.5 * hy * pc2;
  const double d12 = d11;
  const double d21 = 0.5 * ht * (B.dthth_abs + pc2) + 0.5 * hy * (B.dthy_abs + pc2);
  const double d22 = 0.5 * ht * (B.dthy_abs + pc2) + 0.5 * hy * (B.dyy_abs + pc2);
  const double lam_slack = d11 + kap * d12 + eta * (d21 + kap * d22);
  const double inv_slack = kap * d11 + kap * kap * d12 + d21 + kap * d22;

  struct Row {
    double lam = kInf;
    int lam_i = 0;
    double inv = kInf;
    int inv_i = 0;
    double sup = 0.0;
    int sup_i = 0;
  };
  std::vector<Row> rows(ny);
#pragma omp parallel for
  for (int j = 0; j < ny; ++j) {
    Row r;
    const double y0 = -1.0 + j * hy;
    const double y1 = -1.0 + (j + 1) * hy;
    const double ycen = -1.0 + (j + 0.5) * hy;
    for (int i = 0; i < nt; ++i) {
      const double tcen = (i + 0.5) * ht;
      const JacobianMat J = jacobian(m, {tcen, ycen});
      const double lam = lambda_h_point(J, eta, kap);
      if (lam < r.lam) {
        r.lam = lam;
        r.lam_i = i;
      }
      const double inv = kap * (J.j11 - kap * std::fabs(J.j12)) -
                         (std::fabs(J.j21) + kap * std::fabs(J.j22));
      if (inv < r.inv) {
        r.inv = inv;
        r.inv_i = i;
      }
      double lo, hi;
      fiber_cell_bounds(m, i * ht, (i + 1) * ht, y0, y1, lo, hi);
      const double s = std::max(std::fabs(lo), std::fabs(hi));
      if (s > r.sup) {
        r.sup = s;
        r.sup_i = i;
      }
    }
    rows[j] = r;
  }

  double lam_min = kInf, inv_min = kInf, int_sup = 0.0;
  int li = 0, lj = 0, ii = 0, ij = 0, si = 0, sj = 0;
  for (int j = 0; j < ny; ++j) {
    if (rows[j].lam < lam_min) {
      lam_min = rows[j].lam;
      li = rows[j].lam_i;
      lj = j;
    }
    if (rows[j].inv < inv_min) {
      inv_min = rows[j].inv;
      ii = rows[j].inv_i;
      ij = j;
    }
    if (rows[j].sup > int_sup) {
      int_sup = rows[j].sup;
      si = rows[j].sup_i;
      sj = j;
    }
  }
  const double lam_cert = lam_min - lam_slack;
  const double inv_cert = inv_min - inv_slack;
  const double int_margin = 1.0 - int_sup;

  const SigmaCert s1 = certify_branch_rect(m, 1, p.arcs[0].lo, p.arcs[0].hi,
                                           p.jout_lo(), p.jout_hi(), eta);
  const SigmaCert s2 = certify_branch_rect(m, 2, p.arcs[1].lo, p.arcs[1].hi,
                                           p.jout_lo(), p.jout_hi(), eta);
  const double strip_lo = (p.k[2] - p.cone.delta) / p.d;
  const double strip_hi = (p.k[2] + 1 + p.cone.delta) / p.d;
  const SigmaCert s3 = certify_branch_rect(m, 3, strip_lo, strip_hi, -1.0, 1.0, eta);

  const bool rects = rect_ok(s1) && rect_ok(s2) && rect_ok(s3);
  const bool node_ok = lam_min > 2.0 && inv_min > 0.0;
  const bool cert_ok = lam_cert > 2.0 && inv_cert > 0.0;
  if (node_ok && int_margin > 0.0 && rects && !cert_ok) {
    char buf[128];
    std::snprintf(buf, sizeof buf,
                  "cone slack at %dx%d exceeds the node margin", nt, ny);
    throw GridTooCoarse(buf);
  }

  CheckFragment f;
  f.id = "cone";
  f.pass = cert_ok && int_margin > 0.0 && rects;
  const auto rect_margin = [](const SigmaCert& s) {
    return s.domain_ok
               ? std::min({s.det_lo, s.sigma_lo - 1.0, s.vert_margin})
               : -1.0;
  };
  f.margin = std::min({lam_cert - 2.0, inv_cert, int_margin,
                       rect_margin(s1), rect_margin(s2), rect_margin(s3)});
  if (!f.pass) {
    if (!(lam_cert > 2.0))
      f.witness = "expansion factor at " + loc_str((li + 0.5) * ht, -1.0 + (lj + 0.5) * hy);
    else if (!(inv_cert > 0.0))
      f.witness = "cone invariance at " + loc_str((ii + 0.5) * ht, -1.0 + (ij + 0.5) * hy);
    else if (!(int_margin > 0.0))
      f.witness = "image reaches the fiber boundary near " +
                  loc_str((si + 0.5) * ht, -1.0 + (sj + 0.5) * hy);
    else
      f.witness = "backward vertical cone fails on a branch rectangle";
  }
  f.constants = {{"lambda_h", lam_cert},
                 {"lambda_node_min", lam_min},
                 {"lambda_slack", lam_slack},
                 {"invariance", inv_cert},
                 {"invariance_node_min", inv_min},
                 {"invariance_slack", inv_slack},
                 {"interior_margin", int_margin},
                 {"sigma1", s1.sigma_lo},
                 {"sigma2", s2.sigma_lo},
                 {"sigma3", s3.sigma_lo},
                 {"vert_margin_min",
                  std::min({s1.vert_margin, s2.vert_margin, s3.vert_margin})},
                 {"det_lo_min", std::min({s1.det_lo, s2.det_lo, s3.det_lo})}};
  return f;
}

CheckFragment check_covering_condition(const MapHandle& m, int j, int nodes) {
  if (j != 1 && j != 2) throw ParamError("covering branch must be 1 or 2");
  if (nodes < 2) throw ParamError("covering sweep needs at least 2 nodes");
  const SkewParams& p = m.params;
  const ArcInterval& A = p.arcs[j - 1];
  const double T_lo = p.k[j - 1] - p.cone.delta;
  const double T_hi = p.k[j - 1] + 1 + p.cone.delta;
  const double y_lo = j == 1 ? p.j1_lo() : p.j2_lo();
  const double y_hi = j == 1 ? p.j1_hi() : p.j2_hi();
  const double eta = p.cone.eta;
  const double hT = 0.5 * (T_hi - T_lo) / (nodes - 1);
  const double hY = 0.5 * (y_hi - y_lo) / (nodes - 1);

  struct Row {
    bool fail = false;
    double fail_T = 0.0, fail_y = 0.0;
    std::string fail_what;
    double dmin = kInf, dm_t = 0.0, dm_y = 0.0;
    double det_min = kInf, sig_min = kInf;
    double sth = 0.0, sy = 0.0;
    double bt0 = kInf, bt1 = -kInf, by0 = kInf, by1 = -kInf;
  };
  std::vector<Row> rows(nodes);
#pragma omp parallel for
  for (int jj = 0; jj < nodes; ++jj) {
    Row r;
    const double ty = y_lo + (y_hi - y_lo) * jj / (nodes - 1);
    for (int i = 0; i < nodes; ++i) {
      const double tT = T_lo + (T_hi - T_lo) * i / (nodes - 1);
      CylinderPoint q;
      try {
        q = inverse_branch(m, j, {tT, ty});
      } catch (const Error& e) {
        if (!r.fail) {
          r.fail = true;
          r.fail_T = tT;
          r.fail_y = ty;
          r.fail_what = e.what();
        }
        continue;
      }
      const double dist =
          std::min(std::min(q.theta - A.lo, A.hi - q.theta),
                   std::min(q.y - p.jout_lo(), p.jout_hi() - q.y));
      if (dist < r.dmin) {
        r.dmin = dist;
        r.dm_t = q.theta;
        r.dm_y = q.y;
      }
      const JacobianMat J = jacobian(m, q);
      const double det = J.det();
      r.det_min = std::min(r.det_min, det);
      r.sig_min = std::min(
          r.sig_min, det > 0.0 ? (J.j11 - eta * std::fabs(J.j21)) / det : -kInf);
      if (det > 0.0) {
        r.sth = std::max(
            r.sth, (std::fabs(J.j22) * hT + std::fabs(J.j12) * hY) / det);
        r.sy = std::max(
            r.sy, (std::fabs(J.j21) * hT + std::fabs(J.j11) * hY) / det);
      }
      r.bt0 = std::min(r.bt0, q.theta);
      r.bt1 = std::max(r.bt1, q.theta);
      r.by0 = std::min(r.by0, q.y);
      r.by1 = std::max(r.by1, q.y);
    }
    rows[jj] = r;
  }

  CheckFragment f;
  f.id = j == 1 ? "covering1" : "covering2";
  Row acc;
  for (int jj = 0; jj < nodes; ++jj) {
    const Row& r = rows[jj];
    if (r.fail && !acc.fail) {
      acc.fail = true;
      acc.fail_T = r.fail_T;
      acc.fail_y = r.fail_y;
      acc.fail_what = r.fail_what;
    }
    if (r.dmin < acc.dmin) {
      acc.dmin = r.dmin;
      acc.dm_t = r.dm_t;
      acc.dm_y = r.dm_y;
    }
    acc.det_min = std::min(acc.det_min, r.det_min);
    acc.sig_min = std::min(acc.sig_min, r.sig_min);
    acc.sth = std::max(acc.sth, r.sth);
    acc.sy = std::max(acc.sy, r.sy);
    acc.bt0 = std::min(acc.bt0, r.bt0);
    acc.bt1 = std::max(acc.bt1, r.bt1);
    acc.by0 = std::min(acc.by0, r.by0);
    acc.by1 = std::max(acc.by1, r.by1);
  }

  if (acc.fail) {
    f.pass = false;
    f.margin = 0.0;
    f.witness = "no preimage at target " + loc_str(acc.fail_T, acc.fail_y) +
                ": " + acc.fail_what;
    f.constants = {{"window_lo", T_lo},
                   {"window_hi", T_hi},
                   {"fail_target_theta", acc.fail_T},
                   {"fail_target_y", acc.fail_y}};
    return f;
  }

  // node spacing can hide excursions between samples; the preimage moves
  // at most by the inverse Jacobian row sums times the half-spacing, and
  // the 1.05 factor absorbs their variation between nodes
  const double slack = 1.05 * std::max(acc.sth, acc.sy);
  const double margin = acc.dmin - slack;
  const double it = 1.05 * acc.sth, iy = 1.05 * acc.sy;
  const SigmaCert sc = certify_branch_rect(m, j, acc.bt0 - it, acc.bt1 + it,
                                           acc.by0 - iy, acc.by1 + iy, eta);

  f.pass = margin > 0.0 && acc.det_min > 0.0 && acc.sig_min > 1.0 && rect_ok(sc);
  f.margin = margin;
  if (!f.pass) {
    if (!(margin > 0.0))
      f.witness = "preimage too close to the rectangle boundary at " +
                  loc_str(acc.dm_t, acc.dm_y);
    else if (!(acc.det_min > 0.0))
      f.witness = "orientation lost on the preimage";
    else if (!(acc.sig_min > 1.0) || !(sc.sigma_lo > 1.0))
      f.witness = "backward vertical expansion not certified";
    else
      f.witness = "backward vertical cone fails on the preimage box";
  }
  f.constants = {{"containment", acc.dmin},
                 {"slack", slack},
                 {"sigma", sc.sigma_lo},
                 {"sigma_node_min", acc.sig_min},
                 {"det_min", acc.det_min},
                 {"vert_margin", sc.vert_margin},
                 {"pb_theta_lo", acc.bt0},
                 {"pb_theta_hi", acc.bt1},
                 {"pb_y_lo", acc.by0},
                 {"pb_y_hi", acc.by1},
                 {"window_lo", T_lo},
                 {"window_hi", T_hi}};
  return f;
}

CheckFragment check_window_condition(const MapHandle& m, int nt, int ny) {
  if (nt < 2 || ny < 2) throw ParamError("window sweep grid too small");
  const SkewParams& p = m.params;
  const double slo = (p.k[2] - p.cone.delta) / p.d;
  const double shi = (p.k[2] + 1 + p.cone.delta) / p.d;
  const ArcInterval& A3 = p.arcs[2];
  const double arc_margin = std::min(slo - A3.lo, A3.hi - shi);

  double sup = 0.0, sup_t = 0.0, sup_y = 0.0;
  const bool strip_in_cylinder = slo >= 0.0 && shi <= 1.0;
  if (strip_in_cylinder) {
    for (int i = 0; i < nt; ++i) {
      const double t0 = slo + (shi - slo) * i / nt;
      const double t1 = slo + (shi - slo) * (i + 1) / nt;
      for (int jj = 0; jj < ny; ++jj) {
        const double y0 = -1.0 + 2.0 * jj / ny;
        const double y1 = -1.0 + 2.0 * (jj + 1) / ny;
        double lo, hi;
        fiber_cell_bounds(m, t0, t1, y0, y1, lo, hi);
        const double s = std::max(std::fabs(lo), std::fabs(hi));
        if (s > sup) {
          sup = s;
          sup_t = 0.5 * (t0 + t1);
          sup_y = 0.5 * (y0 + y1);
        }
      }
    }
  } else {
    sup = kInf;  // strip escapes the fundamental domain: nothing to certify
  }
  const double fiber_margin = p.jin_hi() - sup;
  const SigmaCert s3 = certify_branch_rect(m, 3, slo, shi, -1.0, 1.0,
                                           p.cone.eta);

  CheckFragment f;
  f.id = "window";
  f.pass = arc_margin > 0.0 && fiber_margin > 0.0 && rect_ok(s3);
  f.margin = fiber_margin;
  if (!f.pass) {
    if (!(arc_margin > 0.0))
      f.witness = "contraction strip escapes its arc";
    else if (!(fiber_margin > 0.0))
      f.witness = "image exceeds the inner segment near " + loc_str(sup_t, sup_y);
    else
      f.witness = "vertical expansion not certified on the strip";
  }
  f.constants = {{"strip_lo", slo},
                 {"strip_hi", shi},
                 {"arc_margin", arc_margin},
                 {"sup_abs", sup},
                 {"jin_hi", p.jin_hi()},
                 {"sigma3", s3.sigma_lo},
                 {"det3_lo", s3.det_lo},
                 {"vert3_margin", s3.vert_margin}};
  return f;
}

CheckFragment check_fold_condition(const MapHandle& m, int nt, int ny) {
  if (nt < 8 || ny < 2) throw ParamError("fold grid too small");
  const SkewParams& p = m.params;
  double plo, phi;
  fold_region(p, plo, phi);
  const double ylo = p.jout_lo(), yhi = p.jout_hi();

  const FoldScan sc = fold_scan(m, nt, ny, true);
  const double M = sc.max_value;
  const CylinderPoint pm = sc.argmax;
  const bool t_in = (pm.theta > plo && pm.theta < phi) ||
                    (pm.theta + 1.0 > plo && pm.theta + 1.0 < phi);
  const bool p_in = t_in && pm.y > ylo && pm.y < yhi;
  const double gap_obs = sc.has_outside ? M - sc.outside_node_max : -kInf;

  // certified bound over every cell not strictly inside the fold rectangle
  struct Row {
    double sup = -kInf;
    int sup_i = 0;
  };
  std::vector<Row> rows(ny);
  const double ht = 1.0 / nt, hy = 2.0 / ny;
#pragma omp parallel for
  for (int j = 0; j < ny; ++j) {
    Row r;
    const double y0 = -1.0 + j * hy, y1 = -1.0 + (j + 1) * hy;
    const bool y_in = y0 > ylo && y1 < yhi;
    for (int i = 0; i < nt; ++i) {
      const double c0 = i * ht, c1 = (i + 1) * ht;
      const bool c_in = (c0 > plo && c1 < phi) ||
                        (c0 + 1.0 > plo && c1 + 1.0 < phi);
      if (c_in && y_in) continue;
      double lo, hi;
      fiber_cell_bounds(m, c0, c1, y0, y1, lo, hi);
      if (hi > r.sup) {
        r.sup = hi;
        r.sup_i = i;
      }
    }
    rows[j] = r;
  }
  double out_sup = -kInf;
  int oi = 0, oj = 0;
  for (int j = 0; j < ny; ++j) {
    if (rows[j].sup > out_sup) {
      out_sup = rows[j].sup;
      oi = rows[j].sup_i;
      oj = j;
    }
  }
  const double gap_cert = M - out_sup;

  const bool pass = p_in && gap_obs > 0.0 && gap_cert > 0.0;
  if (!pass && p_in && gap_obs > 0.0 && !(gap_cert > 0.0)) {
    char buf[128];
    std::snprintf(buf, sizeof buf,
                  "outside cell bound at %dx%d reaches the observed maximum",
                  nt, ny);
    throw GridTooCoarse(buf);
  }

  const CylinderPoint fp = apply(m, pm);
  CheckFragment f;
  f.id = "fold";
  f.pass = pass;
  f.margin = gap_cert;
  if (!pass) {
    if (!p_in)
      f.witness = "maximum attained outside the fold rectangle at " +
                  loc_str(pm.theta, pm.y);
    else
      f.witness = "no strict gap: outside nodes reach the maximum";
  }
  f.constants = {{"max_value", M},
                 {"p_theta", pm.theta},
                 {"p_y", pm.y},
                 {"fp_theta", fp.theta},
                 {"fp_y", fp.y},
                 {"gap_certified", gap_cert},
                 {"gap_observed", gap_obs},
                 {"outside_sup", out_sup},
                 {"outside_cell_theta", (oi + 0.5) * ht},
                 {"outside_cell_y", -1.0 + (oj + 0.5) * hy},
                 {"pi_theta_lo", plo},
                 {"pi_theta_hi", phi},
                 {"pi_y_lo", ylo},
                 {"pi_y_hi", yhi}};
  return f;
}

CheckReport certify_all(const MapHandle& m) {
  CheckReport r;
  const auto run = [&](const char* id, auto&& fn) {
    CheckFragment f;
    try {
      f = fn();
    } catch (const GridTooCoarse& e) {
      f = CheckFragment{};
      f.id = id;
      f.pass = false;
      f.witness = std::string("not certified: ") + e.what();
    } catch (const NoConvergence& e) {
      f = CheckFragment{};
      f.id = id;
      f.pass = false;
      f.witness = std::string("not certified: ") + e.what();
    }
    r.fragments.push_back(std::move(f));
  };
  run("segments", [&] { return check_segment_inclusions(m.params); });
  run("arc_windows", [&] { return check_arc_windows(m.params); });
  run("cone", [&] { return check_cone_hyperbolicity(m, m.params.cone); });
  run("covering1", [&] { return check_covering_condition(m, 1); });
  run("covering2", [&] { return check_covering_condition(m, 2); });
  run("window", [&] { return check_window_condition(m); });
  run("fold", [&] { return check_fold_condition(m); });

  r.overall = true;
  for (const auto& f : r.fragments) r.overall = r.overall && f.pass;

  if (const CheckFragment* c = r.find("cone")) {
    double sig = kInf;
    bool any = false;
    for (const auto& kv : c->constants) {
      if (kv.first == "lambda_h") r.lambda_h = kv.second;
      if (kv.first == "sigma1" || kv.first == "sigma2" || kv.first == "sigma3") {
        sig = std::min(sig, kv.second);
        any = true;
      }
    }
    if (any) r.sigma = sig;
  }
  if (const CheckFragment* f = r.find("fold")) {
    for (const auto& kv : f->constants)
      if (kv.first == "gap_certified") r.fold_gap = kv.second;
  }
  return r;
}

std::string report_to_json(const CheckReport& r) {
  nlohmann::ordered_json root;
  root["overall"] = r.overall ? "PASS" : "FAIL";
  root["lambda_h"] = r.lambda_h;
  root["sigma"] = r.sigma;
  root["fold_gap"] = r.fold_gap;
  nlohmann::ordered_json conds = nlohmann::ordered_json::array();
  for (const auto& f : r.fragments) {
    nlohmann::ordered_json jf;
    jf["id"] = f.id;
    jf["status"] = f.pass ? "PASS" : "FAIL";
    jf["margin"] = f.margin;
    nlohmann::ordered_json jc = nlohmann::ordered_json::object();
    for (const auto& kv : f.constants) jc[kv.first] = kv.second;
    jf["constants"] = jc;
    jf["witness"] = f.witness;
    conds.push_back(std::move(jf));
  }
  root["conditions"] = std::move(conds);
  return root.dump(2);
}

}  // namespace cylattract
