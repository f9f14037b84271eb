#include "cylattract/pullback.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <utility>

#include "cylattract/errors.hpp"

namespace cylattract {

namespace {

// sub-polyline between two heights strictly inside the curve's span;
// band endpoints become interpolated vertices
VerticalCurve clip_curve(const VerticalCurve& c, double ylo, double yhi) {
  if (!(ylo > c.y_min() && yhi < c.y_max() && ylo < yhi))
    throw ParamError("clip band must lie strictly inside the curve's span");
  std::vector<double> ts, ys;
  ts.push_back(c.theta_at(ylo));
  ys.push_back(ylo);
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c.y(i) > ylo && c.y(i) < yhi) {
      ts.push_back(c.theta_lift(i));
      ys.push_back(c.y(i));
    }
  }
  ts.push_back(c.theta_at(yhi));
  ys.push_back(yhi);
  return VerticalCurve(std::move(ts), std::move(ys),
                       CurveSpace::ShortCylinder, c.cone());
}

// vertex count keeping the y-gap at or below 1/256
std::size_t density_count(double extent) {
  const double want = std::ceil(extent * 256.0) + 1.0;
  return want < 2.0 ? 2 : static_cast<std::size_t>(want);
}

}  // namespace

CurveClass classify_curve(const VerticalCurve& c, const SkewParams& p) {
  if (!(c.y_min() >= p.jout_lo() && c.y_max() <= p.jout_hi()))
    throw ParamError("curve leaves S^1 x J_out");
  if (curve_cuts(c, p.jin_lo(), p.jin_hi())) return CurveClass::CUTS_JIN;
  if (c.y_min() >= p.j1_lo() && c.y_max() <= p.j1_hi())
    return CurveClass::BRANCH_1;
  if (c.y_min() >= p.j2_lo() && c.y_max() <= p.j2_hi())
    return CurveClass::BRANCH_2;
  throw Unclassifiable("curve fits neither branch segment");
}

VerticalCurve pull_back_step(const MapHandle& m, const VerticalCurve& c,
                             int branch) {
  if (branch != 1 && branch != 2)
    throw ParamError("pull_back_step branch must be 1 or 2");
  const CurveClass cl = classify_curve(c, m.params);
  if (cl != (branch == 1 ? CurveClass::BRANCH_1 : CurveClass::BRANCH_2))
    throw ParamError("curve does not classify as the requested branch");
  const VerticalCurve lifted =
      lift_curve(c, m.params.k[branch - 1], m.params.cone.delta);
  std::vector<double> ts, ys;
  ts.reserve(lifted.size());
  ys.reserve(lifted.size());
  for (std::size_t i = 0; i < lifted.size(); ++i) {
    const CylinderPoint q =
        inverse_branch(m, branch, {lifted.theta_lift(i), lifted.y(i)});
    ts.push_back(q.theta);
    ys.push_back(q.y);
  }
  return VerticalCurve(std::move(ts), std::move(ys),
                       CurveSpace::ShortCylinder, c.cone());
}

void condition3_band(const MapHandle& m, double& lo, double& hi) {
  const SkewParams& p = m.params;
  if (m.pert.empty()) {
    lo = psi_value(m, 3, -1.0);
    hi = psi_value(m, 3, 1.0);
    if (lo > hi) std::swap(lo, hi);
    return;
  }
  const double slo = (p.k[2] - p.cone.delta) / p.d;
  const double shi = (p.k[2] + 1 + p.cone.delta) / p.d;
  const int N = 1024;
  double mx = -1.0, mn = 1.0;
  for (int i = 0; i <= N; ++i) {
    const double th = slo + (shi - slo) * i / N;
    mx = std::max(mx, lift_apply(m, {th, -1.0}).y);
    mn = std::min(mn, lift_apply(m, {th, 1.0}).y);
  }
  const double pad =
      m.pert.c1_bound() * (shi - slo) / N * 0.5 + 1e-12;
  lo = mx + pad;
  hi = mn - pad;
  if (!(lo < hi))
    throw DomainError("perturbation collapses the branch-3 image band");
}

PullbackTrace find_cutting_curve(const MapHandle& m, const VerticalCurve& L) {
  const SkewParams& p = m.params;
  if (!(L.y_min() >= p.jout_lo() && L.y_max() <= p.jout_hi()))
    throw ParamError("seed curve leaves S^1 x J_out");

  PullbackTrace tr;
  tr.curves.push_back(L);
  const double e0 = L.extent();
  VerticalCurve cur = L;
  int steps = 0;
  for (;;) {
    const CurveClass cl = classify_curve(cur, p);
    if (cl == CurveClass::CUTS_JIN) break;
    if (++steps > 10000)
      throw IterationCap("pullback exceeded 10^4 backward steps");
    const int branch = cl == CurveClass::BRANCH_1 ? 1 : 2;
    VerticalCurve nxt = pull_back_step(m, cur, branch);
    nxt = nxt.resample(density_count(nxt.extent()));
    if (nxt.extent() <= e0 * 0x1p-30)
      throw IterationCap("curve extent collapsed: map is not expanding");
    tr.curves.push_back(nxt);
    tr.branches.push_back(branch);
    cur = std::move(nxt);
  }

  // final step: restrict to the band whose branch-3 preimages exist at
  // every strip coordinate, then invert through the fold window
  double blo, bhi;
  condition3_band(m, blo, bhi);
  const VerticalCurve fine = clip_curve(cur, blo, bhi).resample(1025);
  const VerticalCurve lifted = lift_curve(fine, p.k[2], p.cone.delta);
  std::vector<double> ts, ys;
  ts.reserve(lifted.size() + 2);
  ys.reserve(lifted.size() + 2);
  for (std::size_t i = 0; i < lifted.size(); ++i) {
    const CylinderPoint q =
        inverse_branch(m, 3, {lifted.theta_lift(i), lifted.y(i)});
    ts.push_back(q.theta);
    ys.push_back(q.y);
  }

  // Unperturbed, the band endpoints invert exactly onto y = -1, 1. With a
  // perturbation the conservative band stops short of the fiber boundary,
  // so extend each end by bisecting along the pre-clip curve for the
  // height whose preimage sits on the boundary.
  const VerticalCurve full_lift = lift_curve(cur, p.k[2], p.cone.delta);
  const auto probe = [&](double y, CylinderPoint& q) {
    try {
      q = inverse_branch(m, 3, {full_lift.theta_at(y), y});
      return true;
    } catch (const Error&) {
      return false;
    }
  };
  if (ys.front() > -1.0 + 1e-12) {
    double bad = cur.y_min(), good = blo;
    CylinderPoint q{};
    if (probe(good, q)) {
      for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (bad + good);
        CylinderPoint qm{};
        if (probe(mid, qm)) {
          good = mid;
          q = qm;
        } else {
          bad = mid;
        }
      }
      if (q.y < ys.front()) {
        ts.insert(ts.begin(), q.theta);
        ys.insert(ys.begin(), q.y);
      }
    }
  }
  if (ys.back() < 1.0 - 1e-12) {
    double bad = cur.y_max(), good = bhi;
    CylinderPoint q{};
    if (probe(good, q)) {
      for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (bad + good);
        CylinderPoint qm{};
        if (probe(mid, qm)) {
          good = mid;
          q = qm;
        } else {
          bad = mid;
        }
      }
      if (q.y > ys.back()) {
        ts.push_back(q.theta);
        ys.push_back(q.y);
      }
    }
  }

  tr.curves.emplace_back(std::move(ts), std::move(ys),
                         CurveSpace::ShortCylinder, L.cone());
  tr.branches.push_back(3);
  tr.n = static_cast<int>(tr.branches.size());
  return tr;
}

double validate_forward(const MapHandle& m, const PullbackTrace& trace,
                        double tol) {
  if (trace.curves.size() < 2 ||
      trace.branches.size() + 1 != trace.curves.size())
    throw ParamError("trace does not look like a pullback result");
  double worst = 0.0;
  for (std::size_t s = 0; s + 1 < trace.curves.size(); ++s) {
    const VerticalCurve& prev = trace.curves[s];
    const VerticalCurve& next = trace.curves[s + 1];
    for (std::size_t i = 0; i < next.size(); ++i) {
      const CylinderPoint q = apply(m, {next.theta(i), next.y(i)});
      double yq = q.y, over = 0.0;
      if (yq < prev.y_min()) {
        over = prev.y_min() - yq;
        yq = prev.y_min();
      } else if (yq > prev.y_max()) {
        over = yq - prev.y_max();
        yq = prev.y_max();
      }
      if (over > tol) {
        worst = std::max(worst, over);
        continue;
      }
      const double dt = circle_dist(q.theta, wrap01(prev.theta_at(yq)));
      worst = std::max(worst, std::max(dt, over));
    }
  }
  return worst;
}

std::string trace_to_csv(const PullbackTrace& trace) {
  std::string out;
  char buf[96];
  for (std::size_t c = 0; c < trace.curves.size(); ++c) {
    const int branch = c == 0 ? 0 : trace.branches[c - 1];
    std::snprintf(buf, sizeof buf, "# curve %zu branch %d\n", c, branch);
    out += buf;
    out += "theta,y\n";
    const VerticalCurve& cv = trace.curves[c];
    for (std::size_t i = 0; i < cv.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", cv.theta(i), cv.y(i));
      out += buf;
    }
    out += "\n";
  }
  return out;
}

}  // namespace cylattract
