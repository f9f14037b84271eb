#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <string>

#include "cylattract/pullback.hpp"
#include "cylattract/rng.hpp"

using namespace cylattract;

namespace {
const MapHandle& D0() {
  static MapHandle m = make_map(build_default());
  return m;
}

VerticalCurve vsegment(double theta, double ylo, double yhi) {
  return VerticalCurve({theta, theta}, {ylo, yhi}, CurveSpace::ShortCylinder,
                       build_default().cone);
}
}  // namespace

TEST_CASE("curve classification") {
  const SkewParams p = build_default();
  CHECK(classify_curve(vsegment(0.3, -0.06, 0.06), p) == CurveClass::CUTS_JIN);
  CHECK(classify_curve(vsegment(0.3, -0.05, 0.05), p) == CurveClass::CUTS_JIN);
  CHECK(classify_curve(vsegment(0.3, 0.0, 0.19), p) == CurveClass::BRANCH_1);
  CHECK(classify_curve(vsegment(0.3, -0.19, 0.0), p) == CurveClass::BRANCH_2);
  // both branches fit: prefer branch 1
  CHECK(classify_curve(vsegment(0.3, -0.06, 0.03), p) == CurveClass::BRANCH_1);
  CHECK_THROWS_AS(classify_curve(vsegment(0.3, 0.0, 0.3), p), ParamError);

  // with a narrower b the segments can fail to hold a curve that does
  // not cut the inner stripe
  SkewParams q = build_default();
  q.b = 0.12;
  CHECK_THROWS_AS(classify_curve(vsegment(0.3, 0.0, 0.15), q), Unclassifiable);
}

TEST_CASE("single backward step through branch 1") {
  const MapHandle& m = D0();
  VerticalCurve c = vsegment(0.3, 0.0, 0.1);
  VerticalCurve pre = pull_back_step(m, c, 1);
  REQUIRE(pre.size() == 2);
  CHECK(pre.y_min() == -0.081081081081081072);
  CHECK(pre.y_max() == 0.027027027027027035);
  CHECK(pre.extent() / c.extent() ==
        doctest::Approx(1.0810810810810811).epsilon(1e-15));
  // the preimage collapses onto the branch arc
  CHECK(pre.theta(0) == doctest::Approx(1.3 / 16.0).epsilon(1e-12));
  CHECK(pre.theta(1) == doctest::Approx(1.3 / 16.0).epsilon(1e-12));
  CHECK(classify_curve(pre, m.params) == CurveClass::BRANCH_1);

  // deterministic: re-running gives bitwise identical vertices
  VerticalCurve pre2 = pull_back_step(m, c, 1);
  CHECK(pre2.y_min() == pre.y_min());
  CHECK(pre2.y_max() == pre.y_max());

  CHECK_THROWS_AS(pull_back_step(m, c, 3), ParamError);
  CHECK_THROWS_AS(pull_back_step(m, c, 2), ParamError);
  CHECK_THROWS_AS(pull_back_step(m, vsegment(0.3, -0.06, 0.06), 1), ParamError);
}

TEST_CASE("branch 2 step lands on the second arc") {
  const MapHandle& m = D0();
  VerticalCurve c = vsegment(0.9, -0.15, -0.02);
  VerticalCurve pre = pull_back_step(m, c, 2);
  CHECK(pre.theta(0) == doctest::Approx((0.9 + 5.0) / 16.0).epsilon(1e-12));
  CHECK(classify_curve(pre, m.params) == CurveClass::CUTS_JIN);
  // forward image of the preimage lands back on the input heights
  LiftPoint img = lift_apply(m, {pre.theta(0), pre.y(0)});
  CHECK(img.y == doctest::Approx(-0.15).epsilon(1e-11));
}

TEST_CASE("condition-3 band") {
  double lo, hi;
  condition3_band(D0(), lo, hi);
  CHECK(lo == -0.04);
  CHECK(hi == 0.04);

  // a perturbation narrows the certified band
  MapHandle mp = perturb(D0(), Perturbation::random(7, 3, 1e-4));
  condition3_band(mp, lo, hi);
  CHECK(lo > -0.04 - 2e-4);
  CHECK(hi < 0.04 + 2e-4);
  CHECK(lo < hi);
  CHECK(lo > -0.045);
  CHECK(hi < 0.045);

  // a displacement comparable to the band height collapses it
  Perturbation big;
  big.v.push_back(TrigTerm{1, 0, 0.5, 1.5707963267948966, 0.0});
  MapHandle mb = perturb(D0(), big);
  CHECK_THROWS_AS(condition3_band(mb, lo, hi), DomainError);
}

TEST_CASE("already-cutting seed finishes in one fold step") {
  const MapHandle& m = D0();
  VerticalCurve seed = vsegment(0.5, -0.075, 0.075);
  PullbackTrace tr = find_cutting_curve(m, seed);
  CHECK(tr.n == 1);
  REQUIRE(tr.curves.size() == 2);
  REQUIRE(tr.branches.size() == 1);
  CHECK(tr.branches[0] == 3);

  const VerticalCurve& S = tr.curves.back();
  CHECK(S.y_min() == -1.0);
  CHECK(S.y_max() == 1.0);
  CHECK(S.size() == 1025);
  CHECK(curve_cuts(S, -1.0 + 1e-9, 1.0 - 1e-9));
  // the cutting curve lives over the contraction strip
  CHECK(S.theta_lift_min() >= (9.0 - 0.1) / 16.0 - 1e-12);
  CHECK(S.theta_lift_max() <= (9.0 + 1.0 + 0.1) / 16.0 + 1e-12);

  // a dyadic vertical seed reproduces exactly under the forward check
  CHECK(validate_forward(m, tr, 1e-6) == 0.0);
}

TEST_CASE("pullback iterates until the curve cuts") {
  const MapHandle& m = D0();
  VerticalCurve seed = vsegment(0.5, 0.06, 0.061);
  PullbackTrace tr = find_cutting_curve(m, seed);
  CHECK(tr.n >= 55);
  CHECK(tr.n <= 75);
  CHECK(static_cast<int>(tr.curves.size()) == tr.n + 1);
  CHECK(static_cast<int>(tr.branches.size()) == tr.n);
  for (int i = 0; i + 1 < tr.n; ++i) {
    CHECK((tr.branches[i] == 1 || tr.branches[i] == 2));
  }
  CHECK(tr.branches.back() == 3);
  // backward steps expand the vertical extent
  for (std::size_t i = 2; i + 1 < tr.curves.size(); ++i) {
    CHECK(tr.curves[i].extent() > tr.curves[i - 1].extent());
  }
  CHECK(curve_cuts(tr.curves.back(), -1.0 + 1e-9, 1.0 - 1e-9));
  CHECK(validate_forward(m, tr, 1e-6) < 1e-9);
}

TEST_CASE("random thin seeds all terminate and validate") {
  const MapHandle& m = D0();
  CounterRng rng{42, streams::kCurve};
  for (std::uint64_t s = 0; s < 6; ++s) {
    const double th0 = rng.uniform(1000 + 2 * s, 0.0, 1.0);
    const double yc = rng.uniform(1001 + 2 * s, -0.15, 0.15);
    VerticalCurve seed = vsegment(th0, yc - 5e-4, yc + 5e-4);
    PullbackTrace tr = find_cutting_curve(m, seed);
    CAPTURE(s);
    CHECK(tr.n >= 55);
    CHECK(tr.n <= 75);
    CHECK(curve_cuts(tr.curves.back(), -1.0 + 1e-9, 1.0 - 1e-9));
    CHECK(validate_forward(m, tr, 1e-6) < 1e-9);
  }
}

TEST_CASE("perturbed map still yields a cutting curve") {
  MapHandle mp = perturb(D0(), Perturbation::random(7, 3, 1e-4));
  VerticalCurve seed = vsegment(0.5, 0.06, 0.061);
  PullbackTrace tr = find_cutting_curve(mp, seed);
  CHECK(tr.n >= 55);
  CHECK(tr.n <= 80);
  const VerticalCurve& S = tr.curves.back();
  CHECK(S.y_min() <= -1.0 + 1e-9);
  CHECK(S.y_max() >= 1.0 - 1e-9);
  CHECK(validate_forward(mp, tr, 1e-6) < 1e-9);
}

TEST_CASE("seed outside the outer segment is rejected") {
  CHECK_THROWS_AS(find_cutting_curve(D0(), vsegment(0.5, 0.0, 0.25)),
                  ParamError);
}

TEST_CASE("non-expanding dynamics trips the extent cap") {
  SkewParams p = build_default();
  p.psi1 = {2.0, 0.075, -0.85, 0.85};
  MapHandle m2 = make_map(p);
  CHECK_THROWS_AS(find_cutting_curve(m2, vsegment(0.3, 0.0, 0.1)),
                  IterationCap);
}

TEST_CASE("forward validation flags corrupted traces") {
  const MapHandle& m = D0();
  PullbackTrace tr = find_cutting_curve(m, vsegment(0.5, -0.075, 0.075));

  PullbackTrace broken = tr;
  broken.curves[0] = vsegment(0.51, -0.075, 0.075);
  double res = validate_forward(m, broken, 1e-6);
  CHECK(res == doctest::Approx(0.01).epsilon(1e-9));
  CHECK(res > 1e-3);

  PullbackTrace malformed;
  CHECK_THROWS_AS(validate_forward(m, malformed, 1e-6), ParamError);
  malformed.curves.push_back(tr.curves[0]);
  malformed.curves.push_back(tr.curves[0]);
  CHECK_THROWS_AS(validate_forward(m, malformed, 1e-6), ParamError);
}

TEST_CASE("csv export") {
  const MapHandle& m = D0();
  PullbackTrace tr = find_cutting_curve(m, vsegment(0.5, -0.075, 0.075));
  std::string csv = trace_to_csv(tr);
  CHECK(csv.find("# curve 0 branch 0\n") == 0);
  CHECK(csv.find("# curve 1 branch 3\n") != std::string::npos);
  CHECK(csv.find("theta,y\n") != std::string::npos);
  // the seed's lower endpoint, rendered with 17 significant digits
  CHECK(csv.find("0.5,-0.074999999999999997\n") != std::string::npos);
  std::size_t blocks = 0;
  for (std::size_t pos = csv.find("# curve");
       pos != std::string::npos; pos = csv.find("# curve", pos + 1))
    ++blocks;
  CHECK(blocks == tr.curves.size());
}
