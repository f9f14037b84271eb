#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <string>

#include "json.hpp"

#include "cylattract/verifier.hpp"

using namespace cylattract;

namespace {
const MapHandle& D0() {
  static MapHandle m = make_map(build_default());
  return m;
}
// the full certification is expensive; share one run across the cases
const CheckReport& report() {
  static CheckReport r = certify_all(D0());
  return r;
}
}  // namespace

TEST_CASE("full certification of the default instance") {
  const CheckReport& r = report();
  CHECK(r.overall);
  REQUIRE(r.fragments.size() == 7);
  const char* ids[] = {"segments", "arc_windows", "cone", "covering1",
                       "covering2", "window", "fold"};
  for (int i = 0; i < 7; ++i) {
    CHECK(r.fragments[i].id == ids[i]);
    CHECK(r.fragments[i].pass);
    CHECK(r.fragments[i].margin > 0.0);
    CHECK(r.fragments[i].witness.empty());
  }
  CHECK(r.lambda_h == 13.301651037021582);
  CHECK(r.sigma == 1.081081081081081);
  CHECK(r.fold_gap == 0.0015875244140625133);
  CHECK(r.find("cone") != nullptr);
  CHECK(r.find("nonsense") == nullptr);
}

TEST_CASE("segment inclusions") {
  CheckFragment f = check_segment_inclusions(build_default());
  CHECK(f.pass);
  CHECK(f.margin == 0.04999999999999999);
  CHECK(f.get("a") == 0.1);
  CHECK(f.get("b") == 0.25);
  CHECK(f.get("d") == 16.0);
  CHECK(f.get("jin_slack") == 0.05);
  CHECK(f.get("mid_slack") == 0.1);
  CHECK(f.get("out_slack") == 0.04999999999999999);
  CHECK_THROWS_AS(f.get("absent"), ParamError);

  SkewParams p = build_default();
  p.d = 1;
  CheckFragment bad = check_segment_inclusions(p);
  CHECK_FALSE(bad.pass);
  CHECK(bad.witness == "degree below 2");

  p = build_default();
  p.b = 0.2;  // kills b - 2a
  bad = check_segment_inclusions(p);
  CHECK_FALSE(bad.pass);
  CHECK(bad.witness.find("violated") == 0);
}

TEST_CASE("arc windows and fold coefficients") {
  CheckFragment f = check_arc_windows(build_default());
  CHECK(f.pass);
  CHECK(f.margin == 0.006249999999999978);
  CHECK(f.get("gap_slack") == 0.049999999999999975);
  CHECK(f.get("window_slack") == 0.006249999999999978);
  CHECK(f.get("alpha") == -0.04);
  CHECK(f.get("beta") == 0.95);

  SkewParams p = build_default();
  p.eps_arc = 0.11;
  CheckFragment bad = check_arc_windows(p);
  CHECK_FALSE(bad.pass);
  CHECK(bad.witness.find("arc gaps") != std::string::npos);

  p = build_default();
  p.k[0] = 16;
  bad = check_arc_windows(p);
  CHECK_FALSE(bad.pass);
  CHECK(bad.witness == "window index outside 0..d-1");

  p = build_default();
  p.beta = 1.0;
  bad = check_arc_windows(p);
  CHECK_FALSE(bad.pass);

  p = build_default();
  p.alpha = 0.01;
  bad = check_arc_windows(p);
  CHECK_FALSE(bad.pass);
}

TEST_CASE("cone hyperbolicity constants") {
  const CheckFragment* c = report().find("cone");
  REQUIRE(c != nullptr);
  CHECK(c->pass);
  CHECK(c->get("lambda_h") == 13.301651037021582);
  CHECK(c->get("lambda_node_min") == 13.333334362073964);
  CHECK(c->get("lambda_slack") == 0.03168332505238191);
  CHECK(c->get("invariance") == 27.39829048355676);
  CHECK(c->get("invariance_node_min") == 28.0319569846044);
  CHECK(c->get("invariance_slack") == 0.6336665010476381);
  CHECK(c->get("interior_margin") == 0.050000000000000044);
  CHECK(c->get("sigma1") == 1.081081081081081);
  CHECK(c->get("sigma2") == 1.081081081081081);
  CHECK(c->get("sigma3") == 25.0);
  CHECK(c->get("vert_margin_min") == 0.75375);
  CHECK(c->get("det_lo_min") == 0.64);

  // certified value sits below the node minimum by the Lipschitz slack
  CHECK(c->get("lambda_h") ==
        c->get("lambda_node_min") - c->get("lambda_slack"));
  CHECK(c->get("invariance") ==
        c->get("invariance_node_min") - c->get("invariance_slack"));

  CHECK_THROWS_AS(check_cone_hyperbolicity(D0(), build_default().cone, 128, 64),
                  ParamError);
}

TEST_CASE("covering conditions for the expanding branches") {
  const CheckFragment* c1 = report().find("covering1");
  const CheckFragment* c2 = report().find("covering2");
  REQUIRE(c1 != nullptr);
  REQUIRE(c2 != nullptr);
  CHECK(c1->pass);
  CHECK(c2->pass);

  CHECK(c1->get("containment") == 0.006249999999999999);
  CHECK(c2->get("containment") == 0.006250000000000033);
  CHECK(c1->get("slack") == 0.0007790143084260731);
  CHECK(c2->get("slack") > 0.0);
  CHECK(c2->get("slack") < 0.001);
  CHECK(c1->margin == c1->get("containment") - c1->get("slack"));
  CHECK(c2->margin == c2->get("containment") - c2->get("slack"));
  CHECK(c1->margin > 0.005);
  CHECK(c2->margin > 0.005);

  CHECK(c1->get("window_lo") == 1.0 - 0.1);
  CHECK(c1->get("window_hi") == 1.0 + 1.0 + 0.1);
  CHECK(c2->get("window_lo") == 5.0 - 0.1);
  CHECK(c2->get("window_hi") == 5.0 + 1.0 + 0.1);

  // preimage boxes sit inside arc x J_out
  CHECK(c1->get("pb_theta_lo") == doctest::Approx(0.05625).epsilon(1e-12));
  CHECK(c1->get("pb_theta_hi") == doctest::Approx(0.13125).epsilon(1e-12));
  CHECK(c1->get("pb_y_lo") ==
        doctest::Approx(-0.18918918918918917).epsilon(1e-12));
  CHECK(c1->get("pb_y_hi") ==
        doctest::Approx(0.18918918918918917).epsilon(1e-12));
  CHECK(c2->get("pb_theta_lo") == doctest::Approx(0.30625).epsilon(1e-12));
  CHECK(c2->get("pb_theta_hi") == doctest::Approx(0.38125).epsilon(1e-12));
  CHECK(c1->get("sigma") > 1.08);
  CHECK(c2->get("sigma") > 1.08);
  CHECK(c1->get("det_min") > 0.0);

  CHECK_THROWS_AS(check_covering_condition(D0(), 3), ParamError);
  CHECK_THROWS_AS(check_covering_condition(D0(), 1, 1), ParamError);
}

TEST_CASE("window condition on the contraction strip") {
  const CheckFragment* w = report().find("window");
  REQUIRE(w != nullptr);
  CHECK(w->pass);
  CHECK(w->margin == 0.010000000000000002);
  CHECK(w->get("strip_lo") == (9.0 - 0.1) / 16.0);
  CHECK(w->get("strip_hi") == (9.0 + 1.0 + 0.1) / 16.0);
  CHECK(w->get("arc_margin") == 0.006249999999999978);
  CHECK(w->get("sup_abs") == 0.04);
  CHECK(w->get("jin_hi") == 0.05);
  CHECK(w->get("sigma3") == 25.0);
  CHECK(w->get("det3_lo") == 0.64);
  CHECK(w->get("vert3_margin") == 0.798);

  CHECK_THROWS_AS(check_window_condition(D0(), 1, 4), ParamError);

  // a steep third piece floods the inner segment
  SkewParams p = build_default();
  p.psi3_slope = 1.0;
  MapHandle mm = make_map(p);
  CheckFragment bad = check_window_condition(mm);
  CHECK_FALSE(bad.pass);
  CHECK(bad.witness.find("inner segment") != std::string::npos);
}

TEST_CASE("fold condition certifies a strict gap") {
  const CheckFragment* f = report().find("fold");
  REQUIRE(f != nullptr);
  CHECK(f->pass);
  CHECK(f->get("max_value") == 0.95);
  CHECK(f->get("p_theta") == 0.875);
  CHECK(f->get("p_y") == 0.0);
  CHECK(f->get("fp_theta") == 0.0);
  CHECK(f->get("fp_y") == 0.95);
  CHECK(f->get("gap_certified") == 0.0015875244140625133);
  CHECK(f->get("gap_observed") == 0.0016503906250000533);
  CHECK(f->get("outside_sup") == 0.9484124755859374);
  CHECK(f->margin == f->get("gap_certified"));
  CHECK(f->get("gap_observed") > f->get("gap_certified"));
  CHECK(f->get("pi_y_lo") == -0.2);
  CHECK(f->get("pi_y_hi") == 0.2);

  double plo, phi;
  fold_region(build_default(), plo, phi);
  CHECK(plo == 0.75);
  CHECK(phi == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(f->get("pi_theta_lo") == plo);
  CHECK(f->get("pi_theta_hi") == phi);

  CHECK_THROWS_AS(check_fold_condition(D0(), 4, 2), ParamError);
  // a very coarse grid cannot separate the fold cell from its neighbours
  CHECK_THROWS_AS(check_fold_condition(D0(), 32, 8), GridTooCoarse);
}

TEST_CASE("fold_scan parallel path matches the serial one bitwise") {
  FoldScan a = fold_scan(D0(), 512, 128, false);
  FoldScan b = fold_scan(D0(), 512, 128, true);
  CHECK(a.max_value == b.max_value);
  CHECK(a.argmax.theta == b.argmax.theta);
  CHECK(a.argmax.y == b.argmax.y);
  CHECK(a.outside_node_max == b.outside_node_max);
  CHECK(a.has_outside == b.has_outside);
  CHECK(a.max_value == 0.95);
  CHECK(a.argmax.theta == 0.875);
  CHECK(a.argmax.y == 0.0);
}

TEST_CASE("pointwise expansion kernel") {
  // diagonal cocycle: minimum at the cone edge |v_y| = kappa |v_t|
  JacobianMat J{16.0, 0.0, 0.0, 0.925};
  CHECK(lambda_h_point(J, 0.05, 4.0) ==
        doctest::Approx((16.0 + 0.05 * 0.925 * 4.0) / 1.2));

  // shear makes the two cone edges asymmetric
  JacobianMat S{16.0, 0.0, -3.0, 0.925};
  CHECK(lambda_h_point(S, 0.05, 4.0) ==
        doctest::Approx((16.0 + 0.05 * 0.7) / 1.2));

  // closed-form candidates dominate a dense direction scan
  JacobianMat G{15.0, 0.3, -2.0, 0.8};
  double lam = lambda_h_point(G, 0.05, 4.0);
  double scan = 1e300;
  for (int i = -4000; i <= 4000; ++i) {
    double vy = i / 1000.0;
    double nt = std::fabs(G.j11 + G.j12 * vy);
    double nyv = std::fabs(G.j21 + G.j22 * vy);
    scan = std::min(scan, (nt + 0.05 * nyv) / (1.0 + 0.05 * std::fabs(vy)));
  }
  CHECK(lam <= scan + 1e-12);
  CHECK(lam >= scan - 1e-3);
}

TEST_CASE("fiber cell bounds bracket dense sampling") {
  const MapHandle& m = D0();
  const double cells[][4] = {
      {0.06, 0.10, -0.3, -0.1},  // inside arc 1
      {0.21, 0.27, 0.0, 0.2},    // blend gap 1
      {0.95, 1.00, -0.2, 0.2},   // wrap gap
      {0.72, 0.78, -1.0, -0.6},  // gap 3 with a tail range
      {0.84, 0.90, -0.1, 0.1},   // fold arc across the vertex
  };
  for (const auto& c : cells) {
    double lo, hi;
    fiber_cell_bounds(m, c[0], c[1], c[2], c[3], lo, hi);
    CHECK(lo < hi);
    for (int i = 0; i <= 24; ++i) {
      for (int j = 0; j <= 24; ++j) {
        double th = c[0] + (c[1] - c[0]) * i / 24.0;
        double y = c[2] + (c[3] - c[2]) * j / 24.0;
        double v = fiber_ext(m, th, y);
        CHECK(v >= lo - 1e-12);
        CHECK(v <= hi + 1e-12);
      }
    }
  }
}

TEST_CASE("report serialization") {
  std::string s = report_to_json(report());
  nlohmann::json j = nlohmann::json::parse(s);
  CHECK(j["overall"] == "PASS");
  CHECK_FALSE(j.contains("timestamp"));
  CHECK(j["lambda_h"].get<double>() == 13.301651037021582);
  CHECK(j["sigma"].get<double>() == 1.081081081081081);
  CHECK(j["fold_gap"].get<double>() == 0.0015875244140625133);
  REQUIRE(j["conditions"].size() == 7);
  CHECK(j["conditions"][0]["id"] == "segments");
  CHECK(j["conditions"][6]["id"] == "fold");
  for (const auto& c : j["conditions"]) {
    CHECK(c["status"] == "PASS");
    CHECK(c["margin"].is_number());
    CHECK(c["constants"].is_object());
  }
  CHECK(j["conditions"][6]["constants"]["max_value"].get<double>() == 0.95);
}
