#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <string>

#include "cylattract/config.hpp"
#include "cylattract/errors.hpp"

using namespace cylattract;

namespace {
bool has_line(const std::string& text, const std::string& line) {
  return text.find(line + "\n") != std::string::npos;
}
}  // namespace

TEST_CASE("defaults") {
  RunConfig c = default_config();
  CHECK(c.seed == 42);
  CHECK(c.samples == 1000);
  CHECK(c.burn_in == 1000);
  CHECK(c.iters == 100000);
  CHECK(c.grid_theta == 512);
  CHECK(c.grid_y == 128);
  CHECK(c.threads == 0);
  CHECK(c.collar == 0.1);
  CHECK(c.pullback_extent == 1e-3);
  CHECK(c.pullback_count == 1);
  CHECK(c.out_dir == ".");
  CHECK(c.pert_u.empty());
  CHECK(c.pert_v.empty());
  CHECK(c.map.a == 0.1);
  CHECK(c.map.d == 16);
  CHECK(c.perturbation().empty());
}

TEST_CASE("emit format") {
  std::string text = emit_config(default_config());
  CHECK(text.rfind("[map]\n", 0) == 0);
  CHECK(has_line(text, "a = 0.10000000000000001"));
  CHECK(has_line(text, "b = 0.25"));
  CHECK(has_line(text, "d = 16"));
  CHECK(has_line(text, "arc1 = 0.050000000000000003, 0.20000000000000001"));
  CHECK(has_line(text, "beta = 0.94999999999999996"));
  CHECK(has_line(text, "psi3_slope = 0.040000000000000001"));
  CHECK(has_line(text, "k = 1, 5, 9, 13"));
  CHECK(has_line(text, "[cone]"));
  CHECK(has_line(text, "kappa = 4"));
  CHECK(has_line(text, "[run]"));
  CHECK(has_line(text, "seed = 42"));
  CHECK(has_line(text, "grid = 512, 128"));
  CHECK(has_line(text, "pullback_extent = 0.001"));
  CHECK(has_line(text, "out_dir = ."));
  // no perturbation section unless terms exist
  CHECK(text.find("[perturb]") == std::string::npos);
}

TEST_CASE("emit-parse round trip is byte identical") {
  RunConfig c = default_config();
  std::string once = emit_config(c);
  RunConfig back = parse_config(once);
  CHECK(emit_config(back) == once);
  CHECK(back.map.a == c.map.a);
  CHECK(back.map.psi1.slope == c.map.psi1.slope);
  CHECK(back.map.arcs[3].hi == c.map.arcs[3].hi);
  CHECK(back.collar == c.collar);

  // non-default values survive as well
  c.seed = 7;
  c.samples = 3;
  c.grid_theta = 256;
  c.grid_y = 64;
  c.out_dir = "runs/exp 1";
  c.map.b = 0.3;
  c.pert_u.push_back({2, 1, 1e-4, 0.25, 1.5});
  c.pert_v.push_back({1, 3, -2e-4, 0.0, 0.75});
  c.pert_v.push_back({0, 2, 5e-5, 3.0, 0.0});
  std::string twice = emit_config(c);
  RunConfig b2 = parse_config(twice);
  CHECK(emit_config(b2) == twice);
  CHECK(b2.seed == 7);
  CHECK(b2.out_dir == "runs/exp 1");
  CHECK(b2.map.b == 0.3);
  REQUIRE(b2.pert_u.size() == 1);
  REQUIRE(b2.pert_v.size() == 2);
  CHECK(b2.pert_u[0].m == 2);
  CHECK(b2.pert_u[0].amp == 1e-4);
  CHECK(b2.pert_v[1].ph_t == 3.0);
  CHECK_FALSE(b2.perturbation().empty());
}

TEST_CASE("partial configs keep defaults") {
  RunConfig c = parse_config("[run]\nseed = 9\n");
  CHECK(c.seed == 9);
  CHECK(c.samples == 1000);
  CHECK(c.map.a == 0.1);

  RunConfig m = parse_config("[map]\nb = 0.3\n[cone]\neta = 0.04\n");
  CHECK(m.map.b == 0.3);
  CHECK(m.map.a == 0.1);
  CHECK(m.map.cone.eta == 0.04);
  CHECK(m.map.cone.kappa == 4.0);
}

TEST_CASE("comments and whitespace") {
  RunConfig c = parse_config(
      "# header comment\n"
      "\n"
      "  [run]  \n"
      "  seed = 11   # trailing comment\n"
      "\tsamples\t=\t5\n");
  CHECK(c.seed == 11);
  CHECK(c.samples == 5);
}

TEST_CASE("parse errors carry the line number") {
  CHECK_THROWS_WITH_AS(parse_config("[nope]\n"),
                       "line 1: unknown section 'nope'", ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("a = 1\n"),
                       "line 1: key 'a' outside any section", ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("[map]\nzz = 1\n"),
                       "line 2: unknown [map] key 'zz'", ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("[run]\nseed 42\n"),
                       "line 2: expected 'key = value'", ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("[map]\nk = 1, 2\n"),
                       "line 2: expected 4 comma-separated values, got 2",
                       ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("[run]\nsamples = abc\n"),
                       "line 2: expected an integer, got 'abc'", ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("[run]\nseed = -3\n"),
                       "line 2: expected an unsigned integer, got '-3'",
                       ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("[map]\na = 0.1x\n"),
                       "line 2: expected a number, got '0.1x'", ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("[run\n"),
                       "line 1: unterminated section header", ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("[perturb]\nw = 1, 1, 0, 0, 0\n"),
                       "line 2: unknown [perturb] key 'w'", ConfigError);
  // the line counter keeps counting past blanks and comments
  CHECK_THROWS_WITH_AS(parse_config("\n# c\n[run]\nbad = 1\n"),
                       "line 4: unknown [run] key 'bad'", ConfigError);
}

TEST_CASE("file round trip") {
  const std::string path = "test_config_tmp.ini";
  RunConfig c = default_config();
  c.seed = 3141;
  c.pert_u.push_back({1, 0, 2e-3, 0.5, 0.0});
  save_config(c, path);
  RunConfig back = load_config(path);
  CHECK(back.seed == 3141);
  REQUIRE(back.pert_u.size() == 1);
  CHECK(back.pert_u[0].amp == 2e-3);
  CHECK(emit_config(back) == emit_config(c));
  std::remove(path.c_str());

  CHECK_THROWS_AS(load_config("no/such/dir/missing.ini"), ConfigError);
  CHECK_THROWS_AS(save_config(c, "no/such/dir/out.ini"), ConfigError);
}
