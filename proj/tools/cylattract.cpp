#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "CLI11.hpp"
#include "cylattract/attractor.hpp"
#include "cylattract/boxcover.hpp"
#include "cylattract/config.hpp"
#include "cylattract/errors.hpp"
#include "cylattract/pullback.hpp"
#include "cylattract/rng.hpp"
#include "cylattract/skew_map.hpp"
#include "cylattract/verifier.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace cylattract;

namespace {

std::string iso_now() {
  char buf[32];
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// module reports are timestamp-free; the front end stamps what it emits
ordered_json stamped(const std::string& json_text) {
  ordered_json j = ordered_json::parse(json_text);
  j["timestamp"] = iso_now();
  return j;
}

void write_file(const fs::path& p, const std::string& data) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + p.string() + "'");
  out << data;
  if (!out) throw ConfigError("failed writing '" + p.string() + "'");
}

void emit(const fs::path& dir, const std::string& name, const ordered_json& j) {
  const std::string text = j.dump(2) + "\n";
  write_file(dir / name, text);
  std::cout << text;
}

int run_check(const MapHandle& m, const fs::path& dir) {
  const CheckReport r = certify_all(m);
  emit(dir, "check.json", stamped(report_to_json(r)));
  return r.overall ? 0 : 1;
}

int run_pullback(const MapHandle& m, const RunConfig& cfg,
                 const fs::path& dir) {
  const CheckReport r = certify_all(m);
  if (!r.overall) {
    std::cerr << ordered_json{{"error", "check"},
                              {"message", "map is not certified; pullback "
                                          "requires a PASS report"}}
                     .dump()
              << "\n";
    return 1;
  }
  if (!(cfg.pullback_extent > 0.0 &&
        cfg.pullback_extent < 2.0 * m.params.jout_hi()))
    throw ConfigError("pullback_extent must lie in (0, |J_out|)");

  ordered_json sum;
  sum["extent"] = cfg.pullback_extent;
  sum["count"] = cfg.pullback_count;
  sum["curves"] = ordered_json::array();
  bool all_ok = true;
  for (int s = 0; s < cfg.pullback_count; ++s) {
    const CounterRng rng{cfg.seed,
                         streams::kCurve + static_cast<std::uint64_t>(s)};
    const double half = 0.5 * cfg.pullback_extent;
    const double limit = std::max(0.0, 0.75 * (m.params.jout_hi() - half));
    const double th0 = rng.uniform01(0);
    const double yc = rng.uniform(1, -limit, limit);
    const VerticalCurve seed({th0, th0}, {yc - half, yc + half},
                             CurveSpace::ShortCylinder, m.params.cone);
    const PullbackTrace tr = find_cutting_curve(m, seed);
    const double res = validate_forward(m, tr, 1e-6);
    const bool cuts =
        curve_cuts(tr.curves.back(), -1.0 + 1e-9, 1.0 - 1e-9);
    const std::string csv = "pullback_" + std::to_string(s) + ".csv";
    write_file(dir / csv, trace_to_csv(tr));
    ordered_json e;
    e["theta0"] = th0;
    e["y_center"] = yc;
    e["n"] = tr.n;
    e["branches"] = tr.branches;
    e["residual"] = res;
    e["cuts"] = cuts;
    e["csv"] = csv;
    sum["curves"].push_back(e);
    all_ok = all_ok && cuts && res < 1e-9;
  }
  sum["overall"] = all_ok ? "PASS" : "FAIL";
  emit(dir, "pullback.json", stamped(sum.dump()));
  return all_ok ? 0 : 1;
}

GridCover run_cover(const MapHandle& m, const RunConfig& cfg) {
  return estimate_attractor(m, cfg.samples, cfg.burn_in, cfg.iters,
                            cfg.grid_theta, cfg.grid_y, cfg.seed);
}

ordered_json cover_stats(const GridCover& g, const MapHandle& m,
                         const RunConfig& cfg) {
  ordered_json j;
  j["seed"] = cfg.seed;
  j["samples"] = cfg.samples;
  j["burn_in"] = cfg.burn_in;
  j["iters"] = cfg.iters;
  j["grid"] = {g.nt, g.ny};
  j["cells_set"] = g.count_set();
  j["cells_total"] = g.cells();
  j["stripe_coverage"] = stripe_coverage(g, m.params);
  return j;
}

int run_estimate(const MapHandle& m, const RunConfig& cfg,
                 const fs::path& dir) {
  const GridCover g = run_cover(m, cfg);
  write_file(dir / "cover.pgm", g.to_pgm());
  ordered_json j = cover_stats(g, m, cfg);
  j["pgm"] = "cover.pgm";
  emit(dir, "estimate.json", stamped(j.dump()));
  return 0;
}

int run_witness(const MapHandle& m, const RunConfig& cfg,
                const fs::path& dir) {
  const CheckReport r = certify_all(m);
  if (!r.overall) {
    std::cerr << ordered_json{{"error", "check"},
                              {"message", "map is not certified; the witness "
                                          "requires a PASS report"}}
                     .dump()
              << "\n";
    return 1;
  }
  const GridCover g = run_cover(m, cfg);
  const WitnessReport w = find_fold_witness(m, g, r);
  emit(dir, "witness.json", stamped(witness_to_json(w)));
  return w.pass() ? 0 : 1;
}

int run_render(const MapHandle& m, const RunConfig& cfg, const fs::path& dir) {
  const GridCover g = run_cover(m, cfg);
  write_file(dir / "render.pgm", g.to_pgm());
  ordered_json j;
  j["pgm"] = "render.pgm";
  j["grid"] = {g.nt, g.ny};
  emit(dir, "render.json", stamped(j.dump()));
  return 0;
}

int run_embed(const MapHandle& m, const RunConfig& cfg, const fs::path& dir) {
  const TorusMap tm = embed_torus(m, cfg.collar);
  const CounterRng rng{cfg.seed, streams::kTorusProbe};
  const int points = 10000;
  const long iters = 1000;

  double max_err = 0.0;
  bool trapped = true;
  for (int q = 0; q < points; ++q) {
    const CylinderPoint p{
        rng.uniform01(2 * static_cast<std::uint64_t>(q)),
        rng.uniform(2 * static_cast<std::uint64_t>(q) + 1, -1.0, 1.0)};
    // conjugacy on the band: chart then map vs map then chart
    const TorusPoint via_torus = torus_apply(tm, torus_chart(p));
    const TorusPoint via_map = torus_chart(apply(m, p));
    max_err = std::max(max_err, std::fabs(via_torus.x - via_map.x));
    max_err = std::max(max_err, std::fabs(via_torus.y - via_map.y));

    TorusPoint z = torus_chart(p);
    for (long t = 0; t < iters && trapped; ++t) {
      z = torus_apply(tm, z);
      const double r = std::hypot(z.x - 0.5, z.y - 0.5);
      if (!(r >= 0.2 - 1e-12 && r <= 0.3 + 1e-12)) trapped = false;
    }
    if (!trapped) break;
  }

  ordered_json j;
  j["collar"] = tm.collar;
  j["r_pad"] = tm.r_pad;
  j["points"] = points;
  j["iters"] = iters;
  j["max_error"] = max_err;
  j["trapped"] = trapped;
  const bool ok = max_err <= 1e-12 && trapped;
  j["overall"] = ok ? "PASS" : "FAIL";
  emit(dir, "embed.json", stamped(j.dump()));
  return ok ? 0 : 1;
}

int run_boxcover(const RunConfig& cfg, const fs::path& dir) {
  struct Inst {
    int n, grid;
    double lam, rho;
  };
  const Inst insts[] = {
      {2, 64, 0.95, 0.8}, {3, 128, 0.95, 0.9}, {4, 96, 0.98, 0.93}};

  ordered_json out;
  out["instances"] = ordered_json::array();
  bool ok = true;
  BoxSpec net_box;
  for (const Inst& in : insts) {
    const BoxCover c = build_box_cover(in.n, in.lam, in.rho);
    const double margin = verify_box_cover(c.spec, c.psi1, c.psi2, in.grid);
    out["instances"].push_back(
        ordered_json::parse(box_cover_to_json(c, margin, in.grid)));
    ok = ok && margin > 0.0;
    if (in.n == 2) net_box = c.spec;
  }

  const double eps = 0.2;
  const auto net = build_eps_net_contractions(net_box, eps);
  const double dmax = net_max_distance(net_box, net, 10000, cfg.seed);
  ordered_json nj;
  nj["eps"] = eps;
  nj["count"] = net.size();
  nj["op_norm"] = net.front().op_norm();
  nj["max_distance"] = dmax;
  nj["bound"] = eps / 8.0;
  nj["ok"] = dmax <= eps / 8.0;
  out["net"] = nj;
  ok = ok && dmax <= eps / 8.0;

  const FoldResult f = build_fold_map(3, -0.04, 0.95, 0.5);
  out["fold"] = ordered_json::parse(fold_to_json(f.map, f.report));
  ok = ok && f.report.pass();

  out["overall"] = ok ? "PASS" : "FAIL";
  emit(dir, "boxcover.json", stamped(out.dump()));
  return ok ? 0 : 1;
}

int run_demo(const fs::path& dir) {
  const DemoReport r = appendix_a_demo();
  emit(dir, "demo.json", stamped(demo_to_json(r)));
  return r.pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cylinder endomorphism toolkit: certification, pullback, "
               "attractor estimation, fold witness, torus embedding, box "
               "covers"};
  app.require_subcommand(1);

  std::string config_path, out_flag, grid_flag;
  std::uint64_t seed_flag = 0;
  app.add_option("--config", config_path, "configuration file");
  app.add_option("--out", out_flag, "output directory (overrides config)");
  CLI::Option* seed_opt =
      app.add_option("--seed", seed_flag, "seed (overrides config)");
  app.add_option("--grid", grid_flag,
                 "grid as WIDTHxHEIGHT (overrides config)");

  CLI::App* c_check =
      app.add_subcommand("check", "certify the map; exit 0 iff PASS");
  CLI::App* c_pull = app.add_subcommand(
      "pullback", "pull random vertical curves back until they cut");
  CLI::App* c_est = app.add_subcommand(
      "estimate", "Monte Carlo attractor cover; writes PGM + stats");
  CLI::App* c_wit = app.add_subcommand(
      "witness", "interior-to-boundary evidence at the fold maximizer");
  CLI::App* c_ren =
      app.add_subcommand("render", "raster of the estimated cover");
  CLI::App* c_emb =
      app.add_subcommand("embed", "torus-embedding sanity checks");
  CLI::App* c_box =
      app.add_subcommand("boxcover", "box cover, eps-net, and fold reports");
  CLI::App* c_demo = app.add_subcommand(
      "demo-appendix-a", "exact two-component interior-to-boundary fixture");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << ordered_json{{"error", "cli"}, {"message", e.what()}}.dump()
              << "\n";
    return 2;
  }

  try {
    RunConfig cfg =
        config_path.empty() ? default_config() : load_config(config_path);
    if (seed_opt->count() > 0) cfg.seed = seed_flag;
    if (!out_flag.empty()) cfg.out_dir = out_flag;
    if (!grid_flag.empty()) {
      int gw = 0, gh = 0;
      if (std::sscanf(grid_flag.c_str(), "%dx%d", &gw, &gh) != 2)
        throw ConfigError("--grid expects WIDTHxHEIGHT, e.g. 512x128");
      cfg.grid_theta = gw;
      cfg.grid_y = gh;
    }
#ifdef _OPENMP
    if (cfg.threads > 0) omp_set_num_threads(cfg.threads);
#endif
    const fs::path dir(cfg.out_dir);
    fs::create_directories(dir);
    const MapHandle m = make_map(cfg.map, cfg.perturbation());

    if (c_check->parsed()) return run_check(m, dir);
    if (c_pull->parsed()) return run_pullback(m, cfg, dir);
    if (c_est->parsed()) return run_estimate(m, cfg, dir);
    if (c_wit->parsed()) return run_witness(m, cfg, dir);
    if (c_ren->parsed()) return run_render(m, cfg, dir);
    if (c_emb->parsed()) return run_embed(m, cfg, dir);
    if (c_box->parsed()) return run_boxcover(cfg, dir);
    if (c_demo->parsed()) return run_demo(dir);
    return 2;  // unreachable: require_subcommand(1)
  } catch (const ConfigError& e) {
    std::cerr << ordered_json{{"error", "config"}, {"message", e.what()}}.dump()
              << "\n";
    return 2;
  } catch (const EvidenceFailure& e) {
    std::cerr
        << ordered_json{{"error", "evidence"}, {"message", e.what()}}.dump()
        << "\n";
    return 1;
  } catch (const CoverageFailure& e) {
    std::cerr
        << ordered_json{{"error", "coverage"}, {"message", e.what()}}.dump()
        << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << ordered_json{{"error", "runtime"}, {"message", e.what()}}.dump()
              << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr
        << ordered_json{{"error", "internal"}, {"message", e.what()}}.dump()
        << "\n";
    return 2;
  }
}
