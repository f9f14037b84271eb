#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#ifndef CLI_EXE
#error "CLI_EXE must point at the command line binary"
#endif

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out, err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

RunResult run_cli(const std::string& args) {
  static int counter = 0;
  const fs::path out = "cli_stdout_" + std::to_string(counter) + ".txt";
  const fs::path err = "cli_stderr_" + std::to_string(counter) + ".txt";
  ++counter;
  const std::string cmd = std::string(CLI_EXE) + " " + args + " > " +
                          out.string() + " 2> " + err.string();
  const int rc = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  fs::remove(out);
  fs::remove(err);
  return r;
}

fs::path fresh_dir(const std::string& name) {
  fs::path d = "cli_" + name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

json load_json(const fs::path& p) { return json::parse(slurp(p)); }

bool has_timestamp(const json& j) {
  if (!j.contains("timestamp")) return false;
  const std::string t = j["timestamp"].get<std::string>();
  return t.size() == 20 && t[4] == '-' && t[10] == 'T' && t.back() == 'Z';
}

json without_timestamp(json j) {
  j.erase("timestamp");
  return j;
}

}  // namespace

TEST_CASE("usage and argument errors") {
  CHECK(run_cli("--help").exit_code == 0);

  RunResult none = run_cli("");
  CHECK(none.exit_code == 2);
  CHECK(json::parse(none.err)["error"] == "cli");

  RunResult unk = run_cli("frobnicate");
  CHECK(unk.exit_code == 2);
  CHECK(json::parse(unk.err)["error"] == "cli");

  fs::path d = fresh_dir("badgrid");
  RunResult bad = run_cli("--out " + d.string() + " --grid 13x estimate");
  CHECK(bad.exit_code == 2);
  CHECK(json::parse(bad.err)["error"] == "config");

  RunResult miss = run_cli("--config no_such_file.ini check");
  CHECK(miss.exit_code == 2);
  CHECK(json::parse(miss.err)["error"] == "config");

  write_text("cli_bad.ini", "[map]\nzz = 1\n");
  RunResult badkey = run_cli("--config cli_bad.ini check");
  CHECK(badkey.exit_code == 2);
  json e = json::parse(badkey.err);
  CHECK(e["error"] == "config");
  CHECK(std::string(e["message"]).find("line 2") != std::string::npos);
  fs::remove("cli_bad.ini");
}

TEST_CASE("demo subcommand") {
  fs::path d = fresh_dir("demo");
  RunResult r = run_cli("--out " + d.string() + " demo-appendix-a");
  CHECK(r.exit_code == 0);
  json j = load_json(d / "demo.json");
  CHECK(j["overall"] == "PASS");
  CHECK(j["attractor"][0].get<double>() == 0.0);
  CHECK(j["attractor"][1].get<double>() == 2.0);
  CHECK(j["f_of_two"].get<double>() == 0.0);
  CHECK(has_timestamp(j));
  // stdout mirrors the file
  CHECK(without_timestamp(json::parse(r.out)) == without_timestamp(j));
}

TEST_CASE("check subcommand certifies the default map") {
  fs::path d = fresh_dir("check");
  RunResult r = run_cli("--out " + d.string() + " check");
  CHECK(r.exit_code == 0);
  json j = load_json(d / "check.json");
  CHECK(j["overall"] == "PASS");
  CHECK(j["lambda_h"].get<double>() == 13.301651037021582);
  CHECK(j["sigma"].get<double>() == 1.081081081081081);
  CHECK(j["fold_gap"].get<double>() == 0.0015875244140625133);
  CHECK(j["conditions"].size() == 7);
  CHECK(has_timestamp(j));
}

TEST_CASE("check fails on a broken map") {
  fs::path d = fresh_dir("checkfail");
  write_text("cli_broken.ini", "[map]\nb = 0.2\n");
  RunResult r = run_cli("--config cli_broken.ini --out " + d.string() +
                        " check");
  CHECK(r.exit_code == 1);
  json j = load_json(d / "check.json");
  CHECK(j["overall"] == "FAIL");
  fs::remove("cli_broken.ini");
}

TEST_CASE("estimate subcommand and reproducibility") {
  write_text("cli_small.ini",
             "[run]\nsamples = 50\nburn_in = 500\niters = 5000\nthreads = 2\n");
  fs::path a = fresh_dir("est_a");
  RunResult ra = run_cli("--config cli_small.ini --out " + a.string() +
                         " --grid 128x64 estimate");
  CHECK(ra.exit_code == 0);

  std::string pgm = slurp(a / "cover.pgm");
  const std::string header = "P5\n128 64\n255\n";
  REQUIRE(pgm.size() == header.size() + 128 * 64);
  CHECK(pgm.compare(0, header.size(), header) == 0);

  json ja = load_json(a / "estimate.json");
  CHECK(ja["grid"][0] == 128);
  CHECK(ja["grid"][1] == 64);
  CHECK(ja["cells_set"].get<long>() > 0);
  CHECK(ja["stripe_coverage"].get<double>() > 0.5);
  CHECK(ja["pgm"] == "cover.pgm");
  CHECK(has_timestamp(ja));

  // identical invocation: identical bytes modulo the timestamp
  fs::path b = fresh_dir("est_b");
  RunResult rb = run_cli("--config cli_small.ini --out " + b.string() +
                         " --grid 128x64 estimate");
  CHECK(rb.exit_code == 0);
  CHECK(slurp(b / "cover.pgm") == pgm);
  CHECK(without_timestamp(load_json(b / "estimate.json")) ==
        without_timestamp(ja));

  // a different seed explores differently
  fs::path c = fresh_dir("est_c");
  RunResult rc = run_cli("--config cli_small.ini --out " + c.string() +
                         " --grid 128x64 --seed 7 estimate");
  CHECK(rc.exit_code == 0);
  CHECK(slurp(c / "cover.pgm") != pgm);
  fs::remove("cli_small.ini");
}

TEST_CASE("render subcommand") {
  write_text("cli_render.ini", "[run]\nsamples = 20\nburn_in = 200\niters = 2000\n");
  fs::path d = fresh_dir("render");
  RunResult r = run_cli("--config cli_render.ini --out " + d.string() +
                        " --grid 128x64 render");
  CHECK(r.exit_code == 0);
  CHECK(slurp(d / "render.pgm").rfind("P5\n128 64\n255\n", 0) == 0);
  json j = load_json(d / "render.json");
  CHECK(j["pgm"] == "render.pgm");
  CHECK(j["grid"][0] == 128);
  fs::remove("cli_render.ini");
}

TEST_CASE("pullback subcommand") {
  write_text("cli_pull.ini", "[run]\npullback_count = 2\n");
  fs::path d = fresh_dir("pull");
  RunResult r = run_cli("--config cli_pull.ini --out " + d.string() +
                        " pullback");
  CHECK(r.exit_code == 0);
  json j = load_json(d / "pullback.json");
  CHECK(j["overall"] == "PASS");
  CHECK(j["count"] == 2);
  REQUIRE(j["curves"].size() == 2);
  for (const json& e : j["curves"]) {
    CHECK(e["cuts"] == true);
    CHECK(e["residual"].get<double>() < 1e-9);
    CHECK(e["n"].get<int>() >= 50);
    CHECK(e["n"].get<int>() <= 80);
    CHECK(e["branches"].size() == e["n"].get<std::size_t>());
  }
  std::string csv = slurp(d / "pullback_0.csv");
  CHECK(csv.find("theta,y\n") != std::string::npos);
  CHECK(fs::exists(d / "pullback_1.csv"));
  fs::remove("cli_pull.ini");
}

TEST_CASE("witness subcommand") {
  write_text("cli_wit.ini",
             "[run]\nsamples = 300\nburn_in = 1000\niters = 20000\n");
  fs::path d = fresh_dir("wit");
  RunResult r = run_cli("--config cli_wit.ini --out " + d.string() +
                        " witness");
  CHECK(r.exit_code == 0);
  json j = load_json(d / "witness.json");
  CHECK(j["overall"] == "PASS");
  CHECK(j["p"]["theta"].get<double>() == 0.875);
  CHECK(j["max_value"].get<double>() == 0.95);
  CHECK(has_timestamp(j));
  fs::remove("cli_wit.ini");
}

TEST_CASE("witness reports thin evidence as a failure") {
  write_text("cli_thin.ini", "[run]\nsamples = 1\nburn_in = 10\niters = 50\n");
  fs::path d = fresh_dir("thin");
  RunResult r = run_cli("--config cli_thin.ini --out " + d.string() +
                        " witness");
  CHECK(r.exit_code == 1);
  CHECK(json::parse(r.err)["error"] == "evidence");
  fs::remove("cli_thin.ini");
}

TEST_CASE("embed subcommand") {
  fs::path d = fresh_dir("embed");
  RunResult r = run_cli("--out " + d.string() + " embed");
  CHECK(r.exit_code == 0);
  json j = load_json(d / "embed.json");
  CHECK(j["overall"] == "PASS");
  CHECK(j["max_error"].get<double>() <= 1e-12);
  CHECK(j["trapped"] == true);
  CHECK(j["points"] == 10000);
  CHECK(has_timestamp(j));
}

TEST_CASE("boxcover subcommand") {
  fs::path d = fresh_dir("box");
  RunResult r = run_cli("--out " + d.string() + " boxcover");
  CHECK(r.exit_code == 0);
  json j = load_json(d / "boxcover.json");
  CHECK(j["overall"] == "PASS");
  REQUIRE(j["instances"].size() == 3);
  for (const json& inst : j["instances"]) {
    CHECK(inst["overall"] == "PASS");
    CHECK(inst["margin"].get<double>() > 0.0);
  }
  CHECK(j["net"]["count"] == 3380);
  CHECK(j["net"]["ok"] == true);
  CHECK(j["fold"]["overall"] == "PASS");
  CHECK(has_timestamp(j));
}
