#include "cylattract/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cylattract/errors.hpp"

namespace cylattract {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

[[noreturn]] void fail(int lineno, const std::string& msg) {
  throw ConfigError("line " + std::to_string(lineno) + ": " + msg);
}

double parse_num(const std::string& s, int lineno) {
  const std::string t = trim(s);
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size())
    fail(lineno, "expected a number, got '" + t + "'");
  return v;
}

long long parse_int(const std::string& s, int lineno) {
  const std::string t = trim(s);
  char* end = nullptr;
  const long long v = std::strtoll(t.c_str(), &end, 10);
  if (t.empty() || end != t.c_str() + t.size())
    fail(lineno, "expected an integer, got '" + t + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& s, int lineno) {
  const std::string t = trim(s);
  char* end = nullptr;
  const unsigned long long v = std::strtoull(t.c_str(), &end, 10);
  if (t.empty() || end != t.c_str() + t.size() || t.front() == '-')
    fail(lineno, "expected an unsigned integer, got '" + t + "'");
  return v;
}

std::vector<std::string> split_list(const std::string& s, std::size_t arity,
                                    int lineno) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t comma = s.find(',', pos);
    out.push_back(s.substr(pos, comma - pos));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (out.size() != arity)
    fail(lineno, "expected " + std::to_string(arity) + " comma-separated " +
                     "values, got " + std::to_string(out.size()));
  return out;
}

std::string num_str(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string term_str(const TrigTerm& t) {
  return std::to_string(t.m) + ", " + std::to_string(t.n) + ", " +
         num_str(t.amp) + ", " + num_str(t.ph_t) + ", " + num_str(t.ph_y);
}

TrigTerm parse_term(const std::string& value, int lineno) {
  const auto f = split_list(value, 5, lineno);
  TrigTerm t;
  t.m = static_cast<int>(parse_int(f[0], lineno));
  t.n = static_cast<int>(parse_int(f[1], lineno));
  t.amp = parse_num(f[2], lineno);
  t.ph_t = parse_num(f[3], lineno);
  t.ph_y = parse_num(f[4], lineno);
  return t;
}

}  // namespace

RunConfig default_config() {
  RunConfig c;
  c.map = build_default();
  return c;
}

std::string emit_config(const RunConfig& c) {
  std::ostringstream out;
  const SkewParams& p = c.map;
  out << "[map]\n";
  out << "a = " << num_str(p.a) << "\n";
  out << "b = " << num_str(p.b) << "\n";
  out << "d = " << p.d << "\n";
  for (int i = 0; i < 4; ++i)
    out << "arc" << i + 1 << " = " << num_str(p.arcs[i].lo) << ", "
        << num_str(p.arcs[i].hi) << "\n";
  out << "eps_arc = " << num_str(p.eps_arc) << "\n";
  out << "alpha = " << num_str(p.alpha) << "\n";
  out << "beta = " << num_str(p.beta) << "\n";
  out << "psi1 = " << num_str(p.psi1.slope) << ", " << num_str(p.psi1.offset)
      << ", " << num_str(p.psi1.sat_lo) << ", " << num_str(p.psi1.sat_hi)
      << "\n";
  out << "psi2 = " << num_str(p.psi2.slope) << ", " << num_str(p.psi2.offset)
      << ", " << num_str(p.psi2.sat_lo) << ", " << num_str(p.psi2.sat_hi)
      << "\n";
  out << "psi3_slope = " << num_str(p.psi3_slope) << "\n";
  out << "k = " << p.k[0] << ", " << p.k[1] << ", " << p.k[2] << ", " << p.k[3]
      << "\n";
  out << "\n[cone]\n";
  out << "eta = " << num_str(p.cone.eta) << "\n";
  out << "kappa = " << num_str(p.cone.kappa) << "\n";
  out << "delta = " << num_str(p.cone.delta) << "\n";
  out << "\n[run]\n";
  out << "seed = " << c.seed << "\n";
  out << "samples = " << c.samples << "\n";
  out << "burn_in = " << c.burn_in << "\n";
  out << "iters = " << c.iters << "\n";
  out << "grid = " << c.grid_theta << ", " << c.grid_y << "\n";
  out << "threads = " << c.threads << "\n";
  out << "collar = " << num_str(c.collar) << "\n";
  out << "pullback_extent = " << num_str(c.pullback_extent) << "\n";
  out << "pullback_count = " << c.pullback_count << "\n";
  out << "out_dir = " << c.out_dir << "\n";
  if (!c.pert_u.empty() || !c.pert_v.empty()) {
    out << "\n[perturb]\n";
    for (const TrigTerm& t : c.pert_u) out << "u = " << term_str(t) << "\n";
    for (const TrigTerm& t : c.pert_v) out << "v = " << term_str(t) << "\n";
  }
  return out.str();
}

RunConfig parse_config(const std::string& text) {
  RunConfig c = default_config();
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(lineno, "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section != "map" && section != "cone" && section != "run" &&
          section != "perturb")
        fail(lineno, "unknown section '" + section + "'");
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) fail(lineno, "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty()) fail(lineno, "key '" + key + "' outside any section");

    SkewParams& p = c.map;
    if (section == "map") {
      if (key == "a") p.a = parse_num(value, lineno);
      else if (key == "b") p.b = parse_num(value, lineno);
      else if (key == "d") p.d = static_cast<int>(parse_int(value, lineno));
      else if (key == "arc1" || key == "arc2" || key == "arc3" ||
               key == "arc4") {
        const auto f = split_list(value, 2, lineno);
        ArcInterval& arc = p.arcs[key[3] - '1'];
        arc.lo = parse_num(f[0], lineno);
        arc.hi = parse_num(f[1], lineno);
      } else if (key == "eps_arc") p.eps_arc = parse_num(value, lineno);
      else if (key == "alpha") p.alpha = parse_num(value, lineno);
      else if (key == "beta") p.beta = parse_num(value, lineno);
      else if (key == "psi1" || key == "psi2") {
        const auto f = split_list(value, 4, lineno);
        Psi12Spec& ps = key == "psi1" ? p.psi1 : p.psi2;
        ps.slope = parse_num(f[0], lineno);
        ps.offset = parse_num(f[1], lineno);
        ps.sat_lo = parse_num(f[2], lineno);
        ps.sat_hi = parse_num(f[3], lineno);
      } else if (key == "psi3_slope") p.psi3_slope = parse_num(value, lineno);
      else if (key == "k") {
        const auto f = split_list(value, 4, lineno);
        for (int i = 0; i < 4; ++i)
          p.k[i] = static_cast<int>(parse_int(f[i], lineno));
      } else fail(lineno, "unknown [map] key '" + key + "'");
    } else if (section == "cone") {
      if (key == "eta") p.cone.eta = parse_num(value, lineno);
      else if (key == "kappa") p.cone.kappa = parse_num(value, lineno);
      else if (key == "delta") p.cone.delta = parse_num(value, lineno);
      else fail(lineno, "unknown [cone] key '" + key + "'");
    } else if (section == "run") {
      if (key == "seed") c.seed = parse_u64(value, lineno);
      else if (key == "samples")
        c.samples = static_cast<int>(parse_int(value, lineno));
      else if (key == "burn_in")
        c.burn_in = static_cast<long>(parse_int(value, lineno));
      else if (key == "iters")
        c.iters = static_cast<long>(parse_int(value, lineno));
      else if (key == "grid") {
        const auto f = split_list(value, 2, lineno);
        c.grid_theta = static_cast<int>(parse_int(f[0], lineno));
        c.grid_y = static_cast<int>(parse_int(f[1], lineno));
      } else if (key == "threads")
        c.threads = static_cast<int>(parse_int(value, lineno));
      else if (key == "collar") c.collar = parse_num(value, lineno);
      else if (key == "pullback_extent")
        c.pullback_extent = parse_num(value, lineno);
      else if (key == "pullback_count")
        c.pullback_count = static_cast<int>(parse_int(value, lineno));
      else if (key == "out_dir") c.out_dir = value;
      else fail(lineno, "unknown [run] key '" + key + "'");
    } else {  // perturb
      if (key == "u") c.pert_u.push_back(parse_term(value, lineno));
      else if (key == "v") c.pert_v.push_back(parse_term(value, lineno));
      else fail(lineno, "unknown [perturb] key '" + key + "'");
    }
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

void save_config(const RunConfig& c, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write config file '" + path + "'");
  out << emit_config(c);
  if (!out) throw ConfigError("failed writing config file '" + path + "'");
}

}  // namespace cylattract
