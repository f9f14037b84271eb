#include "cylattract/attractor.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "cylattract/errors.hpp"
#include "cylattract/rng.hpp"
#include "json.hpp"

namespace cylattract {

GridCover::GridCover(int grid_theta, int grid_y) : nt(grid_theta), ny(grid_y) {
  if (nt <= 0 || ny <= 0) throw ParamError("GridCover: non-positive resolution");
  bits.assign((cells() + 63) / 64, 0);
  hits.assign(cells(), 0);
}

void GridCover::locate(double theta, double y, int& i, int& j) const {
  const double th = wrap01(theta);
  i = static_cast<int>(th * nt);
  if (i < 0) i = 0;
  if (i >= nt) i = nt - 1;
  j = static_cast<int>((y + 1.0) * 0.5 * ny);
  if (j < 0) j = 0;
  if (j >= ny) j = ny - 1;
}

bool GridCover::test(int i, int j) const {
  const std::size_t c = index(i, j);
  return (bits[c >> 6] >> (c & 63)) & 1u;
}

void GridCover::record(int i, int j) {
  const std::size_t c = index(i, j);
  bits[c >> 6] |= 1ULL << (c & 63);
  if (hits[c] != std::numeric_limits<std::uint32_t>::max()) ++hits[c];
}

void GridCover::clear_cell(int i, int j) {
  const std::size_t c = index(i, j);
  bits[c >> 6] &= ~(1ULL << (c & 63));
  hits[c] = 0;
}

bool GridCover::interior(int i, int j) const {
  for (int dj = -1; dj <= 1; ++dj)
    for (int di = -1; di <= 1; ++di) {
      const int ii = (i + di + nt) % nt;
      int jj = j + dj;
      if (jj < 0) jj = 0;
      if (jj >= ny) jj = ny - 1;
      if (!test(ii, jj)) return false;
    }
  return true;
}

std::size_t GridCover::count_set() const {
  std::size_t n = 0;
  for (std::uint64_t w : bits) n += std::popcount(w);
  return n;
}

bool GridCover::subset_of(const GridCover& o) const {
  if (nt != o.nt || ny != o.ny)
    throw ParamError("GridCover: resolution mismatch");
  for (std::size_t w = 0; w < bits.size(); ++w)
    if (bits[w] & ~o.bits[w]) return false;
  return true;
}

void GridCover::merge(const GridCover& o) {
  if (nt != o.nt || ny != o.ny)
    throw ParamError("GridCover: resolution mismatch");
  for (std::size_t w = 0; w < bits.size(); ++w) bits[w] |= o.bits[w];
  for (std::size_t c = 0; c < hits.size(); ++c) {
    const std::uint64_t s =
        static_cast<std::uint64_t>(hits[c]) + o.hits[c];
    hits[c] = s > std::numeric_limits<std::uint32_t>::max()
                  ? std::numeric_limits<std::uint32_t>::max()
                  : static_cast<std::uint32_t>(s);
  }
}

std::string GridCover::to_pgm() const {
  std::string s = "P5\n" + std::to_string(nt) + " " + std::to_string(ny) +
                  "\n255\n";
  s.reserve(s.size() + cells());
  for (int j = ny - 1; j >= 0; --j)
    for (int i = 0; i < nt; ++i) s.push_back(test(i, j) ? '\xff' : '\0');
  return s;
}

GridCover estimate_attractor(const MapHandle& m, int samples, long burn_in,
                             long iters, int grid_theta, int grid_y,
                             std::uint64_t seed, bool parallel) {
  if (samples < 1)
    throw ParamError("estimate_attractor: samples must be >= 1");
  if (grid_theta < 64 || grid_y < 32)
    throw ParamError("estimate_attractor: grid must be at least 64 x 32");
  if (burn_in < 0 || iters < 0)
    throw ParamError("estimate_attractor: negative step count");

  const std::uint64_t dd = static_cast<std::uint64_t>(m.params.d);
  const long total = burn_in + iters;

  auto run_orbit = [&](int s, GridCover& cover) {
    const CounterRng rng{seed,
                         streams::kOrbitBase + static_cast<std::uint64_t>(s)};
    // theta rides a 64-bit digit window (theta = w * 2^-64): the d-fold
    // expansion is an exact integer step that consumes the leading digit,
    // and a fresh keyed digit slides in at the bottom.  A plain double
    // orbit would exhaust its 53 bits after ~13 steps and collapse onto 0.
    std::uint64_t w = rng.raw(counters::kTheta0);
    double y = rng.uniform(counters::kY0, -1.0, 1.0);
    for (long t = 0; t < total; ++t) {
      const double theta = wrap01(static_cast<double>(w) * 0x1.0p-64);
      double u = 0.0, v = 0.0;
      if (!m.pert.empty()) {
        u = m.pert.eval_u(theta, y);
        v = m.pert.eval_v(theta, y);
      }
      y = fiber_ext(m, theta, y) + v;
      double fu = u - std::floor(u);
      if (fu >= 1.0) fu = 0.0;  // frac rounded up at the wrap
      w = w * dd +
          rng.raw(counters::kStepBase + static_cast<std::uint64_t>(t)) % dd +
          static_cast<std::uint64_t>(fu * 0x1.0p64);
      if (t >= burn_in) {
        // trapping: recorded orbits stay strictly inside the open cylinder
        if (!(std::fabs(y) < 1.0))
          throw DomainError("estimate_attractor: orbit left the open cylinder");
        int ci, cj;
        cover.locate(static_cast<double>(w) * 0x1.0p-64, y, ci, cj);
        cover.record(ci, cj);
      }
    }
  };

  GridCover out(grid_theta, grid_y);
  if (!parallel) {
    for (int s = 0; s < samples; ++s) run_orbit(s, out);
    return out;
  }

  std::string err;
#pragma omp parallel
  {
    GridCover local(grid_theta, grid_y);
    std::string local_err;
#pragma omp for schedule(static)
    for (int s = 0; s < samples; ++s) {
      if (local_err.empty()) {
        try {
          run_orbit(s, local);
        } catch (const Error& e) {
          local_err = e.what();
        }
      }
    }
#pragma omp critical
    {
      out.merge(local);
      if (err.empty() && !local_err.empty()) err = local_err;
    }
  }
  if (!err.empty()) throw DomainError(err);
  return out;
}

double stripe_coverage(const GridCover& cover, const SkewParams& p) {
  if (cover.nt <= 0 || cover.ny <= 0) return 0.0;
  std::size_t total = 0, set = 0;
  for (int j = 0; j < cover.ny; ++j) {
    const double ylo = -1.0 + 2.0 * j / cover.ny;
    const double yhi = -1.0 + 2.0 * (j + 1) / cover.ny;
    if (!(ylo <= p.jout_hi() && yhi >= p.jout_lo())) continue;
    for (int i = 0; i < cover.nt; ++i) {
      ++total;
      if (cover.test(i, j)) ++set;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(set) / static_cast<double>(total);
}

WitnessReport find_fold_witness(const MapHandle& m, const GridCover& cover,
                                const CheckReport& report) {
  if (!report.overall)
    throw ParamError("find_fold_witness: the map is not fully certified");
  if (cover.nt <= 0 || cover.ny <= 0)
    throw ParamError("find_fold_witness: empty cover");
  const CheckFragment* fold = report.find("fold");
  if (fold == nullptr)
    throw ParamError("find_fold_witness: report carries no fold data");

  WitnessReport w;
  w.p = {fold->get("p_theta"), fold->get("p_y")};
  w.fp = apply(m, w.p);
  w.max_value = fold->get("max_value");
  w.band = 2.0 / cover.ny;
  w.gap_certified = fold->get("gap_certified");
  w.gap_observed = fold->get("gap_observed");

  int pi, pj;
  cover.locate(w.p.theta, w.p.y, pi, pj);
  w.interior_ok = cover.interior(pi, pj);

  w.max_ok = std::fabs(w.fp.y - w.max_value) <= 1e-12;

  int fi, fj;
  cover.locate(w.fp.theta, w.fp.y, fi, fj);
  const bool fp_set = cover.test(fi, fj);
  bool none_above = true;
  // a set cell whose whole rectangle sits above the band line would put
  // attractor mass strictly above the image's vertical maximum
  for (int j = cover.ny - 1; j >= 0 && none_above; --j) {
    const double cell_lo = -1.0 + 2.0 * j / cover.ny;
    if (!(cell_lo > w.max_value + w.band)) break;
    for (int i = 0; i < cover.nt; ++i)
      if (cover.test(i, j)) {
        none_above = false;
        break;
      }
  }
  w.boundary_ok = fp_set && none_above;

  if (!w.interior_ok)
    throw EvidenceFailure(
        "witness interior clause failed: the maximizer's cell or one of its "
        "neighbors is unset");
  if (!w.max_ok)
    throw EvidenceFailure(
        "witness maximizer clause failed: the image misses the certified "
        "vertical maximum");
  if (!w.boundary_ok)
    throw EvidenceFailure(
        std::string("witness boundary clause failed: ") +
        (fp_set ? "a set cell lies strictly above the maximum band"
                : "the image cell is unset"));
  return w;
}

std::string witness_to_json(const WitnessReport& w) {
  nlohmann::ordered_json j;
  j["overall"] = w.pass() ? "PASS" : "FAIL";
  j["p"] = {{"theta", w.p.theta}, {"y", w.p.y}};
  j["fp"] = {{"theta", w.fp.theta}, {"y", w.fp.y}};
  j["max_value"] = w.max_value;
  j["band"] = w.band;
  j["gap_certified"] = w.gap_certified;
  j["gap_observed"] = w.gap_observed;
  j["interior_ok"] = w.interior_ok;
  j["max_ok"] = w.max_ok;
  j["boundary_ok"] = w.boundary_ok;
  return j.dump(2);
}

double distortion_ratio(const MapHandle& m, double theta0, double half_width,
                        int n, int samples) {
  if (samples < 1) throw ParamError("distortion_ratio: samples must be >= 1");
  if (n < 0) throw ParamError("distortion_ratio: negative step count");
  if (!(half_width >= 0.0))
    throw ParamError("distortion_ratio: negative half width");

  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (int s = 0; s < samples; ++s) {
    const double f =
        samples == 1 ? 0.5 : static_cast<double>(s) / (samples - 1);
    CylinderPoint p{wrap01(theta0 - half_width + 2.0 * half_width * f), 0.0};
    // unit horizontal tangent pushed forward n times; renormalizing each
    // step keeps the accumulated growth in log scale
    double vt = 1.0, vy = 0.0, sumlog = 0.0;
    for (int i = 0; i < n; ++i) {
      const JacobianMat J = jacobian(m, p);
      const double wt = J.j11 * vt + J.j12 * vy;
      const double wy = J.j21 * vt + J.j22 * vy;
      const double g = std::hypot(wt, wy);
      if (!(g > 0.0)) {
        sumlog = -std::numeric_limits<double>::infinity();
        break;
      }
      sumlog += std::log(g);
      vt = wt / g;
      vy = wy / g;
      p = apply(m, p);
    }
    lo = std::min(lo, sumlog);
    hi = std::max(hi, sumlog);
  }
  return std::exp(hi - lo);
}

DemoReport appendix_a_demo() {
  const double kPoint = 2.0;
  auto f = [&](double x) { return x == kPoint ? 0.0 : kPoint; };
  auto in_attractor = [&](double x) { return x == 0.0 || x == kPoint; };

  DemoReport r;
  r.attractor = {0.0, kPoint};
  r.f_of_two = f(kPoint);

  // {2} is open in the phase space: no segment point comes within 1/2 of it
  bool isolated = true;
  for (int k = -100; k <= 100; ++k)
    if (std::fabs(k / 100.0 - kPoint) < 0.5) isolated = false;
  r.two_interior = isolated && in_attractor(kPoint);

  // every punctured neighbourhood of 0 meets the attractor's complement
  bool boundary = in_attractor(0.0);
  for (int e = 1; e <= 12; ++e) {
    const double x = std::pow(10.0, -e);
    if (!(x <= 1.0) || in_attractor(x)) boundary = false;
  }
  r.zero_boundary = boundary;

  r.interior_to_boundary =
      r.two_interior && r.f_of_two == 0.0 && in_attractor(r.f_of_two);

  bool alt = true;
  for (int k = -100; k <= 101 && alt; ++k) {
    double x = k <= 100 ? k / 100.0 : kPoint;
    for (int s = 0; s < 3; ++s) x = f(x);  // settle onto the cycle
    for (int s = 0; s < 10 && alt; ++s) {
      const double nx = f(x);
      if (!in_attractor(nx) || nx == x) alt = false;
      x = nx;
    }
  }
  r.orbits_alternate = alt;
  return r;
}

std::string demo_to_json(const DemoReport& r) {
  nlohmann::ordered_json j;
  j["overall"] = r.pass() ? "PASS" : "FAIL";
  j["phase_space"] = "[-1,1] u {2}";
  j["attractor"] = r.attractor;
  j["f_of_two"] = r.f_of_two;
  j["two_is_interior"] = r.two_interior;
  j["zero_is_boundary"] = r.zero_boundary;
  j["interior_maps_to_boundary"] = r.interior_to_boundary;
  j["orbits_alternate"] = r.orbits_alternate;
  return j.dump(2);
}

}  // namespace cylattract
