#include "cylattract/boxcover.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "cylattract/errors.hpp"
#include "cylattract/rng.hpp"
#include "json.hpp"

namespace cylattract {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string vec_str(const std::vector<double>& x) {
  std::string s = "(";
  char buf[32];
  for (std::size_t j = 0; j < x.size(); ++j) {
    std::snprintf(buf, sizeof buf, "%.17g", x[j]);
    if (j) s += ", ";
    s += buf;
  }
  return s + ")";
}

// Gauss-Jordan with partial pivoting; exact for signed permutations.
std::vector<double> invert(const std::vector<double>& a, int n) {
  std::vector<double> m = a, inv(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) inv[i * n + i] = 1.0;
  for (int c = 0; c < n; ++c) {
    int piv = c;
    for (int r = c + 1; r < n; ++r)
      if (std::fabs(m[r * n + c]) > std::fabs(m[piv * n + c])) piv = r;
    if (m[piv * n + c] == 0.0)
      throw ParamError("verify_box_cover: singular linear part");
    if (piv != c)
      for (int k = 0; k < n; ++k) {
        std::swap(m[piv * n + k], m[c * n + k]);
        std::swap(inv[piv * n + k], inv[c * n + k]);
      }
    const double s = 1.0 / m[c * n + c];
    for (int k = 0; k < n; ++k) {
      m[c * n + k] *= s;
      inv[c * n + k] *= s;
    }
    for (int r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = m[r * n + c];
      if (f == 0.0) continue;
      for (int k = 0; k < n; ++k) {
        m[r * n + k] -= f * m[c * n + k];
        inv[r * n + k] -= f * inv[c * n + k];
      }
    }
  }
  return inv;
}

double inf_norm(const std::vector<double>& a, int n) {
  double norm = 0.0;
  for (int r = 0; r < n; ++r) {
    double s = 0.0;
    for (int c = 0; c < n; ++c) s += std::fabs(a[r * n + c]);
    norm = std::max(norm, s);
  }
  return norm;
}

}  // namespace

void validate_box(const BoxSpec& spec) {
  if (spec.n < 2) throw ParamError("box: dimension must be >= 2");
  if (static_cast<int>(spec.radii.size()) != spec.n)
    throw ParamError("box: radii count does not match the dimension");
  if (!(spec.lambda > 0.5 && spec.lambda < 1.0))
    throw ParamError("box: lambda must lie in (1/2, 1)");
  for (int j = 0; j < spec.n; ++j)
    if (!(spec.radii[j] > 0.0 && spec.radii[j] < 1.0))
      throw ParamError("box: radii must lie in (0, 1)");
  for (int j = 0; j + 1 < spec.n; ++j)
    if (!(spec.radii[j + 1] < spec.lambda * spec.radii[j]))
      throw ParamError("box: radius chain violates r_{j+1} < lambda * r_j");
  if (!(spec.lambda * spec.radii[spec.n - 1] > 0.5 * spec.radii[0]))
    throw ParamError("box: tail radius violates lambda * r_n > r_1 / 2");
}

std::vector<double> AffineMap::apply(const std::vector<double>& x) const {
  std::vector<double> y(translation);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) y[r] += linear[r * n + c] * x[c];
  return y;
}

double AffineMap::op_norm() const { return inf_norm(linear, n); }

BoxCover build_box_cover(int n, double lambda, double rho) {
  if (n < 2) throw ParamError("build_box_cover: dimension must be >= 2");
  if (!(lambda > 0.5 && lambda < 1.0))
    throw ParamError("build_box_cover: lambda must lie in (1/2, 1)");
  if (!(rho > 0.0 && rho < lambda))
    throw ParamError("build_box_cover: rho must lie in (0, lambda)");
  const double tail = lambda * std::pow(rho, n - 1);
  if (!(tail > 0.5)) {
    char buf[96];
    std::snprintf(buf, sizeof buf,
                  "build_box_cover: lambda * rho^(n-1) = %.17g is not > 1/2",
                  tail);
    throw ParamError(buf);
  }

  BoxCover out;
  out.spec.n = n;
  out.spec.lambda = lambda;
  out.spec.radii.resize(n);
  double r = 1.0;
  for (int j = 0; j < n; ++j) {
    r *= rho;
    out.spec.radii[j] = r;
  }
  validate_box(out.spec);

  const double sgn = (n % 2 == 0) ? -1.0 : 1.0;  // (-1)^(n+1)
  std::vector<double> lin(static_cast<std::size_t>(n) * n, 0.0);
  lin[0 * n + (n - 1)] = lambda * sgn;
  for (int i = 1; i < n; ++i) lin[i * n + (i - 1)] = lambda;

  const double c = 0.5 * out.spec.radii[0];
  out.psi1 = {n, lin, std::vector<double>(n, 0.0)};
  out.psi2 = {n, lin, std::vector<double>(n, 0.0)};
  out.psi1.translation[0] = c;
  out.psi2.translation[0] = -c;
  return out;
}

double verify_box_cover(const BoxSpec& spec, const AffineMap& psi1,
                        const AffineMap& psi2, int grid_per_axis,
                        bool parallel) {
  if (grid_per_axis < 16)
    throw ParamError("verify_box_cover: grid_per_axis must be >= 16");
  validate_box(spec);
  if (psi1.n != spec.n || psi2.n != spec.n)
    throw ParamError("verify_box_cover: dimension mismatch");

  const int n = spec.n;
  const int g = grid_per_axis;

  struct Pre {
    std::vector<double> inv, t;
    double gain = 0.0;  // image-space distance per unit preimage distance
  };
  const auto prep = [&](const AffineMap& a) {
    Pre p;
    p.inv = invert(a.linear, n);
    p.t = a.translation;
    p.gain = 1.0 / inf_norm(p.inv, n);
    return p;
  };
  const Pre pre[2] = {prep(psi1), prep(psi2)};

  std::vector<std::vector<double>> coord(n);
  for (int j = 0; j < n; ++j) {
    coord[j].resize(g);
    const double r = spec.radii[j];
    for (int k = 0; k < g; ++k)
      coord[j][k] = -r + 2.0 * r * k / (g - 1);
  }

  const auto margin_of = [&](const Pre& p, const double* x) {
    double mm = kInf;
    for (int r = 0; r < n; ++r) {
      double w = 0.0;
      const double* row = &p.inv[static_cast<std::size_t>(r) * n];
      for (int c = 0; c < n; ++c) w += row[c] * (x[c] - p.t[c]);
      mm = std::min(mm, spec.radii[r] - std::fabs(w));
    }
    return p.gain * mm;
  };

  struct Slice {
    double min_margin = kInf;
    bool fail = false;
    std::vector<double> fail_x;
    double m1 = 0.0, m2 = 0.0;
  };
  std::vector<Slice> slices(g);

  const auto do_slice = [&](int i0) {
    Slice s;
    std::vector<int> idx(n, 0);
    std::vector<double> x(n);
    x[0] = coord[0][i0];
    std::int64_t inner = 1;
    for (int j = 1; j < n; ++j) inner *= g;
    for (std::int64_t it = 0; it < inner; ++it) {
      for (int j = 1; j < n; ++j) x[j] = coord[j][idx[j]];
      const double m1 = margin_of(pre[0], x.data());
      const double m2 = margin_of(pre[1], x.data());
      const double pm = std::max(m1, m2);
      s.min_margin = std::min(s.min_margin, pm);
      if (pm <= 0.0 && !s.fail) {
        s.fail = true;
        s.fail_x = x;
        s.m1 = m1;
        s.m2 = m2;
      }
      for (int j = n - 1; j >= 1; --j) {
        if (++idx[j] < g) break;
        idx[j] = 0;
      }
    }
    slices[i0] = s;
  };

  if (parallel) {
#pragma omp parallel for
    for (int i0 = 0; i0 < g; ++i0) do_slice(i0);
  } else {
    for (int i0 = 0; i0 < g; ++i0) do_slice(i0);
  }

  double min_margin = kInf;
  const Slice* fail = nullptr;
  for (int i0 = 0; i0 < g; ++i0) {
    min_margin = std::min(min_margin, slices[i0].min_margin);
    if (fail == nullptr && slices[i0].fail) fail = &slices[i0];
  }
  if (fail != nullptr) {
    char buf[64];
    std::snprintf(buf, sizeof buf, ": margins %.17g / %.17g", fail->m1,
                  fail->m2);
    throw CoverageFailure("box cover fails at " + vec_str(fail->fail_x) + buf);
  }
  return min_margin;
}

std::vector<AffineMap> build_eps_net_contractions(const BoxSpec& spec,
                                                  double eps) {
  validate_box(spec);
  if (!(eps > 0.0))
    throw ParamError("build_eps_net_contractions: eps must be positive");

  const int n = spec.n;
  const double h = eps / 8.0;
  std::vector<int> counts(n);
  std::int64_t total = 1;
  for (int j = 0; j < n; ++j) {
    counts[j] =
        static_cast<int>(std::floor(2.0 * spec.radii[j] / h + 1e-9)) + 1;
    total *= counts[j];
  }
  if (total > 10'000'000)
    throw ParamError("build_eps_net_contractions: net would exceed 10^7 maps");

  std::vector<double> lin(static_cast<std::size_t>(n) * n, 0.0);
  for (int j = 0; j < n; ++j) lin[j * n + j] = eps / 16.0;

  std::vector<AffineMap> out;
  out.reserve(static_cast<std::size_t>(total));
  std::vector<int> idx(n, 0);
  for (std::int64_t it = 0; it < total; ++it) {
    std::vector<double> p(n);
    for (int j = 0; j < n; ++j) p[j] = -spec.radii[j] + h * idx[j];
    out.push_back({n, lin, p});
    for (int j = n - 1; j >= 0; --j) {
      if (++idx[j] < counts[j]) break;
      idx[j] = 0;
    }
  }
  return out;
}

double net_max_distance(const BoxSpec& spec, const std::vector<AffineMap>& net,
                        int probes, std::uint64_t seed) {
  validate_box(spec);
  if (net.empty()) throw ParamError("net_max_distance: empty net");
  if (probes < 1) throw ParamError("net_max_distance: probes must be >= 1");

  const int n = spec.n;
  const CounterRng rng{seed, streams::kNetProbe};
  double worst = 0.0;
  for (int q = 0; q < probes; ++q) {
    std::vector<double> x(n);
    for (int j = 0; j < n; ++j)
      x[j] = rng.uniform(static_cast<std::uint64_t>(q) * n + j,
                         -spec.radii[j], spec.radii[j]);
    double best = kInf;
    for (const AffineMap& a : net) {
      double d = 0.0;
      for (int j = 0; j < n; ++j)
        d = std::max(d, std::fabs(x[j] - a.translation[j]));
      best = std::min(best, d);
    }
    worst = std::max(worst, best);
  }
  return worst;
}

std::vector<double> FoldMapSpec::apply(const std::vector<double>& x) const {
  std::vector<double> y(n);
  y[0] = alpha * x[0] * x[0] + beta_prime;
  for (int j = 1; j < n; ++j) y[j] = shrink * x[j];
  return y;
}

FoldResult build_fold_map(int n, double alpha, double beta_prime,
                          double shrink) {
  if (n < 2) throw ParamError("build_fold_map: dimension must be >= 2");
  if (alpha > 0.0) throw ParamError("build_fold_map: alpha must be <= 0");
  if (!(shrink > 0.0 && shrink < 1.0))
    throw ParamError("build_fold_map: shrink must lie in (0, 1)");
  if (!(beta_prime + std::fabs(alpha) < 1.0))
    throw ParamError("build_fold_map: beta' + |alpha| must stay below 1");

  FoldResult out;
  out.map = {n, alpha, beta_prime, shrink};
  FoldReport& r = out.report;
  r.boundary_distance = 1.0 - beta_prime;

  // the fold plane {x_1 = 0} passes through the common center of D^n and
  // of every admissible (origin-centered) box
  r.fold_meets_box = 0.0 < 1.0;

  // fold image {beta'} x [-shrink, shrink]^(n-1): its max-norm never drops
  // below |beta'|, so no fold point is deeper than 1 - beta' from the edge
  double closest = kInf;  // smallest max-norm over fold-image corners
  for (int rest = 0; rest <= 1; ++rest) {
    const double t = rest;  // corner scale 0 (axis point) or 1 (full corner)
    const double mn = std::max(std::fabs(beta_prime), shrink * t);
    closest = std::min(closest, mn);
  }
  r.image_near_boundary = 1.0 - closest <= r.boundary_distance + 1e-15;

  r.image_interior =
      std::fabs(beta_prime) + std::fabs(alpha) < 1.0 && shrink < 1.0;
  r.nondegenerate = alpha < 0.0;
  return out;
}

std::string box_cover_to_json(const BoxCover& c, double margin,
                              int grid_per_axis) {
  nlohmann::ordered_json j;
  j["model"] = "max-norm box";  // D^n realized as [-1,1]^n
  j["n"] = c.spec.n;
  j["lambda"] = c.spec.lambda;
  j["radii"] = c.spec.radii;
  j["psi1_translation"] = c.psi1.translation;
  j["psi2_translation"] = c.psi2.translation;
  j["op_norm"] = c.psi1.op_norm();
  j["grid_per_axis"] = grid_per_axis;
  j["margin"] = margin;
  j["overall"] = margin > 0.0 ? "PASS" : "FAIL";
  return j.dump(2);
}

std::string fold_to_json(const FoldMapSpec& f, const FoldReport& r) {
  nlohmann::ordered_json j;
  j["model"] = "max-norm box";
  j["n"] = f.n;
  j["alpha"] = f.alpha;
  j["beta_prime"] = f.beta_prime;
  j["shrink"] = f.shrink;
  j["fold_meets_box"] = r.fold_meets_box;
  j["image_near_boundary"] = r.image_near_boundary;
  j["image_interior"] = r.image_interior;
  j["nondegenerate"] = r.nondegenerate;
  j["boundary_distance"] = r.boundary_distance;
  j["overall"] = r.pass() ? "PASS" : "FAIL";
  return j.dump(2);
}

}  // namespace cylattract
