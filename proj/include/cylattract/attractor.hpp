#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cylattract/skew_map.hpp"
#include "cylattract/verifier.hpp"

namespace cylattract {

// Bit-set over the R_theta x R_y grid on the cylinder, plus saturating
// per-cell visit counters.  Row-major, theta fastest; theta wraps, y clamps.
struct GridCover {
  int nt = 0;
  int ny = 0;
  std::vector<std::uint64_t> bits;
  std::vector<std::uint32_t> hits;

  GridCover() = default;
  GridCover(int grid_theta, int grid_y);

  std::size_t cells() const { return static_cast<std::size_t>(nt) * ny; }
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j) * nt + i;
  }
  // cell of a cylinder point (theta reduced mod 1, y clamped into range)
  void locate(double theta, double y, int& i, int& j) const;

  bool test(int i, int j) const;
  void record(int i, int j);      // set the bit, bump the counter
  void clear_cell(int i, int j);  // fault injection in tests
  // the cell and its 8 neighbors are all set (theta wraps, y clamps)
  bool interior(int i, int j) const;

  std::size_t count_set() const;
  bool subset_of(const GridCover& o) const;
  void merge(const GridCover& o);  // bit union, saturating counter sum

  // binary PGM, maxval 255, 0 = unset, 255 = set; row 0 = y = +1
  std::string to_pgm() const;
};

// Union of late-orbit covers over `samples` uniform starts: each orbit runs
// `burn_in` unrecorded steps, then `iters` recorded ones.  Bit-reproducible
// for fixed (seed, samples, burn_in, iters, grid) at any thread count; the
// serial path is the reference the parallel one is tested against.
GridCover estimate_attractor(const MapHandle& m, int samples, long burn_in,
                             long iters, int grid_theta, int grid_y,
                             std::uint64_t seed, bool parallel = true);

// fraction of the cells whose closed rectangle meets S^1 x J_out that are set
double stripe_coverage(const GridCover& cover, const SkewParams& p);

// Interior-to-boundary evidence at the fold maximizer.
struct WitnessReport {
  CylinderPoint p;   // fold maximizer from the certification report
  CylinderPoint fp;  // its image
  double max_value = 0.0;
  double band = 0.0;  // boundary band: one grid cell height
  double gap_certified = 0.0;
  double gap_observed = 0.0;
  bool interior_ok = false;
  bool max_ok = false;
  bool boundary_ok = false;

  bool pass() const { return interior_ok && max_ok && boundary_ok; }
};

// Checks, against an estimated cover and a PASS certification report:
// (i) the maximizer's cell and all neighbors are set, (ii) its image
// attains the certified vertical maximum within 1e-12, (iii) no set cell
// sits strictly above that maximum plus one cell height, and the image
// cell itself is set.  EvidenceFailure names the first failed clause.
WitnessReport find_fold_witness(const MapHandle& m, const GridCover& cover,
                                const CheckReport& report);
std::string witness_to_json(const WitnessReport& w);

// Max/min ratio of the n-step tangent growth along the horizontal segment
// [theta0 +- half_width] x {0}, measured at `samples` points.  Diagnostic,
// not a certificate.
double distortion_ratio(const MapHandle& m, double theta0, double half_width,
                        int n, int samples);

// Exact two-component fixture: phase space [-1,1] u {2}, the segment maps
// to the isolated point and the isolated point to 0.  The attractor {0, 2}
// has 2 in its interior and 0 on its boundary, so an interior point is
// carried onto the boundary.
struct DemoReport {
  std::vector<double> attractor;
  double f_of_two = -1.0;
  bool two_interior = false;
  bool zero_boundary = false;
  bool interior_to_boundary = false;
  bool orbits_alternate = false;

  bool pass() const {
    return two_interior && zero_boundary && interior_to_boundary &&
           orbits_alternate;
  }
};

DemoReport appendix_a_demo();
std::string demo_to_json(const DemoReport& r);

}  // namespace cylattract
