#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace cylattract {

// Centered n-box B = prod_j [-r_j, r_j] inside D^n = [-1,1]^n (max norm),
// with the contraction factor lambda of the two cover maps.
// Admissible radii satisfy r_{j+1} < lambda * r_j and lambda * r_n > r_1 / 2.
struct BoxSpec {
  int n = 0;
  std::vector<double> radii;  // radii[j-1] = r_j
  double lambda = 0.0;
};

// ParamError naming the violated inequality
void validate_box(const BoxSpec& spec);

struct AffineMap {
  int n = 0;
  std::vector<double> linear;       // row-major n x n
  std::vector<double> translation;  // n entries

  std::vector<double> apply(const std::vector<double>& x) const;
  double op_norm() const;  // max-norm operator norm (max row abs sum)
};

struct BoxCover {
  BoxSpec spec;
  AffineMap psi1, psi2;
};

// Radii r_j = rho^j; each cover map applies the signed cyclic shift
//   R(x_1, ..., x_n) = ((-1)^(n+1) x_n, x_1, ..., x_{n-1}),
// then lambda * id, then a translation of +-r_1/2 along the first axis.
BoxCover build_box_cover(int n, double lambda, double rho);

// Certifies every grid point of B lies strictly inside psi1(B) or psi2(B);
// returns the smallest image-space distance to the nearer image boundary.
// CoverageFailure carries the first uncovered grid point in row-major order.
double verify_box_cover(const BoxSpec& spec, const AffineMap& psi1,
                        const AffineMap& psi2, int grid_per_axis,
                        bool parallel = true);

// Regular lattice of spacing eps/8 spanning B, one contraction
// x -> p_j + (eps/16) x per lattice point.
std::vector<AffineMap> build_eps_net_contractions(const BoxSpec& spec,
                                                  double eps);

// max over `probes` seeded random points of B of the max-norm distance to
// the nearest net point (net property holds iff this is <= eps/8)
double net_max_distance(const BoxSpec& spec, const std::vector<AffineMap>& net,
                        int probes, std::uint64_t seed);

// The fold psi(x) = (alpha x_1^2 + beta', shrink x_2, ..., shrink x_n) on
// D^n, with its set-inclusion certificates.
struct FoldMapSpec {
  int n = 0;
  double alpha = 0.0;
  double beta_prime = 0.0;
  double shrink = 0.0;

  std::vector<double> apply(const std::vector<double>& x) const;
};

struct FoldReport {
  bool fold_meets_box = false;       // {x_1 = 0} passes through int B
  bool image_near_boundary = false;  // fold image within 1-beta' of the edge
  bool image_interior = false;       // psi(D^n) strictly inside D^n
  bool nondegenerate = false;        // strict interior max (alpha < 0)
  double boundary_distance = 0.0;    // 1 - beta'

  bool pass() const {
    return fold_meets_box && image_near_boundary && image_interior &&
           nondegenerate;
  }
};

struct FoldResult {
  FoldMapSpec map;
  FoldReport report;
};

FoldResult build_fold_map(int n, double alpha, double beta_prime,
                          double shrink);

std::string box_cover_to_json(const BoxCover& c, double margin,
                              int grid_per_axis);
std::string fold_to_json(const FoldMapSpec& f, const FoldReport& r);

}  // namespace cylattract
