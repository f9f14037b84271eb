#pragma once

#include <string>
#include <utility>
#include <vector>

#include "cylattract/skew_map.hpp"

namespace cylattract {

// One certified condition: status, smallest certified slack, named
// constants, and a witness location on failure.
struct CheckFragment {
  std::string id;
  bool pass = false;
  double margin = 0.0;
  std::vector<std::pair<std::string, double>> constants;
  std::string witness;

  double get(const std::string& name) const;  // ParamError if absent
};

struct CheckReport {
  bool overall = false;
  std::vector<CheckFragment> fragments;
  // headline constants
  double lambda_h = 0.0;
  double sigma = 0.0;
  double fold_gap = 0.0;

  const CheckFragment* find(const std::string& id) const;
};

// strict parameter chain and the segment inclusions
CheckFragment check_segment_inclusions(const SkewParams& p);
// arc layout: disjointness gaps, window containment, fold coefficients
CheckFragment check_arc_windows(const SkewParams& p);
// horizontal cone invariance + expansion, image interior, backward
// vertical cones on the branch rectangles
CheckFragment check_cone_hyperbolicity(const MapHandle& m,
                                       const ConeConfig& cone, int nt = 2048,
                                       int ny = 512);
// window rectangle of branch j pulled back strictly into arc x J_out
CheckFragment check_covering_condition(const MapHandle& m, int j,
                                       int nodes = 256);
// image over the contraction strip confined to the inner segment
CheckFragment check_window_condition(const MapHandle& m, int nt = 256,
                                     int ny = 64);
// strict fold gap: max of the image fiber coordinate attained only
// inside the fold rectangle
CheckFragment check_fold_condition(const MapHandle& m, int nt = 2048,
                                   int ny = 512);

CheckReport certify_all(const MapHandle& m);

// JSON without a timestamp; the CLI stamps its own reports
std::string report_to_json(const CheckReport& r);

// --- shared kernels (also exercised by tests and the benchmark) ---

// minimum growth factor of the norm |v_t| + eta*|v_y| over the
// horizontal cone |v_y| <= kappa*|v_t| (exact candidate minimization)
double lambda_h_point(const JacobianMat& J, double eta, double kappa);

// rigorous bounds of the image fiber coordinate over a cell, from exact
// per-piece ranges and endpoint convex combinations on the blend gaps
void fiber_cell_bounds(const MapHandle& m, double th_lo, double th_hi,
                       double y_lo, double y_hi, double& lo, double& hi);

// open fold rectangle: midpoints of the gaps flanking the fold arc
// (th_hi may exceed 1 when the rectangle wraps); y-range is int J_out
void fold_region(const SkewParams& p, double& th_lo, double& th_hi);

struct FoldScan {
  double max_value = 0.0;
  CylinderPoint argmax;
  double outside_node_max = 0.0;  // max over nodes not strictly inside
  bool has_outside = false;
};
// node sweep over the nt x (ny+1) lattice including both fiber
// boundaries; parallel and serial paths produce identical results
FoldScan fold_scan(const MapHandle& m, int nt, int ny, bool parallel);

}  // namespace cylattract
