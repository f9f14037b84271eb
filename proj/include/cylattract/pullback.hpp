#pragma once

#include <string>
#include <vector>

#include "cylattract/geometry.hpp"
#include "cylattract/skew_map.hpp"

namespace cylattract {

enum class CurveClass { CUTS_JIN, BRANCH_1, BRANCH_2 };

// Backward-iteration record: curves[0] is the seed, curves[1..] the
// successive pullbacks, curves.back() the cutting curve; branches lists
// the inverse branch taken into each curve after the seed, so
// branches.size() == curves.size() - 1 == n.
struct PullbackTrace {
  std::vector<VerticalCurve> curves;
  std::vector<int> branches;
  int n = 0;
};

// CUTS_JIN when the curve spans the inner stripe; otherwise the branch
// segment containing its y-range, preferring branch 1 when both fit.
// ParamError if the curve leaves S^1 x J_out; Unclassifiable only on
// numerically corrupt input.
CurveClass classify_curve(const VerticalCurve& c, const SkewParams& p);

// One backward step: lift into the branch window, invert vertexwise.
// Requires classify_curve(c) == BRANCH_<branch>.
VerticalCurve pull_back_step(const MapHandle& m, const VerticalCurve& c,
                             int branch);

// Iterate pull_back_step until the curve cuts the inner stripe, then take
// the final branch-3 preimage of the part inside the image band; the last
// curve cuts the whole cylinder. IterationCap after 10^4 steps or when
// the extent collapses (uncertified, contracting map).
PullbackTrace find_cutting_curve(const MapHandle& m, const VerticalCurve& L);

// Maximum distance from the forward image of each curve's vertices to its
// predecessor polyline (cylinder max-norm). Vertices whose image
// overshoots the predecessor's y-span by more than tol contribute the
// overshoot itself.
double validate_forward(const MapHandle& m, const PullbackTrace& trace,
                        double tol);

// y-range [lo, hi] guaranteed to have a branch-3 preimage at every circle
// coordinate of the contraction strip (sampled bound with Lipschitz pad)
void condition3_band(const MapHandle& m, double& lo, double& hi);

// one block per curve: "# curve <i> branch <b>" then "theta,y" rows
std::string trace_to_csv(const PullbackTrace& trace);

}  // namespace cylattract
