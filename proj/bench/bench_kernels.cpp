// Wall-clock comparison of the OpenMP kernels against their serial
// reference implementations, with a bit-for-bit equality check on the
// results.  Build with -fopenmp and set OMP_NUM_THREADS to taste.
#include <chrono>
#include <cstdio>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "cylattract/attractor.hpp"
#include "cylattract/boxcover.hpp"
#include "cylattract/skew_map.hpp"
#include "cylattract/verifier.hpp"

using namespace cylattract;
using Clock = std::chrono::steady_clock;

namespace {

template <typename F>
double timed(F&& f) {
  const Clock::time_point t0 = Clock::now();
  f();
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void row(const char* name, double serial_s, double parallel_s, bool equal) {
  std::printf("%-22s %10.3fs %10.3fs %8.2fx   %s\n", name, serial_s,
              parallel_s, parallel_s > 0.0 ? serial_s / parallel_s : 0.0,
              equal ? "identical" : "MISMATCH");
}

}  // namespace

int main() {
#ifdef _OPENMP
  std::printf("threads: %d\n", omp_get_max_threads());
#else
  std::printf("threads: 1 (built without OpenMP)\n");
#endif
  std::printf("%-22s %11s %11s %9s   %s\n", "kernel", "serial", "parallel",
              "speedup", "result");

  const MapHandle m = make_map(build_default());

  {
    GridCover s(64, 32), p(64, 32);
    const double ts = timed([&] {
      s = estimate_attractor(m, 200, 1000, 20000, 512, 128, 42, false);
    });
    const double tp = timed([&] {
      p = estimate_attractor(m, 200, 1000, 20000, 512, 128, 42, true);
    });
    row("estimate_attractor", ts, tp, s.bits == p.bits && s.hits == p.hits);
  }

  {
    const BoxCover c = build_box_cover(4, 0.98, 0.93);
    double ms = 0.0, mp = 0.0;
    const double ts = timed(
        [&] { ms = verify_box_cover(c.spec, c.psi1, c.psi2, 48, false); });
    const double tp = timed(
        [&] { mp = verify_box_cover(c.spec, c.psi1, c.psi2, 48, true); });
    row("verify_box_cover", ts, tp, ms == mp);
  }

  {
    FoldScan s, p;
    const double ts = timed([&] { s = fold_scan(m, 2048, 512, false); });
    const double tp = timed([&] { p = fold_scan(m, 2048, 512, true); });
    const bool eq = s.max_value == p.max_value &&
                    s.argmax.theta == p.argmax.theta &&
                    s.argmax.y == p.argmax.y &&
                    s.outside_node_max == p.outside_node_max &&
                    s.has_outside == p.has_outside;
    row("fold_scan", ts, tp, eq);
  }
  return 0;
}
