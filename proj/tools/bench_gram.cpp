// Benchmark for the Gram-assembly kernel: the OpenMP path against the serial
// reference. Both produce bitwise identical matrices; the timing difference
// is in the moment-table quadratures.

#include <chrono>
#include <cstdio>

#include "cmvlab/functional.hpp"
#include "cmvlab/parallel.hpp"

using namespace cmvlab;
namespace chrono = std::chrono;

namespace {

Functional heavy_functional() {
    Functional u;
    u.add_weight_rational(LaurentPoly(1, {0.4, 2.2, 0.4}), LaurentPoly(0, {-2.7, 1.0}));
    u.add_sobolev_weight(1, 1, LaurentPoly(1, {0.5, 1.7, 0.5}), LaurentPoly(0, {3.1, 1.0}));
    u.add_sobolev_weight(2, 1, LaurentPoly::one(), LaurentPoly(0, {-1.9, 0.0, 1.0}));
    u.add_mass({cd(1.8, 0.4), 1, cd(0.5, -0.2), 0, cd(0.3, 0.1)});
    return u;
}

double run_once(int l, bool serial) {
    Functional u = heavy_functional();  // fresh tables every run
    auto t0 = chrono::steady_clock::now();
    GramTruncation g = serial ? u.gram_serial(l) : u.gram(l);
    auto t1 = chrono::steady_clock::now();
    if (!g.quasidefinite) std::printf("(gram flagged minor %d)\n", g.failing_minor);
    return chrono::duration<double, std::milli>(t1 - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
    const int l = argc > 1 ? std::atoi(argv[1]) : 32;
    std::printf("gram assembly at truncation %d, %d thread(s) available\n", l, max_threads());

    Functional a = heavy_functional(), b = heavy_functional();
    GramTruncation gp = a.gram(l);
    GramTruncation gs = b.gram_serial(l);
    const bool identical = (gp.entries - gs.entries).cwiseAbs().maxCoeff() == 0.0;
    std::printf("parallel == serial bitwise: %s\n", identical ? "yes" : "NO");

    for (int rep = 0; rep < 3; ++rep) {
        const double ts = run_once(l, true);
        const double tp = run_once(l, false);
        std::printf("run %d: serial %8.1f ms   parallel %8.1f ms   speedup %.2fx\n", rep, ts, tp, ts / tp);
    }
    return identical ? 0 : 1;
}
