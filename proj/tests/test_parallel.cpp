#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <cstdlib>

#include "cmvlab/functional.hpp"
#include "cmvlab/parallel.hpp"

using namespace cmvlab;

TEST_CASE("thread cap from the environment") {
    setenv("CMVLAB_THREADS", "3", 1);
    CHECK(max_threads() == 3);
    {
        ForceSerialGuard guard;
        CHECK(max_threads() == 1);
    }
    CHECK(max_threads() == 3);
    unsetenv("CMVLAB_THREADS");
}

TEST_CASE("parallel_for covers every index exactly once") {
    const int n = 503;
    std::vector<std::atomic<int>> hits(n);
    parallel_for(n, [&](std::int64_t i) { hits[i].fetch_add(1); });
    for (int i = 0; i < n; ++i) CHECK(hits[i].load() == 1);
}

TEST_CASE("exceptions from worker bodies propagate") {
    CHECK_THROWS_AS(parallel_for(64, [&](std::int64_t i) {
        if (i == 17) throw numeric_error("boom");
    }), numeric_error);
}

TEST_CASE("parallel gram is bitwise identical to the serial reference") {
    setenv("CMVLAB_THREADS", "4", 1);  // force the OpenMP split even on one core
    Functional u;
    u.add_weight_rational(LaurentPoly(1, {0.4, 2.2, 0.4}), LaurentPoly(0, {-2.7, 1.0}));
    u.add_sobolev_weight(1, 1, LaurentPoly(1, {0.5, 1.7, 0.5}), LaurentPoly::one());
    u.add_mass({cd(1.8, 0.4), 1, cd(0.5, -0.2), 0, cd(0.3, 0.1)});
    Functional v = u;  // independent caches
    auto gp = u.gram(18);
    auto gs = v.gram_serial(18);
    CHECK((gp.entries - gs.entries).cwiseAbs().maxCoeff() == 0.0);

    // a second parallel run from warm caches stays identical as well
    auto gp2 = u.gram(18);
    CHECK((gp.entries - gp2.entries).cwiseAbs().maxCoeff() == 0.0);
    unsetenv("CMVLAB_THREADS");
}
