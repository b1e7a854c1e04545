#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "cmvlab/laurent.hpp"

using namespace cmvlab;

namespace {

std::mt19937 rng(20240811);

cd random_cd(double radius = 1.0) {
    std::uniform_real_distribution<double> d(-radius, radius);
    return {d(rng), d(rng)};
}

LaurentPoly random_poly(int n_minus, int n_plus) {
    std::vector<cd> c(n_minus + n_plus + 1);
    for (auto& v : c) v = random_cd();
    if (c.front() == cd(0.0)) c.front() = 1.0;
    if (c.back() == cd(0.0)) c.back() = 1.0;
    return LaurentPoly(n_minus, c);
}

}  // namespace

TEST_CASE("evaluation") {
    LaurentPoly L(1, {1.0, 2.0, 1.0});  // z^-1 + 2 + z
    CHECK(L.eval(1.0) == cd(4.0));
    CHECK(LaurentPoly::monomial(1).eval(cd(0, 1)) == cd(0, 1));
    LaurentPoly M(2, {1.0, 0.0, -3.0, 0.0, 1.0});  // z^-2 - 3 + z^2
    CHECK(M.eval(2.0).real() == doctest::Approx(1.25));
    CHECK_THROWS_AS(L.eval(0.0), std::domain_error);
}

TEST_CASE("multiplication matches pointwise evaluation") {
    LaurentPoly a(0, {1.0, 1.0});   // 1 + z
    LaurentPoly b(1, {1.0, 1.0});   // z^-1 + 1
    LaurentPoly ab = a * b;
    CHECK(ab.coeff(-1) == cd(1.0));
    CHECK(ab.coeff(0) == cd(2.0));
    CHECK(ab.coeff(1) == cd(1.0));
    CHECK((a * LaurentPoly::one()) == a);

    for (int rep = 0; rep < 8; ++rep) {
        LaurentPoly f = random_poly(2, 2), g = random_poly(1, 3);
        LaurentPoly fg = f * g;
        for (int t = 0; t < 16; ++t) {
            cd z = random_cd(2.0);
            if (std::abs(z) < 0.1) z += 0.5;
            CHECK(std::abs(fg.eval(z) - f.eval(z) * g.eval(z)) <=
                  1e-12 * (1.0 + std::abs(f.eval(z) * g.eval(z))));
        }
    }
}

TEST_CASE("reciprocal") {
    LaurentPoly L(0, {cd(2, -1), cd(3, 4)});  // (2-i) + (3+4i) z
    LaurentPoly r = L.reciprocal();
    CHECK(r.coeff(-1) == std::conj(L.coeff(1)));
    CHECK(r.coeff(0) == std::conj(L.coeff(0)));
    CHECK(r.reciprocal() == L);

    LaurentPoly sym(1, {1.0, 2.0, 1.0});
    CHECK(sym.reciprocal() == sym);

    // On T the reciprocal evaluates to the conjugate value.
    LaurentPoly f = random_poly(2, 3);
    for (int t = 0; t < 16; ++t) {
        double th = 0.3941 * (t + 1);
        cd z = std::polar(1.0, th);
        CHECK(std::abs(f.reciprocal().eval(z) - std::conj(f.eval(z))) < 1e-12 * (1 + std::abs(f.eval(z))));
    }
}

TEST_CASE("prepared detection and lift") {
    auto p1 = is_prepared(LaurentPoly(1, {1.0, 2.0, 1.0}));
    CHECK(p1.prepared);
    CHECK(p1.n == 1);
    CHECK_FALSE(is_prepared(LaurentPoly(1, {1.0, 0.0, 0.0, 1.0})).prepared);  // z^-1 .. z^2
    auto p2 = is_prepared(LaurentPoly(2, {1.0, -2.5, 1.0, -2.5, 1.0}));
    CHECK(p2.prepared);
    CHECK(p2.n == 2);

    CHECK(fejer_riesz_lift({1.0, 2.0, 1.0}) == LaurentPoly(1, {1.0, 2.0, 1.0}));
    CHECK(fejer_riesz_lift({1.0, 0.0, 1.0}) == LaurentPoly(1, {1.0, 0.0, 1.0}));
    CHECK_THROWS_AS(fejer_riesz_lift({1.0, 2.0}), std::invalid_argument);
    CHECK_THROWS_AS(fejer_riesz_lift({0.0, 2.0, 1.0}), std::invalid_argument);

    std::vector<cd> q = {cd(1, 1), cd(0.5, 0), cd(2, -1), cd(0, 0.25), cd(3, 0)};
    LaurentPoly lifted = fejer_riesz_lift(q);
    for (int t = 0; t < 8; ++t) {
        cd z = random_cd(1.5) + cd(0.3, 0.0);
        cd poly = 0.0;
        for (int k = int(q.size()) - 1; k >= 0; --k) poly = poly * z + q[k];
        CHECK(std::abs(lifted.eval(z) - poly * std::pow(z, cd(-2.0))) < 1e-12 * (1 + std::abs(poly)));
    }
}

TEST_CASE("roots with multiplicities") {
    LaurentPoly lin(0, {-2.0, 1.0});  // z - 2
    auto z1 = roots_with_multiplicity(lin);
    REQUIRE(z1.zeros.size() == 1);
    CHECK(std::abs(z1.zeros[0].zeta - cd(2.0)) < 1e-10);
    CHECK(z1.zeros[0].mult == 1);

    LaurentPoly sq(1, {4.0, -4.0, 1.0});  // z^-1 (z-2)^2
    auto z2 = roots_with_multiplicity(sq);
    REQUIRE(z2.zeros.size() == 1);
    CHECK(z2.zeros[0].mult == 2);
    CHECK(std::abs(z2.zeros[0].zeta - cd(2.0)) < 1e-7);

    LaurentPoly two(1, {6.0, -5.0, 1.0});  // z^-1 (z-2)(z-3)
    auto z3 = roots_with_multiplicity(two);
    REQUIRE(z3.zeros.size() == 2);
    CHECK(std::abs(z3.zeros[0].zeta - cd(2.0)) < 1e-10);
    CHECK(std::abs(z3.zeros[1].zeta - cd(3.0)) < 1e-10);
    CHECK(z3.total() == 2);
}

TEST_CASE("deflate reconstructs the polynomial") {
    LaurentPoly two(1, {6.0, -5.0, 1.0});
    auto z = roots_with_multiplicity(two);
    LaurentPoly d0 = deflate(two, z, 0);  // factor (z-2) removed
    CHECK(std::abs(d0.eval(5.0) - (5.0 - 3.0) / 5.0) < 1e-12);

    LaurentPoly lin(0, {-2.0, 1.0});
    auto zl = roots_with_multiplicity(lin);
    CHECK(deflate(lin, zl, 0) == LaurentPoly::one());  // leading coeff times z^0

    for (int rep = 0; rep < 6; ++rep) {
        LaurentPoly f = random_poly(1, 2);
        auto zf = roots_with_multiplicity(f);
        for (int i = 0; i < int(zf.zeros.size()); ++i) {
            LaurentPoly back = deflate(f, zf, i);
            LaurentPoly factor = LaurentPoly::one();
            LaurentPoly root = LaurentPoly::monomial(1) - LaurentPoly::constant(zf.zeros[i].zeta);
            for (int t = 0; t < zf.zeros[i].mult; ++t) factor = factor * root;
            LaurentPoly rec = back * factor;
            for (int k = f.lo(); k <= f.hi(); ++k)
                CHECK(std::abs(rec.coeff(k) - f.coeff(k)) < 1e-10 * (1.0 + std::abs(f.coeff(k))));
        }
    }
}

TEST_CASE("spectral jets") {
    ZeroSet Z;
    Z.zeros.push_back({cd(1.0), 2});
    auto f = LaurentPoly(0, {0.0, 0.0, 1.0}).jetfun();  // z^2
    auto jet = spectral_jet(f, Z);
    REQUIRE(jet.size() == 2);
    CHECK(std::abs(jet[0] - cd(1.0)) < 1e-14);
    CHECK(std::abs(jet[1] - cd(2.0)) < 1e-14);

    // The generating polynomial's own jet vanishes.
    LaurentPoly sq(1, {4.0, -4.0, 1.0});
    auto zs = roots_with_multiplicity(sq);
    for (cd v : spectral_jet(sq.jetfun(), zs)) CHECK(std::abs(v) < 1e-6);

    // exp via its series jets against central finite differences
    JetFun expf = [](cd z0, int order) {
        TaylorJet j(order);
        double fact = 1.0;
        for (int t = 0; t <= order; ++t) {
            j[t] = std::exp(z0) / fact;
            fact *= (t + 1);
        }
        return j;
    };
    ZeroSet Z3;
    Z3.zeros.push_back({cd(0.5), 3});
    auto je = spectral_jet(expf, Z3);
    const double h = 1e-4;
    auto e = [](double x) { return std::exp(x); };
    double d1 = (e(0.5 + h) - e(0.5 - h)) / (2 * h);
    double d2 = (e(0.5 + h) - 2 * e(0.5) + e(0.5 - h)) / (h * h);
    CHECK(std::abs(je[0] - e(0.5)) < 1e-12);
    CHECK(std::abs(je[1] - d1) < 1e-6);
    CHECK(std::abs(je[2] - d2 / 2.0) < 1e-6);

    // linearity
    LaurentPoly f1 = random_poly(2, 2), f2 = random_poly(1, 3);
    cd al = random_cd(), be = random_cd();
    auto j1 = spectral_jet(f1.jetfun(), Z3);
    auto j2 = spectral_jet(f2.jetfun(), Z3);
    auto js = spectral_jet((al * f1 + be * f2).jetfun(), Z3);
    for (size_t i = 0; i < js.size(); ++i)
        CHECK(std::abs(js[i] - (al * j1[i] + be * j2[i])) < 1e-12 * (1 + std::abs(js[i])));
}

TEST_CASE("divided differences and symmetric polynomials") {
    CHECK(std::abs(delta_L(LaurentPoly::monomial(1), 1.7, cd(0.4, 2.0)) - cd(1.0)) < 1e-14);
    CHECK(std::abs(delta_L(LaurentPoly::monomial(2), 1.0, 2.0) - cd(3.0)) < 1e-14);
    CHECK(std::abs(delta_L(LaurentPoly::monomial(-1), 2.0, 4.0) - cd(-0.125)) < 1e-14);
    CHECK(std::abs(h_sym(2, 1.0, 1.0) - cd(3.0)) < 1e-14);
    CHECK(std::abs(h_sym(0, 2.3, -1.2) - cd(1.0)) < 1e-14);
    CHECK(std::abs(h_sym_dual(1, 2.0, 3.0) - cd(5.0 / 36.0)) < 1e-14);
    CHECK(std::abs(h_sym_dual(0, 2.0, 4.0) - cd(1.0 / 8.0)) < 1e-14);

    LaurentPoly L = random_poly(2, 3);
    SUBCASE("symmetry and confluent branch") {
        cd z1 = cd(1.3, 0.4), z2 = cd(-0.7, 0.9);
        CHECK(std::abs(delta_L(L, z1, z2) - delta_L(L, z2, z1)) < 1e-12);
        // near-confluent pair switches to the expansion and approaches the derivative
        cd z = cd(0.9, 0.25);
        cd almost = z + cd(1e-12, 0);
        CHECK(std::abs(delta_L(L, z, almost) - L.derivative().eval(z)) < 1e-7 * (1 + std::abs(L.derivative().eval(z))));
    }
    SUBCASE("window of the divided difference in the first slot") {
        // For fixed z2, z1 -> deltaL has window [-n_minus, n_plus - 1]; check by
        // interpolating on window-many points and matching two extra samples.
        cd z2 = cd(0.8, -0.3);
        const int lo = -L.n_minus(), hi = L.n_plus() - 1;
        const int n = hi - lo + 1;
        std::vector<cd> nodes(n), vals(n);
        for (int i = 0; i < n; ++i) {
            nodes[i] = std::polar(1.1, 0.37 + 0.61 * i);
            vals[i] = delta_L(L, nodes[i], z2);
        }
        // divided-difference (Newton) interpolation of v(z) * z^{n_minus}
        std::vector<cd> coef(n);
        for (int i = 0; i < n; ++i) coef[i] = vals[i] * std::pow(nodes[i], cd(double(L.n_minus())));
        for (int j = 1; j < n; ++j)
            for (int i = n - 1; i >= j; --i) coef[i] = (coef[i] - coef[i - 1]) / (nodes[i] - nodes[i - j]);
        auto interp = [&](cd z) {
            cd acc = coef[n - 1];
            for (int i = n - 2; i >= 0; --i) acc = acc * (z - nodes[i]) + coef[i];
            return acc * std::pow(z, cd(double(-L.n_minus())));
        };
        for (cd z : {cd(1.4, 0.2), cd(-0.6, 0.8)})
            CHECK(std::abs(interp(z) - delta_L(L, z, z2)) < 1e-8 * (1 + std::abs(delta_L(L, z, z2))));
    }
}

TEST_CASE("taylor jet arithmetic") {
    LaurentPoly f = random_poly(1, 2), g = random_poly(2, 1);
    cd z0(1.2, -0.4);
    TaylorJet jf = f.jet(z0, 4), jg = g.jet(z0, 4);
    TaylorJet prod = jf * jg;
    TaylorJet direct = (f * g).jet(z0, 4);
    for (int t = 0; t <= 4; ++t) CHECK(std::abs(prod[t] - direct[t]) < 1e-11 * (1 + std::abs(direct[t])));
    TaylorJet quot = prod / jg;
    for (int t = 0; t <= 4; ++t) CHECK(std::abs(quot[t] - jf[t]) < 1e-10 * (1 + std::abs(jf[t])));
}

TEST_CASE("callables without a derivative rule are rejected for jets") {
    ZeroSet simple;
    simple.zeros.push_back({cd(2.0), 1});
    JetFun f = value_only([](cd z) { return z * z; });
    CHECK(std::abs(spectral_jet(f, simple)[0] - cd(4.0)) < 1e-14);
    ZeroSet dbl;
    dbl.zeros.push_back({cd(2.0), 2});
    CHECK_THROWS_AS(spectral_jet(f, dbl), capability_error);
}
