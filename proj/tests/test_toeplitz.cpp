#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cmvlab/toeplitz.hpp"

using namespace cmvlab;

namespace {

// Reference configuration: Lebesgue base, both perturbing polynomials real
// self-reciprocal, the ratio positive on T, scalar masses 0.1 at each zero.
LaurentPoly lg_ref() { return LaurentPoly(1, {-1.0, 2.5, -1.0}); }  // zeros 2, 1/2
LaurentPoly lc_ref() { return LaurentPoly(1, {1.0, 3.0, 1.0}); }

DiagonalMasses reference_masses() {
    DiagonalMassSpec spec;
    spec.zero_order = {0.1, 0.1};
    return build_diagonal_masses(lg_ref(), lc_ref(), spec);
}

}  // namespace

TEST_CASE("self reciprocal detection") {
    auto r1 = is_self_reciprocal(LaurentPoly(1, {1.0, 2.0, 1.0}));
    CHECK(r1.verdict);
    REQUIRE(r1.on_circle.size() == 1);
    CHECK(std::abs(r1.on_circle[0].first - cd(-1.0)) < 1e-6);
    CHECK(r1.on_circle[0].second == 2);
    CHECK(r1.circle_multiplicities_even);
    CHECK(r1.argument_residual < 1e-9);

    CHECK_FALSE(is_self_reciprocal(LaurentPoly(0, {-3.0, 1.0})).verdict);

    SUBCASE("constructed from a paired zero with the argument normalization") {
        const cd alpha = std::polar(1.7, 0.8);
        LaurentPoly p = LaurentPoly::monomial(-1, std::polar(1.3, -std::arg(alpha)));
        p = p * (LaurentPoly::monomial(1) - LaurentPoly::constant(alpha));
        p = p * (LaurentPoly::monomial(1) - LaurentPoly::constant(1.0 / std::conj(alpha)));
        auto r = is_self_reciprocal(p);
        CHECK(r.verdict);
        REQUIRE(r.paired_off_circle.size() == 1);
        CHECK(r.argument_residual < 1e-9);
    }
    SUBCASE("breaking the argument normalization breaks self-reciprocality") {
        const cd alpha = std::polar(1.7, 0.8);
        LaurentPoly p = LaurentPoly::monomial(-1, std::polar(1.3, -std::arg(alpha) + 0.4));
        p = p * (LaurentPoly::monomial(1) - LaurentPoly::constant(alpha));
        p = p * (LaurentPoly::monomial(1) - LaurentPoly::constant(1.0 / std::conj(alpha)));
        auto r = is_self_reciprocal(p);
        CHECK_FALSE(r.verdict);
        CHECK(r.argument_residual > 0.1);
    }
}

TEST_CASE("coincidence condition") {
    auto dm = reference_masses();
    CHECK(coincidence_condition(dm.p12, dm.p21));

    SUBCASE("a coefficient mismatch is detected") {
        DiagonalMasses bad = dm;
        bad.p12.l_c = bad.p12.l_c + LaurentPoly::constant(1e-3);
        CHECK_FALSE(coincidence_condition(bad.p12, bad.p21));
    }
    SUBCASE("non-coprime polynomials are rejected") {
        auto p12 = GUPerturbation::make(GUPerturbation::Type::T12, lg_ref(), lg_ref());
        auto p21 = GUPerturbation::make(GUPerturbation::Type::T21, lg_ref(), lg_ref());
        CHECK_THROWS_AS(coincidence_condition(p12, p21), std::invalid_argument);
    }
}

TEST_CASE("composition matrix entries") {
    const cd zeta(1.7, -0.4);
    auto b = composition_matrix(zeta, 3);
    CHECK(b(0, 0) == cd(1.0));
    CHECK(std::abs(b(0, 1)) == 0.0);
    CHECK(std::abs(b(1, 1) + pow_int(zeta, -2)) < 1e-14);  // -zeta^-2
    CHECK(std::abs(b(2, 2) - pow_int(zeta, -4)) < 1e-14);  // (-zeta^-2)^2
    CHECK(std::abs(b(2, 1) - pow_int(zeta, -3)) < 1e-14);  // +zeta^-3
    CHECK(std::abs(b(1, 2)) == 0.0);                       // lower triangular
}

TEST_CASE("diagonal masses realize the intended sesquilinear form") {
    LaurentPoly f(1, {cd(0.4, 0.2), cd(1.0, -0.1), cd(0.3, 0.5)});
    LaurentPoly g(2, {cd(0.7, 0.0), cd(-0.2, 0.3), cd(1.0), cd(0.1, -0.6)});

    SUBCASE("zero order: atoms at (zeta, 1/conj(zeta))") {
        auto dm = reference_masses();
        Functional u = Functional::lebesgue();
        for (const auto& p : {dm.p21, dm.p12}) {
            auto pf = perturb_functional(u, p);
            cd mass = pf.full.sesq(f, g) - pf.ratio_part.sesq(f, g);
            cd expect = 0.0;
            for (size_t i = 0; i < 2; ++i) {
                const cd zeta = (i == 0) ? cd(0.5) : cd(2.0);
                expect += 0.1 * f.eval(zeta) * std::conj(g.eval(1.0 / std::conj(zeta)));
            }
            CHECK(std::abs(mass - expect) < 1e-10 * (1.0 + std::abs(expect)));
        }
    }
    SUBCASE("general diagonal: derivative weights against (f g_*) jets") {
        LaurentPoly root = LaurentPoly::monomial(1) - LaurentPoly::constant(cd(1.6, 0.3));
        LaurentPoly lg = LaurentPoly::monomial(-1) * root * root;
        DiagonalMassSpec spec;
        spec.full = {{cd(0.12, -0.05), cd(0.08, 0.02)}};
        auto dm = build_diagonal_masses(lg, lc_ref(), spec);
        Functional u = Functional::lebesgue();
        LaurentPoly prod = f * g.reciprocal();  // f g_* exactly
        TaylorJet pj = prod.jet(cd(1.6, 0.3), 1);
        cd expect = spec.full[0][0] * pj[0] + spec.full[0][1] * pj[1];
        for (const auto& p : {dm.p21, dm.p12}) {
            auto pf = perturb_functional(u, p);
            cd mass = pf.full.sesq(f, g) - pf.ratio_part.sesq(f, g);
            CHECK(std::abs(mass - expect) < 1e-9 * (1.0 + std::abs(expect)));
        }
    }
    SUBCASE("empty mass spec gives no atoms") {
        DiagonalMassSpec spec;
        spec.zero_order = {0.0, 0.0};
        auto dm = build_diagonal_masses(lg_ref(), lc_ref(), spec);
        Functional u = Functional::lebesgue();
        auto pf = perturb_functional(u, dm.p21);
        CHECK(pf.full.masses().empty());
    }
}

TEST_CASE("the two perturbed gram matrices agree on the coincidence case") {
    auto dm = reference_masses();
    Functional u = Functional::lebesgue();
    auto g21 = perturb_functional(u, dm.p21).full.gram(12);
    auto g12 = perturb_functional(u, dm.p12).full.gram(12);
    CHECK((g21.entries - g12.entries).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("sparse coupling structure of the zero order masses") {
    auto dm = reference_masses();
    for (int r = 0; r < dm.c_sparse.rows(); ++r)
        for (int c = 0; c < dm.c_sparse.cols(); ++c)
            if (r != c) CHECK(std::abs(dm.c_sparse(r, c)) < 1e-12);
    CHECK(std::abs(dm.c_sparse(0, 0)) > 0.0);
}

TEST_CASE("toeplitz persistence and its breakdown by masses") {
    Functional u = Functional::lebesgue();
    // the weight ratio stays Toeplitz; so does every diagonal-class mass,
    // because those act through f g_* and monomials give z^{n-m}
    auto pf0 = perturb_functional(u, reference_masses().p21);
    for (int n = -2; n <= 2; ++n)
        for (int m = -2; m <= 2; ++m) {
            CHECK(std::abs(pf0.ratio_part.moment(n, m) - pf0.ratio_part.moment(n + 1, m + 1)) < 1e-11);
            CHECK(std::abs(pf0.full.moment(n, m) - pf0.full.moment(n + 1, m + 1)) < 1e-11);
        }
    // a mass with an unpaired node breaks the Toeplitz structure
    std::vector<std::vector<PointFunctional>> xi(2);
    xi[0] = {PointFunctional{{{cd(1.5, 1.0), 0, cd(0.1)}}}};
    auto pg = GUPerturbation::make(GUPerturbation::Type::T21, lg_ref(), lc_ref(), xi);
    auto pf = perturb_functional(u, pg);
    double dev = 0.0;
    for (int n = -2; n <= 2; ++n)
        for (int m = -2; m <= 2; ++m)
            dev = std::max(dev, std::abs(pf.full.moment(n, m) - pf.full.moment(n + 1, m + 1)));
    CHECK(dev > 1e-3);
}

TEST_CASE("dual determinantal routes agree with each other and the oracle") {
    auto dm = reference_masses();
    Functional u = Functional::lebesgue();
    RunOptions opt;
    opt.l_max = 8;
    auto res = dual_formula_residual(u, dm, 2, 8, opt);
    CHECK(res.gram_mismatch < 1e-9);
    CHECK(res.phi1_routes < 1e-7);
    CHECK(res.phi2_routes < 1e-7);
    CHECK(res.phi1_oracle < 1e-7);
    CHECK(res.phi2_oracle < 1e-7);
    CHECK(res.h_routes < 1e-7);
    CHECK(res.h_oracle < 1e-7);
    CHECK(res.h_real);

    SUBCASE("masses off: same agreement, positive norms throughout") {
        DiagonalMassSpec spec;
        spec.zero_order = {0.0, 0.0};
        auto plain = build_diagonal_masses(lg_ref(), lc_ref(), spec);
        auto r2 = dual_formula_residual(u, plain, 2, 6, opt);
        CHECK(r2.phi1_oracle < 1e-7);
        CHECK(r2.phi2_oracle < 1e-7);
        CHECK(r2.h_real);
        CHECK(r2.h_positive);
    }
}

TEST_CASE("real reduction on the literal printed polynomial") {
    // ratio negative on T: the family is real and the weight-dominated low
    // norms are negative
    DiagonalMassSpec spec;
    spec.zero_order = {0.1, 0.1};
    auto dm = build_diagonal_masses(LaurentPoly(1, {1.0, -2.5, 1.0}), lc_ref(), spec);
    Functional u = Functional::lebesgue();
    auto fp = direct_families(u, dm.p21, 10);
    CHECK((fp.tilde.s1() - fp.tilde.s2()).norm() < 1e-10);
    for (int k = 0; k < 10; ++k)
        CHECK(std::abs(fp.tilde.h()(k).imag()) < 1e-10 * std::abs(fp.tilde.h()(k)));
    for (int k = 0; k < 4; ++k) CHECK(fp.tilde.h()(k).real() < 0.0);
}

TEST_CASE("nonnegative reduction gives positive norms") {
    // positive ratio, masses off: the perturbed functional is a positive
    // measure on T and every norm is positive
    DiagonalMassSpec spec;
    spec.zero_order = {0.0, 0.0};
    auto dm = build_diagonal_masses(lg_ref(), lc_ref(), spec);
    Functional u;
    u.add_weight_laurent(LaurentPoly(1, {1.0, 2.0, 1.0}));
    auto fp = direct_families(u, dm.p21, 12);
    for (int k = 0; k < 12; ++k) CHECK(fp.tilde.h()(k).real() > 0.0);
    // with the printed masses the indefinite off-circle block flips one sign
    // once its 2^l growth dominates; the low norms stay positive
    auto fpm = direct_families(u, reference_masses().p21, 12);
    for (int k = 0; k < 4; ++k) CHECK(fpm.tilde.h()(k).real() > 0.0);
    int flips = 0;
    for (int k = 0; k < 12; ++k) flips += fpm.tilde.h()(k).real() < 0.0 ? 1 : 0;
    CHECK(flips == 1);
}
