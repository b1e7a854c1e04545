#include "cmvlab/toeplitz.hpp"

#include <cmath>
#include <numbers>

namespace cmvlab {

SelfReciprocalCheck is_self_reciprocal(const LaurentPoly& L, double tol) {
    SelfReciprocalCheck out;
    if (L.is_zero()) return out;
    const int lo = std::min(L.lo(), -L.hi()), hi = std::max(L.hi(), -L.lo());
    for (int k = lo; k <= hi; ++k)
        out.coefficient_residual =
            std::max(out.coefficient_residual, std::abs(L.coeff(k) - std::conj(L.coeff(-k))));
    out.verdict = out.coefficient_residual <= tol * (1.0 + std::abs(L.leading()));

    ZeroSet z = roots_with_multiplicity(L);
    std::vector<bool> used(z.zeros.size(), false);
    double arg_sum = std::arg(L.leading());
    for (size_t i = 0; i < z.zeros.size(); ++i) {
        const cd zeta = z.zeros[i].zeta;
        const int mult = z.zeros[i].mult;
        if (std::abs(std::abs(zeta) - 1.0) < 1e-7) {
            out.on_circle.emplace_back(zeta, mult);
            if (mult % 2 != 0) out.circle_multiplicities_even = false;
            arg_sum += (mult / 2) * std::arg(zeta);
            used[i] = true;
            continue;
        }
        if (used[i]) continue;
        const cd partner = 1.0 / std::conj(zeta);
        for (size_t j = 0; j < z.zeros.size(); ++j) {
            if (j == i || used[j]) continue;
            if (std::abs(z.zeros[j].zeta - partner) < 1e-6 * (1.0 + std::abs(partner)) &&
                z.zeros[j].mult == mult) {
                out.paired_off_circle.emplace_back(zeta, z.zeros[j].zeta);
                arg_sum += mult * std::arg(zeta);
                used[i] = used[j] = true;
                break;
            }
        }
    }
    // arg(lead) + sum n_i arg(alpha_i) + sum q_j arg(beta_j) vanishes mod pi
    out.argument_residual = std::abs(std::remainder(arg_sum, std::numbers::pi));
    return out;
}

double resultant_magnitude(const LaurentPoly& a, const LaurentPoly& b, double cluster_tol) {
    ZeroSet za = roots_with_multiplicity(a, cluster_tol);
    ZeroSet zb = roots_with_multiplicity(b, cluster_tol);
    double prod = 1.0;
    for (const auto& qa : za.zeros)
        for (const auto& qb : zb.zeros) {
            const double d =
                std::abs(qa.zeta - qb.zeta) / (std::max(1.0, std::abs(qa.zeta)) * std::max(1.0, std::abs(qb.zeta)));
            for (int t = 0; t < qa.mult * qb.mult; ++t) prod *= d;
        }
    return prod;
}

bool coincidence_condition(const GUPerturbation& p12, const GUPerturbation& p21, double tol,
                           double coprime_tol) {
    if (resultant_magnitude(p21.l_c, p12.l_gamma) < coprime_tol ||
        resultant_magnitude(p12.l_c.reciprocal(), p21.l_gamma.reciprocal()) < coprime_tol)
        throw std::invalid_argument("coincidence check requires coprime perturbing polynomials");
    auto close = [&](const LaurentPoly& x, const LaurentPoly& y) {
        const int lo = std::min(x.lo(), y.lo()), hi = std::max(x.hi(), y.hi());
        double scale = 0.0, err = 0.0;
        for (int k = lo; k <= hi; ++k) {
            scale = std::max(scale, std::abs(x.coeff(k)));
            err = std::max(err, std::abs(x.coeff(k) - y.coeff(k)));
        }
        return err <= tol * (1.0 + scale);
    };
    return close(p12.l_c.reciprocal(), p21.l_c) && close(p12.l_gamma, p21.l_gamma.reciprocal());
}

Eigen::MatrixXcd composition_matrix(cd zeta, int m) {
    // inner series u(zeta+h) - u(zeta) = sum_{t>=1} (-1)^t zeta^{-t-1} h^t
    std::vector<cd> inner(m, cd(0.0));
    for (int t = 1; t < m; ++t) inner[t] = (t % 2 == 0 ? 1.0 : -1.0) * pow_int(zeta, -t - 1);
    Eigen::MatrixXcd b = Eigen::MatrixXcd::Zero(m, m);
    std::vector<cd> power(m, cd(0.0));
    power[0] = 1.0;  // j = 0
    b(0, 0) = 1.0;
    for (int j = 1; j < m; ++j) {
        std::vector<cd> next(m, cd(0.0));
        for (int s = 0; s < m; ++s)
            for (int t = 1; t <= s; ++t) next[s] += power[s - t] * inner[t];
        power = next;
        for (int s = 0; s < m; ++s) b(s, j) = power[s];
    }
    return b;
}

DiagonalMasses build_diagonal_masses(const LaurentPoly& l_gamma, const LaurentPoly& l_c,
                                     const DiagonalMassSpec& spec, double cluster_tol) {
    DiagonalMasses out;
    const ZeroSet zg = roots_with_multiplicity(l_gamma, cluster_tol);
    const int d = int(zg.zeros.size());
    const int n = zg.total();
    const bool zero_order = spec.full.empty();
    if (zero_order && int(spec.zero_order.size()) != d)
        throw std::invalid_argument("one scalar per zero of l_gamma expected");
    if (!zero_order && int(spec.full.size()) != d)
        throw std::invalid_argument("one weight vector per zero of l_gamma expected");

    // The coupling matrix Xi over the jet layout: block i couples the slot-1
    // derivatives at zeta_i to the slot-2 derivatives at 1/conj(zeta_i).
    out.xi_block = Eigen::MatrixXcd::Zero(n, n);
    for (int i = 0; i < d; ++i) {
        const int m = zg.zeros[i].mult;
        const int off = zg.block_offset(i);
        if (zero_order) {
            out.xi_block(off, off) = spec.zero_order[i];
            continue;
        }
        if (int(spec.full[i].size()) != m)
            throw std::invalid_argument("weight vector length must match the zero multiplicity");
        Eigen::MatrixXcd hank = Eigen::MatrixXcd::Zero(m, m);
        for (int r = 0; r < m; ++r)
            for (int c = 0; r + c < m; ++c) hank(r, c) = spec.full[i][r + c];
        out.xi_block.block(off, off, m, m) = hank * composition_matrix(zg.zeros[i].zeta, m);
    }

    const LaurentPoly lc_star = l_c.reciprocal();
    const LaurentPoly lg_star = l_gamma.reciprocal();

    // Type (2,1): l_gamma-part is the reciprocal; masses sit at 1/conj(zeta_j)
    // and the xi functionals live at the zeta_i, pre-divided by l_c.
    {
        GUPerturbation p;
        p.type = GUPerturbation::Type::T21;
        p.l_gamma = lg_star;
        p.l_c = l_c;
        for (const auto& q : zg.zeros) p.gamma_zeros.zeros.push_back({1.0 / std::conj(q.zeta), q.mult});
        p.xi.resize(d);
        for (int j = 0; j < d; ++j) {
            const int mj = zg.zeros[j].mult;
            p.xi[j].resize(mj);
            for (int l = 0; l < mj; ++l) {
                PointFunctional f;
                for (int i = 0; i < d; ++i) {
                    const int mi = zg.zeros[i].mult;
                    TaylorJet inv = TaylorJet::constant(1.0, mi - 1) / l_c.jet(zg.zeros[i].zeta, mi - 1);
                    for (int kappa = 0; kappa < mi; ++kappa) {
                        cd w = 0.0;
                        for (int k = kappa; k < mi; ++k)
                            w += out.xi_block(zg.block_offset(i) + k, zg.block_offset(j) + l) * inv[k - kappa];
                        if (w != cd(0.0)) f.atoms.push_back({zg.zeros[i].zeta, kappa, w});
                    }
                }
                p.xi[j][l] = f;
            }
        }
        out.p21 = std::move(p);
    }

    // Type (1,2): l_gamma-part stays; masses sit at the zeta_i and the xi
    // functionals live at 1/conj(zeta_j), pre-divided by the reciprocal of l_c.
    {
        GUPerturbation p;
        p.type = GUPerturbation::Type::T12;
        p.l_gamma = l_gamma;
        p.l_c = lc_star;
        p.gamma_zeros = zg;
        p.xi.resize(d);
        for (int i = 0; i < d; ++i) {
            const int mi = zg.zeros[i].mult;
            p.xi[i].resize(mi);
            for (int k = 0; k < mi; ++k) {
                PointFunctional f;
                for (int j = 0; j < d; ++j) {
                    const int mj = zg.zeros[j].mult;
                    const cd node = 1.0 / std::conj(zg.zeros[j].zeta);
                    TaylorJet inv = TaylorJet::constant(1.0, mj - 1) / lc_star.jet(node, mj - 1);
                    for (int lam = 0; lam < mj; ++lam) {
                        cd w = 0.0;
                        for (int l = lam; l < mj; ++l)
                            w += std::conj(out.xi_block(zg.block_offset(i) + k, zg.block_offset(j) + l)) *
                                 inv[l - lam];
                        if (w != cd(0.0)) f.atoms.push_back({node, lam, w});
                    }
                }
                p.xi[i][k] = f;
            }
        }
        out.p12 = std::move(p);
    }

    out.c_sparse = out.xi_block * mass_jet_matrix(out.p21);
    return out;
}

DualFormulaResult dual_formula_residual(const Functional& u, const DiagonalMasses& dm, int l_lo, int l_hi,
                                        const RunOptions& opt) {
    DualFormulaResult out;
    if (!coincidence_condition(dm.p12, dm.p21))
        throw std::invalid_argument("dual formulas need the coincidence configuration");

    const int work = l_hi + 4 * std::max(dm.p21.n_gamma(), dm.p21.n_c()) + 6;
    FamilyPair fp21 = direct_families(u, dm.p21, work, opt.pivot_tol, opt.delta_min);
    FamilyPair fp12 = direct_families(u, dm.p12, work, opt.pivot_tol, opt.delta_min);
    out.gram_mismatch = (fp21.tilde.gram() - fp12.tilde.gram()).cwiseAbs().maxCoeff();

    ChristoffelWorkspace ws21(fp21, l_hi + 2 * dm.p21.n_c() + 1, opt.delta_min);
    ChristoffelWorkspace ws12(fp12, l_hi + 2 * dm.p12.n_c() + 1, opt.delta_min);
    const std::vector<cd> samples = sample_points(u, dm.p21, opt);

    for (int l = l_lo; l <= l_hi; ++l) {
        for (cd z : samples) {
            const cd o1 = fp21.tilde.phi(1, l, z);
            const cd o2 = fp21.tilde.phi(2, l, z);
            const cd a1 = ws21.phi_primary(l, z);  // jet-bordered route
            const cd b1 = ws12.phi_dual(l, z);     // kernel-bordered route
            const cd a2 = ws12.phi_primary(l, z);
            const cd b2 = ws21.phi_dual(l, z);
            out.phi1_routes = std::max(out.phi1_routes, std::abs(a1 - b1) / (1.0 + std::abs(o1)));
            out.phi2_routes = std::max(out.phi2_routes, std::abs(a2 - b2) / (1.0 + std::abs(o2)));
            out.phi1_oracle = std::max({out.phi1_oracle, std::abs(a1 - o1) / (1.0 + std::abs(o1)),
                                        std::abs(b1 - o1) / (1.0 + std::abs(o1))});
            out.phi2_oracle = std::max({out.phi2_oracle, std::abs(a2 - o2) / (1.0 + std::abs(o2)),
                                        std::abs(b2 - o2) / (1.0 + std::abs(o2))});
        }
        const cd oh = fp21.tilde.h()(l);
        const cd h21 = ws21.h_value(l), h12 = ws12.h_value(l);
        out.h_routes = std::max(out.h_routes, std::abs(h21 - h12) / std::abs(oh));
        out.h_oracle = std::max(
            {out.h_oracle, std::abs(h21 - oh) / std::abs(oh), std::abs(h12 - oh) / std::abs(oh)});
        if (std::abs(oh.imag()) > 1e-9 * std::abs(oh)) out.h_real = false;
        if (!(oh.real() > 0.0)) out.h_positive = false;
    }
    return out;
}

}  // namespace cmvlab
