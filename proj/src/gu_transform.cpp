#include "cmvlab/gu_transform.hpp"

#include <array>
#include <cmath>
#include <numbers>

#include "cmvlab/parallel.hpp"

namespace cmvlab {

namespace {

double rel(cd lhs, cd rhs) { return std::abs(lhs - rhs) / (1.0 + std::abs(rhs)); }

// Divided difference of L against a frozen second argument, as a Laurent
// polynomial in the remaining variable (symmetric-polynomial expansion).
LaurentPoly delta_poly(const LaurentPoly& L, cd c) {
    LaurentPoly out;
    for (int j = 1; j <= L.n_plus(); ++j) {
        const cd lj = L.coeff(j);
        if (lj == cd(0.0)) continue;
        for (int a = 0; a <= j - 1; ++a) out = out + LaurentPoly::monomial(a, lj * pow_int(c, j - 1 - a));
    }
    for (int j = 1; j <= L.n_minus(); ++j) {
        const cd lj = L.coeff(-j);
        if (lj == cd(0.0)) continue;
        for (int a = 0; a <= j - 1; ++a)
            out = out - LaurentPoly::monomial(-a - 1, lj * pow_int(c, -(j - 1 - a) - 1));
    }
    return out;
}

JetFun jf_sum(std::vector<JetFun> fs) {
    return [fs = std::move(fs)](cd z0, int order) {
        TaylorJet acc(order);
        for (const auto& f : fs) acc += f(z0, order);
        return acc;
    };
}

JetFun jf_poly_times_cauchy(const LaurentPoly& p, cd a) {
    return [p, a](cd z0, int order) { return p.jet(z0, order) * cauchy_slot(a)(z0, order); };
}

// Slot function zeta -> d_z^t [ S(z)/(z - zeta) ] / t! at frozen z, expanded
// by the Leibniz rule into Cauchy powers.
JetFun jf_product_derivative(const LaurentPoly& s, cd z, int t) {
    TaylorJet sj = s.jet(z, t);
    std::vector<JetFun> parts;
    for (int nu = 0; nu <= t; ++nu) {
        const int d = t - nu;
        const cd scale = sj[nu] * (d % 2 == 0 ? 1.0 : -1.0);
        if (scale != cd(0.0)) parts.push_back(cauchy_slot(z, d + 1, scale));
    }
    return jf_sum(std::move(parts));
}

ZeroSet conj_zeros(const ZeroSet& z) {
    ZeroSet out;
    for (const auto& q : z.zeros) out.zeros.push_back({std::conj(q.zeta), q.mult});
    return out;
}

void check_distance(double d, double delta_min, const char* what) {
    if (d < delta_min) throw std::domain_error(std::string("perturbation zero too close to ") + what);
}

}  // namespace

cd det_equilibrated(Eigen::MatrixXcd m) {
    cd scale = 1.0;
    for (int i = 0; i < m.rows(); ++i) {
        const double s = m.row(i).cwiseAbs().maxCoeff();
        if (s > 0.0) {
            m.row(i) /= s;
            scale *= s;
        }
    }
    return scale * Eigen::PartialPivLU<Eigen::MatrixXcd>(m).determinant();
}

// ---------------------------------------------------------- PointFunctional

cd PointFunctional::pair(const JetFun& f) const {
    cd s = 0.0;
    for (const auto& a : atoms) s += a.weight * f(a.node, a.order)[a.order];
    return s;
}

PointFunctional PointFunctional::folded(const LaurentPoly& multiplier) const {
    PointFunctional out;
    for (const auto& a : atoms) {
        TaylorJet jm = multiplier.jet(a.node, a.order);
        for (int kappa = 0; kappa <= a.order; ++kappa) {
            const cd w = a.weight * jm[a.order - kappa];
            if (w != cd(0.0)) out.atoms.push_back({a.node, kappa, w});
        }
    }
    return out;
}

// ----------------------------------------------------------- GUPerturbation

int GUPerturbation::n_gamma() const {
    auto info = is_prepared(l_gamma);
    if (!info.prepared) throw std::invalid_argument("l_gamma must be prepared");
    return info.n;
}

int GUPerturbation::n_c() const {
    auto info = is_prepared(l_c);
    if (!info.prepared) throw std::invalid_argument("l_c must be prepared");
    return info.n;
}

const PointFunctional& GUPerturbation::xi_at(int i, int l) const {
    static const PointFunctional empty;
    if (i >= int(xi.size()) || l >= int(xi[i].size())) return empty;
    return xi[i][l];
}

GUPerturbation GUPerturbation::make(Type type, LaurentPoly lg, LaurentPoly lc,
                                    std::vector<std::vector<PointFunctional>> masses, double cluster_tol) {
    GUPerturbation p;
    p.type = type;
    p.l_gamma = std::move(lg);
    p.l_c = std::move(lc);
    p.n_gamma();
    p.n_c();
    p.gamma_zeros = roots_with_multiplicity(p.l_gamma, cluster_tol);
    if (!masses.empty() && masses.size() != p.gamma_zeros.zeros.size())
        throw std::invalid_argument("one mass row per zero of l_gamma expected");
    for (size_t i = 0; i < masses.size(); ++i)
        if (int(masses[i].size()) > p.gamma_zeros.zeros[i].mult)
            throw std::invalid_argument("mass derivative order exceeds the zero multiplicity");
    p.xi = std::move(masses);
    return p;
}

// ------------------------------------------------------- perturb_functional

PerturbedFunctional perturb_functional(const Functional& u, const GUPerturbation& P, double delta_min) {
    const bool t21 = P.type == GUPerturbation::Type::T21;
    for (const auto& q : P.gamma_zeros.zeros) {
        check_distance(u.distance_to_support1(q.zeta), delta_min, "the first support projection");
        check_distance(u.distance_to_support2(q.zeta), delta_min, "the second support projection");
        check_distance(u.distance_to_support1(std::conj(q.zeta)), delta_min, "the conjugated first support");
        check_distance(u.distance_to_support2(std::conj(q.zeta)), delta_min, "the conjugated second support");
    }

    Functional ratio;
    ratio.set_quadrature(u.quadrature());
    for (WeightTerm t : u.weight_terms()) {
        if (t21) {
            t.a1 = t.a1 * P.l_c;
            t.d2 = t.d2 * P.l_gamma;
        } else {
            t.b1 = t.b1 * P.l_gamma;
            t.c2 = t.c2 * P.l_c;
        }
        // Zero-order terms fold back into the rational density: on T the
        // conjugated slot factor acts as the reciprocal polynomial.
        if (t.n == 0 && t.m == 0) {
            t.num = t.num * t.a1 * t.c2.reciprocal();
            t.den = t.den * t.b1 * t.d2.reciprocal();
            t.a1 = t.b1 = t.c2 = t.d2 = LaurentPoly::one();
        }
        ratio.add_term(t);
    }
    for (const auto& a : u.masses()) {
        TaylorJet left(a.z1_order), right(a.z2_order);
        if (t21) {
            left = P.l_c.jet(a.z1_node, a.z1_order);
            right = TaylorJet::constant(1.0, a.z2_order) / P.l_gamma.jet(a.z2_node, a.z2_order);
        } else {
            left = TaylorJet::constant(1.0, a.z1_order) / P.l_gamma.jet(a.z1_node, a.z1_order);
            right = P.l_c.jet(a.z2_node, a.z2_order);
        }
        for (int ka = 0; ka <= a.z1_order; ++ka)
            for (int la = 0; la <= a.z2_order; ++la) {
                const cd w = a.weight * left[a.z1_order - ka] * std::conj(right[a.z2_order - la]);
                if (w != cd(0.0)) ratio.add_mass({a.z1_node, ka, a.z2_node, la, w});
            }
    }

    Functional full = ratio;
    for (size_t i = 0; i < P.gamma_zeros.zeros.size(); ++i) {
        const cd zeta = P.gamma_zeros.zeros[i].zeta;
        for (int l = 0; l < P.gamma_zeros.zeros[i].mult; ++l) {
            const PointFunctional& xi = P.xi_at(int(i), l);
            if (xi.empty()) continue;
            PointFunctional folded = xi.folded(P.l_c);
            for (const auto& at : folded.atoms) {
                if (t21)
                    full.add_mass({at.node, at.order, zeta, l, at.weight});
                else
                    full.add_mass({zeta, l, at.node, at.order, std::conj(at.weight)});
            }
        }
    }
    return {std::move(full), std::move(ratio)};
}

FamilyPair direct_families(const Functional& u, const GUPerturbation& P, int size, double pivot_tol,
                           double delta_min) {
    PerturbedFunctional pf = perturb_functional(u, P, delta_min);
    auto base_u = std::make_shared<Functional>(u);
    auto tilde_u = std::make_shared<Functional>(std::move(pf.full));
    FamilyPair fp{factorize(base_u->gram(size, pivot_tol), base_u, pivot_tol),
                  factorize(tilde_u->gram(size, pivot_tol), tilde_u, pivot_tol), P,
                  std::make_shared<Functional>(std::move(pf.ratio_part))};
    return fp;
}

// ----------------------------------------------------------------- connectors

Connectors connectors(const FamilyPair& fp) {
    const int L = fp.base.size();
    const auto& P = fp.pert;
    Connectors om;
    if (P.type == GUPerturbation::Type::T12) {
        om.omega1 = fp.base.s1() * l_of_upsilon(P.l_gamma, L) * fp.tilde.s1_inv();
        om.omega2 = fp.tilde.s2() * l_of_upsilon(P.l_c, L) * fp.base.s2_inv();
    } else {
        om.omega1 = fp.tilde.s1() * l_of_upsilon(P.l_c, L) * fp.base.s1_inv();
        om.omega2 = fp.base.s2() * l_of_upsilon(P.l_gamma, L) * fp.tilde.s2_inv();
    }
    return om;
}

ConnectorStructure connector_structure(const FamilyPair& fp, const Connectors& om, int rows) {
    const auto& P = fp.pert;
    const bool t12 = P.type == GUPerturbation::Type::T12;
    const int ng = 2 * P.n_gamma(), nc = 2 * P.n_c();
    const int L = fp.base.size();
    ConnectorStructure out;

    auto scan = [&](const Eigen::MatrixXcd& m, int super, int sub) {
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < L; ++j)
                if (j - i > super || i - j > sub) out.out_of_band = std::max(out.out_of_band, std::abs(m(i, j)));
    };
    scan(om.omega1, t12 ? ng : nc, t12 ? nc : ng);
    scan(om.omega2, t12 ? nc : ng, t12 ? ng : nc);

    // Closed forms for the extreme bands of Omega_2^(1,2) / Omega_1^(2,1).
    const Eigen::MatrixXcd& mx = t12 ? om.omega2 : om.omega1;
    for (int k = 0; k < rows; ++k) {
        const int sgn = (k % 2 == 0) ? 1 : -1;
        if (k + nc < L) {
            const cd expect = P.l_c.coeff(sgn * P.n_c());
            out.extreme_bands = std::max(out.extreme_bands, rel(mx(k, k + nc), expect));
        }
        if (k >= ng) {
            const cd lgc = P.l_gamma.coeff(sgn * P.n_gamma());
            const cd ratio = fp.tilde.h()(k) / fp.base.h()(k - ng);
            const cd expect = t12 ? std::conj(lgc * ratio) : std::conj(lgc) * ratio;
            out.extreme_bands = std::max(out.extreme_bands, rel(mx(k, k - ng), expect));
        }
    }

    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < rows; ++j) {
            cd lhs, rhs;
            if (t12) {  // Omega_1 H~ = H Omega_2^dagger
                lhs = om.omega1(i, j) * fp.tilde.h()(j);
                rhs = fp.base.h()(i) * std::conj(om.omega2(j, i));
            } else {  // H~ Omega_2^dagger = Omega_1 H
                lhs = fp.tilde.h()(i) * std::conj(om.omega2(j, i));
                rhs = om.omega1(i, j) * fp.base.h()(j);
            }
            out.coupling = std::max(out.coupling, rel(lhs, rhs));
        }
    return out;
}

double connection_residual_laurent(const FamilyPair& fp, const Connectors& om,
                                   const std::vector<cd>& samples, int rows, bool swap_connectors) {
    const auto& P = fp.pert;
    const bool t12 = P.type == GUPerturbation::Type::T12;
    const Eigen::MatrixXcd& o1 = swap_connectors ? om.omega2 : om.omega1;
    const Eigen::MatrixXcd& o2 = swap_connectors ? om.omega1 : om.omega2;
    const int L = fp.base.size();
    double res = 0.0;
    for (cd z : samples) {
        Eigen::VectorXcd p1(L), p2(L), q1(L), q2(L);
        for (int m = 0; m < L; ++m) {
            p1(m) = fp.base.phi(1, m, z);
            p2(m) = fp.base.phi(2, m, z);
            q1(m) = fp.tilde.phi(1, m, z);
            q2(m) = fp.tilde.phi(2, m, z);
        }
        const cd lg = P.l_gamma.eval(z), lc = P.l_c.eval(z);
        for (int k = 0; k < rows; ++k) {
            if (t12) {
                res = std::max(res, rel((o1.row(k) * q1).value(), lg * p1(k)));
                res = std::max(res, rel((o2.row(k) * p2).value(), lc * q2(k)));
            } else {
                res = std::max(res, rel((o1.row(k) * p1).value(), lc * q1(k)));
                res = std::max(res, rel((o2.row(k) * q2).value(), lg * p2(k)));
            }
        }
    }
    return res;
}

CauchyConnectionResiduals connection_residual_cauchy(const FamilyPair& fp, const Connectors& om,
                                                     const std::vector<cd>& samples, int rows,
                                                     double delta_min) {
    const auto& P = fp.pert;
    const bool t12 = P.type == GUPerturbation::Type::T12;
    const int ng2 = 2 * P.n_gamma();
    const int kmax = std::min(fp.base.size(), rows + ng2 + 2 * P.n_c() + 1);
    const LaurentPoly lgbar = P.l_gamma.conj_coeffs();
    const LaurentPoly lcbar = P.l_c.conj_coeffs();
    const Functional& u = fp.base.functional();
    const Functional& ut = fp.tilde.functional();

    std::vector<std::array<double, 3>> results(samples.size(), {0.0, 0.0, 0.0});
    parallel_for(std::int64_t(samples.size()), [&](std::int64_t si) {
        const cd z = samples[si];
        const int side = t12 ? 2 : 1;
        Eigen::VectorXcd cbase(kmax), ctilde(kmax), cother(kmax);
        for (int m = 0; m < kmax; ++m) {
            cbase(m) = fp.base.second_kind(side, m, z, delta_min);
            ctilde(m) = fp.tilde.second_kind(side, m, z, delta_min);
            cother(m) = fp.tilde.second_kind(t12 ? 1 : 2, m, z, delta_min);
        }
        double r_full = 0.0, r_trunc = 0.0, r_plain = 0.0;
        const LaurentPoly dpoly = delta_poly(P.l_gamma, std::conj(z));
        for (int k = 0; k < rows; ++k) {
            if (t12) {
                cd lhs = (om.omega2.row(k).head(kmax) * cbase).value();
                const cd reg = lgbar.eval(z) * ctilde(k);
                const cd rhs = -std::conj(ut.sesq(dpoly, fp.tilde.phi_poly(2, k)));
                r_full = std::max(r_full, rel(lhs - reg, rhs));
                if (k >= ng2) r_trunc = std::max(r_trunc, rel(lhs, reg));
                cd lhs1 = (om.omega1.row(k).head(kmax) * cother).value();
                const cd rhs1 = u.pair(Slot(fp.base.phi_poly(1, k)), Slot(jf_poly_times_cauchy(lcbar, z)));
                r_plain = std::max(r_plain, rel(lhs1, rhs1));
            } else {
                cd lhs = (om.omega1.row(k).head(kmax) * cbase).value();
                const cd reg = lgbar.eval(z) * ctilde(k);
                const cd rhs = -ut.sesq(fp.tilde.phi_poly(1, k), dpoly);
                r_full = std::max(r_full, rel(lhs - reg, rhs));
                if (k >= ng2) r_trunc = std::max(r_trunc, rel(lhs, reg));
                cd lhs2 = (om.omega2.row(k).head(kmax) * cother).value();
                const cd rhs2 = std::conj(u.pair(Slot(jf_poly_times_cauchy(P.l_c, std::conj(z))),
                                                 Slot(fp.base.phi_poly(2, k).conj_coeffs())));
                r_plain = std::max(r_plain, rel(lhs2, rhs2));
            }
        }
        results[si] = {r_full, r_trunc, r_plain};
    });
    CauchyConnectionResiduals out;
    for (const auto& r : results) {
        out.full = std::max(out.full, r[0]);
        out.truncated = std::max(out.truncated, r[1]);
        out.plain = std::max(out.plain, r[2]);
    }
    return out;
}

KernelConnectionResiduals connection_residual_kernels(const FamilyPair& fp, const Connectors& om, int l,
                                                      const std::vector<cd>& samples, double delta_min) {
    const auto& P = fp.pert;
    const bool t12 = P.type == GUPerturbation::Type::T12;
    const int ng = 2 * P.n_gamma(), nc = 2 * P.n_c();
    if (l < std::max(ng, nc)) throw std::invalid_argument("kernel order below twice the perturbation degree");
    const Eigen::MatrixXcd& mx = t12 ? om.omega2 : om.omega1;
    const LaurentPoly lgbar = P.l_gamma.conj_coeffs();
    const LaurentPoly lcbar = P.l_c.conj_coeffs();
    const Functional& u = fp.base.functional();
    KernelConnectionResiduals out;

    // Triangular connector blocks around row/column l.
    Eigen::MatrixXcd gblock(ng, ng), cblock(nc, nc);
    for (int r = 0; r < ng; ++r)
        for (int c = 0; c < ng; ++c) gblock(r, c) = mx(l + r, l - ng + c);
    for (int r = 0; r < nc; ++r)
        for (int c = 0; c < nc; ++c) cblock(r, c) = mx(l - nc + r, l + c);
    if (t12) {
        gblock = gblock.conjugate().eval();
        cblock = cblock.conjugate().eval();
    }
    Eigen::MatrixXcd middle = Eigen::MatrixXcd::Zero(nc + ng, ng + nc);
    middle.topRightCorner(nc, nc) = cblock;
    middle.bottomLeftCorner(ng, ng) = -gblock;

    auto row_range = [&](auto&& f) {  // tilde indices l-nc .. l+ng-1, scaled by H~^-1
        Eigen::RowVectorXcd v(nc + ng);
        for (int r = 0; r < nc + ng; ++r) v(r) = f(l - nc + r) / fp.tilde.h()(l - nc + r);
        return v;
    };
    auto col_range = [&](auto&& f) {  // base indices l-ng .. l+nc-1
        Eigen::VectorXcd v(ng + nc);
        for (int c = 0; c < ng + nc; ++c) v(c) = f(l - ng + c);
        return v;
    };

    for (size_t si = 0; si + 1 < samples.size(); si += 2) {
        const cd x1 = samples[si], x2 = samples[si + 1];
        if (t12) {
            {
                cd lhs = std::conj(P.l_c.eval(x1)) * fp.tilde.cd_kernel(l, x1, x2) -
                         P.l_gamma.eval(x2) * fp.base.cd_kernel(l, x1, x2);
                auto rv = row_range([&](int k) { return fp.tilde.phi(1, k, x2); });
                auto cv = col_range([&](int k) { return std::conj(fp.base.phi(2, k, x1)); });
                out.plain = std::max(out.plain, rel(lhs, (rv * middle * cv).value()));
            }
            {
                cd lhs = P.l_gamma.eval(std::conj(x1)) * fp.tilde.mixed_kernel_c2(l, x1, x2, delta_min) -
                         P.l_gamma.eval(x2) * fp.base.mixed_kernel_c2(l, x1, x2, delta_min) -
                         delta_L(P.l_gamma, std::conj(x1), x2);
                auto rv = row_range([&](int k) { return fp.tilde.phi(1, k, x2); });
                auto cv = col_range([&](int k) { return std::conj(fp.base.second_kind(2, k, x1, delta_min)); });
                out.mixed_regular = std::max(out.mixed_regular, rel(lhs, (rv * middle * cv).value()));
            }
            {
                LaurentPoly kslot;  // z1 -> K^[l](xbar1, z1)
                for (int k = 0; k < l; ++k)
                    kslot = kslot + (std::conj(fp.base.phi(2, k, x1)) / fp.base.h()(k)) * fp.base.phi_poly(1, k);
                cd pairing = u.pair(Slot(kslot), Slot(jf_poly_times_cauchy(lcbar, x2)));
                cd lhs = std::conj(P.l_c.eval(x1)) * fp.tilde.mixed_kernel_c1(l, x1, x2, delta_min) - pairing;
                auto rv = row_range([&](int k) { return fp.tilde.second_kind(1, k, x2, delta_min); });
                auto cv = col_range([&](int k) { return std::conj(fp.base.phi(2, k, x1)); });
                out.mixed_cauchy = std::max(out.mixed_cauchy, rel(lhs, (rv * middle * cv).value()));
            }
        } else {
            {
                cd lhs = P.l_c.eval(x2) * fp.tilde.cd_kernel(l, x1, x2) -
                         std::conj(P.l_gamma.eval(x1)) * fp.base.cd_kernel(l, x1, x2);
                auto rv = row_range([&](int k) { return std::conj(fp.tilde.phi(2, k, x1)); });
                auto cv = col_range([&](int k) { return fp.base.phi(1, k, x2); });
                out.plain = std::max(out.plain, rel(lhs, (rv * middle * cv).value()));
            }
            {
                cd lhs = lgbar.eval(x2) * fp.tilde.mixed_kernel_c1(l, x1, x2, delta_min) -
                         lgbar.eval(std::conj(x1)) * fp.base.mixed_kernel_c1(l, x1, x2, delta_min) -
                         delta_L(lgbar, std::conj(x1), x2);
                auto rv = row_range([&](int k) { return std::conj(fp.tilde.phi(2, k, x1)); });
                auto cv = col_range([&](int k) { return fp.base.second_kind(1, k, x2, delta_min); });
                out.mixed_regular = std::max(out.mixed_regular, rel(lhs, (rv * middle * cv).value()));
            }
            {
                LaurentPoly bslot;  // conjugated kernel slot in the second variable
                for (int k = 0; k < l; ++k)
                    bslot = bslot + (fp.base.phi(1, k, x2) / fp.base.h()(k)) * fp.base.phi_poly(2, k).conj_coeffs();
                cd pairing = u.pair(Slot(jf_poly_times_cauchy(P.l_c, std::conj(x1))), Slot(bslot));
                cd lhs = P.l_c.eval(x2) * fp.tilde.mixed_kernel_c2(l, x1, x2, delta_min) - pairing;
                auto rv = row_range([&](int k) { return std::conj(fp.tilde.second_kind(2, k, x1, delta_min)); });
                auto cv = col_range([&](int k) { return fp.base.phi(1, k, x2); });
                out.mixed_cauchy = std::max(out.mixed_cauchy, rel(lhs, (rv * middle * cv).value()));
            }
        }
    }
    return out;
}

// --------------------------------------------------------------------- jets

Eigen::MatrixXcd mass_jet_matrix(const GUPerturbation& P) {
    const ZeroSet zc = conj_zeros(P.gamma_zeros);
    const LaurentPoly lgbar = P.l_gamma.conj_coeffs();
    const int n = zc.total();
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(n, n);
    for (size_t j = 0; j < zc.zeros.size(); ++j) {
        const int m = zc.zeros[j].mult;
        const int off = zc.block_offset(int(j));
        TaylorJet ell = deflate(lgbar, zc, int(j)).jet(zc.zeros[j].zeta, m - 1);
        for (int r = 0; r < m; ++r)
            for (int c = 0; c < m; ++c)
                if (r + c >= m - 1) out(off + r, off + c) = ell[r + c - (m - 1)];
    }
    return out;
}

namespace {

// <xi_{i,l}, l_c phi> for every (i, l), as a row over the jet layout.
Eigen::RowVectorXcd xi_compound_row(const GUPerturbation& P, const LaurentPoly& phi) {
    Eigen::RowVectorXcd row = Eigen::RowVectorXcd::Zero(P.gamma_zeros.total());
    int pos = 0;
    for (size_t i = 0; i < P.gamma_zeros.zeros.size(); ++i)
        for (int l = 0; l < P.gamma_zeros.zeros[i].mult; ++l, ++pos) {
            const PointFunctional& xi = P.xi_at(int(i), l);
            if (!xi.empty()) row(pos) = xi.folded(P.l_c).pair(phi);
        }
    return row;
}

// <xi_{i,l}, phi> as a row, no l_c factor.
Eigen::RowVectorXcd xi_plain_row(const GUPerturbation& P, const LaurentPoly& phi) {
    Eigen::RowVectorXcd row = Eigen::RowVectorXcd::Zero(P.gamma_zeros.total());
    int pos = 0;
    for (size_t i = 0; i < P.gamma_zeros.zeros.size(); ++i)
        for (int l = 0; l < P.gamma_zeros.zeros[i].mult; ++l, ++pos) {
            const PointFunctional& xi = P.xi_at(int(i), l);
            if (!xi.empty()) row(pos) = xi.pair(phi);
        }
    return row;
}

// Deflation times the residual zero power, per (zero, order) slot: the
// polynomial part of the regularized second-kind product.
std::vector<std::vector<LaurentPoly>> mass_polys(const LaurentPoly& lg, const ZeroSet& zs) {
    std::vector<std::vector<LaurentPoly>> out(zs.zeros.size());
    for (size_t i = 0; i < zs.zeros.size(); ++i) {
        const int m = zs.zeros[i].mult;
        LaurentPoly defl = deflate(lg, zs, int(i));
        const LaurentPoly root = LaurentPoly::monomial(1) - LaurentPoly::constant(zs.zeros[i].zeta);
        out[i].resize(m);
        for (int l = 0; l < m; ++l) {
            LaurentPoly p = defl;
            for (int t = 0; t < m - 1 - l; ++t) p = p * root;
            out[i][l] = p;
        }
    }
    return out;
}

}  // namespace

double jet_identity_residual(const FamilyPair& fp, int k_lo, int k_hi, double delta_min) {
    const auto& P = fp.pert;
    const bool t21 = P.type == GUPerturbation::Type::T21;
    const ZeroSet zc = conj_zeros(P.gamma_zeros);
    const LaurentPoly lgbar = P.l_gamma.conj_coeffs();
    const Eigen::MatrixXcd lmat = mass_jet_matrix(P);
    const Functional& ratio = *fp.ratio_part;
    for (const auto& q : zc.zeros) {
        const cd pt = t21 ? q.zeta : std::conj(q.zeta);
        if (ratio.distance_to_support1(pt) < delta_min || ratio.distance_to_support2(pt) < delta_min)
            throw std::domain_error("jet evaluation point too close to the perturbed support");
    }
    const auto polys = t21 ? mass_polys(lgbar, zc) : mass_polys(P.l_gamma, P.gamma_zeros);

    std::vector<double> res(std::max(0, k_hi - k_lo), 0.0);
    parallel_for(std::int64_t(res.size()), [&](std::int64_t idx) {
        const int k = k_lo + int(idx);
        const LaurentPoly phit = fp.tilde.phi_poly(t21 ? 1 : 2, k);
        const Eigen::RowVectorXcd xrow = xi_compound_row(P, phit);
        const Eigen::RowVectorXcd rhs = xrow * lmat;
        double r = 0.0;
        int pos = 0;
        for (size_t j = 0; j < zc.zeros.size(); ++j) {
            const int m = zc.zeros[j].mult;
            for (int t = 0; t < m; ++t, ++pos) {
                cd lhs;
                if (t21) {
                    const cd z0 = zc.zeros[j].zeta;
                    cd acc = ratio.pair(Slot(phit), Slot(jf_product_derivative(lgbar, z0, t)));
                    int qpos = 0;
                    for (size_t i = 0; i < zc.zeros.size(); ++i)
                        for (int l = 0; l < zc.zeros[i].mult; ++l, ++qpos)
                            if (xrow(qpos) != cd(0.0)) acc += xrow(qpos) * polys[i][l].jet(z0, t)[t];
                    lhs = acc;
                } else {
                    const cd z0 = P.gamma_zeros.zeros[j].zeta;
                    cd acc =
                        ratio.pair(Slot(jf_product_derivative(P.l_gamma, z0, t)), Slot(phit.conj_coeffs()));
                    int qpos = 0;
                    for (size_t i = 0; i < zc.zeros.size(); ++i)
                        for (int l = 0; l < zc.zeros[i].mult; ++l, ++qpos)
                            if (xrow(qpos) != cd(0.0)) acc += std::conj(xrow(qpos)) * polys[i][l].jet(z0, t)[t];
                    lhs = std::conj(acc);
                }
                r = std::max(r, rel(lhs, rhs(pos)));
            }
        }
        res[idx] = r;
    });
    double out = 0.0;
    for (double r : res) out = std::max(out, r);
    return out;
}

cd regularized_second_kind_product(const FamilyPair& fp, int k, cd z) {
    const auto& P = fp.pert;
    const bool t21 = P.type == GUPerturbation::Type::T21;
    const ZeroSet zc = conj_zeros(P.gamma_zeros);
    const LaurentPoly lgbar = P.l_gamma.conj_coeffs();
    const auto polys = t21 ? mass_polys(lgbar, zc) : mass_polys(P.l_gamma, P.gamma_zeros);
    const LaurentPoly phit = fp.tilde.phi_poly(t21 ? 1 : 2, k);
    const Eigen::RowVectorXcd xrow = xi_compound_row(P, phit);
    const auto& zs = t21 ? zc : P.gamma_zeros;
    const cd z0 = t21 ? z : std::conj(z);
    cd acc = t21 ? fp.ratio_part->pair(Slot(phit), Slot(jf_product_derivative(lgbar, z0, 0)))
                 : fp.ratio_part->pair(Slot(jf_product_derivative(P.l_gamma, z0, 0)),
                                       Slot(phit.conj_coeffs()));
    int pos = 0;
    for (size_t i = 0; i < zs.zeros.size(); ++i)
        for (int l = 0; l < zs.zeros[i].mult; ++l, ++pos) {
            const cd w = t21 ? xrow(pos) : std::conj(xrow(pos));
            if (w != cd(0.0)) acc += w * polys[i][l].eval(z0);
        }
    return t21 ? acc : std::conj(acc);
}

// --------------------------------------------------- ChristoffelWorkspace

ChristoffelWorkspace::ChristoffelWorkspace(const FamilyPair& fp, int k_max, double delta_min,
                                           Corruption corruption, double tau_floor)
    : fp_(&fp),
      side_(fp.pert.type == GUPerturbation::Type::T21 ? 1 : 2),
      ng_(fp.pert.n_gamma()),
      nc_(fp.pert.n_c()),
      kmax_(std::min(k_max, fp.base.size() - 1)),
      delta_min_(delta_min),
      tau_floor_(tau_floor),
      corr_(corruption),
      gamma_conj_(conj_zeros(fp.pert.gamma_zeros)),
      c_zeros_(fp.pert.c_zeros()),
      lgbar_(fp.pert.l_gamma.conj_coeffs()),
      ljets_(mass_jet_matrix(fp.pert)) {
    cjets_.resize(kmax_ + 1);
    xirow_.resize(kmax_ + 1);
    pjets_.resize(kmax_ + 1);
    parallel_for(kmax_ + 1, [&](std::int64_t k) {
        const LaurentPoly phi = fp_->base.phi_poly(side_, int(k));
        Eigen::RowVectorXcd cj(gamma_conj_.total());
        int pos = 0;
        for (const auto& q : gamma_conj_.zeros) {
            TaylorJet j = fp_->base.second_kind_jet(side_, int(k), q.zeta, q.mult - 1, delta_min_);
            for (int t = 0; t < q.mult; ++t, ++pos) cj(pos) = j[t];
        }
        cjets_[k] = cj;
        xirow_[k] = xi_plain_row(fp_->pert, phi) * ljets_;
        Eigen::RowVectorXcd pj(c_zeros_.total());
        pos = 0;
        for (const auto& q : c_zeros_.zeros) {
            TaylorJet j = phi.jet(q.zeta, q.mult - 1);
            for (int t = 0; t < q.mult; ++t, ++pos) pj(pos) = j[t];
        }
        pjets_[k] = pj;
    });
}

Eigen::RowVectorXcd ChristoffelWorkspace::row(int k) const {
    if (k < 0 || k > kmax_) throw std::out_of_range("jet row index outside the precomputed range");
    Eigen::RowVectorXcd out(2 * ng_ + 2 * nc_);
    out << (cjets_[k] - xirow_[k]), pjets_[k];
    return out;
}

cd ChristoffelWorkspace::tau(int l) const {
    const int n = 2 * ng_ + 2 * nc_;
    Eigen::MatrixXcd m(n, n);
    for (int r = 0; r < n; ++r) m.row(r) = row(l - 2 * ng_ + r);
    if (corr_.row >= 0 && corr_.row < n && corr_.col >= 0 && corr_.col < n)
        m(corr_.row, corr_.col) += corr_.delta * std::max(1.0, std::abs(m(corr_.row, corr_.col)));
    return det_equilibrated(m);
}

namespace {
cd tau_checked(const ChristoffelWorkspace& ws, int l) {
    cd t = ws.tau(l);
    if (std::abs(t) < ws.tau_floor())
        throw formula_error("tau determinant vanishes to tolerance; formulas inapplicable at this index");
    return t;
}
}  // namespace

namespace {

double poly_magnitude(const LaurentPoly& p, double r) {
    double m = 0.0;
    for (int k = p.lo(); k <= p.hi(); ++k) m += std::abs(p.coeff(k)) * std::pow(r, double(k));
    return m;
}

}  // namespace

cd ChristoffelWorkspace::phi_primary(int l, cd z) const {
    // the determinant vanishes together with l_c(z); take a two-point limit
    if (std::abs(fp_->pert.l_c.eval(z)) < 1e-9 * poly_magnitude(fp_->pert.l_c, std::abs(z))) {
        const cd h = 1e-5 * (1.0 + std::abs(z));
        return 0.5 * (phi_primary_at(l, z + h) + phi_primary_at(l, z - h));
    }
    return phi_primary_at(l, z);
}

cd ChristoffelWorkspace::phi_primary_at(int l, cd z) const {
    if (l < 2 * std::max(ng_, nc_)) throw std::invalid_argument("index below twice the perturbation degree");
    const int n = 2 * ng_ + 2 * nc_;
    Eigen::MatrixXcd m(n + 1, n + 1);
    for (int r = 0; r <= n; ++r) {
        const int k = l - 2 * ng_ + r;
        m.row(r).head(n) = row(k);
        m(r, n) = fp_->base.phi(side_, k, z);
    }
    const cd cidx = fp_->pert.l_c.coeff((l % 2 == 0 ? 1 : -1) * nc_);
    return cidx / fp_->pert.l_c.eval(z) * det_equilibrated(m) / tau_checked(*this, l);
}

cd ChristoffelWorkspace::h_value(int l) const {
    if (l < 2 * std::max(ng_, nc_)) throw std::invalid_argument("index below twice the perturbation degree");
    const int sgn = (l % 2 == 0) ? 1 : -1;
    const cd cc = fp_->pert.l_c.coeff(sgn * nc_);
    const cd gc = fp_->pert.l_gamma.coeff(sgn * ng_);
    const cd hbase = fp_->base.h()(l - 2 * ng_);
    const cd ratio = tau(l + 1) / tau_checked(*this, l);
    if (side_ == 1) return cc / std::conj(gc) * hbase * ratio;
    return std::conj(cc) / gc * hbase * std::conj(ratio);
}

cd ChristoffelWorkspace::phi_dual(int l, cd z) const {
    if (std::abs(fp_->pert.l_gamma.eval(z)) < 1e-9 * poly_magnitude(fp_->pert.l_gamma, std::abs(z))) {
        const cd h = 1e-5 * (1.0 + std::abs(z));
        return 0.5 * (phi_dual_at(l, z + h) + phi_dual_at(l, z - h));
    }
    return phi_dual_at(l, z);
}

cd ChristoffelWorkspace::phi_dual_at(int l, cd z) const {
    if (l < 2 * std::max(ng_, nc_)) throw std::invalid_argument("index below twice the perturbation degree");
    const int n = 2 * ng_ + 2 * nc_;
    const int sgn = (l % 2 == 0) ? 1 : -1;
    const cd gc = fp_->pert.l_gamma.coeff(sgn * ng_);
    const cd hbase = fp_->base.h()(l - 2 * ng_);

    Eigen::MatrixXcd m(n, n);
    Eigen::RowVectorXcd kr = Eigen::RowVectorXcd::Zero(n);

    if (side_ == 1) {  // dual side: the second family
        for (int r = 0; r < n - 1; ++r) m.row(r) = row(l - 2 * ng_ + 1 + r);
        for (int k = 0; k <= l - 2 * ng_; ++k)
            kr += std::conj(fp_->base.phi(2, k, z)) / fp_->base.h()(k) * row(k);
        const cd lgz_conj = std::conj(fp_->pert.l_gamma.eval(z));
        int pos = 0;
        for (const auto& q : gamma_conj_.zeros) {
            TaylorJet dj = delta_L_jet_second(lgbar_, std::conj(z), q.zeta, q.mult - 1);
            for (int t = 0; t < q.mult; ++t, ++pos) kr(pos) += dj[t] / lgz_conj;
        }
        m.row(n - 1) = kr;
        const cd val = -(lgz_conj / std::conj(gc)) * hbase / tau_checked(*this, l) * det_equilibrated(m);
        return std::conj(val);
    }
    // side 2: dual is the first family
    for (int r = 0; r < n - 1; ++r) m.row(r) = row(l - 2 * ng_ + 1 + r).conjugate();
    for (int k = 0; k <= l - 2 * ng_; ++k)
        kr += row(k).conjugate() * (fp_->base.phi(1, k, z) / fp_->base.h()(k));
    const cd lgz = fp_->pert.l_gamma.eval(z);
    int pos = 0;
    for (const auto& q : fp_->pert.gamma_zeros.zeros) {
        TaylorJet dj = delta_L_jet_second(fp_->pert.l_gamma, z, q.zeta, q.mult - 1);
        for (int t = 0; t < q.mult; ++t, ++pos) kr(pos) += dj[t] / lgz;
    }
    m.row(n - 1) = kr;
    return -(lgz * hbase / gc) * det_equilibrated(m) / std::conj(tau_checked(*this, l));
}

// ---------------------------------------------------------------- run_report

std::vector<cd> sample_points(const Functional& u, const GUPerturbation& P, const RunOptions& opt) {
    std::vector<cd> obstacles;
    for (const auto& q : P.gamma_zeros.zeros) obstacles.push_back(q.zeta);
    for (const auto& q : P.c_zeros(opt.cluster_tol).zeros) obstacles.push_back(q.zeta);
    for (const auto& row : P.xi)
        for (const auto& xi : row)
            for (const auto& a : xi.atoms) obstacles.push_back(a.node);
    const size_t base = obstacles.size();
    for (size_t i = 0; i < base; ++i) obstacles.push_back(std::conj(obstacles[i]));

    const int per = std::max(1, opt.sample_count / int(opt.radii.size()));
    for (int attempt = 0; attempt < 64; ++attempt) {
        std::vector<cd> pts;
        const double offset = 0.37 + 0.617 * attempt;
        for (double r : opt.radii)
            for (int j = 0; j < per; ++j)
                pts.push_back(std::polar(r, 2.0 * std::numbers::pi * (j + offset) / per));
        bool ok = true;
        for (cd z : pts) {
            if (u.distance_to_support1(z) < opt.delta_min || u.distance_to_support2(z) < opt.delta_min ||
                u.distance_to_support1(std::conj(z)) < opt.delta_min ||
                u.distance_to_support2(std::conj(z)) < opt.delta_min)
                ok = false;
            for (cd o : obstacles)
                if (std::abs(z - o) < opt.delta_min || std::abs(std::conj(z) - o) < opt.delta_min) ok = false;
            if (!ok) break;
        }
        if (ok) return pts;
    }
    throw numeric_error("no admissible sample points on the configured circles");
}

double GUReport::max_residual() const {
    double m = std::max({structure.out_of_band, structure.extreme_bands, structure.coupling,
                         connection_laurent, cauchy.full, cauchy.truncated, cauchy.plain, kernels.plain,
                         kernels.mixed_regular, kernels.mixed_cauchy, jet_identity});
    for (const auto& r : rows) m = std::max({m, r.phi_primary, r.phi_dual, r.h});
    return m;
}

GUReport run_report(const Functional& u, const GUPerturbation& P, const RunOptions& opt) {
    const int ng = P.n_gamma(), nc = P.n_c();
    const int l_min = 2 * std::max(ng, nc);
    if (opt.l_max < l_min + 2) throw std::invalid_argument("l_max must be at least twice the degree plus two");
    const int work = opt.l_max + 4 * std::max(ng, nc) + 6;
    FamilyPair fp = direct_families(u, P, work, opt.pivot_tol, opt.delta_min);
    Connectors om = connectors(fp);
    const std::vector<cd> samples = sample_points(u, P, opt);

    GUReport rep;
    rep.structure = connector_structure(fp, om, opt.l_max);
    rep.connection_laurent = connection_residual_laurent(fp, om, samples, opt.l_max, opt.swap_connectors);
    rep.cauchy = connection_residual_cauchy(fp, om, samples, opt.l_max, opt.delta_min);
    for (int l = l_min + 2; l <= std::min(opt.l_max, l_min + 6); ++l) {
        auto kr = connection_residual_kernels(fp, om, l, samples, opt.delta_min);
        rep.kernels.plain = std::max(rep.kernels.plain, kr.plain);
        rep.kernels.mixed_regular = std::max(rep.kernels.mixed_regular, kr.mixed_regular);
        rep.kernels.mixed_cauchy = std::max(rep.kernels.mixed_cauchy, kr.mixed_cauchy);
    }
    rep.jet_identity = jet_identity_residual(fp, 0, opt.l_max, opt.delta_min);

    ChristoffelWorkspace ws(fp, opt.l_max + 2 * nc + 1, opt.delta_min, opt.corruption, opt.tau_floor);
    const int dual_side = ws.primary_side() == 1 ? 2 : 1;
    rep.rows.resize(opt.l_max - l_min + 1);
    parallel_for(std::int64_t(rep.rows.size()), [&](std::int64_t idx) {
        const int l = l_min + int(idx);
        ReportRow r;
        r.l = l;
        r.tau = ws.tau(l);
        double top_p = 0.0, top_d = 0.0, scale_p = 0.0, scale_d = 0.0;
        for (cd z : samples) {
            const cd op = fp.tilde.phi(ws.primary_side(), l, z);
            const cd od = fp.tilde.phi(dual_side, l, z);
            top_p = std::max(top_p, std::abs(ws.phi_primary(l, z) - op));
            top_d = std::max(top_d, std::abs(ws.phi_dual(l, z) - od));
            scale_p = std::max(scale_p, std::abs(op));
            scale_d = std::max(scale_d, std::abs(od));
        }
        r.phi_primary = top_p / std::max(scale_p, 1e-300);
        r.phi_dual = top_d / std::max(scale_d, 1e-300);
        r.h = std::abs(ws.h_value(l) - fp.tilde.h()(l)) / std::abs(fp.tilde.h()(l));
        rep.rows[idx] = r;
    });
    return rep;
}

}  // namespace cmvlab
