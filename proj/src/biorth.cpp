#include "cmvlab/biorth.hpp"

#include <cmath>

namespace cmvlab {

JetFun cauchy_slot(cd a, int power, cd scale) {
    return [a, power, scale](cd z0, int order) {
        TaylorJet j(order);
        const cd base = a - z0;
        for (int t = 0; t <= order; ++t) j[t] = scale * gen_binom(power + t - 1, t) * pow_int(base, -power - t);
        return j;
    };
}

BiorthFamily factorize(const GramTruncation& g, std::shared_ptr<const Functional> u, double pivot_rel_tol) {
    const int l = g.size;
    Eigen::MatrixXcd m = g.entries;
    double scale = 0.0;
    for (int i = 0; i < l; ++i) scale = std::max(scale, m.row(i).norm());
    if (scale == 0.0) throw quasidefinite_error(0);

    Eigen::MatrixXcd lower = Eigen::MatrixXcd::Identity(l, l);
    Eigen::MatrixXcd upper = Eigen::MatrixXcd::Identity(l, l);
    Eigen::VectorXcd d(l);
    for (int k = 0; k < l; ++k) {
        d(k) = m(k, k);
        if (std::abs(d(k)) <= pivot_rel_tol * scale) throw quasidefinite_error(k);
        for (int i = k + 1; i < l; ++i) lower(i, k) = m(i, k) / d(k);
        for (int j = k + 1; j < l; ++j) upper(k, j) = m(k, j) / d(k);
        for (int i = k + 1; i < l; ++i)
            for (int j = k + 1; j < l; ++j) m(i, j) -= lower(i, k) * d(k) * upper(k, j);
    }

    BiorthFamily f;
    f.size_ = l;
    f.gram_ = g.entries;
    f.h_ = d;
    f.u_ = std::move(u);
    f.s1_inv_ = lower;            // G = S1^-1 H S2^-dagger
    f.s2_inv_ = upper.adjoint();  // lower unitriangular as well
    const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(l, l);
    f.s1_ = lower.triangularView<Eigen::UnitLower>().solve(id);
    f.s2_ = f.s2_inv_.triangularView<Eigen::UnitLower>().solve(id);
    return f;
}

BiorthFamily factorize(const Functional& u, int l, double pivot_rel_tol) {
    auto shared = std::make_shared<Functional>(u);
    return factorize(shared->gram(l, pivot_rel_tol), shared, pivot_rel_tol);
}

LaurentPoly BiorthFamily::phi_poly(int a, int k) const {
    if (k < 0 || k >= size_) throw std::out_of_range("family index out of range");
    const Eigen::MatrixXcd& sa = s(a);
    LaurentPoly p;
    for (int j = 0; j <= k; ++j)
        if (sa(k, j) != cd(0.0)) p = p + LaurentPoly::monomial(chi_exponent(j), sa(k, j));
    return p;
}

cd BiorthFamily::phi(int a, int k, cd z) const { return phi_poly(a, k).eval(z); }

TaylorJet BiorthFamily::phi_jet(int a, int k, cd z, int order) const { return phi_poly(a, k).jet(z, order); }

cd BiorthFamily::second_kind(int a, int k, cd z, double delta_min) const {
    return second_kind_jet(a, k, z, 0, delta_min)[0];
}

TaylorJet BiorthFamily::second_kind_jet(int a, int k, cd z, int order, double delta_min) const {
    const double dist =
        a == 1 ? u_->distance_to_support2(std::conj(z)) : u_->distance_to_support1(std::conj(z));
    if (dist < delta_min) throw std::domain_error("second kind function evaluated too close to the support");
    TaylorJet out(order);
    if (a == 1) {
        const Slot left(phi_poly(1, k));
        for (int t = 0; t <= order; ++t) {
            const cd sign = (t % 2 == 0) ? cd(1.0) : cd(-1.0);
            out[t] = u_->pair(left, Slot(cauchy_slot(z, t + 1, sign)));
        }
    } else {
        const Slot right(phi_poly(2, k).conj_coeffs());
        for (int t = 0; t <= order; ++t) {
            const cd sign = (t % 2 == 0) ? cd(1.0) : cd(-1.0);
            out[t] = std::conj(u_->pair(Slot(cauchy_slot(std::conj(z), t + 1, sign)), right));
        }
    }
    return out;
}

cd BiorthFamily::cd_kernel(int l, cd z1, cd z2) const {
    if (l > size_) throw std::out_of_range("kernel order exceeds family size");
    cd s = 0.0;
    for (int k = 0; k < l; ++k) s += std::conj(phi(2, k, z1)) / h_(k) * phi(1, k, z2);
    return s;
}

TaylorJet BiorthFamily::cd_kernel_jet1(int l, cd z1, cd z2, int order) const {
    TaylorJet out(order);
    for (int k = 0; k < l; ++k) {
        TaylorJet j2 = phi_jet(2, k, z1, order);
        const cd w = phi(1, k, z2) / h_(k);
        for (int t = 0; t <= order; ++t) out[t] += std::conj(j2[t]) * w;
    }
    return out;
}

TaylorJet BiorthFamily::cd_kernel_jet2(int l, cd z1, cd z2, int order) const {
    TaylorJet out(order);
    for (int k = 0; k < l; ++k) {
        const cd w = std::conj(phi(2, k, z1)) / h_(k);
        TaylorJet j1 = phi_jet(1, k, z2, order);
        for (int t = 0; t <= order; ++t) out[t] += w * j1[t];
    }
    return out;
}

cd BiorthFamily::mixed_kernel_c2(int l, cd x1, cd x2, double delta_min) const {
    cd s = 0.0;
    for (int k = 0; k < l; ++k) s += std::conj(second_kind(2, k, x1, delta_min)) / h_(k) * phi(1, k, x2);
    return s;
}

cd BiorthFamily::mixed_kernel_c1(int l, cd x1, cd x2, double delta_min) const {
    cd s = 0.0;
    for (int k = 0; k < l; ++k) s += std::conj(phi(2, k, x1)) / h_(k) * second_kind(1, k, x2, delta_min);
    return s;
}

}  // namespace cmvlab
