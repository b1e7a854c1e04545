#pragma once

#include <memory>

#include "cmvlab/functional.hpp"

namespace cmvlab {

// Slot function scale/(a - zeta)^power with analytic jets; the building
// block for Cauchy pairings and their derivatives.
JetFun cauchy_slot(cd a, int power = 1, cd scale = cd(1.0));

// Biorthogonal family from the pivot-free LDU of a Gram truncation:
// G = S1^-1 H S2^-dagger with S1, S2 lower unitriangular and H diagonal.
// phi_a = S_a chi; <phi_{1,n}, phi_{2,m}>_u = delta_nm H_n.
class BiorthFamily {
  public:
    int size() const { return size_; }
    const Eigen::MatrixXcd& s1() const { return s1_; }
    const Eigen::MatrixXcd& s2() const { return s2_; }
    const Eigen::MatrixXcd& s1_inv() const { return s1_inv_; }
    const Eigen::MatrixXcd& s2_inv() const { return s2_inv_; }
    const Eigen::VectorXcd& h() const { return h_; }
    const Eigen::MatrixXcd& gram() const { return gram_; }
    const Functional& functional() const { return *u_; }
    std::shared_ptr<const Functional> functional_ptr() const { return u_; }

    const Eigen::MatrixXcd& s(int a) const { return a == 1 ? s1_ : s2_; }
    LaurentPoly phi_poly(int a, int k) const;
    cd phi(int a, int k, cd z) const;
    TaylorJet phi_jet(int a, int k, cd z, int order) const;

    // Second kind functions C_{1,k}(z) = <phi_{1,k}(z1), 1/(zbar - z2)>_u and
    // C_{2,k}(z) = conj(<1/(zbar - z1), phi_{2,k}(z2)>_u), both holomorphic in
    // z off the conjugated support; jets are scaled derivatives in z.
    cd second_kind(int a, int k, cd z, double delta_min = 1e-3) const;
    TaylorJet second_kind_jet(int a, int k, cd z, int order, double delta_min = 1e-3) const;

    // K^[l](zbar_1, z2) = sum_{k<l} conj(phi_{2,k}(z1)) H_k^-1 phi_{1,k}(z2).
    cd cd_kernel(int l, cd z1, cd z2) const;
    // Jet of zeta -> K^[l](zeta, z2) at zeta = conj(z1) (anti-holomorphic
    // slot via conjugate-coefficient evaluation), and of z2 -> K^[l].
    TaylorJet cd_kernel_jet1(int l, cd z1, cd z2, int order) const;
    TaylorJet cd_kernel_jet2(int l, cd z1, cd z2, int order) const;

    // K_{C2}^[l](xbar_1, x2) = sum conj(C_{2,k}(x1)) H_k^-1 phi_{1,k}(x2),
    // K_{C1}^[l](xbar_1, x2) = sum conj(phi_{2,k}(x1)) H_k^-1 C_{1,k}(x2).
    cd mixed_kernel_c2(int l, cd x1, cd x2, double delta_min = 1e-3) const;
    cd mixed_kernel_c1(int l, cd x1, cd x2, double delta_min = 1e-3) const;

    friend BiorthFamily factorize(const GramTruncation& g, std::shared_ptr<const Functional> u,
                                  double pivot_rel_tol);

  private:
    int size_ = 0;
    Eigen::MatrixXcd s1_, s2_, s1_inv_, s2_inv_, gram_;
    Eigen::VectorXcd h_;
    std::shared_ptr<const Functional> u_;
};

BiorthFamily factorize(const GramTruncation& g, std::shared_ptr<const Functional> u,
                       double pivot_rel_tol = 1e-10);
BiorthFamily factorize(const Functional& u, int l, double pivot_rel_tol = 1e-10);

}  // namespace cmvlab
