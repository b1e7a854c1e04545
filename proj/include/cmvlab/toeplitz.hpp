#pragma once

#include "cmvlab/gu_transform.hpp"

namespace cmvlab {

// Coefficientwise self-reciprocality test with the factor diagnosis: zeros
// off T pair as (alpha, 1/conj(alpha)), zeros on T carry even multiplicity,
// and the leading coefficient's argument balances the zero arguments.
struct SelfReciprocalCheck {
    bool verdict = false;
    double coefficient_residual = 0.0;          // max |L_k - conj(L_{-k})|
    std::vector<std::pair<cd, cd>> paired_off_circle;
    std::vector<std::pair<cd, int>> on_circle;  // zero and multiplicity
    bool circle_multiplicities_even = true;
    double argument_residual = 0.0;             // arg(lead) + sum of zero arguments, mod pi
};
SelfReciprocalCheck is_self_reciprocal(const LaurentPoly& L, double tol = 1e-12);

// Normalized product of pairwise zero differences; zero iff a common zero.
double resultant_magnitude(const LaurentPoly& a, const LaurentPoly& b, double cluster_tol = 1e-7);

// True iff the two transformations act on identical functionals:
// the reciprocal of one side's l_c equals the other's, and likewise for
// l_gamma. Non-coprime polynomial pairs are rejected up front.
bool coincidence_condition(const GUPerturbation& p12, const GUPerturbation& p21, double tol = 1e-12,
                           double coprime_tol = 1e-8);

// Composition coefficients of the substitution z -> 1/z at zeta:
// entry (s, j) is the h^s-coefficient of (1/(zeta+h) - 1/zeta)^j, lower
// triangular with (1,1) = -zeta^-2.
Eigen::MatrixXcd composition_matrix(cd zeta, int m);

// Masses supported on the diagonal for the coincidence case. Zero order:
// one scalar per zero of l_gamma. General diagonal: per zero, the vector of
// derivative-order weights, transformed through the composition matrix.
struct DiagonalMassSpec {
    std::vector<cd> zero_order;               // used when full is empty
    std::vector<std::vector<cd>> full;        // per zero: (order-0 .. order-(m-1)) weights
};

struct DiagonalMasses {
    GUPerturbation p12, p21;    // the same functional realized by both types
    Eigen::MatrixXcd xi_block;  // the big coupling matrix over the jet layout
    Eigen::MatrixXcd c_sparse;  // xi_block times the mass jet matrix of p21
};
DiagonalMasses build_diagonal_masses(const LaurentPoly& l_gamma, const LaurentPoly& l_c,
                                     const DiagonalMassSpec& spec, double cluster_tol = 1e-7);

// Cross-check of the two equivalent determinantal routes on the coincidence
// configuration: the jet-bordered expressions from the (2,1) data against
// the kernel-bordered ones from the (1,2) data, both against the oracle.
struct DualFormulaResult {
    double phi1_routes = 0.0;   // route-vs-route, first family
    double phi2_routes = 0.0;
    double phi1_oracle = 0.0;   // worst of both routes against the oracle
    double phi2_oracle = 0.0;
    double h_routes = 0.0;
    double h_oracle = 0.0;
    double gram_mismatch = 0.0;  // entrywise disagreement of the two perturbed Grams
    bool h_real = true;      // real reduction of the perturbed norms
    bool h_positive = true;  // holds when the ratio is positive and masses keep
                             // the form definite (always in the mass-free case;
                             // off-circle masses break it once their |zeta|^l
                             // growth dominates the weight)
};
DualFormulaResult dual_formula_residual(const Functional& u, const DiagonalMasses& dm, int l_lo, int l_hi,
                                        const RunOptions& opt);

}  // namespace cmvlab
