#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <vector>

#include "cmvlab/laurent.hpp"

namespace cmvlab {

// Quadrature policy shared by moments and Cauchy-kernel pairings: composite
// trapezoid on T with node doubling until two estimates agree.
struct QuadraturePolicy {
    int min_nodes = 64;
    int max_nodes = 1 << 16;
    double tol = 1e-12;
};

struct quasidefinite_error : std::runtime_error {
    int failing_minor;
    explicit quasidefinite_error(int k)
        : std::runtime_error("Gram truncation fails quasidefiniteness at leading minor " + std::to_string(k + 1)),
          failing_minor(k) {}
};

// CMV ordering 1, z^-1, z, z^-2, z^2, ...
int chi_exponent(int index);
int chi_index(int exponent);
LaurentPoly chi_poly(int index);

// Bivariate point-derivative atom. Acting on f (x) conj(g) it contributes
//   weight * f^(z1_order)(z1_node)/z1_order! * conj(g^(z2_order)(z2_node))/z2_order!.
struct MassAtom {
    cd z1_node;
    int z1_order = 0;
    cd z2_node;
    int z2_order = 0;
    cd weight;
};

// One integral term of the form
//   <f,g> += /int_T ((a1 f / b1))^(n)(w) * conj((c2 g / d2)^(m)(w)) * num/den(w) dm(w)
// with dm the normalized arclength. Plain unit-circle weights are n = m = 0
// with trivial slot factors; Sobolev terms carry derivative orders; the
// rational slot factors appear when a functional is multiplied by a
// polynomial over a conjugated polynomial.
struct WeightTerm {
    int n = 0, m = 0;
    LaurentPoly num = LaurentPoly::one();
    LaurentPoly den = LaurentPoly::one();
    LaurentPoly a1 = LaurentPoly::one();
    LaurentPoly b1 = LaurentPoly::one();
    LaurentPoly c2 = LaurentPoly::one();
    LaurentPoly d2 = LaurentPoly::one();

    bool plain_laurent() const;  // exact coefficient-extraction path applies
};

// One slot of the bilinear pairing: either a Laurent polynomial (enables
// exact paths) or a general function with analytic jets.
struct Slot {
    std::optional<LaurentPoly> poly;
    JetFun fun;
    Slot(const LaurentPoly& p) : poly(p), fun(p.jetfun()) {}
    Slot(JetFun f) : fun(std::move(f)) {}
};

struct GramTruncation {
    int size = 0;
    Eigen::MatrixXcd entries;
    bool quasidefinite = false;
    int failing_minor = -1;  // first failing leading minor, -1 when none
};

// Finite-parameter bivariate sesquilinear form: unit-circle weight terms
// (Laurent or rational, optionally Sobolev derivative orders) plus bivariate
// point-derivative masses. Immutable once built; safe to share across
// threads after warm_tables / first gram call.
class Functional {
  public:
    static Functional lebesgue();

    void add_weight_laurent(const LaurentPoly& w);
    void add_weight_rational(const LaurentPoly& num, const LaurentPoly& den);
    void add_sobolev_weight(int n, int m, const LaurentPoly& num, const LaurentPoly& den);
    // Discrete Sobolev: sum_j c_j f^(n)(nodes[j]) conj(g^(m)(nodes[j])).
    void add_sobolev_atoms(int n, int m, const std::vector<std::pair<cd, cd>>& node_weight);
    void add_mass(const MassAtom& a);
    void add_term(const WeightTerm& t);

    const std::vector<WeightTerm>& weight_terms() const { return terms_; }
    const std::vector<MassAtom>& masses() const { return masses_; }
    bool has_circle_part() const { return !terms_.empty(); }

    // <z1^p, z2^q>_u, exact for Laurent weights and masses, spectrally
    // accurate trapezoid quadrature otherwise.
    cd moment(int p, int q) const;

    // Bilinear pairing Phi(A, B) = <u, A(z1) (x) B(zbar_2)>. The sesquilinear
    // form is <f, g>_u = Phi(f, conj_coeffs(g)); second kind functions pair a
    // polynomial slot against a Cauchy kernel slot.
    cd pair(const Slot& A, const Slot& B) const;
    cd sesq(const LaurentPoly& f, const LaurentPoly& g) const;

    GramTruncation gram(int l, double pivot_rel_tol = 1e-10) const;
    GramTruncation gram_serial(int l, double pivot_rel_tol = 1e-10) const;  // reference path

    // Precomputes the Fourier tables every moment with |p|,|q| <= bound
    // needs; called automatically, exposed so parallel regions can warm the
    // cache up front.
    void warm_tables(int exponent_bound) const;

    double distance_to_support1(cd z) const;
    double distance_to_support2(cd z) const;

    const QuadraturePolicy& quadrature() const { return quad_; }
    void set_quadrature(const QuadraturePolicy& q);

    // Nonzero minimum distance of rational-weight denominator zeros from T.
    double denominator_margin() const;

  private:
    std::vector<WeightTerm> terms_;
    std::vector<MassAtom> masses_;
    QuadraturePolicy quad_;
    struct Tables;
    std::shared_ptr<Tables> tables_;  // lazy per-term Fourier coefficients
    void invalidate();
    cd fourier(size_t term, int a, int b, int s) const;
};



// Truncation of the CMV shift: Upsilon * chi(z) = z * chi(z).
Eigen::MatrixXcd upsilon(int l);

// L(Upsilon) evaluated at size l + pad and cropped to l x l, so every kept
// entry agrees with the semi-infinite operator. pad < 0 picks a safe default.
Eigen::MatrixXcd l_of_upsilon(const LaurentPoly& L, int l, int pad = -1);

}  // namespace cmvlab
