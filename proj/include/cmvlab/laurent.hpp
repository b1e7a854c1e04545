#pragma once

#include <complex>
#include <functional>
#include <stdexcept>
#include <vector>

namespace cmvlab {

using cd = std::complex<double>;

struct numeric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct capability_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Truncated Taylor expansion at a point: entry j holds f^(j)(z0)/j!.
// This scaled-derivative convention is the one spectral jets use, so a
// TaylorJet prefix is directly a jet block.
class TaylorJet {
  public:
    TaylorJet() = default;
    explicit TaylorJet(int order) : a_(order + 1, cd(0.0)) {}
    static TaylorJet constant(cd v, int order);
    static TaylorJet variable(cd value, int order);  // the identity map z

    int order() const { return static_cast<int>(a_.size()) - 1; }
    cd& operator[](int j) { return a_[j]; }
    cd operator[](int j) const { return a_[j]; }
    cd value() const { return a_[0]; }
    cd derivative(int j) const;  // unscaled f^(j)

    TaylorJet& operator+=(const TaylorJet& o);
    TaylorJet& operator-=(const TaylorJet& o);
    TaylorJet& operator*=(cd s);
    friend TaylorJet operator+(TaylorJet a, const TaylorJet& b) { return a += b; }
    friend TaylorJet operator-(TaylorJet a, const TaylorJet& b) { return a -= b; }
    friend TaylorJet operator*(TaylorJet a, cd s) { return a *= s; }
    friend TaylorJet operator*(cd s, TaylorJet a) { return a *= s; }
    friend TaylorJet operator*(const TaylorJet& a, const TaylorJet& b);
    friend TaylorJet operator/(const TaylorJet& a, const TaylorJet& b);

  private:
    std::vector<cd> a_;
};

// A function known together with its derivatives at a point. Library objects
// (polynomials, Cauchy kernels, kernels built from them) supply analytic
// jets; arbitrary callables without a derivative rule are not accepted.
using JetFun = std::function<TaylorJet(cd, int)>;

// Wraps a plain callable as a jet source that can only serve order zero;
// any derivative request raises capability_error.
JetFun value_only(std::function<cd(cd)> f);

// Complex Laurent polynomial stored densely over its tight exponent window
// [lo, hi]; both ends may be negative or positive. The zero polynomial has an
// empty window. Coefficients at the window ends are nonzero.
class LaurentPoly {
  public:
    LaurentPoly() = default;  // zero polynomial
    // Coefficients for exponents -n_minus, -n_minus+1, ... in order.
    LaurentPoly(int n_minus, std::vector<cd> coeffs);
    static LaurentPoly constant(cd a);
    static LaurentPoly monomial(int k, cd a = cd(1.0));
    static LaurentPoly one() { return constant(cd(1.0)); }

    bool is_zero() const { return c_.empty(); }
    int lo() const { return lo_; }
    int hi() const { return lo_ + static_cast<int>(c_.size()) - 1; }
    int n_plus() const { return is_zero() ? 0 : hi(); }
    int n_minus() const { return is_zero() ? 0 : -lo(); }
    int window() const { return is_zero() ? 0 : hi() - lo() + 1; }
    cd coeff(int k) const;
    cd leading() const { return is_zero() ? cd(0.0) : c_.back(); }
    cd trailing() const { return is_zero() ? cd(0.0) : c_.front(); }

    cd eval(cd z) const;                 // domain error at z = 0
    cd derivative_at(cd z, int t) const; // unscaled t-th derivative
    TaylorJet jet(cd z0, int order) const;
    JetFun jetfun() const;

    LaurentPoly derivative() const;
    LaurentPoly reciprocal() const;      // coefficient k -> conj(coefficient -k)
    LaurentPoly conj_coeffs() const;
    LaurentPoly shifted(int s) const;    // multiply by z^s
    LaurentPoly operator-() const;

    friend LaurentPoly operator+(const LaurentPoly& a, const LaurentPoly& b);
    friend LaurentPoly operator-(const LaurentPoly& a, const LaurentPoly& b);
    friend LaurentPoly operator*(const LaurentPoly& a, const LaurentPoly& b);
    friend LaurentPoly operator*(cd s, const LaurentPoly& a);
    bool operator==(const LaurentPoly& o) const = default;

  private:
    int lo_ = 0;
    std::vector<cd> c_;
    void trim();
};

LaurentPoly mul(const LaurentPoly& a, const LaurentPoly& b);

// true iff the window is symmetric, [-N, N] with nonzero ends and N >= 1,
// i.e. L(z) = z^-N P(z) with deg P = 2N and P(0) != 0.
struct PreparedInfo {
    bool prepared = false;
    int n = 0;
};
PreparedInfo is_prepared(const LaurentPoly& L);

// z^-N P(z) for an even-degree polynomial P (coefficients low to high) with
// nonzero constant term.
LaurentPoly fejer_riesz_lift(const std::vector<cd>& poly_coeffs);

// Zeros with multiplicities of z^{-lo} L(z); none at the origin.
struct ZeroSet {
    struct Zero {
        cd zeta;
        int mult = 1;
    };
    std::vector<Zero> zeros;
    int total() const;
    int block_offset(int i) const;  // start of zero i's jet block
};

ZeroSet roots_with_multiplicity(const LaurentPoly& L, double cluster_tol = 1e-7);

// L with the factor (z - zeta_i)^{m_i} removed, keeping the leading
// coefficient and the z^{lo} prefactor.
LaurentPoly deflate(const LaurentPoly& L, const ZeroSet& Z, int i);

// Row vector [f(z_1), f'(z_1), ..., f^(m1-1)(z_1)/(m1-1)!, ...] blocked by
// zero, every derivative order k scaled by 1/k!.
using SpectralJet = std::vector<cd>;
SpectralJet spectral_jet(const JetFun& f, const ZeroSet& Z);

// Complete homogeneous symmetric polynomial in two variables and its dual.
cd h_sym(int j, cd z1, cd z2);
cd h_sym_dual(int j, cd z1, cd z2);

// Divided difference (L(z1)-L(z2))/(z1-z2); on a near-confluent pair the
// h_j expansion replaces the quotient to avoid catastrophic cancellation.
cd delta_L(const LaurentPoly& L, cd z1, cd z2);

// Jet in w of w -> (L(c) - L(w))/(c - w) at w0 (requires c != w0).
TaylorJet delta_L_jet_second(const LaurentPoly& L, cd c, cd w0, int order);

// Generalized binomial coefficient k(k-1)...(k-j+1)/j! for integer k (of
// either sign); the j-th scaled derivative of z^k picks up this factor.
double gen_binom(int k, int j);

// z^k for integer k by repeated squaring; exact where the arithmetic is.
cd pow_int(cd z, int k);

}  // namespace cmvlab
