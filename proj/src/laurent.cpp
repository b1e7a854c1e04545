#include "cmvlab/laurent.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

namespace cmvlab {

// ---------------------------------------------------------------- TaylorJet

TaylorJet TaylorJet::constant(cd v, int order) {
    TaylorJet j(order);
    j.a_[0] = v;
    return j;
}

TaylorJet TaylorJet::variable(cd value, int order) {
    TaylorJet j(order);
    j.a_[0] = value;
    if (order >= 1) j.a_[1] = cd(1.0);
    return j;
}

cd TaylorJet::derivative(int j) const {
    double f = 1.0;
    for (int t = 2; t <= j; ++t) f *= t;
    return a_[j] * f;
}

TaylorJet& TaylorJet::operator+=(const TaylorJet& o) {
    for (int j = 0; j <= order() && j <= o.order(); ++j) a_[j] += o.a_[j];
    return *this;
}

TaylorJet& TaylorJet::operator-=(const TaylorJet& o) {
    for (int j = 0; j <= order() && j <= o.order(); ++j) a_[j] -= o.a_[j];
    return *this;
}

TaylorJet& TaylorJet::operator*=(cd s) {
    for (auto& v : a_) v *= s;
    return *this;
}

TaylorJet operator*(const TaylorJet& a, const TaylorJet& b) {
    const int n = std::min(a.order(), b.order());
    TaylorJet r(n);
    for (int j = 0; j <= n; ++j) {
        cd s = 0.0;
        for (int t = 0; t <= j; ++t) s += a.a_[t] * b.a_[j - t];
        r.a_[j] = s;
    }
    return r;
}

TaylorJet operator/(const TaylorJet& a, const TaylorJet& b) {
    const int n = std::min(a.order(), b.order());
    if (b.a_[0] == cd(0.0)) throw numeric_error("taylor division by a jet vanishing at the base point");
    TaylorJet r(n);
    for (int j = 0; j <= n; ++j) {
        cd s = a.a_[j];
        for (int t = 0; t < j; ++t) s -= r.a_[t] * b.a_[j - t];
        r.a_[j] = s / b.a_[0];
    }
    return r;
}

// -------------------------------------------------------------- LaurentPoly

LaurentPoly::LaurentPoly(int n_minus, std::vector<cd> coeffs) : lo_(-n_minus), c_(std::move(coeffs)) {
    trim();
}

void LaurentPoly::trim() {
    size_t b = 0, e = c_.size();
    while (e > b && c_[e - 1] == cd(0.0)) --e;
    while (b < e && c_[b] == cd(0.0)) ++b;
    if (b == e) {
        c_.clear();
        lo_ = 0;
        return;
    }
    lo_ += static_cast<int>(b);
    c_ = std::vector<cd>(c_.begin() + b, c_.begin() + e);
}

LaurentPoly LaurentPoly::constant(cd a) {
    LaurentPoly p;
    if (a != cd(0.0)) {
        p.lo_ = 0;
        p.c_ = {a};
    }
    return p;
}

LaurentPoly LaurentPoly::monomial(int k, cd a) {
    LaurentPoly p;
    if (a != cd(0.0)) {
        p.lo_ = k;
        p.c_ = {a};
    }
    return p;
}

cd LaurentPoly::coeff(int k) const {
    if (is_zero() || k < lo() || k > hi()) return cd(0.0);
    return c_[k - lo_];
}

cd LaurentPoly::eval(cd z) const {
    if (z == cd(0.0)) throw std::domain_error("Laurent polynomial evaluation at the origin");
    if (is_zero()) return cd(0.0);
    // Horner over the window, then shift by z^lo.
    cd acc = 0.0;
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * z + *it;
    return acc * pow_int(z, lo_);
}

double gen_binom(int k, int j) {
    double r = 1.0;
    for (int t = 0; t < j; ++t) r *= double(k - t) / double(t + 1);
    return r;
}

cd pow_int(cd z, int k) {
    if (k == 0) return cd(1.0);
    bool inv = k < 0;
    unsigned e = inv ? unsigned(-(long long)k) : unsigned(k);
    cd base = z, acc = cd(1.0);
    while (e) {
        if (e & 1u) acc *= base;
        base *= base;
        e >>= 1u;
    }
    return inv ? cd(1.0) / acc : acc;
}

TaylorJet LaurentPoly::jet(cd z0, int order) const {
    if (z0 == cd(0.0)) throw std::domain_error("Laurent polynomial jet at the origin");
    TaylorJet out(order);
    if (is_zero()) return out;
    for (int j = 0; j <= order; ++j) {
        cd s = 0.0;
        for (int k = lo(); k <= hi(); ++k) {
            cd ck = c_[k - lo_];
            if (ck == cd(0.0)) continue;
            s += ck * gen_binom(k, j) * pow_int(z0, k - j);
        }
        out[j] = s;
    }
    return out;
}

cd LaurentPoly::derivative_at(cd z, int t) const {
    double f = 1.0;
    for (int j = 2; j <= t; ++j) f *= j;
    return jet(z, t)[t] * f;
}

JetFun LaurentPoly::jetfun() const {
    LaurentPoly copy = *this;
    return [copy](cd z0, int order) { return copy.jet(z0, order); };
}

LaurentPoly LaurentPoly::derivative() const {
    if (is_zero()) return {};
    std::vector<cd> d(c_.size());
    for (size_t i = 0; i < c_.size(); ++i) d[i] = c_[i] * cd(double(lo_ + int(i)));
    LaurentPoly p;
    p.lo_ = lo_ - 1;
    p.c_ = std::move(d);
    p.trim();
    return p;
}

LaurentPoly LaurentPoly::reciprocal() const {
    if (is_zero()) return {};
    LaurentPoly p;
    p.lo_ = -hi();
    p.c_.resize(c_.size());
    for (size_t i = 0; i < c_.size(); ++i) p.c_[c_.size() - 1 - i] = std::conj(c_[i]);
    return p;
}

LaurentPoly LaurentPoly::conj_coeffs() const {
    LaurentPoly p = *this;
    for (auto& v : p.c_) v = std::conj(v);
    return p;
}

LaurentPoly LaurentPoly::shifted(int s) const {
    LaurentPoly p = *this;
    if (!p.is_zero()) p.lo_ += s;
    return p;
}

LaurentPoly LaurentPoly::operator-() const {
    LaurentPoly p = *this;
    for (auto& v : p.c_) v = -v;
    return p;
}

LaurentPoly operator+(const LaurentPoly& a, const LaurentPoly& b) {
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;
    int lo = std::min(a.lo(), b.lo()), hi = std::max(a.hi(), b.hi());
    std::vector<cd> c(hi - lo + 1, cd(0.0));
    for (int k = a.lo(); k <= a.hi(); ++k) c[k - lo] += a.coeff(k);
    for (int k = b.lo(); k <= b.hi(); ++k) c[k - lo] += b.coeff(k);
    LaurentPoly p;
    p.lo_ = lo;
    p.c_ = std::move(c);
    p.trim();
    return p;
}

LaurentPoly operator-(const LaurentPoly& a, const LaurentPoly& b) { return a + (-b); }

LaurentPoly operator*(const LaurentPoly& a, const LaurentPoly& b) {
    if (a.is_zero() || b.is_zero()) return {};
    std::vector<cd> c(a.window() + b.window() - 1, cd(0.0));
    for (int i = 0; i < a.window(); ++i)
        for (int j = 0; j < b.window(); ++j) c[i + j] += a.c_[i] * b.c_[j];
    LaurentPoly p;
    p.lo_ = a.lo() + b.lo();
    p.c_ = std::move(c);
    p.trim();
    return p;
}

LaurentPoly operator*(cd s, const LaurentPoly& a) {
    LaurentPoly p = a;
    for (auto& v : p.c_) v *= s;
    p.trim();
    return p;
}

LaurentPoly mul(const LaurentPoly& a, const LaurentPoly& b) { return a * b; }

PreparedInfo is_prepared(const LaurentPoly& L) {
    PreparedInfo info;
    if (L.is_zero()) return info;
    if (L.hi() >= 1 && L.lo() == -L.hi()) {
        info.prepared = true;
        info.n = L.hi();
    }
    return info;
}

LaurentPoly fejer_riesz_lift(const std::vector<cd>& poly_coeffs) {
    std::vector<cd> p = poly_coeffs;
    while (!p.empty() && p.back() == cd(0.0)) p.pop_back();
    if (p.empty() || p.size() % 2 == 0)
        throw std::invalid_argument("lift needs an even-degree polynomial");
    if (p.front() == cd(0.0))
        throw std::invalid_argument("lift needs a nonzero constant term");
    int n = (static_cast<int>(p.size()) - 1) / 2;
    return LaurentPoly(n, std::move(p));
}

// ------------------------------------------------------------------ ZeroSet

int ZeroSet::total() const {
    int t = 0;
    for (const auto& z : zeros) t += z.mult;
    return t;
}

int ZeroSet::block_offset(int i) const {
    int off = 0;
    for (int j = 0; j < i; ++j) off += zeros[j].mult;
    return off;
}

ZeroSet roots_with_multiplicity(const LaurentPoly& L, double cluster_tol) {
    if (L.is_zero()) throw std::invalid_argument("roots of the zero polynomial");
    const int d = L.hi() - L.lo();
    ZeroSet out;
    if (d == 0) return out;

    // Monic coefficients of z^{-lo} L(z); the constant term is the nonzero
    // trailing coefficient, so no roots sit at the origin.
    std::vector<cd> a(d + 1);
    for (int k = 0; k <= d; ++k) a[k] = L.coeff(L.lo() + k) / L.leading();

    Eigen::MatrixXcd comp = Eigen::MatrixXcd::Zero(d, d);
    for (int i = 1; i < d; ++i) comp(i, i - 1) = 1.0;
    for (int i = 0; i < d; ++i) comp(i, d - 1) = -a[i];
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(comp, false);
    if (es.info() != Eigen::Success) throw numeric_error("eigenvalue root solver failed to converge");

    std::vector<cd> roots(es.eigenvalues().data(), es.eigenvalues().data() + d);
    std::sort(roots.begin(), roots.end(),
              [](cd x, cd y) { return x.real() != y.real() ? x.real() < y.real() : x.imag() < y.imag(); });

    // Greedy clustering, tolerance relative to the root magnitude.
    std::vector<std::vector<cd>> clusters;
    for (cd r : roots) {
        bool placed = false;
        for (auto& cl : clusters) {
            cd center = cl[0];
            if (std::abs(r - center) <= cluster_tol * std::max(1.0, std::abs(center))) {
                cl.push_back(r);
                placed = true;
                break;
            }
        }
        if (!placed) clusters.push_back({r});
    }

    auto poly_eval = [&](cd z) {
        cd acc = 0.0;
        for (int k = d; k >= 0; --k) acc = acc * z + (k == d ? cd(1.0) : a[k]);
        return acc;
    };
    auto poly_deriv = [&](cd z) {
        cd acc = 0.0;
        for (int k = d; k >= 1; --k) acc = acc * z + double(k) * (k == d ? cd(1.0) : a[k]);
        return acc;
    };

    for (const auto& cl : clusters) {
        cd center = 0.0;
        for (cd r : cl) center += r;
        center /= double(cl.size());
        int m = static_cast<int>(cl.size());
        // Multiplicity-aware Newton polish; quadratic once the multiplicity
        // guess is right, harmless otherwise.
        for (int it = 0; it < 4; ++it) {
            cd dp = poly_deriv(center);
            if (dp == cd(0.0)) break;
            cd step = double(m) * poly_eval(center) / dp;
            if (!std::isfinite(step.real()) || !std::isfinite(step.imag())) break;
            center -= step;
        }
        out.zeros.push_back({center, m});
    }
    std::sort(out.zeros.begin(), out.zeros.end(), [](const ZeroSet::Zero& x, const ZeroSet::Zero& y) {
        return x.zeta.real() != y.zeta.real() ? x.zeta.real() < y.zeta.real() : x.zeta.imag() < y.zeta.imag();
    });
    return out;
}

LaurentPoly deflate(const LaurentPoly& L, const ZeroSet& Z, int i) {
    if (i < 0 || i >= static_cast<int>(Z.zeros.size())) throw std::invalid_argument("deflate: zero index out of range");
    LaurentPoly p = LaurentPoly::monomial(L.lo(), L.leading());
    for (int j = 0; j < static_cast<int>(Z.zeros.size()); ++j) {
        if (j == i) continue;
        LaurentPoly f = LaurentPoly::monomial(1) - LaurentPoly::constant(Z.zeros[j].zeta);
        for (int t = 0; t < Z.zeros[j].mult; ++t) p = p * f;
    }
    return p;
}

SpectralJet spectral_jet(const JetFun& f, const ZeroSet& Z) {
    SpectralJet out;
    out.reserve(Z.total());
    for (const auto& z : Z.zeros) {
        TaylorJet j = f(z.zeta, z.mult - 1);
        for (int t = 0; t < z.mult; ++t) out.push_back(j[t]);
    }
    return out;
}

cd h_sym(int j, cd z1, cd z2) {
    cd s = 0.0;
    for (int a = 0; a <= j; ++a) s += std::pow(z1, cd(a)) * std::pow(z2, cd(j - a));
    return s;
}

cd h_sym_dual(int j, cd z1, cd z2) {
    if (z1 == cd(0.0) || z2 == cd(0.0)) throw std::domain_error("dual symmetric polynomial at the origin");
    return h_sym(j, 1.0 / z1, 1.0 / z2) / (z1 * z2);
}

cd delta_L(const LaurentPoly& L, cd z1, cd z2) {
    if (z1 == cd(0.0) || z2 == cd(0.0)) throw std::domain_error("divided difference at the origin");
    if (std::abs(z1 - z2) >= 1e-8 * std::max(std::abs(z1), std::abs(z2)))
        return (L.eval(z1) - L.eval(z2)) / (z1 - z2);
    cd s = 0.0;
    for (int j = 1; j <= L.n_plus(); ++j) s += L.coeff(j) * h_sym(j - 1, z1, z2);
    for (int j = 1; j <= L.n_minus(); ++j) s -= L.coeff(-j) * h_sym_dual(j - 1, z1, z2);
    return s;
}

JetFun value_only(std::function<cd(cd)> f) {
    return [f = std::move(f)](cd z0, int order) {
        if (order > 0) throw capability_error("callable supplies no derivative rule");
        TaylorJet j(0);
        j[0] = f(z0);
        return j;
    };
}

TaylorJet delta_L_jet_second(const LaurentPoly& L, cd c, cd w0, int order) {
    TaylorJet num = TaylorJet::constant(L.eval(c), order) - L.jet(w0, order);
    TaylorJet den = TaylorJet::constant(c, order) - TaylorJet::variable(w0, order);
    return num / den;
}

}  // namespace cmvlab
