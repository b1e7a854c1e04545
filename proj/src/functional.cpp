#include "cmvlab/functional.hpp"

#include <cmath>
#include <mutex>
#include <numbers>
#include <unordered_map>

#include "cmvlab/parallel.hpp"

namespace cmvlab {

int chi_exponent(int index) {
    if (index < 0) throw std::invalid_argument("CMV index must be nonnegative");
    return index % 2 == 0 ? index / 2 : -(index + 1) / 2;
}

int chi_index(int exponent) { return exponent >= 0 ? 2 * exponent : -2 * exponent - 1; }

LaurentPoly chi_poly(int index) { return LaurentPoly::monomial(chi_exponent(index)); }

bool WeightTerm::plain_laurent() const {
    auto trivial = [](const LaurentPoly& p) { return p == LaurentPoly::one(); };
    return n == 0 && m == 0 && trivial(den) && trivial(a1) && trivial(b1) && trivial(c2) && trivial(d2);
}

// ------------------------------------------------------------- construction

Functional Functional::lebesgue() {
    Functional u;
    u.add_weight_laurent(LaurentPoly::one());
    return u;
}

void Functional::add_weight_laurent(const LaurentPoly& w) {
    WeightTerm t;
    t.num = w;
    add_term(t);
}

void Functional::add_weight_rational(const LaurentPoly& num, const LaurentPoly& den) {
    WeightTerm t;
    t.num = num;
    t.den = den;
    add_term(t);
}

void Functional::add_sobolev_weight(int n, int m, const LaurentPoly& num, const LaurentPoly& den) {
    if (n + m < 1) throw std::invalid_argument("Sobolev term needs a positive derivative order");
    WeightTerm t;
    t.n = n;
    t.m = m;
    t.num = num;
    t.den = den;
    add_term(t);
}

void Functional::add_sobolev_atoms(int n, int m, const std::vector<std::pair<cd, cd>>& node_weight) {
    double fn = 1.0, fm = 1.0;
    for (int j = 2; j <= n; ++j) fn *= j;
    for (int j = 2; j <= m; ++j) fm *= j;
    for (const auto& [node, w] : node_weight) masses_.push_back({node, n, node, m, w * fn * fm});
    invalidate();
}

void Functional::add_mass(const MassAtom& a) {
    masses_.push_back(a);
    invalidate();
}

void Functional::add_term(const WeightTerm& t) {
    terms_.push_back(t);
    invalidate();
}

// ------------------------------------------------------------ moment tables

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::int64_t pack_key(size_t term, int a, int b, int s) {
    return (std::int64_t(term) << 40) | (std::int64_t(a) << 36) | (std::int64_t(b) << 32) |
           (std::int64_t(s + (1 << 20)));
}

// One Fourier coefficient of (a1/b1)^(a)(w) conj((c2/d2)^(b)(w)) num/den(w)
// against w^s, dm-normalized trapezoid with node doubling. The node count is
// chosen per coefficient, so a value never depends on which batch asked for
// it.
cd fourier_coeff(const WeightTerm& t, int a, int b, int s, const QuadraturePolicy& q) {
    if (t.plain_laurent()) return t.num.coeff(-s);
    const LaurentPoly c2b = t.c2.conj_coeffs();
    const LaurentPoly d2b = t.d2.conj_coeffs();
    auto estimate = [&](int nn) {
        cd acc = 0.0;
        for (int j = 0; j < nn; ++j) {
            const double th = kTwoPi * j / nn;
            const cd w{std::cos(th), std::sin(th)};
            const cd v = std::conj(w);  // 1/w on the circle
            TaylorJet left = t.a1.jet(w, t.n);
            if (!(t.b1 == LaurentPoly::one())) left = left / t.b1.jet(w, t.n);
            TaylorJet right = c2b.jet(v, t.m);
            if (!(d2b == LaurentPoly::one())) right = right / d2b.jet(v, t.m);
            cd r = t.num.eval(w);
            if (!(t.den == LaurentPoly::one())) r /= t.den.eval(w);
            acc += left.derivative(a) * right.derivative(b) * r * std::polar(1.0, th * s);
        }
        return acc / double(nn);
    };
    int nn = q.min_nodes;
    while (nn < 8 * (std::abs(s) + 1)) nn *= 2;
    cd prev = estimate(nn);
    while (nn < q.max_nodes) {
        nn *= 2;
        cd cur = estimate(nn);
        if (std::abs(cur - prev) <= q.tol * (1.0 + std::abs(cur))) return cur;
        prev = cur;
    }
    throw numeric_error("moment quadrature did not converge within the node budget");
}

double falling(int p, int nu) {
    double r = 1.0;
    for (int t = 0; t < nu; ++t) r *= double(p - t);
    return r;
}

double binom(int n, int k) { return gen_binom(n, k); }

}  // namespace

struct Functional::Tables {
    std::mutex mu;
    std::unordered_map<std::int64_t, cd> fc;
};

void Functional::invalidate() { tables_ = std::make_shared<Tables>(); }

cd Functional::fourier(size_t term, int a, int b, int s) const {
    if (!tables_) const_cast<Functional*>(this)->invalidate();
    const std::int64_t key = pack_key(term, a, b, s);
    {
        std::lock_guard lock(tables_->mu);
        auto it = tables_->fc.find(key);
        if (it != tables_->fc.end()) return it->second;
    }
    cd v = fourier_coeff(terms_[term], a, b, s, quad_);
    std::lock_guard lock(tables_->mu);
    return tables_->fc.emplace(key, v).first->second;
}

void Functional::warm_tables(int exponent_bound) const {
    if (!tables_) const_cast<Functional*>(this)->invalidate();
    struct Key {
        size_t t;
        int a, b, s;
    };
    std::vector<Key> missing;
    {
        std::lock_guard lock(tables_->mu);
        for (size_t t = 0; t < terms_.size(); ++t) {
            const int S = 2 * exponent_bound + terms_[t].n + terms_[t].m + 2;
            for (int a = 0; a <= terms_[t].n; ++a)
                for (int b = 0; b <= terms_[t].m; ++b)
                    for (int s = -S; s <= S; ++s)
                        if (!tables_->fc.count(pack_key(t, a, b, s))) missing.push_back({t, a, b, s});
        }
    }
    if (missing.empty()) return;
    std::vector<cd> values(missing.size());
    parallel_for(static_cast<std::int64_t>(missing.size()), [&](std::int64_t i) {
        const Key& k = missing[i];
        values[i] = fourier_coeff(terms_[k.t], k.a, k.b, k.s, quad_);
    });
    std::lock_guard lock(tables_->mu);
    for (size_t i = 0; i < missing.size(); ++i)
        tables_->fc.emplace(pack_key(missing[i].t, missing[i].a, missing[i].b, missing[i].s), values[i]);
}

cd Functional::moment(int p, int q) const {
    cd acc = 0.0;
    for (size_t t = 0; t < terms_.size(); ++t) {
        const WeightTerm& wt = terms_[t];
        for (int nu = 0; nu <= wt.n; ++nu)
            for (int mu = 0; mu <= wt.m; ++mu) {
                double coef = binom(wt.n, nu) * binom(wt.m, mu) * falling(p, nu) * falling(q, mu);
                if (coef == 0.0) continue;
                acc += coef * fourier(t, wt.n - nu, wt.m - mu, (p - nu) - (q - mu));
            }
    }
    for (const auto& a : masses_) {
        cd left = gen_binom(p, a.z1_order) * pow_int(a.z1_node, p - a.z1_order);
        cd right = gen_binom(q, a.z2_order) * pow_int(a.z2_node, q - a.z2_order);
        acc += a.weight * left * std::conj(right);
    }
    return acc;
}

// ---------------------------------------------------------------- pairings

void Functional::set_quadrature(const QuadraturePolicy& q) {
    quad_ = q;
    invalidate();
}

cd Functional::pair(const Slot& A, const Slot& B) const {
    const QuadraturePolicy& q = quad_;
    cd acc = 0.0;
    for (const auto& t : terms_) {
        if (t.plain_laurent() && A.poly && B.poly) {
            for (int p = A.poly->lo(); p <= A.poly->hi(); ++p)
                for (int r = B.poly->lo(); r <= B.poly->hi(); ++r)
                    acc += A.poly->coeff(p) * B.poly->coeff(r) * t.num.coeff(r - p);
            continue;
        }
        const LaurentPoly c2b = t.c2.conj_coeffs();
        const LaurentPoly d2b = t.d2.conj_coeffs();
        auto estimate = [&](int nn) {
            cd s = 0.0;
            for (int j = 0; j < nn; ++j) {
                const double th = kTwoPi * j / nn;
                const cd w{std::cos(th), std::sin(th)};
                const cd v = std::conj(w);
                TaylorJet left = A.fun(w, t.n);
                if (!(t.a1 == LaurentPoly::one())) left = left * t.a1.jet(w, t.n);
                if (!(t.b1 == LaurentPoly::one())) left = left / t.b1.jet(w, t.n);
                TaylorJet right = B.fun(v, t.m);
                if (!(c2b == LaurentPoly::one())) right = right * c2b.jet(v, t.m);
                if (!(d2b == LaurentPoly::one())) right = right / d2b.jet(v, t.m);
                cd r = t.num.eval(w);
                if (!(t.den == LaurentPoly::one())) r /= t.den.eval(w);
                s += left.derivative(t.n) * right.derivative(t.m) * r;
            }
            return s / double(nn);
        };
        int nn = q.min_nodes;
        cd prev = estimate(nn);
        bool done = false;
        while (nn < q.max_nodes) {
            nn *= 2;
            cd cur = estimate(nn);
            if (std::abs(cur - prev) <= q.tol * (1.0 + std::abs(cur))) {
                acc += cur;
                done = true;
                break;
            }
            prev = cur;
        }
        if (!done) throw numeric_error("pairing quadrature did not converge within the node budget");
    }
    for (const auto& a : masses_) {
        TaylorJet ja = A.fun(a.z1_node, a.z1_order);
        TaylorJet jb = B.fun(std::conj(a.z2_node), a.z2_order);
        acc += a.weight * ja[a.z1_order] * jb[a.z2_order];
    }
    return acc;
}

cd Functional::sesq(const LaurentPoly& f, const LaurentPoly& g) const {
    return pair(Slot(f), Slot(g.conj_coeffs()));
}

// -------------------------------------------------------------------- gram

GramTruncation Functional::gram(int l, double pivot_rel_tol) const {
    if (l < 1) throw std::invalid_argument("gram truncation size must be positive");
    warm_tables(l / 2 + 2);
    GramTruncation g;
    g.size = l;
    g.entries.resize(l, l);
    parallel_for(std::int64_t(l) * l, [&](std::int64_t idx) {
        const int i = int(idx / l), j = int(idx % l);
        g.entries(i, j) = moment(chi_exponent(i), chi_exponent(j));
    });

    // Quasidefiniteness from elimination pivots, no pivoting allowed.
    Eigen::MatrixXcd M = g.entries;
    double scale = 0.0;
    for (int i = 0; i < l; ++i) scale = std::max(scale, M.row(i).norm());
    g.quasidefinite = true;
    for (int k = 0; k < l && g.quasidefinite; ++k) {
        if (std::abs(M(k, k)) <= pivot_rel_tol * scale) {
            g.quasidefinite = false;
            g.failing_minor = k;
            break;
        }
        for (int i = k + 1; i < l; ++i) {
            const cd f = M(i, k) / M(k, k);
            M.row(i).tail(l - k) -= f * M.row(k).tail(l - k);
        }
    }
    return g;
}

GramTruncation Functional::gram_serial(int l, double pivot_rel_tol) const {
    ForceSerialGuard guard;
    return gram(l, pivot_rel_tol);
}

// ------------------------------------------------------------------ guards

namespace {
double dist_to_circle(cd z) { return std::abs(std::abs(z) - 1.0); }
}

double Functional::distance_to_support1(cd z) const {
    double d = std::numeric_limits<double>::infinity();
    if (!terms_.empty()) d = dist_to_circle(z);
    for (const auto& a : masses_) d = std::min(d, std::abs(z - a.z1_node));
    return d;
}

double Functional::distance_to_support2(cd z) const {
    double d = std::numeric_limits<double>::infinity();
    if (!terms_.empty()) d = dist_to_circle(z);
    for (const auto& a : masses_) d = std::min(d, std::abs(z - a.z2_node));
    return d;
}

double Functional::denominator_margin() const {
    double margin = std::numeric_limits<double>::infinity();
    auto scan = [&](const LaurentPoly& p) {
        if (p == LaurentPoly::one() || p.is_zero() || p.window() == 1) return;
        for (const auto& z : roots_with_multiplicity(p).zeros) margin = std::min(margin, dist_to_circle(z.zeta));
    };
    for (const auto& t : terms_) {
        scan(t.den);
        scan(t.b1);
        scan(t.d2);
    }
    return margin;
}

// ---------------------------------------------------------------- upsilon

Eigen::MatrixXcd upsilon(int l) {
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(l, l);
    for (int i = 0; i < l; ++i) {
        const int j = (i % 2 == 0) ? i + 2 : (i == 1 ? 0 : i - 2);
        if (j < l) m(i, j) = 1.0;
    }
    return m;
}

Eigen::MatrixXcd l_of_upsilon(const LaurentPoly& L, int l, int pad) {
    const int K = std::max(L.n_plus(), L.n_minus());
    if (pad < 0) pad = 2 * K + 4;
    const int M = l + pad;
    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(M, M);
    if (!L.is_zero()) {
        const Eigen::MatrixXcd up = upsilon(M);
        const Eigen::MatrixXcd dn = up.transpose();  // the shift is unitary
        Eigen::MatrixXcd p = Eigen::MatrixXcd::Identity(M, M);
        if (L.coeff(0) != cd(0.0)) acc += L.coeff(0) * p;
        for (int k = 1; k <= L.hi(); ++k) {
            p = p * up;
            if (L.coeff(k) != cd(0.0)) acc += L.coeff(k) * p;
        }
        p = Eigen::MatrixXcd::Identity(M, M);
        for (int k = 1; k <= -L.lo(); ++k) {
            p = p * dn;
            if (L.coeff(-k) != cd(0.0)) acc += L.coeff(-k) * p;
        }
    }
    return acc.topLeftCorner(l, l);
}

}  // namespace cmvlab
