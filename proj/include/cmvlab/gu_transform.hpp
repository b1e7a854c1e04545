#pragma once

#include "cmvlab/biorth.hpp"

namespace cmvlab {

struct formula_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Finite point-derivative functional: <xi, f> = sum_a weight_a f^(order_a)(node_a)/order_a!.
struct PointFunctional {
    struct Atom {
        cd node;
        int order = 0;
        cd weight;
    };
    std::vector<Atom> atoms;

    bool empty() const { return atoms.empty(); }
    cd pair(const JetFun& f) const;
    cd pair(const LaurentPoly& f) const { return pair(f.jetfun()); }
    // <folded, f> = <this, multiplier * f>, expanded by the product rule.
    PointFunctional folded(const LaurentPoly& multiplier) const;
};

// One transformation: the functional is multiplied by a quotient of l_c and
// the conjugate of l_gamma (which slot carries which factor depends on the
// type) and masses supported on the zeros of l_gamma are added.
struct GUPerturbation {
    enum class Type { T12, T21 };
    Type type = Type::T21;
    LaurentPoly l_gamma;  // prepared, parameter n_gamma
    LaurentPoly l_c;      // prepared, parameter n_c
    ZeroSet gamma_zeros;  // fixed ordering; masses index into it
    // xi[i][l] for zero i and derivative order l < mult_i; rows may be
    // missing or empty for mass-free transformations.
    std::vector<std::vector<PointFunctional>> xi;

    int n_gamma() const;
    int n_c() const;
    ZeroSet c_zeros(double cluster_tol = 1e-7) const { return roots_with_multiplicity(l_c, cluster_tol); }
    const PointFunctional& xi_at(int i, int l) const;

    static GUPerturbation make(Type type, LaurentPoly lg, LaurentPoly lc,
                               std::vector<std::vector<PointFunctional>> masses = {},
                               double cluster_tol = 1e-7);
};

// Perturbed functional split into the ratio-multiplied part (weight plus
// folded base masses) and the added perturbing masses; the regularized jet
// evaluation needs the split, everything else uses `full`.
struct PerturbedFunctional {
    Functional full;
    Functional ratio_part;
};

PerturbedFunctional perturb_functional(const Functional& u, const GUPerturbation& P,
                                       double delta_min = 1e-3);

// Base and perturbed families factorized at a shared padded size; the
// perturbed family is the direct-refactorization oracle.
struct FamilyPair {
    BiorthFamily base;
    BiorthFamily tilde;
    GUPerturbation pert;
    std::shared_ptr<const Functional> ratio_part;
};

FamilyPair direct_families(const Functional& u, const GUPerturbation& P, int size,
                           double pivot_tol = 1e-10, double delta_min = 1e-3);

// Omega_1 and Omega_2 for the pair's type, computed from the triangular
// factors and l_gamma/l_c of the shift, exact on the kept block.
struct Connectors {
    Eigen::MatrixXcd omega1, omega2;
};
Connectors connectors(const FamilyPair& fp);

// Structure checks on rows [0, rows): largest out-of-band entry, largest
// deviation of the extreme bands from their closed forms, and the coupling
// identity tying the two connectors through H and H-tilde.
struct ConnectorStructure {
    double out_of_band = 0.0;
    double extreme_bands = 0.0;
    double coupling = 0.0;
};
ConnectorStructure connector_structure(const FamilyPair& fp, const Connectors& om, int rows);

// Largest residual of the four polynomial connection formulas on rows
// [0, rows) at the given sample points. swap_connectors deliberately crosses
// Omega_1/Omega_2 as a negative control.
double connection_residual_laurent(const FamilyPair& fp, const Connectors& om,
                                   const std::vector<cd>& samples, int rows,
                                   bool swap_connectors = false);

// Second kind connection formulas: the full identities (mass term included)
// on low rows, the truncated band identities on rows >= 2 n_gamma, and the
// Cauchy-transform identity for the remaining side.
struct CauchyConnectionResiduals {
    double full = 0.0;       // CC12 / CC21 including the divided-difference pairing
    double truncated = 0.0;  // CC12k> / CC21k>
    double plain = 0.0;      // CC11 / CC22
};
CauchyConnectionResiduals connection_residual_cauchy(const FamilyPair& fp, const Connectors& om,
                                                     const std::vector<cd>& samples, int rows,
                                                     double delta_min = 1e-3);

// Kernel connection formulas at order l: plain kernels and both mixed ones.
struct KernelConnectionResiduals {
    double plain = 0.0;
    double mixed_regular = 0.0;  // the version with the divided-difference term
    double mixed_cauchy = 0.0;   // the version with the Cauchy-transform pairing
};
KernelConnectionResiduals connection_residual_kernels(const FamilyPair& fp, const Connectors& om, int l,
                                                      const std::vector<cd>& samples,
                                                      double delta_min = 1e-3);

// Block anti-triangular matrix of scaled derivatives of the conjugated
// deflations at the conjugated zeros.
Eigen::MatrixXcd mass_jet_matrix(const GUPerturbation& P);

// Residual of the spectral-jet identity for the regularized products
// l_gamma-bar * C-tilde over rows [k_lo, k_hi].
double jet_identity_residual(const FamilyPair& fp, int k_lo, int k_hi, double delta_min = 1e-3);

// The product conj-coefficients(l_gamma)(z) * C-tilde_{a,k}(z) for the
// transformation's own side, evaluated through the representation that stays
// finite at the conjugated zeros of l_gamma.
cd regularized_second_kind_product(const FamilyPair& fp, int k, cd z);

// Test hook: additive corruption of one tau-matrix entry.
struct Corruption {
    int row = -1, col = -1;
    cd delta;
};

// Determinantal formulas. The workspace precomputes per-index jet rows from
// the *unperturbed* family; every formula below is then a small determinant
// quotient. Row indices follow the family; formulas need
// l >= 2 max(n_gamma, n_c).
class ChristoffelWorkspace {
  public:
    ChristoffelWorkspace(const FamilyPair& fp, int k_max, double delta_min = 1e-3,
                         Corruption corruption = {}, double tau_floor = 1e-13);

    cd tau(int l) const;
    // The jet-bordered polynomial formula: phi-tilde of side 1 for type (2,1),
    // side 2 for type (1,2). At a zero of l_c the quotient is removable and
    // evaluated by a nearby-point limit.
    cd phi_primary(int l, cd z) const;
    // The kernel-bordered dual formula for the other side; the removable
    // point here is a zero of l_gamma.
    cd phi_dual(int l, cd z) const;
    cd h_value(int l) const;

    int primary_side() const { return side_; }
    int n_gamma() const { return ng_; }
    int n_c() const { return nc_; }
    double tau_floor() const { return tau_floor_; }  // below this a tau value counts as singular

  private:
    Eigen::RowVectorXcd row(int k) const;
    cd phi_primary_at(int l, cd z) const;
    cd phi_dual_at(int l, cd z) const;
    const FamilyPair* fp_;
    int side_;  // 1 for T21, 2 for T12
    int ng_, nc_, kmax_;
    double delta_min_, tau_floor_;
    Corruption corr_;
    ZeroSet gamma_conj_;           // conjugated zeros of l_gamma
    ZeroSet c_zeros_;              // zeros of l_c
    LaurentPoly lgbar_;            // conjugated-coefficient l_gamma
    Eigen::MatrixXcd ljets_;       // mass jet matrix
    std::vector<Eigen::RowVectorXcd> cjets_;  // jets of C_{side,k} at gamma_conj
    std::vector<Eigen::RowVectorXcd> xirow_;  // <xi, phi_{side,k}> L
    std::vector<Eigen::RowVectorXcd> pjets_;  // jets of phi_{side,k} at c_zeros_
};

struct ReportRow {
    int l = 0;
    cd tau;
    double phi_primary = 0.0;
    double phi_dual = 0.0;
    double h = 0.0;
};

struct RunOptions {
    int l_max = 10;
    double pivot_tol = 1e-10;
    double residual_tol = 1e-7;
    double cluster_tol = 1e-7;
    double delta_min = 1e-3;
    double tau_floor = 1e-13;
    int sample_count = 16;
    std::vector<double> radii = {0.7, 1.4};
    Corruption corruption;
    bool swap_connectors = false;
};

struct GUReport {
    std::vector<ReportRow> rows;  // ascending l
    ConnectorStructure structure;
    double connection_laurent = 0.0;
    CauchyConnectionResiduals cauchy;
    KernelConnectionResiduals kernels;
    double jet_identity = 0.0;
    double max_residual() const;
};

// Deterministic off-support sample points on the configured circles.
std::vector<cd> sample_points(const Functional& u, const GUPerturbation& P, const RunOptions& opt);

GUReport run_report(const Functional& u, const GUPerturbation& P, const RunOptions& opt);

cd det_equilibrated(Eigen::MatrixXcd m);

}  // namespace cmvlab
