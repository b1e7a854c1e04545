#include "cmvlab/json_io.hpp"

#include <cstdio>

namespace cmvlab {

namespace {

cd cd_from_json(const json& j) {
    if (j.is_number()) return cd(j.get<double>(), 0.0);
    if (!j.is_array() || j.size() != 2) throw std::invalid_argument("complex values are [re, im] pairs");
    return cd(j[0].get<double>(), j[1].get<double>());
}

json cd_to_json(cd v) { return json::array({v.real(), v.imag()}); }

// locale-independent, 17 significant digits
std::string num17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void apply_weight_part(Functional& u, const json& j, int n, int m) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "circle_laurent") {
        if (n == 0 && m == 0)
            u.add_weight_laurent(laurent_from_json(j.at("w")));
        else
            u.add_sobolev_weight(n, m, laurent_from_json(j.at("w")), LaurentPoly::one());
    } else if (kind == "circle_rational") {
        if (n == 0 && m == 0)
            u.add_weight_rational(laurent_from_json(j.at("num")), laurent_from_json(j.at("den")));
        else
            u.add_sobolev_weight(n, m, laurent_from_json(j.at("num")), laurent_from_json(j.at("den")));
    } else {
        throw std::invalid_argument("unknown weight kind: " + kind);
    }
}

}  // namespace

json laurent_to_json(const LaurentPoly& p) {
    json coeffs = json::array();
    for (int k = p.lo(); k <= p.hi(); ++k) coeffs.push_back(cd_to_json(p.coeff(k)));
    return json{{"n_minus", p.is_zero() ? 0 : -p.lo()}, {"coeffs", coeffs}};
}

LaurentPoly laurent_from_json(const json& j) {
    const int n_minus = j.at("n_minus").get<int>();
    std::vector<cd> coeffs;
    for (const auto& c : j.at("coeffs")) coeffs.push_back(cd_from_json(c));
    return LaurentPoly(n_minus, std::move(coeffs));
}

Functional functional_from_json(const json& j, double delta_min) {
    Functional u;
    bool any = false;
    if (j.contains("weight")) {
        apply_weight_part(u, j.at("weight"), 0, 0);
        any = true;
    }
    for (const auto& m : j.value("masses", json::array())) {
        u.add_mass({cd_from_json(m.at("z1_node")), m.value("z1_order", 0), cd_from_json(m.at("z2_node")),
                    m.value("z2_order", 0), cd_from_json(m.at("weight"))});
        any = true;
    }
    for (const auto& s : j.value("sobolev", json::array())) {
        const int n = s.at("n").get<int>(), m = s.at("m").get<int>();
        const json& inner = s.at("inner");
        if (inner.at("kind").get<std::string>() == "atoms") {
            std::vector<std::pair<cd, cd>> atoms;
            for (const auto& a : inner.at("atoms"))
                atoms.emplace_back(cd_from_json(a.at("node")), cd_from_json(a.at("weight")));
            u.add_sobolev_atoms(n, m, atoms);
        } else {
            apply_weight_part(u, inner, n, m);
        }
        any = true;
    }
    if (!any) throw std::invalid_argument("functional spec needs at least one part");
    if (u.denominator_margin() < delta_min)
        throw std::invalid_argument("rational weight denominator has zeros too close to the circle");
    return u;
}

PerturbationSpec perturbation_from_json(const json& j, double cluster_tol) {
    PerturbationSpec out;
    const std::string type = j.at("type").get<std::string>();
    if (type != "12" && type != "21") throw std::invalid_argument("perturbation type must be \"12\" or \"21\"");
    const auto ty = type == "12" ? GUPerturbation::Type::T12 : GUPerturbation::Type::T21;
    LaurentPoly lg = laurent_from_json(j.at("L_gamma"));
    LaurentPoly lc = laurent_from_json(j.at("L_c"));

    if (j.contains("reduction")) {
        const std::string red = j.at("reduction").get<std::string>();
        if (red != "toeplitz_zero_order") throw std::invalid_argument("unknown reduction: " + red);
        DiagonalMassSpec spec;
        for (const auto& x : j.value("xi", json::array())) spec.zero_order.push_back(cd_from_json(x));
        auto dm = build_diagonal_masses(lg, lc, spec, cluster_tol);
        out.pert = ty == GUPerturbation::Type::T12 ? dm.p12 : dm.p21;
        out.reduction = std::move(dm);
        return out;
    }

    GUPerturbation probe = GUPerturbation::make(ty, lg, lc, {}, cluster_tol);
    std::vector<std::vector<PointFunctional>> masses(probe.gamma_zeros.zeros.size());
    for (size_t i = 0; i < masses.size(); ++i) masses[i].resize(probe.gamma_zeros.zeros[i].mult);
    for (const auto& m : j.value("masses", json::array())) {
        const int i = m.at("zero_index").get<int>();
        const int l = m.at("order").get<int>();
        if (i < 0 || i >= int(masses.size()) || l < 0 || l >= int(masses[i].size()))
            throw std::invalid_argument("mass indices outside the zero structure of L_gamma");
        PointFunctional f;
        for (const auto& a : m.at("atoms"))
            f.atoms.push_back({cd_from_json(a.at("node")), a.value("order", 0), cd_from_json(a.at("weight"))});
        masses[i][l] = std::move(f);
    }
    out.pert = GUPerturbation::make(ty, std::move(lg), std::move(lc), std::move(masses), cluster_tol);
    return out;
}

RunConfig run_config_from_json(const json& j) {
    RunConfig cfg;
    cfg.functional_path = j.at("functional").get<std::string>();
    cfg.perturbation_path = j.at("perturbation").get<std::string>();
    cfg.out_dir = j.value("out_dir", std::string("."));
    cfg.options.l_max = j.value("l_max", 10);
    if (j.contains("tolerances")) {
        const json& t = j.at("tolerances");
        cfg.options.pivot_tol = t.value("pivot", cfg.options.pivot_tol);
        cfg.options.residual_tol = t.value("residual", cfg.options.residual_tol);
        cfg.options.cluster_tol = t.value("cluster", cfg.options.cluster_tol);
        cfg.options.tau_floor = t.value("tau_floor", cfg.options.tau_floor);
        cfg.max_quad_nodes = t.value("max_quad_nodes", cfg.max_quad_nodes);
    }
    cfg.options.delta_min = j.value("delta_min", cfg.options.delta_min);
    if (j.contains("samples")) {
        const json& s = j.at("samples");
        cfg.options.sample_count = s.value("count", cfg.options.sample_count);
        if (s.contains("radii")) cfg.options.radii = s.at("radii").get<std::vector<double>>();
    }
    for (double t : {cfg.options.pivot_tol, cfg.options.residual_tol, cfg.options.cluster_tol,
                     cfg.options.delta_min})
        if (!(t > 0.0)) throw std::invalid_argument("tolerances must be positive");
    return cfg;
}

json family_to_json(const BiorthFamily& fam) {
    json out;
    out["size"] = fam.size();
    json h = json::array(), p1 = json::array(), p2 = json::array();
    for (int k = 0; k < fam.size(); ++k) {
        h.push_back(cd_to_json(fam.h()(k)));
        p1.push_back(laurent_to_json(fam.phi_poly(1, k)));
        p2.push_back(laurent_to_json(fam.phi_poly(2, k)));
    }
    out["h"] = h;
    out["phi1"] = p1;
    out["phi2"] = p2;
    return out;
}

std::string family_to_csv(const BiorthFamily& fam) {
    std::string out = "k,re_h,im_h";
    for (int j = 0; j < fam.size(); ++j) {
        out += ",re_s1_" + std::to_string(j) + ",im_s1_" + std::to_string(j);
    }
    out += "\n";
    for (int k = 0; k < fam.size(); ++k) {
        out += std::to_string(k) + "," + num17(fam.h()(k).real()) + "," + num17(fam.h()(k).imag());
        for (int j = 0; j < fam.size(); ++j) {
            const cd c = j <= k ? fam.s1()(k, j) : cd(0.0);
            out += "," + num17(c.real()) + "," + num17(c.imag());
        }
        out += "\n";
    }
    return out;
}

ordered_json report_to_json(const GUReport& rep) {
    ordered_json out;
    out["structure"] = {{"out_of_band", rep.structure.out_of_band},
                        {"extreme_bands", rep.structure.extreme_bands},
                        {"coupling", rep.structure.coupling}};
    out["connection_laurent"] = rep.connection_laurent;
    out["second_kind"] = {{"full", rep.cauchy.full},
                          {"truncated", rep.cauchy.truncated},
                          {"plain", rep.cauchy.plain}};
    out["kernels"] = {{"plain", rep.kernels.plain},
                      {"mixed_regular", rep.kernels.mixed_regular},
                      {"mixed_cauchy", rep.kernels.mixed_cauchy}};
    out["jet_identity"] = rep.jet_identity;
    ordered_json rows = ordered_json::array();
    for (const auto& r : rep.rows) {
        ordered_json row;
        row["l"] = r.l;
        row["tau"] = {r.tau.real(), r.tau.imag()};
        row["phi_primary"] = r.phi_primary;
        row["phi_dual"] = r.phi_dual;
        row["h"] = r.h;
        rows.push_back(row);
    }
    out["rows"] = rows;
    out["max_residual"] = rep.max_residual();
    return out;
}

std::string report_rows_to_csv(const GUReport& rep) {
    std::string out = "l,re_tau,im_tau,phi_primary,phi_dual,h\n";
    for (const auto& r : rep.rows)
        out += std::to_string(r.l) + "," + num17(r.tau.real()) + "," + num17(r.tau.imag()) + "," +
               num17(r.phi_primary) + "," + num17(r.phi_dual) + "," + num17(r.h) + "\n";
    return out;
}

}  // namespace cmvlab
