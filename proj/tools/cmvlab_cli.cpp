// Configuration-driven entry point: loads a functional and a perturbation,
// runs the direct refactorization and the determinantal formulas, and emits
// the residual report. Exit codes: 0 all residuals below tolerance, 1 some
// residual above tolerance, 2 configuration problems, 3 quasidefiniteness
// failure, 4 inapplicable determinantal formula (singular tau), 5 numeric
// non-convergence. CMVLAB_THREADS caps parallelism.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "cmvlab/json_io.hpp"

namespace fs = std::filesystem;
using namespace cmvlab;

namespace {

json load_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open " + path.string());
    json j;
    in >> j;
    return j;
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

struct RouteTable {
    // per l: sup over samples of |phi| values and the h value
    std::vector<std::vector<cd>> phi1, phi2;  // [l-index][sample]
    std::vector<cd> h;
};

RouteTable route_values(const std::string& route, const Functional& u, const PerturbationSpec& ps,
                        const RunConfig& cfg, int l_min, int l_max, const std::vector<cd>& samples) {
    auto need = [&](GUPerturbation::Type t) -> const GUPerturbation& {
        if (ps.pert.type == t) return ps.pert;
        if (ps.reduction) return t == GUPerturbation::Type::T12 ? ps.reduction->p12 : ps.reduction->p21;
        throw std::invalid_argument("route " + route + " needs the other transformation type; "
                                    "use a reduction configuration");
    };
    const int work = l_max + 4 * std::max(ps.pert.n_gamma(), ps.pert.n_c()) + 6;
    RouteTable t;
    t.phi1.resize(l_max - l_min + 1);
    t.phi2.resize(l_max - l_min + 1);
    t.h.resize(l_max - l_min + 1);
    auto fill = [&](auto&& phi1f, auto&& phi2f, auto&& hf) {
        for (int l = l_min; l <= l_max; ++l) {
            auto& r1 = t.phi1[l - l_min];
            auto& r2 = t.phi2[l - l_min];
            for (cd z : samples) {
                r1.push_back(phi1f(l, z));
                r2.push_back(phi2f(l, z));
            }
            t.h[l - l_min] = hf(l);
        }
    };
    const auto& opt = cfg.options;
    if (route == "direct") {
        FamilyPair fp = direct_families(u, ps.pert, work, opt.pivot_tol, opt.delta_min);
        fill([&](int l, cd z) { return fp.tilde.phi(1, l, z); },
             [&](int l, cd z) { return fp.tilde.phi(2, l, z); }, [&](int l) { return fp.tilde.h()(l); });
    } else if (route == "christoffel_21") {
        FamilyPair fp = direct_families(u, need(GUPerturbation::Type::T21), work, opt.pivot_tol, opt.delta_min);
        ChristoffelWorkspace ws(fp, l_max + 2 * fp.pert.n_c() + 1, opt.delta_min, opt.corruption, opt.tau_floor);
        fill([&](int l, cd z) { return ws.phi_primary(l, z); },
             [&](int l, cd z) { return ws.phi_dual(l, z); }, [&](int l) { return ws.h_value(l); });
    } else if (route == "christoffel_12") {
        FamilyPair fp = direct_families(u, need(GUPerturbation::Type::T12), work, opt.pivot_tol, opt.delta_min);
        ChristoffelWorkspace ws(fp, l_max + 2 * fp.pert.n_c() + 1, opt.delta_min, opt.corruption, opt.tau_floor);
        fill([&](int l, cd z) { return ws.phi_dual(l, z); },
             [&](int l, cd z) { return ws.phi_primary(l, z); }, [&](int l) { return ws.h_value(l); });
    } else if (route == "dual_toeplitz") {
        if (!ps.reduction) throw std::invalid_argument("route dual_toeplitz needs a reduction configuration");
        FamilyPair f21 = direct_families(u, ps.reduction->p21, work, opt.pivot_tol, opt.delta_min);
        FamilyPair f12 = direct_families(u, ps.reduction->p12, work, opt.pivot_tol, opt.delta_min);
        ChristoffelWorkspace w21(f21, l_max + 2 * f21.pert.n_c() + 1, opt.delta_min, opt.corruption, opt.tau_floor);
        ChristoffelWorkspace w12(f12, l_max + 2 * f12.pert.n_c() + 1, opt.delta_min, opt.corruption, opt.tau_floor);
        fill([&](int l, cd z) { return w12.phi_dual(l, z); },
             [&](int l, cd z) { return w21.phi_dual(l, z); }, [&](int l) { return w12.h_value(l); });
    } else {
        throw std::invalid_argument("unknown route: " + route +
                                    " (expected direct, christoffel_12, christoffel_21 or dual_toeplitz)");
    }
    return t;
}

int run_compare(const std::string& spec, const Functional& u, const PerturbationSpec& ps,
                const RunConfig& cfg) {
    const auto comma = spec.find(',');
    if (comma == std::string::npos) throw std::invalid_argument("--compare expects two routes A,B");
    const std::string ra = spec.substr(0, comma), rb = spec.substr(comma + 1);
    const int l_min = 2 * std::max(ps.pert.n_gamma(), ps.pert.n_c());
    const int l_max = cfg.options.l_max;
    const std::vector<cd> samples = sample_points(u, ps.pert, cfg.options);
    RouteTable ta = route_values(ra, u, ps, cfg, l_min, l_max, samples);
    RouteTable tb = route_values(rb, u, ps, cfg, l_min, l_max, samples);

    auto rel_sup = [](const std::vector<cd>& a, const std::vector<cd>& b) {
        double top = 0.0, scale = 0.0;
        for (size_t i = 0; i < a.size(); ++i) {
            top = std::max(top, std::abs(a[i] - b[i]));
            scale = std::max(scale, std::abs(b[i]));
        }
        return top / std::max(scale, 1e-300);
    };
    std::string csv = "l,phi1,phi2,h\n";
    double worst = 0.0;
    char buf[160];
    for (int l = l_min; l <= l_max; ++l) {
        const int i = l - l_min;
        const double d1 = rel_sup(ta.phi1[i], tb.phi1[i]);
        const double d2 = rel_sup(ta.phi2[i], tb.phi2[i]);
        const double dh = std::abs(ta.h[i] - tb.h[i]) / std::abs(tb.h[i]);
        worst = std::max({worst, d1, d2, dh});
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g\n", l, d1, d2, dh);
        csv += buf;
    }
    fs::create_directories(cfg.out_dir);
    write_file(fs::path(cfg.out_dir) / "compare.csv", csv);
    std::cout << "compare " << ra << " vs " << rb << ": max relative difference " << worst << "\n";
    return worst < cfg.options.residual_tol ? 0 : 1;
}

int run_report_mode(const Functional& u, const PerturbationSpec& ps, const RunConfig& cfg) {
    const auto& opt = cfg.options;
    const int work = opt.l_max + 4 * std::max(ps.pert.n_gamma(), ps.pert.n_c()) + 6;
    FamilyPair fp = direct_families(u, ps.pert, work, opt.pivot_tol, opt.delta_min);
    GUReport rep = run_report(u, ps.pert, opt);

    fs::create_directories(cfg.out_dir);
    write_file(fs::path(cfg.out_dir) / "family.csv", family_to_csv(fp.tilde));
    write_file(fs::path(cfg.out_dir) / "family.json", family_to_json(fp.tilde).dump(2) + "\n");
    write_file(fs::path(cfg.out_dir) / "report.json", report_to_json(rep).dump(2) + "\n");
    write_file(fs::path(cfg.out_dir) / "report_rows.csv", report_rows_to_csv(rep));

    auto line = [&](const std::string& name, double v) {
        const char* verdict = v < opt.residual_tol ? "pass" : "FAIL";
        std::cout << "  " << name << ": " << v << "  [" << verdict << "]\n";
        return std::string("  ") + name + ": " + std::to_string(v) + "  [" + verdict + "]\n";
    };
    std::string summary = "residual tolerance " + std::to_string(opt.residual_tol) + "\n";
    std::cout << "residual tolerance " << opt.residual_tol << "\n";
    summary += line("connector out-of-band", rep.structure.out_of_band);
    summary += line("connector extreme bands", rep.structure.extreme_bands);
    summary += line("connector coupling", rep.structure.coupling);
    summary += line("polynomial connection", rep.connection_laurent);
    summary += line("second kind connection (full)", rep.cauchy.full);
    summary += line("second kind connection (truncated)", rep.cauchy.truncated);
    summary += line("second kind connection (plain)", rep.cauchy.plain);
    summary += line("kernel connection", rep.kernels.plain);
    summary += line("mixed kernel connection (regular)", rep.kernels.mixed_regular);
    summary += line("mixed kernel connection (cauchy)", rep.kernels.mixed_cauchy);
    summary += line("jet identities", rep.jet_identity);
    double worst_formula = 0.0;
    for (const auto& r : rep.rows) worst_formula = std::max({worst_formula, r.phi_primary, r.phi_dual, r.h});
    summary += line("determinantal formulas vs oracle", worst_formula);
    write_file(fs::path(cfg.out_dir) / "summary.txt", summary);

    const bool ok = rep.max_residual() < opt.residual_tol;
    std::cout << (ok ? "all residuals below tolerance\n" : "residuals above tolerance\n");
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"CMV biorthogonal Laurent families under rational perturbations"};
    std::string config_path, out_override, compare_spec;
    int l_max_override = -1;
    double tol_override = -1.0, tau_floor_override = -1.0;
    app.add_option("--config", config_path, "run configuration (JSON)")->required();
    app.add_option("--l-max", l_max_override, "override the truncation size");
    app.add_option("--tol", tol_override, "override the residual tolerance");
    app.add_option("--tau-floor", tau_floor_override, "override the tau singularity threshold");
    app.add_option("--out", out_override, "override the output directory");
    app.add_option("--compare", compare_spec,
                   "compare two routes (direct, christoffel_12, christoffel_21, dual_toeplitz)");
    CLI11_PARSE(app, argc, argv);

    try {
        const fs::path cfg_path(config_path);
        RunConfig cfg = run_config_from_json(load_json(cfg_path));
        if (l_max_override > 0) cfg.options.l_max = l_max_override;
        if (tol_override > 0) cfg.options.residual_tol = tol_override;
        if (tau_floor_override > 0) cfg.options.tau_floor = tau_floor_override;
        if (!out_override.empty()) cfg.out_dir = out_override;
        const fs::path base = cfg_path.parent_path();
        auto resolve = [&](const std::string& p) {
            return fs::path(p).is_absolute() ? fs::path(p) : base / p;
        };
        Functional u = functional_from_json(load_json(resolve(cfg.functional_path)), cfg.options.delta_min);
        QuadraturePolicy q;
        q.max_nodes = cfg.max_quad_nodes;
        u.set_quadrature(q);
        PerturbationSpec ps =
            perturbation_from_json(load_json(resolve(cfg.perturbation_path)), cfg.options.cluster_tol);
        const int l_min = 2 * std::max(ps.pert.n_gamma(), ps.pert.n_c());
        if (cfg.options.l_max < l_min + 2)
            throw std::invalid_argument("l_max must be at least twice the perturbation degree plus two");

        if (!compare_spec.empty()) return run_compare(compare_spec, u, ps, cfg);
        return run_report_mode(u, ps, cfg);
    } catch (const quasidefinite_error& e) {
        std::cerr << "quasidefiniteness failure: " << e.what() << " (leading minor " << e.failing_minor + 1
                  << ")\n";
        return 3;
    } catch (const formula_error& e) {
        std::cerr << "determinantal formula inapplicable: " << e.what() << "\n";
        return 4;
    } catch (const numeric_error& e) {
        std::cerr << "numeric non-convergence: " << e.what() << "\n";
        return 5;
    } catch (const std::exception& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    }
}
