#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

namespace fs = std::filesystem;

namespace {

std::string bin() {
    const char* b = std::getenv("CMVLAB_BIN");
    REQUIRE(b != nullptr);
    return b;
}

std::string config_dir() {
    const char* d = std::getenv("CMVLAB_CONFIG_DIR");
    REQUIRE(d != nullptr);
    return d;
}

int run(const std::string& args) {
    const std::string cmd = bin() + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(in.good());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("reference run exits cleanly and writes its artifacts") {
    const fs::path out = fs::temp_directory_path() / "cmvlab_cli_ref";
    fs::remove_all(out);
    CHECK(run("--config " + config_dir() + "/run_reference.json --out " + out.string()) == 0);
    for (const char* f : {"family.csv", "family.json", "report.json", "report_rows.csv", "summary.txt"})
        CHECK(fs::exists(out / f));
    const std::string summary = slurp(out / "summary.txt");
    CHECK(summary.find("FAIL") == std::string::npos);

    SUBCASE("identical config gives a byte-identical report") {
        const fs::path out2 = fs::temp_directory_path() / "cmvlab_cli_ref2";
        fs::remove_all(out2);
        CHECK(run("--config " + config_dir() + "/run_reference.json --out " + out2.string()) == 0);
        CHECK(slurp(out / "report.json") == slurp(out2 / "report.json"));
        CHECK(slurp(out / "family.csv") == slurp(out2 / "family.csv"));
    }
}

TEST_CASE("toeplitz reduction run") {
    const fs::path out = fs::temp_directory_path() / "cmvlab_cli_toe";
    fs::remove_all(out);
    CHECK(run("--config " + config_dir() + "/run_toeplitz.json --out " + out.string()) == 0);
}

TEST_CASE("other transformation type and a double zero run cleanly") {
    const fs::path out = fs::temp_directory_path() / "cmvlab_cli_more";
    CHECK(run("--config " + config_dir() + "/run_reference12.json --out " + out.string()) == 0);
    CHECK(run("--config " + config_dir() + "/run_double.json --out " + out.string()) == 0);
}

TEST_CASE("exit code contract") {
    const std::string out = (fs::temp_directory_path() / "cmvlab_cli_codes").string();
    SUBCASE("missing config file") { CHECK(run("--config /nonexistent/nowhere.json") == 2); }
    SUBCASE("unparsable l_max") {
        CHECK(run("--config " + config_dir() + "/run_reference.json --l-max 2 --out " + out) == 2);
    }
    SUBCASE("degenerate gram") {
        CHECK(run("--config " + config_dir() + "/run_degenerate.json --out " + out) == 3);
    }
    SUBCASE("singular tau threshold") {
        CHECK(run("--config " + config_dir() + "/run_reference.json --tau-floor 1e10 --out " + out) == 4);
    }
    SUBCASE("quadrature non-convergence") {
        CHECK(run("--config " + config_dir() + "/run_quadfail.json --out " + out) == 5);
    }
    SUBCASE("residuals above an impossible tolerance") {
        CHECK(run("--config " + config_dir() + "/run_reference.json --tol 1e-30 --out " + out) == 1);
    }
}

TEST_CASE("route comparison") {
    const std::string out = (fs::temp_directory_path() / "cmvlab_cli_cmp").string();
    SUBCASE("direct against itself is exact") {
        CHECK(run("--config " + config_dir() + "/run_reference.json --compare direct,direct --out " + out) == 0);
        const std::string csv = slurp(fs::path(out) / "compare.csv");
        CHECK(csv.find("l,phi1,phi2,h") == 0);
    }
    SUBCASE("direct against the determinantal route") {
        CHECK(run("--config " + config_dir() + "/run_reference.json --compare direct,christoffel_21 --out " +
                  out) == 0);
    }
    SUBCASE("the two determinantal routes need the coincidence setup") {
        CHECK(run("--config " + config_dir() + "/run_reference.json --compare christoffel_12,christoffel_21 --out " +
                  out) == 2);
        CHECK(run("--config " + config_dir() + "/run_toeplitz.json --compare christoffel_12,christoffel_21 --out " +
                  out) == 0);
    }
    SUBCASE("dual route on the reduction configuration") {
        CHECK(run("--config " + config_dir() + "/run_toeplitz.json --compare direct,dual_toeplitz --out " +
                  out) == 0);
    }
}

#include "cmvlab/json_io.hpp"

TEST_CASE("serialization round trips") {
    using namespace cmvlab;
    LaurentPoly p(2, {cd(0.3, -1.2), cd(0.0), cd(2.5, 0.4), cd(1.0, 0.0)});
    json j = laurent_to_json(p);
    CHECK(j.at("n_minus") == 2);
    CHECK(laurent_from_json(j) == p);

    json f = {{"weight", {{"kind", "circle_laurent"}, {"w", laurent_to_json(LaurentPoly(1, {1.0, 2.0, 1.0}))}}},
              {"masses", json::array({{{"z1_node", {2.0, 0.0}},
                                       {"z1_order", 0},
                                       {"z2_node", {2.0, 0.0}},
                                       {"z2_order", 0},
                                       {"weight", {0.5, 0.0}}}})}};
    Functional u = functional_from_json(f);
    CHECK(std::abs(u.moment(0, 0) - cd(2.5)) < 1e-14);  // 2 from the weight, 0.5 from the mass

    json pj = {{"type", "21"},
               {"L_gamma", laurent_to_json(LaurentPoly(1, {-1.0, 2.5, -1.0}))},
               {"L_c", laurent_to_json(LaurentPoly(1, {1.0, 3.0, 1.0}))},
               {"reduction", "toeplitz_zero_order"},
               {"xi", json::array({{0.1, 0.0}, {0.1, 0.0}})}};
    PerturbationSpec ps = perturbation_from_json(pj);
    CHECK(ps.reduction.has_value());
    CHECK(ps.pert.type == GUPerturbation::Type::T21);
    CHECK(coincidence_condition(ps.reduction->p12, ps.reduction->p21));
}
