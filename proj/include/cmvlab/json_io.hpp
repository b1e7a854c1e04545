#pragma once

#include <json.hpp>
#include <optional>
#include <string>

#include "cmvlab/toeplitz.hpp"

namespace cmvlab {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

// Laurent polynomials serialize as {"n_minus": int, "coeffs": [[re, im], ...]}
// listing exponents -n_minus .. n_plus in order.
json laurent_to_json(const LaurentPoly& p);
LaurentPoly laurent_from_json(const json& j);

// Functional spec:
//   {"weight": {"kind": "circle_laurent", "w": LP} |
//              {"kind": "circle_rational", "num": LP, "den": LP},
//    "masses": [{"z1_node": [re,im], "z1_order": k,
//                "z2_node": [re,im], "z2_order": l, "weight": [re,im]}],
//    "sobolev": [{"n":, "m":, "inner": weight-part | {"kind": "atoms", ...}}]}
// Every part is optional but at least one must be present.
Functional functional_from_json(const json& j, double delta_min = 1e-3);

// Perturbation spec:
//   {"type": "12"|"21", "L_gamma": LP, "L_c": LP,
//    "masses": [{"zero_index": i, "order": l,
//                "atoms": [{"node": [re,im], "order": k, "weight": [re,im]}]}]}
// or the reduction form
//   {"type": ..., "L_gamma": LP, "L_c": LP,
//    "reduction": "toeplitz_zero_order", "xi": [..]}
struct PerturbationSpec {
    GUPerturbation pert;                       // of the requested type
    std::optional<DiagonalMasses> reduction;   // both types, when reduction flags given
};
PerturbationSpec perturbation_from_json(const json& j, double cluster_tol = 1e-7);

// Full run configuration; paths are resolved relative to the caller.
struct RunConfig {
    std::string functional_path;
    std::string perturbation_path;
    std::string out_dir = ".";
    RunOptions options;
    int max_quad_nodes = 1 << 16;
};
RunConfig run_config_from_json(const json& j);

json family_to_json(const BiorthFamily& fam);
std::string family_to_csv(const BiorthFamily& fam);  // k, Re H_k, Im H_k, coefficients
ordered_json report_to_json(const GUReport& rep);
std::string report_rows_to_csv(const GUReport& rep);

}  // namespace cmvlab
