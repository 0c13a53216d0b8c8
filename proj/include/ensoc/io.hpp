#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

#include "ensoc/problem.hpp"

namespace ensoc {

using Json = nlohmann::json;

inline constexpr int kSpaceFormatVersion = 1;
inline constexpr int kProblemFormatVersion = 1;

// Parameter space file (JSON):
//   { "format": "ensoc-space", "version": 1,
//     "atoms":   [ {"id": "a", "coords": [0.0]}, ... ],
//     "weights": [ 0.5, ... ],
//     "metric":  [[0, 1], [1, 0]] }          // optional; else Euclidean on coords
Json space_to_json(const ParameterSpace& space);
ParameterSpace space_from_json(const Json& j);
ParameterSpace load_space(const std::filesystem::path& path);
void save_space(const std::filesystem::path& path, const ParameterSpace& space);

BuiltinParams params_from_json(const Json& j);
Json params_to_json(const BuiltinParams& params);

// Problem file (JSON), either a builtin reference
//   { "format": "ensoc-problem", "version": 1,
//     "builtin": "linear-ensemble", "parameters": { "a": [0.5, -0.5] },
//     "space": {...} | "space.json" }                      // space optional
// or user dynamics written in the expression grammar (see expression.hpp)
//   { "format": "ensoc-problem", "version": 1, "grammar": 1,
//     "space": {...} | "space.json", "state_dim": 1, "control_dim": 1, "horizon": 1,
//     "dynamics": ["w1 * x1 + u1"], "cost": "x1^2",
//     "growth_c": 2, "lipschitz_k": 1, "modulus": "r",       // modulus optional
//     "cost_lower_a": 0, "cost_lower_b": 0,
//     "controls": {"box_lo": [-1], "box_hi": [1], "levels": 3}
//              |  {"box_lo": [-1], "box_hi": [1], "breakpoints": [0, 0.5, 1],
//                  "sets": [[[-1], [1]], [[0]]]},
//     "differentiable": true, "validation_radius": 10 }
// Expression variables: t, x1..xn, u1..um, w1..wd (atom coordinates) and
// the aliases x, u, w when the matching dimension is 1; `r` in "modulus".
ProblemSpec problem_from_json(const Json& j, const std::filesystem::path& base_dir = {});
ProblemSpec load_problem(const std::filesystem::path& path);

}  // namespace ensoc
