#pragma once

#include <filesystem>
#include <string>

#include "deepteam/model_io.hpp"
#include "deepteam/strategy.hpp"

namespace deepteam {

// { "T": T,
//   "riccati": {"P": [...], "P_deep": [...], "theta": [...], "theta_deep": [...]},
//   "local":  {"Sigma_pred": [...], "Sigma_post": [...], "gain": [...]},
//   "global": {...},
//   "meanfield": [...] }
// Every list is ordered t = 1, 2, ...; doubles are written in shortest
// round-trip form so reading back reproduces every bit.
json solution_to_json(const TeamSolution& solution);
TeamSolution solution_from_json(const json& doc);
TeamSolution load_solution(const std::filesystem::path& path);

// Empty string when bit-identical, else the first differing entry.
std::string first_bitwise_difference(const TeamSolution& a, const TeamSolution& b);

}  // namespace deepteam
