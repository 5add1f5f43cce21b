#pragma once

#include <filesystem>

#include <json.hpp>

#include "deepteam/model.hpp"

namespace deepteam {

using json = nlohmann::json;

// Matrices are row-major nested arrays; a bare number is accepted for 1x1.
Matrix matrix_from_json(const json& j, const std::string& what);
json matrix_to_json(const Matrix& m);
Vector vector_from_json(const json& j, const std::string& what);
json vector_to_json(const Vector& v);

// Model document:
//   { "dims":   {"n","T","dx","du","dy","dw","dv"},
//     "stages": {A, Abar, B, Bbar, E, Ebar, C, Cbar, S, Sbar, Q, Qbar, R, Rbar}
//               or an array of T such objects (bar matrices default to zero),
//     "noise":  {"mu_x": [..], "Sigma_x": M, "Sigma_w": M or [M...], "Sigma_v": M or [M...]},
//     "alpha":  [..] }
// Throws ModelError on malformed documents. The result is not validated.
TeamModel model_from_json(const json& doc);
TeamModel load_model(const std::filesystem::path& path);
json model_to_json(const TeamModel& model);

}  // namespace deepteam
