#include "deepteam/model_io.hpp"

#include <fstream>

#include "deepteam/errors.hpp"

namespace deepteam {

namespace {

bool is_matrix_shaped(const json& j) {
  return j.is_number() || (j.is_array() && !j.empty() && j.front().is_array());
}

// A schedule is an array of nested-array matrices (three levels deep).
bool is_schedule(const json& j) {
  return j.is_array() && !j.empty() && j.front().is_array() && !j.front().empty() &&
         j.front().front().is_array();
}

int get_dim(const json& dims, const char* key) {
  if (!dims.contains(key) || !dims[key].is_number_integer())
    throw ModelError(std::string("dims.") + key + " missing or not an integer");
  return dims[key].get<int>();
}

Matrix stage_entry(const json& obj, const char* key, Eigen::Index rows, Eigen::Index cols,
                   bool optional) {
  if (!obj.contains(key)) {
    if (optional) return Matrix::Zero(rows, cols);
    throw ModelError(std::string("stage is missing required matrix ") + key);
  }
  return matrix_from_json(obj[key], key);
}

StageMatrices stage_from_json(const json& obj, const Dimensions& d) {
  if (!obj.is_object()) throw ModelError("stage entry must be an object");
  StageMatrices s;
  s.A = stage_entry(obj, "A", d.dx, d.dx, false);
  s.Abar = stage_entry(obj, "Abar", d.dx, d.dx, true);
  s.B = stage_entry(obj, "B", d.dx, d.du, false);
  s.Bbar = stage_entry(obj, "Bbar", d.dx, d.du, true);
  s.E = stage_entry(obj, "E", d.dx, d.dw, false);
  s.Ebar = stage_entry(obj, "Ebar", d.dx, d.dw, true);
  s.C = stage_entry(obj, "C", d.dy, d.dx, false);
  s.Cbar = stage_entry(obj, "Cbar", d.dy, d.dx, true);
  s.S = stage_entry(obj, "S", d.dy, d.dv, false);
  s.Sbar = stage_entry(obj, "Sbar", d.dy, d.dv, true);
  s.Q = stage_entry(obj, "Q", d.dx, d.dx, false);
  s.Qbar = stage_entry(obj, "Qbar", d.dx, d.dx, true);
  s.R = stage_entry(obj, "R", d.du, d.du, false);
  s.Rbar = stage_entry(obj, "Rbar", d.du, d.du, true);
  return s;
}

MatrixSchedule schedule_from_json(const json& j, const std::string& what) {
  MatrixSchedule out;
  if (is_schedule(j)) {
    for (const auto& m : j) out.push_back(matrix_from_json(m, what));
  } else {
    out.push_back(matrix_from_json(j, what));
  }
  return out;
}

}  // namespace

Matrix matrix_from_json(const json& j, const std::string& what) {
  if (j.is_number()) return Matrix::Constant(1, 1, j.get<double>());
  if (!is_matrix_shaped(j)) throw ModelError(what + ": expected a nested array matrix");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j.front().size());
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw ModelError(what + ": ragged matrix rows");
    for (Eigen::Index c = 0; c < cols; ++c) {
      const json& v = row[static_cast<std::size_t>(c)];
      if (!v.is_number()) throw ModelError(what + ": non-numeric entry");
      m(r, c) = v.get<double>();
    }
  }
  return m;
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Vector vector_from_json(const json& j, const std::string& what) {
  if (j.is_number()) return Vector::Constant(1, j.get<double>());
  if (!j.is_array()) throw ModelError(what + ": expected an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ModelError(what + ": non-numeric entry");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

TeamModel model_from_json(const json& doc) {
  try {
    for (const char* key : {"dims", "stages", "noise", "alpha"}) {
      if (!doc.contains(key)) throw ModelError(std::string("model is missing key '") + key + "'");
    }
    const json& jd = doc["dims"];
    Dimensions d;
    d.n = get_dim(jd, "n");
    d.T = get_dim(jd, "T");
    d.dx = get_dim(jd, "dx");
    d.du = get_dim(jd, "du");
    d.dy = get_dim(jd, "dy");
    d.dw = get_dim(jd, "dw");
    d.dv = get_dim(jd, "dv");

    std::vector<StageMatrices> stages;
    const json& js = doc["stages"];
    if (js.is_array()) {
      for (const auto& s : js) stages.push_back(stage_from_json(s, d));
    } else {
      stages.push_back(stage_from_json(js, d));
    }

    const json& jn = doc["noise"];
    NoiseModel noise;
    for (const char* key : {"mu_x", "Sigma_x", "Sigma_w", "Sigma_v"}) {
      if (!jn.contains(key)) throw ModelError(std::string("noise is missing key '") + key + "'");
    }
    noise.mu_x = vector_from_json(jn["mu_x"], "mu_x");
    noise.Sigma_x = matrix_from_json(jn["Sigma_x"], "Sigma_x");
    noise.Sigma_w = schedule_from_json(jn["Sigma_w"], "Sigma_w");
    noise.Sigma_v = schedule_from_json(jn["Sigma_v"], "Sigma_v");

    InfluenceVector influence{vector_from_json(doc["alpha"], "alpha")};
    return assemble_model(d, std::move(stages), std::move(noise), std::move(influence));
  } catch (const json::exception& e) {
    throw ModelError(std::string("model document: ") + e.what());
  }
}

TeamModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open model file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ModelError("cannot parse model file " + path.string() + ": " + e.what());
  }
  return model_from_json(doc);
}

json model_to_json(const TeamModel& model) {
  const Dimensions& d = model.dims;
  json doc;
  doc["dims"] = {{"n", d.n}, {"T", d.T}, {"dx", d.dx}, {"du", d.du},
                 {"dy", d.dy}, {"dw", d.dw}, {"dv", d.dv}};
  json stages = json::array();
  for (const auto& s : model.stages) {
    stages.push_back({{"A", matrix_to_json(s.A)},       {"Abar", matrix_to_json(s.Abar)},
                      {"B", matrix_to_json(s.B)},       {"Bbar", matrix_to_json(s.Bbar)},
                      {"E", matrix_to_json(s.E)},       {"Ebar", matrix_to_json(s.Ebar)},
                      {"C", matrix_to_json(s.C)},       {"Cbar", matrix_to_json(s.Cbar)},
                      {"S", matrix_to_json(s.S)},       {"Sbar", matrix_to_json(s.Sbar)},
                      {"Q", matrix_to_json(s.Q)},       {"Qbar", matrix_to_json(s.Qbar)},
                      {"R", matrix_to_json(s.R)},       {"Rbar", matrix_to_json(s.Rbar)}});
  }
  doc["stages"] = std::move(stages);
  json sw = json::array();
  json sv = json::array();
  for (const auto& m : model.noise.Sigma_w) sw.push_back(matrix_to_json(m));
  for (const auto& m : model.noise.Sigma_v) sv.push_back(matrix_to_json(m));
  doc["noise"] = {{"mu_x", vector_to_json(model.noise.mu_x)},
                  {"Sigma_x", matrix_to_json(model.noise.Sigma_x)},
                  {"Sigma_w", std::move(sw)},
                  {"Sigma_v", std::move(sv)}};
  doc["alpha"] = vector_to_json(model.influence.alpha);
  return doc;
}

}  // namespace deepteam
