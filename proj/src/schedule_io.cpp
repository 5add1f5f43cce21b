#include "deepteam/schedule_io.hpp"

#include <cstring>
#include <fstream>

#include "deepteam/errors.hpp"

namespace deepteam {

namespace {

json schedule_to_json(const MatrixSchedule& s) {
  json out = json::array();
  for (const Matrix& m : s) out.push_back(matrix_to_json(m));
  return out;
}

MatrixSchedule schedule_from_json(const json& j, const std::string& what) {
  if (!j.is_array()) throw ModelError(what + ": expected an array");
  MatrixSchedule out;
  for (std::size_t k = 0; k < j.size(); ++k)
    out.push_back(matrix_from_json(j[k], what + "[t=" + std::to_string(k + 1) + "]"));
  return out;
}

const json& member(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw ModelError(where + ": missing \"" + key + "\"");
  return j.at(key);
}

json covariance_to_json(const CovarianceSchedule& c) {
  return {{"Sigma_pred", schedule_to_json(c.Sigma_pred)},
          {"Sigma_post", schedule_to_json(c.Sigma_post)},
          {"gain", schedule_to_json(c.gain)}};
}

void covariance_from_json(const json& j, const std::string& where, CovarianceSchedule& c) {
  c.Sigma_pred = schedule_from_json(member(j, "Sigma_pred", where), where + ".Sigma_pred");
  c.Sigma_post = schedule_from_json(member(j, "Sigma_post", where), where + ".Sigma_post");
  c.gain = schedule_from_json(member(j, "gain", where), where + ".gain");
}

bool same_bits(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         (a.size() == 0 ||
          std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0);
}

std::string compare(const MatrixSchedule& a, const MatrixSchedule& b, const std::string& name) {
  if (a.size() != b.size()) return name + " length";
  for (std::size_t k = 0; k < a.size(); ++k)
    if (!same_bits(a[k], b[k])) return name + " at t=" + std::to_string(k + 1);
  return {};
}

}  // namespace

json solution_to_json(const TeamSolution& s) {
  json mf = json::array();
  for (const Vector& m : s.meanfield) mf.push_back(vector_to_json(m));
  return {{"T", s.riccati.P.size()},
          {"riccati",
           {{"P", schedule_to_json(s.riccati.P)},
            {"P_deep", schedule_to_json(s.riccati.P_deep)},
            {"theta", schedule_to_json(s.riccati.theta)},
            {"theta_deep", schedule_to_json(s.riccati.theta_deep)}}},
          {"local", covariance_to_json(s.filters.local)},
          {"global", covariance_to_json(s.filters.global)},
          {"meanfield", mf}};
}

TeamSolution solution_from_json(const json& doc) {
  TeamSolution s;
  const json& r = member(doc, "riccati", "schedules");
  s.riccati.P = schedule_from_json(member(r, "P", "riccati"), "riccati.P");
  s.riccati.P_deep = schedule_from_json(member(r, "P_deep", "riccati"), "riccati.P_deep");
  s.riccati.theta = schedule_from_json(member(r, "theta", "riccati"), "riccati.theta");
  s.riccati.theta_deep = schedule_from_json(member(r, "theta_deep", "riccati"), "riccati.theta_deep");
  covariance_from_json(member(doc, "local", "schedules"), "local", s.filters.local);
  covariance_from_json(member(doc, "global", "schedules"), "global", s.filters.global);
  const json& mf = member(doc, "meanfield", "schedules");
  if (!mf.is_array()) throw ModelError("meanfield: expected an array");
  for (std::size_t k = 0; k < mf.size(); ++k)
    s.meanfield.push_back(vector_from_json(mf[k], "meanfield[t=" + std::to_string(k + 1) + "]"));
  return s;
}

TeamSolution load_solution(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ModelError(path.string() + ": " + e.what());
  }
  return solution_from_json(doc);
}

std::string first_bitwise_difference(const TeamSolution& a, const TeamSolution& b) {
  for (auto [x, y, name] :
       {std::tuple{&a.riccati.P, &b.riccati.P, "riccati.P"},
        {&a.riccati.P_deep, &b.riccati.P_deep, "riccati.P_deep"},
        {&a.riccati.theta, &b.riccati.theta, "riccati.theta"},
        {&a.riccati.theta_deep, &b.riccati.theta_deep, "riccati.theta_deep"},
        {&a.filters.local.Sigma_pred, &b.filters.local.Sigma_pred, "local.Sigma_pred"},
        {&a.filters.local.Sigma_post, &b.filters.local.Sigma_post, "local.Sigma_post"},
        {&a.filters.local.gain, &b.filters.local.gain, "local.gain"},
        {&a.filters.global.Sigma_pred, &b.filters.global.Sigma_pred, "global.Sigma_pred"},
        {&a.filters.global.Sigma_post, &b.filters.global.Sigma_post, "global.Sigma_post"},
        {&a.filters.global.gain, &b.filters.global.gain, "global.gain"}}) {
    std::string diff = compare(*x, *y, name);
    if (!diff.empty()) return diff;
  }
  if (a.meanfield.size() != b.meanfield.size()) return "meanfield length";
  for (std::size_t k = 0; k < a.meanfield.size(); ++k)
    if (!same_bits(a.meanfield[k], b.meanfield[k])) return "meanfield at t=" + std::to_string(k + 1);
  return {};
}

}  // namespace deepteam
