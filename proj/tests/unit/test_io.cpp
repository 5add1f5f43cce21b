#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "deepteam/errors.hpp"
#include "deepteam/model_io.hpp"
#include "deepteam/schedule_io.hpp"
#include "helpers.hpp"

using namespace deepteam;

TEST_CASE("model document with a single stage object") {
  const json doc = json::parse(R"({
    "dims": {"n": 2, "T": 3, "dx": 1, "du": 1, "dy": 1, "dw": 1, "dv": 1},
    "stages": {"A": [[1]], "Abar": 1, "B": [[1]], "E": [[1]], "C": [[1]], "S": [[1]], "Q": [[1]], "R": [[1]]},
    "noise": {"mu_x": [0.5], "Sigma_x": [[1]], "Sigma_w": [[2]], "Sigma_v": [[1]]},
    "alpha": [1, 1]})");
  const TeamModel m = model_from_json(doc);
  CHECK(m.T() == 3);
  CHECK(m.stages.size() == 3);
  CHECK(m.stage(3).Abar(0, 0) == 1.0);
  CHECK(m.stage(2).Qbar(0, 0) == 0.0);
  CHECK(m.Sigma_w(3)(0, 0) == 2.0);
  CHECK(m.noise.mu_x(0) == 0.5);
  CHECK(validate(m).ok());
}

TEST_CASE("matrices are row-major nested arrays") {
  const Matrix m = matrix_from_json(json::parse("[[1, 2, 3], [4, 5, 6]]"), "M");
  CHECK(m.rows() == 2);
  CHECK(m.cols() == 3);
  CHECK(m(0, 2) == 3.0);
  CHECK(m(1, 0) == 4.0);
  CHECK_THROWS_AS(matrix_from_json(json::parse("[[1, 2], [3]]"), "M"), ModelError);
  CHECK_THROWS_AS(matrix_from_json(json::parse("\"x\""), "M"), ModelError);
}

TEST_CASE("malformed documents raise ModelError") {
  CHECK_THROWS_AS(model_from_json(json::parse(R"({"dims": {}})")), ModelError);
  json doc = model_to_json(reference_model_s1());
  doc["stages"] = json::array({doc["stages"][0]});
  doc["dims"]["T"] = 3;
  doc["stages"].push_back(doc["stages"][0]);
  const ValidationReport report = validate(model_from_json(doc));
  REQUIRE_FALSE(report.ok());
  CHECK(report.violations.front().find("stages") != std::string::npos);
  CHECK_THROWS_AS(load_model("/nonexistent/model.json"), ModelError);
}

TEST_CASE("model round trip through JSON is exact") {
  SplitMixStream rng(5);
  for (int k = 0; k < 20; ++k) {
    const TeamModel m = random_team_model(rng);
    const TeamModel back = model_from_json(json::parse(model_to_json(m).dump()));
    CHECK(back.dims.n == m.dims.n);
    CHECK(back.influence.alpha == m.influence.alpha);
    for (int t = 1; t <= m.T(); ++t) {
      CHECK(back.stage(t).A == m.stage(t).A);
      CHECK(back.stage(t).Sbar == m.stage(t).Sbar);
      CHECK(back.stage(t).Rbar == m.stage(t).Rbar);
      CHECK(back.Sigma_v(t) == m.Sigma_v(t));
    }
    CHECK(back.noise.Sigma_x == m.noise.Sigma_x);
  }
}

TEST_CASE("schedules read back bit for bit") {
  SplitMixStream rng(6);
  for (int k = 0; k < 20; ++k) {
    const TeamModel m = random_team_model(rng);
    const TeamSolution s = solve_team(m);
    const auto path = std::filesystem::temp_directory_path() / ("deepteam_sched_" + std::to_string(k) + ".json");
    {
      std::ofstream out(path);
      out << solution_to_json(s).dump(1);
    }
    const TeamSolution back = load_solution(path);
    CHECK(first_bitwise_difference(s, back).empty());
    std::filesystem::remove(path);
  }
}

TEST_CASE("bitwise comparison reports the first differing schedule") {
  const TeamSolution s = solve_team(reference_model_s1());
  TeamSolution t = s;
  t.filters.global.gain[1](0, 0) = std::nextafter(t.filters.global.gain[1](0, 0), 1.0);
  CHECK(first_bitwise_difference(s, t) == "global.gain at t=2");
}
