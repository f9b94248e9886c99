#pragma once

#include "headgs/guidance.hpp"

#include <filesystem>
#include <vector>

namespace headgs {

struct SdsFixtureCase {
  int t = 0;
  std::vector<double> eps_text;
  std::vector<double> eps_neg;
  std::vector<double> residual;
};

/// Branch table at t in {1, 199, 200, 999} with constant weighting.
std::vector<SdsFixtureCase> make_sds_fixture_cases();
GuidanceRequest make_golden_request();
GuidanceResponse make_golden_response();

/// Writes sds_combine.json, golden_request.json and golden_response.json.
void write_guidance_fixtures(const std::filesystem::path& dir);
std::vector<SdsFixtureCase> read_sds_fixture(const std::filesystem::path& path);

}  // namespace headgs
