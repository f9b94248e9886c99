#include "headgs/fixtures.hpp"

#include "headgs/binary_io.hpp"
#include "headgs/errors.hpp"
#include "headgs/wire.hpp"

#include <nlohmann/json.hpp>

#include <random>

namespace headgs {

using nlohmann::json;

std::vector<SdsFixtureCase> make_sds_fixture_cases() {
  std::mt19937_64 rng(20240607);
  std::uniform_int_distribution<int> q(-1000, 1000);
  // Values on a 1/1000 grid so the JSON text stays short and exact enough.
  auto draw = [&] {
    std::vector<double> v(12);
    for (auto& x : v) x = q(rng) / 1000.0;
    return v;
  };
  SdsConfig cfg;
  cfg.weighting = SdsWeighting::Constant;
  std::vector<SdsFixtureCase> out;
  for (int t : {1, 199, 200, 999}) {
    SdsFixtureCase c;
    c.t = t;
    c.eps_text = draw();
    c.eps_neg = draw();
    c.residual = sds_combine(c.eps_text, c.eps_neg, t, cfg);
    out.push_back(std::move(c));
  }
  return out;
}

GuidanceRequest make_golden_request() {
  GuidanceRequest r;
  r.prompt = "a DSLR portrait of an elderly man with a beard, front view";
  r.timestep = 250;
  r.image = Image(4, 4, 3);
  for (std::size_t i = 0; i < r.image.data.size(); ++i) r.image.data[i] = static_cast<double>(i % 7) / 8.0;
  r.condition = Image(4, 4, 3, 0.0);
  r.condition.at(1, 1, 0) = 1.0;
  r.condition.at(2, 2, 1) = 1.0;
  r.condition.at(1, 2, 2) = 1.0;
  return r;
}

GuidanceResponse make_golden_response() {
  GuidanceResponse r;
  r.timestep = 250;
  r.provider = "remote";
  r.gradient = Image(4, 4, 3);
  for (std::size_t i = 0; i < r.gradient.data.size(); ++i)
    r.gradient.data[i] = (static_cast<double>(i % 5) - 2.0) / 64.0;
  return r;
}

void write_guidance_fixtures(const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  json cases = json::array();
  for (const auto& c : make_sds_fixture_cases())
    cases.push_back({{"t", c.t}, {"eps_text", c.eps_text}, {"eps_neg", c.eps_neg}, {"residual", c.residual}});
  const json doc = {{"version", wire::kProtocolVersion},
                    {"t_split", SdsConfig{}.t_split},
                    {"weighting", "constant"},
                    {"cases", cases}};
  io::write_text(dir / "sds_combine.json", doc.dump(2) + "\n");
  io::write_text(dir / "golden_request.json", wire::encode_request(make_golden_request()));
  io::write_text(dir / "golden_response.json", wire::encode_response(make_golden_response()));
}

std::vector<SdsFixtureCase> read_sds_fixture(const std::filesystem::path& path) {
  const json doc = json::parse(io::read_text(path), nullptr, false);
  if (doc.is_discarded()) throw Error("fixture " + path.string() + " is not valid JSON");
  std::vector<SdsFixtureCase> out;
  for (const auto& c : doc.at("cases")) {
    SdsFixtureCase f;
    f.t = c.at("t").get<int>();
    f.eps_text = c.at("eps_text").get<std::vector<double>>();
    f.eps_neg = c.at("eps_neg").get<std::vector<double>>();
    f.residual = c.at("residual").get<std::vector<double>>();
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace headgs
