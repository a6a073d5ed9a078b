#include <doctest.h>

#include <fstream>
#include <json.hpp>
#include <sstream>

#include "wlisim/errors.hpp"
#include "wlisim/io.hpp"
#include "wlisim/scenario.hpp"

using namespace wlisim;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string error_of(const std::string& text) {
  try {
    parse_scenario(text, "cfg.json");
  } catch (const FormatError& e) {
    return e.what();
  } catch (const DomainError& e) {
    return std::string("domain: ") + e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("preset files on disk match the built-in presets") {
  for (const auto& name : preset_names()) {
    CAPTURE(name);
    CHECK(slurp(std::string(WLISIM_SOURCE_DIR) + "/presets/" + name + ".json") ==
          preset_json(name));
  }
  CHECK_THROWS_AS(preset("paper-nothing"), ConfigError);
}

TEST_CASE("classical preset contents") {
  const auto s = preset("paper-classical");
  CHECK(s.method == FitModel::classical);
  CHECK(s.acquisition.grid.size() == 401);
  CHECK(s.acquisition.source.spectral_intensity == 125e-12);
  CHECK(s.acquisition.integration_time_s == 0.1);
  CHECK(s.noise.poisson_enabled);
  CHECK(s.noise.dark_counts_per_bin == 0.0);
  CHECK(s.auto_spp);
  const auto t = std::get<TaylorModel>(s.truth);
  const auto g = ground_truth_model();
  CHECK(t.d2n == doctest::Approx(g.d2n).epsilon(1e-14));
  CHECK(t.d3n == doctest::Approx(g.d3n).epsilon(1e-14));
  CHECK(t.dn == doctest::Approx(g.dn).epsilon(1e-14));
}

TEST_CASE("quantum preset resolves the raw visibility target to dark counts") {
  const auto s = preset("paper-quantum");
  CHECK(s.method == FitModel::quantum);
  CHECK(s.noise.visibility == 0.955);
  CHECK(s.noise.dark_counts_per_bin > 0.0);
  CHECK(raw_visibility(s) == doctest::Approx(0.871).epsilon(1e-4));
}

TEST_CASE("dump and parse round trip") {
  for (const auto& name : preset_names()) {
    const auto s = preset(name);
    const auto text = dump_scenario(s);
    const auto back = parse_scenario(text, "dump");
    CHECK(dump_scenario(back) == text);
    CHECK(back.noise.dark_counts_per_bin == s.noise.dark_counts_per_bin);
  }
}

TEST_CASE("base preset with overrides") {
  const auto s = parse_scenario(R"({
  "base": "paper-classical",
  "noise": {"poisson": false},
  "geometry": {"sample_length_m": 0.5}
})");
  CHECK_FALSE(s.noise.poisson_enabled);
  CHECK(s.geometry.sample_length_m == 0.5);
  CHECK(s.acquisition.integration_time_s == 0.1);

  const auto q = parse_scenario(R"({"base": "paper-quantum", "noise": {"dark_counts_per_bin": 5.0}})");
  CHECK(q.noise.dark_counts_per_bin == 5.0);
}

TEST_CASE("config errors name the file, line and key") {
  const std::string bad = "{\n  \"geometry\": {\n    \"sample_lenght_m\": 1.0\n  }\n}\n";
  const auto msg = error_of(bad);
  CHECK(msg.find("cfg.json:3:") != std::string::npos);
  CHECK(msg.find("sample_lenght_m") != std::string::npos);

  CHECK(error_of("{\"noise\": {\"visibility\": \"high\"}}").find("noise.visibility") !=
        std::string::npos);
  CHECK(error_of("{\"truth\": {\"model\": \"glass\"}}").find("truth") != std::string::npos);
  CHECK(error_of("{ not json").find("cfg.json") != std::string::npos);
  CHECK(error_of(R"({"noise": {"dark_counts_per_bin": 1, "target_raw_visibility": 0.9}})") != "");
  CHECK(error_of(R"({"geometry": {"reference_length_m": 1.0}})") != "");
  CHECK(error_of(R"({"base": "paper-nothing"})") != "");
}

TEST_CASE("invalid physical values are rejected") {
  CHECK_THROWS(parse_scenario(R"({"grid": {"start_nm": 1500, "stop_nm": 1505, "step_nm": 0.5}})"));
  CHECK_THROWS(parse_scenario(R"({"noise": {"visibility": 1.5}})"));
  CHECK_THROWS(parse_scenario(R"({"systematics": {"arm_imbalance_m": 0.01}})"));
  CHECK_NOTHROW(parse_scenario(R"({"grid": {"start_nm": 1550, "stop_nm": 1550, "step_nm": 0.5}})"));
}

TEST_CASE("sellmeier truth") {
  const auto s = parse_scenario(R"({"truth": {"model": "sellmeier", "preset": "fused-silica"}})");
  REQUIRE(std::holds_alternative<SellmeierModel>(s.truth));
  CHECK(std::get<SellmeierModel>(s.truth).b == SellmeierModel::fused_silica().b);
  const auto t = parse_scenario(R"({"truth": {"model": "sellmeier",
      "b": [0.6961663, 0.4079426, 0.8974794], "c_um2": [0.00467914826, 0.0135120631, 97.9340025],
      "index_offset": 0.001}})");
  CHECK(std::get<SellmeierModel>(t.truth).index_offset == 0.001);
}

TEST_CASE("spectrogram CSV round trip") {
  auto s = preset("paper-classical");
  const auto g = simulate(s, 5);
  std::stringstream ss;
  write_spectrogram_csv(ss, g);
  const auto text = ss.str();
  CHECK(text.rfind("lambda_nm,counts,ref_a,ref_b\n", 0) == 0);
  const auto back = read_spectrogram_csv(ss);
  const auto& a = std::get<ClassicalSpectrogram>(g);
  const auto& b = std::get<ClassicalSpectrogram>(back);
  CHECK(a.counts == b.counts);  // integer counts survive 9 digits
  CHECK(b.grid.size() == 401);
  CHECK(b.grid.step_nm == doctest::Approx(0.5).epsilon(1e-12));

  auto q = preset("paper-quantum");
  std::stringstream qs;
  write_spectrogram_csv(qs, simulate(q, 5));
  const auto qb = read_spectrogram_csv(qs);
  CHECK(std::holds_alternative<CoincidenceSpectrogram>(qb));
}

TEST_CASE("malformed CSV") {
  auto read = [](const std::string& t) {
    std::stringstream ss(t);
    return read_spectrogram_csv(ss, "x.csv");
  };
  CHECK_THROWS_AS(read(""), FormatError);
  CHECK_THROWS_AS(read("wavelength,counts\n1,2\n"), FormatError);
  CHECK_THROWS_AS(read("lambda_nm,noon,non_noon\n1500,1\n"), FormatError);
  CHECK_THROWS_AS(read("lambda_nm,noon,non_noon\n1500,1,2\n1500.5,-1,2\n"), FormatError);
  CHECK_THROWS_AS(read("lambda_nm,noon,non_noon\n1500,1,2\n1500.5,1,2\n1501.5,1,2\n"),
                  FormatError);
  CHECK_THROWS_AS(read("lambda_nm,noon,non_noon\n1500,abc,2\n"), FormatError);
  try {
    read("lambda_nm,noon,non_noon\n1500,1,2\n1500.5,1\n");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("x.csv:3") != std::string::npos);
  }
  const auto one = read("lambda_nm,noon,non_noon\n1550,4,2\n");
  CHECK(std::get<CoincidenceSpectrogram>(one).grid.size() == 1);
}

TEST_CASE("json output rounds to nine significant digits") {
  nlohmann::json j = {{"x", 0.1 + 0.2}, {"n", 3}, {"v", {1.0 / 3.0}}};
  const auto text = dump_json(j);
  CHECK(text.find("\"x\": 0.3\n") != std::string::npos);
  CHECK(text.find("0.333333333") != std::string::npos);
  CHECK(text.find("0.3333333333") == std::string::npos);
  CHECK(format_number(17.0349355123) == "17.0349355");
}

TEST_CASE("fit result JSON keys") {
  auto s = preset("paper-classical");
  s.noise.poisson_enabled = false;
  const auto r = fit(s, normalize(simulate(s, 1)));
  const auto j = to_json(r);
  for (const char* key : {"model", "params", "sigma", "D_ps_nm_km", "D_sigma", "residual_rms",
                          "chi2_per_dof", "converged", "iterations"}) {
    CHECK(j.contains(key));
  }
  CHECK(j["params"].contains("lambda0_nm"));
}
