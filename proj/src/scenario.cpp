#include "wlisim/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace wlisim {
namespace {

using nlohmann::json;

const std::map<std::string, std::string>& presets() {
  static const std::map<std::string, std::string> p = {
      {"paper-classical", R"({
  "truth": {
    "model": "taylor",
    "anchor_nm": 1560.493,
    "n": 1.4624,
    "group_index": 1.4682,
    "dispersion_ps_nm_km": 17.035,
    "slope_ps_nm2_km": 0.058
  },
  "geometry": {
    "sample_length_m": 1.0,
    "offset_phase_rad": 0.0,
    "auto_spp": true,
    "spp_wavelength_nm": 1560.493
  },
  "interferometer_d2n": 0.0,
  "grid": {"start_nm": 1450.0, "stop_nm": 1650.0, "step_nm": 0.5},
  "source": {
    "shape": "flat",
    "center_nm": 1550.0,
    "fwhm_nm": 200.0,
    "spectral_intensity_w_per_nm": 1.25e-10
  },
  "integration_time_s": 0.1,
  "pump_wavelength_nm": 780.246,
  "quartic_residual": false,
  "noise": {
    "poisson": true,
    "visibility": 1.0,
    "dark_counts_per_bin": 0.0,
    "phase_jitter_rms_rad": 0.0,
    "seed": 1
  },
  "systematics": {"spectrometer_offset_nm": 0.0, "arm_imbalance_m": 0.0},
  "fit": {"method": "classical", "weighted": true},
  "master_seed": 1
}
)"},
      {"paper-quantum", R"({
  "truth": {
    "model": "taylor",
    "anchor_nm": 1560.493,
    "n": 1.4624,
    "group_index": 1.4682,
    "dispersion_ps_nm_km": 17.035,
    "slope_ps_nm2_km": 0.058
  },
  "geometry": {
    "sample_length_m": 1.0,
    "offset_phase_rad": 0.0,
    "auto_spp": true,
    "spp_wavelength_nm": 1560.493
  },
  "interferometer_d2n": 0.0,
  "grid": {"start_nm": 1460.492, "stop_nm": 1660.492, "step_nm": 0.5},
  "source": {
    "shape": "gaussian",
    "center_nm": 1560.492,
    "fwhm_nm": 140.0,
    "spectral_intensity_w_per_nm": 2.5e-14
  },
  "integration_time_s": 8.0,
  "pump_wavelength_nm": 780.246,
  "quartic_residual": false,
  "noise": {
    "poisson": true,
    "visibility": 0.955,
    "target_raw_visibility": 0.871,
    "phase_jitter_rms_rad": 0.0,
    "seed": 2
  },
  "systematics": {"spectrometer_offset_nm": 0.0, "arm_imbalance_m": 0.0},
  "fit": {"method": "quantum", "weighted": true},
  "master_seed": 2
}
)"},
  };
  return p;
}

// Line of the last key of `path`, found by scanning for each quoted key in
// turn. Zero when a key cannot be located (e.g. it came from a preset).
int find_line(const std::string& text, const std::vector<std::string>& path) {
  std::size_t pos = 0;
  for (const auto& key : path) {
    const std::string quoted = "\"" + key + "\"";
    while (true) {
      pos = text.find(quoted, pos);
      if (pos == std::string::npos) return 0;
      std::size_t after = pos + quoted.size();
      while (after < text.size() && std::isspace(static_cast<unsigned char>(text[after]))) ++after;
      if (after < text.size() && text[after] == ':') break;
      pos += quoted.size();
    }
  }
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<long>(pos), '\n'));
}

class Reader {
 public:
  Reader(const std::string& text, std::string source) : text_(text), source_(std::move(source)) {}

  [[noreturn]] void fail(const std::vector<std::string>& path, const std::string& msg) const {
    std::string dotted;
    for (const auto& k : path) dotted += (dotted.empty() ? "" : ".") + k;
    const int line = find_line(text_, path);
    std::ostringstream os;
    os << source_ << ':' << (line > 0 ? line : 1) << ": " << (dotted.empty() ? "" : dotted + ": ")
       << msg;
    throw ConfigError(os.str());
  }

  void check_keys(const json& obj, const std::vector<std::string>& path,
                  const std::vector<std::string>& allowed) const {
    if (!obj.is_object()) fail(path, "expected an object");
    for (const auto& [k, v] : obj.items()) {
      if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) {
        auto p = path;
        p.push_back(k);
        fail(p, "unknown key");
      }
    }
  }

  double number(const json& obj, const std::vector<std::string>& path, const std::string& key,
                double fallback) const {
    if (!obj.contains(key)) return fallback;
    return number(obj, path, key);
  }
  double number(const json& obj, const std::vector<std::string>& path,
                const std::string& key) const {
    auto p = path;
    p.push_back(key);
    if (!obj.contains(key)) fail(p, "missing required key");
    const auto& v = obj.at(key);
    if (!v.is_number()) fail(p, "expected a number");
    return v.get<double>();
  }
  bool boolean(const json& obj, const std::vector<std::string>& path, const std::string& key,
               bool fallback) const {
    if (!obj.contains(key)) return fallback;
    auto p = path;
    p.push_back(key);
    if (!obj.at(key).is_boolean()) fail(p, "expected true or false");
    return obj.at(key).get<bool>();
  }
  std::string string(const json& obj, const std::vector<std::string>& path,
                     const std::string& key, const std::string& fallback) const {
    if (!obj.contains(key)) return fallback;
    auto p = path;
    p.push_back(key);
    if (!obj.at(key).is_string()) fail(p, "expected a string");
    return obj.at(key).get<std::string>();
  }
  std::uint64_t u64(const json& obj, const std::vector<std::string>& path, const std::string& key,
                    std::uint64_t fallback) const {
    if (!obj.contains(key)) return fallback;
    auto p = path;
    p.push_back(key);
    const auto& v = obj.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
      fail(p, "expected a non-negative integer");
    }
    return v.get<std::uint64_t>();
  }
  std::array<double, 3> triple(const json& obj, const std::vector<std::string>& path,
                               const std::string& key) const {
    auto p = path;
    p.push_back(key);
    if (!obj.contains(key)) fail(p, "missing required key");
    const auto& v = obj.at(key);
    if (!v.is_array() || v.size() != 3) fail(p, "expected an array of 3 numbers");
    std::array<double, 3> out{};
    for (std::size_t i = 0; i < 3; ++i) {
      if (!v[i].is_number()) fail(p, "expected an array of 3 numbers");
      out[i] = v[i].get<double>();
    }
    return out;
  }

 private:
  const std::string& text_;
  std::string source_;
};

RefractiveIndexModel read_truth(const Reader& r, const json& t) {
  const std::vector<std::string> path = {"truth"};
  const std::string model = r.string(t, path, "model", "");
  if (model == "ground-truth") {
    r.check_keys(t, path, {"model"});
    return ground_truth_model();
  }
  if (model == "sellmeier") {
    if (t.contains("preset")) {
      r.check_keys(t, path, {"model", "preset", "index_offset"});
      if (r.string(t, path, "preset", "") != "fused-silica") {
        r.fail({"truth", "preset"}, "unknown Sellmeier preset");
      }
      auto m = SellmeierModel::fused_silica();
      m.index_offset = r.number(t, path, "index_offset", 0.0);
      return m;
    }
    r.check_keys(t, path, {"model", "b", "c_um2", "index_offset"});
    SellmeierModel m;
    m.b = r.triple(t, path, "b");
    m.c_um2 = r.triple(t, path, "c_um2");
    m.index_offset = r.number(t, path, "index_offset", 0.0);
    return m;
  }
  if (model == "taylor") {
    r.check_keys(t, path,
                 {"model", "anchor_nm", "n", "dn", "group_index", "d2n", "d3n",
                  "dispersion_ps_nm_km", "slope_ps_nm2_km"});
    TaylorModel m;
    m.anchor_nm = r.number(t, path, "anchor_nm");
    m.n = r.number(t, path, "n");
    if (t.contains("dn") && t.contains("group_index")) {
      r.fail({"truth", "group_index"}, "give either dn or group_index");
    }
    m.dn = t.contains("group_index") ? (m.n - r.number(t, path, "group_index")) / m.anchor_nm
                                     : r.number(t, path, "dn", 0.0);
    const bool raw = t.contains("d2n") || t.contains("d3n");
    const bool physical = t.contains("dispersion_ps_nm_km") || t.contains("slope_ps_nm2_km");
    if (raw && physical) {
      r.fail({"truth", "dispersion_ps_nm_km"}, "give either d2n/d3n or dispersion/slope");
    }
    if (physical) {
      const auto tm = taylor_from_dispersion(m.anchor_nm, m.n, m.dn,
                                             r.number(t, path, "dispersion_ps_nm_km", 0.0),
                                             r.number(t, path, "slope_ps_nm2_km", 0.0));
      m.d2n = tm.d2n;
      m.d3n = tm.d3n;
    } else {
      m.d2n = r.number(t, path, "d2n", 0.0);
      m.d3n = r.number(t, path, "d3n", 0.0);
    }
    return m;
  }
  r.fail({"truth", "model"}, "expected \"taylor\", \"sellmeier\" or \"ground-truth\"");
}

Scenario read_scenario(const Reader& r, const json& j) {
  r.check_keys(j, {},
               {"base", "truth", "geometry", "interferometer_d2n", "grid", "source",
                "integration_time_s", "pump_wavelength_nm", "quartic_residual", "noise",
                "systematics", "fit", "master_seed"});
  Scenario s;
  if (j.contains("truth")) s.truth = read_truth(r, j.at("truth"));

  if (j.contains("geometry")) {
    const auto& g = j.at("geometry");
    const std::vector<std::string> p = {"geometry"};
    r.check_keys(g, p,
                 {"sample_length_m", "reference_length_m", "offset_phase_rad", "auto_spp",
                  "spp_wavelength_nm"});
    s.geometry.sample_length_m = r.number(g, p, "sample_length_m", s.geometry.sample_length_m);
    s.geometry.reference_length_m = r.number(g, p, "reference_length_m", 0.0);
    s.geometry.offset_phase = r.number(g, p, "offset_phase_rad", 0.0);
    s.auto_spp = r.boolean(g, p, "auto_spp", true);
    s.spp_wavelength_nm = r.number(g, p, "spp_wavelength_nm", s.spp_wavelength_nm);
    if (s.auto_spp && g.contains("reference_length_m")) {
      r.fail({"geometry", "reference_length_m"}, "set auto_spp to false to give L_r");
    }
  }
  s.interferometer_d2n = r.number(j, {}, "interferometer_d2n", 0.0);

  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    const std::vector<std::string> p = {"grid"};
    r.check_keys(g, p, {"start_nm", "stop_nm", "step_nm"});
    s.acquisition.grid.start_nm = r.number(g, p, "start_nm");
    s.acquisition.grid.stop_nm = r.number(g, p, "stop_nm");
    s.acquisition.grid.step_nm = r.number(g, p, "step_nm");
  }
  if (j.contains("source")) {
    const auto& g = j.at("source");
    const std::vector<std::string> p = {"source"};
    r.check_keys(g, p, {"shape", "center_nm", "fwhm_nm", "spectral_intensity_w_per_nm"});
    const std::string shape = r.string(g, p, "shape", "flat");
    if (shape == "flat") {
      s.acquisition.source.shape = SpectrumShape::flat;
    } else if (shape == "gaussian") {
      s.acquisition.source.shape = SpectrumShape::gaussian;
    } else {
      r.fail({"source", "shape"}, "expected \"flat\" or \"gaussian\"");
    }
    s.acquisition.source.center_nm = r.number(g, p, "center_nm", s.acquisition.source.center_nm);
    s.acquisition.source.fwhm_nm = r.number(g, p, "fwhm_nm", s.acquisition.source.fwhm_nm);
    s.acquisition.source.spectral_intensity =
        r.number(g, p, "spectral_intensity_w_per_nm", s.acquisition.source.spectral_intensity);
  }
  s.acquisition.integration_time_s =
      r.number(j, {}, "integration_time_s", s.acquisition.integration_time_s);
  s.pump_wavelength_nm = r.number(j, {}, "pump_wavelength_nm", s.pump_wavelength_nm);
  s.quartic_residual = r.boolean(j, {}, "quartic_residual", false);

  std::optional<double> target_visibility;
  if (j.contains("noise")) {
    const auto& g = j.at("noise");
    const std::vector<std::string> p = {"noise"};
    r.check_keys(g, p,
                 {"poisson", "visibility", "dark_counts_per_bin", "target_raw_visibility",
                  "phase_jitter_rms_rad", "seed"});
    s.noise.poisson_enabled = r.boolean(g, p, "poisson", false);
    s.noise.visibility = r.number(g, p, "visibility", 1.0);
    s.noise.dark_counts_per_bin = r.number(g, p, "dark_counts_per_bin", 0.0);
    if (g.contains("target_raw_visibility")) {
      if (g.contains("dark_counts_per_bin")) {
        r.fail({"noise", "target_raw_visibility"},
               "give either dark_counts_per_bin or target_raw_visibility");
      }
      target_visibility = r.number(g, p, "target_raw_visibility");
    }
    s.noise.phase_jitter_rms = r.number(g, p, "phase_jitter_rms_rad", 0.0);
    s.noise.rng_seed = r.u64(g, p, "seed", 0);
  }
  if (j.contains("systematics")) {
    const auto& g = j.at("systematics");
    const std::vector<std::string> p = {"systematics"};
    r.check_keys(g, p, {"spectrometer_offset_nm", "arm_imbalance_m"});
    s.systematics.spectrometer_offset_nm = r.number(g, p, "spectrometer_offset_nm", 0.0);
    s.systematics.arm_imbalance_m = r.number(g, p, "arm_imbalance_m", 0.0);
  }
  if (j.contains("fit")) {
    const auto& g = j.at("fit");
    const std::vector<std::string> p = {"fit"};
    r.check_keys(g, p,
                 {"method", "weighted", "fit_offset_phase", "fit_visibility", "absolute_sigma",
                  "classical_init", "quantum_init", "max_iter", "step_tol", "grad_tol",
                  "initial_damping"});
    try {
      s.method = fit_model_from_string(r.string(g, p, "method", "classical"));
    } catch (const DomainError& e) {
      r.fail({"fit", "method"}, e.what());
    }
    s.fit.weighted = r.boolean(g, p, "weighted", true);
    s.fit.fit_offset_phase = r.boolean(g, p, "fit_offset_phase", false);
    s.fit.fit_visibility = r.boolean(g, p, "fit_visibility", false);
    s.fit.absolute_sigma = r.boolean(g, p, "absolute_sigma", false);
    if (g.contains("classical_init")) {
      const auto& c = g.at("classical_init");
      const std::vector<std::string> q = {"fit", "classical_init"};
      r.check_keys(c, q, {"lambda0_nm", "d2n", "d3n"});
      s.fit.classical_init = ClassicalFitParams{r.number(c, q, "lambda0_nm"),
                                                r.number(c, q, "d2n"), r.number(c, q, "d3n", 0.0)};
    }
    if (g.contains("quantum_init")) {
      const auto& c = g.at("quantum_init");
      const std::vector<std::string> q = {"fit", "quantum_init"};
      r.check_keys(c, q, {"d2n"});
      s.fit.quantum_init = QuantumFitParams{r.number(c, q, "d2n")};
    }
    const double max_iter = r.number(g, p, "max_iter", s.fit.solver.max_iter);
    if (!(max_iter >= 1.0) || max_iter != std::floor(max_iter)) {
      r.fail({"fit", "max_iter"}, "expected a positive integer");
    }
    s.fit.solver.max_iter = static_cast<int>(max_iter);
    s.fit.solver.step_tol = r.number(g, p, "step_tol", s.fit.solver.step_tol);
    s.fit.solver.grad_tol = r.number(g, p, "grad_tol", s.fit.solver.grad_tol);
    s.fit.solver.initial_damping = r.number(g, p, "initial_damping", s.fit.solver.initial_damping);
  }
  s.master_seed = r.u64(j, {}, "master_seed", s.master_seed);

  try {
    s.validate();
    if (target_visibility) {
      s.noise.dark_counts_per_bin = calibrate_dark_counts(s, *target_visibility);
    }
  } catch (const DomainError& e) {
    r.fail({}, e.what());
  }
  return s;
}

json parse_json(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t byte = std::min<std::size_t>(e.byte, text.size());
    const int line =
        1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<long>(byte), '\n'));
    std::string msg = e.what();
    throw ConfigError(source + ":" + std::to_string(line) + ": invalid JSON: " + msg);
  }
}

}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (const auto& [k, v] : presets()) out.push_back(k);
  return out;
}

const std::string& preset_json(const std::string& name) {
  const auto it = presets().find(name);
  if (it == presets().end()) throw ConfigError("unknown preset '" + name + "'");
  return it->second;
}

Scenario preset(const std::string& name) { return parse_scenario(preset_json(name), name); }

Scenario parse_scenario(const std::string& text, const std::string& source) {
  json j = parse_json(text, source);
  if (!j.is_object()) throw ConfigError(source + ":1: expected a JSON object");
  if (j.contains("base")) {
    if (!j.at("base").is_string()) {
      throw ConfigError(source + ":" + std::to_string(std::max(find_line(text, {"base"}), 1)) +
                        ": base: expected a preset name");
    }
    const std::string name = j.at("base").get<std::string>();
    if (!presets().count(name)) {
      throw ConfigError(source + ":" + std::to_string(std::max(find_line(text, {"base"}), 1)) +
                        ": base: unknown preset '" + name + "'");
    }
    json merged = json::parse(presets().at(name));
    if (j.contains("truth")) merged["truth"] = j.at("truth");
    json rest = j;
    rest.erase("base");
    rest.erase("truth");
    // A dark count given explicitly replaces the preset's calibration target.
    if (rest.contains("noise") && rest["noise"].is_object() &&
        rest["noise"].contains("dark_counts_per_bin") && merged["noise"].is_object()) {
      merged["noise"].erase("target_raw_visibility");
    }
    if (rest.contains("noise") && rest["noise"].is_object() &&
        rest["noise"].contains("target_raw_visibility") && merged["noise"].is_object()) {
      merged["noise"].erase("dark_counts_per_bin");
    }
    merged.merge_patch(rest);
    return read_scenario(Reader(text, source), merged);
  }
  return read_scenario(Reader(text, source), j);
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ":1: cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), path);
}

std::string dump_scenario(const Scenario& s) {
  json j;
  if (const auto* t = std::get_if<TaylorModel>(&s.truth)) {
    j["truth"] = {{"model", "taylor"}, {"anchor_nm", t->anchor_nm}, {"n", t->n},
                  {"dn", t->dn},       {"d2n", t->d2n},             {"d3n", t->d3n}};
  } else {
    const auto& m = std::get<SellmeierModel>(s.truth);
    j["truth"] = {{"model", "sellmeier"},
                  {"b", m.b},
                  {"c_um2", m.c_um2},
                  {"index_offset", m.index_offset}};
  }
  j["geometry"] = {{"sample_length_m", s.geometry.sample_length_m},
                   {"offset_phase_rad", s.geometry.offset_phase},
                   {"auto_spp", s.auto_spp},
                   {"spp_wavelength_nm", s.spp_wavelength_nm}};
  if (!s.auto_spp) j["geometry"]["reference_length_m"] = s.geometry.reference_length_m;
  j["interferometer_d2n"] = s.interferometer_d2n;
  const auto& g = s.acquisition.grid;
  j["grid"] = {{"start_nm", g.start_nm}, {"stop_nm", g.stop_nm}, {"step_nm", g.step_nm}};
  const auto& src = s.acquisition.source;
  j["source"] = {{"shape", src.shape == SpectrumShape::flat ? "flat" : "gaussian"},
                 {"center_nm", src.center_nm},
                 {"fwhm_nm", src.fwhm_nm},
                 {"spectral_intensity_w_per_nm", src.spectral_intensity}};
  j["integration_time_s"] = s.acquisition.integration_time_s;
  j["pump_wavelength_nm"] = s.pump_wavelength_nm;
  j["quartic_residual"] = s.quartic_residual;
  j["noise"] = {{"poisson", s.noise.poisson_enabled},
                {"visibility", s.noise.visibility},
                {"dark_counts_per_bin", s.noise.dark_counts_per_bin},
                {"phase_jitter_rms_rad", s.noise.phase_jitter_rms},
                {"seed", s.noise.rng_seed}};
  j["systematics"] = {{"spectrometer_offset_nm", s.systematics.spectrometer_offset_nm},
                      {"arm_imbalance_m", s.systematics.arm_imbalance_m}};
  json f = {{"method", to_string(s.method)},
            {"weighted", s.fit.weighted},
            {"fit_offset_phase", s.fit.fit_offset_phase},
            {"fit_visibility", s.fit.fit_visibility},
            {"absolute_sigma", s.fit.absolute_sigma},
            {"max_iter", s.fit.solver.max_iter},
            {"step_tol", s.fit.solver.step_tol},
            {"grad_tol", s.fit.solver.grad_tol},
            {"initial_damping", s.fit.solver.initial_damping}};
  if (s.fit.classical_init) {
    f["classical_init"] = {{"lambda0_nm", s.fit.classical_init->lambda0_nm},
                           {"d2n", s.fit.classical_init->d2n},
                           {"d3n", s.fit.classical_init->d3n}};
  }
  if (s.fit.quantum_init) f["quantum_init"] = {{"d2n", s.fit.quantum_init->d2n}};
  j["fit"] = f;
  j["master_seed"] = s.master_seed;
  return j.dump(2) + "\n";
}

}  // namespace wlisim
