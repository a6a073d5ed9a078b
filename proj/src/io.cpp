#include "wlisim/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>

#include "wlisim/errors.hpp"

namespace wlisim {
namespace {

using nlohmann::json;

double round9(double x) {
  if (!std::isfinite(x)) return x;
  return std::strtod(format_number(x).c_str(), nullptr);
}

json rounded(const json& j) {
  if (j.is_number_float()) return round9(j.get<double>());
  if (j.is_object()) {
    json out = json::object();
    for (const auto& [k, v] : j.items()) out[k] = rounded(v);
    return out;
  }
  if (j.is_array()) {
    json out = json::array();
    for (const auto& v : j) out.push_back(rounded(v));
    return out;
  }
  return j;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  return out;
}

double parse_cell(const std::string& cell, const std::string& where) {
  if (cell.empty()) throw FormatError(where + ": empty cell");
  char* end = nullptr;
  const double v = std::strtod(cell.c_str(), &end);
  if (end != cell.c_str() + cell.size() || !std::isfinite(v)) {
    throw FormatError(where + ": not a number: '" + cell + "'");
  }
  return v;
}

}  // namespace

std::string format_number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

std::string dump_json(const json& j) { return rounded(j).dump(2) + "\n"; }

void write_spectrogram_csv(std::ostream& out, const Spectrogram& s) {
  if (const auto* c = std::get_if<ClassicalSpectrogram>(&s)) {
    out << "lambda_nm,counts,ref_a,ref_b\n";
    for (std::size_t i = 0; i < c->counts.size(); ++i) {
      out << format_number(c->grid.wavelength(i)) << ',' << format_number(c->counts[i]) << ','
          << format_number(c->ref_a[i]) << ',' << format_number(c->ref_b[i]) << '\n';
    }
    return;
  }
  const auto& q = std::get<CoincidenceSpectrogram>(s);
  out << "lambda_nm,noon,non_noon\n";
  for (std::size_t i = 0; i < q.noon_counts.size(); ++i) {
    out << format_number(q.grid.wavelength(i)) << ',' << format_number(q.noon_counts[i]) << ','
        << format_number(q.non_noon_counts[i]) << '\n';
  }
}

Spectrogram read_spectrogram_csv(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError(source + ":1: empty file");
  const auto header = split(line);
  const bool classical = header == std::vector<std::string>{"lambda_nm", "counts", "ref_a", "ref_b"};
  const bool quantum = header == std::vector<std::string>{"lambda_nm", "noon", "non_noon"};
  if (!classical && !quantum) {
    throw FormatError(source + ":1: expected header 'lambda_nm,counts,ref_a,ref_b' or "
                      "'lambda_nm,noon,non_noon'");
  }
  std::vector<std::vector<double>> cols(header.size());
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split(line);
    const std::string where = source + ":" + std::to_string(lineno);
    if (cells.size() != header.size()) {
      throw FormatError(where + ": expected " + std::to_string(header.size()) + " columns");
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const double v = parse_cell(cells[c], where);
      if (c > 0 && v < 0.0) throw FormatError(where + ": negative count");
      cols[c].push_back(v);
    }
  }
  const auto& lam = cols[0];
  if (lam.empty()) throw FormatError(source + ": no data rows");
  SpectralGrid grid;
  grid.start_nm = lam.front();
  grid.stop_nm = lam.back();
  grid.step_nm = lam.size() > 1 ? (lam.back() - lam.front()) / static_cast<double>(lam.size() - 1)
                                : 0.5;
  for (std::size_t i = 0; i < lam.size(); ++i) {
    if (std::abs(lam[i] - grid.wavelength(i)) > 1e-6 * std::max(1.0, std::abs(lam[i]))) {
      throw FormatError(source + ":" + std::to_string(i + 2) +
                        ": wavelengths must be evenly spaced and increasing");
    }
  }
  if (lam.size() > 1 && !(grid.step_nm > 0.0)) {
    throw FormatError(source + ": wavelengths must be increasing");
  }
  if (classical) return ClassicalSpectrogram{grid, cols[1], cols[2], cols[3]};
  return CoincidenceSpectrogram{grid, cols[1], cols[2]};
}

json to_json(const FitResult& r) {
  json params = json::object(), sigma = json::object();
  for (std::size_t i = 0; i < r.names.size(); ++i) {
    params[r.names[i]] = r.params[i];
    sigma[r.names[i]] = r.sigma[i];
  }
  return {{"model", to_string(r.model)},
          {"params", params},
          {"sigma", sigma},
          {"D_ps_nm_km", r.D},
          {"D_sigma", r.D_sigma},
          {"reference_wavelength_nm", r.reference_wavelength_nm},
          {"residual_rms", r.residual_rms},
          {"chi2_per_dof", r.chi2_per_dof},
          {"converged", r.converged},
          {"iterations", r.iterations},
          {"bins_used", r.bins_used},
          {"flags", r.flags}};
}

json to_json(const MonteCarloReport& r) {
  json trials = json::array();
  for (const auto& t : r.trials) {
    trials.push_back({{"trial", t.trial},
                      {"seed", t.seed},
                      {"D", t.D},
                      {"D_sigma", t.D_sigma},
                      {"converged", t.converged}});
  }
  return {{"method", to_string(r.method)},
          {"n_trials", r.trials.size()},
          {"truth_D", r.truth_D},
          {"mean_D", r.mean_D},
          {"std_D", r.std_D},
          {"mean_D_sigma", r.mean_D_sigma},
          {"n_photons_per_trial", r.n_photons_per_trial},
          {"failed_trials", r.failed_trials},
          {"usable", r.usable},
          {"skewness", r.skewness},
          {"excess_kurtosis", r.excess_kurtosis},
          {"normality_ok", r.normality_ok},
          {"histogram", {{"edges", r.histogram.edges}, {"counts", r.histogram.counts}}},
          {"trials", trials}};
}

json to_json(const SystematicsReport& r) {
  json pts = json::array();
  for (const auto& p : r.points) {
    pts.push_back({{"offset", p.offset},
                   {"bias_classical", p.bias_classical},
                   {"bias_quantum", p.bias_quantum},
                   {"classical_ok", p.classical_ok},
                   {"quantum_ok", p.quantum_ok}});
  }
  return {{"axis", to_string(r.axis)}, {"points", pts}};
}

json to_json(const FringeReport& r) {
  return {{"classical_crossings", r.classical_crossings},
          {"quantum_crossings", r.quantum_crossings},
          {"ratio", r.ratio},
          {"classical_phase_excursion_rad", r.classical_excursion},
          {"quantum_phase_excursion_rad", r.quantum_excursion}};
}

json to_json(const CalibrationReport& r) {
  return {{"bare_fit", to_json(r.bare_fit)},
          {"loaded_fit", to_json(r.loaded_fit)},
          {"corrected_D", r.corrected.D},
          {"corrected_D_sigma", r.corrected.D_sigma},
          {"bare_fraction", r.corrected.bare_fraction},
          {"truth_D", r.truth_D}};
}

void write_trials_csv(std::ostream& out, const MonteCarloReport& r) {
  out << "trial,seed,D,D_sigma,converged\n";
  for (const auto& t : r.trials) {
    out << t.trial << ',' << t.seed << ',' << format_number(t.D) << ','
        << format_number(t.D_sigma) << ',' << (t.converged ? 1 : 0) << '\n';
  }
}

void write_histogram_csv(std::ostream& out, const Histogram& h) {
  out << "bin_left,bin_right,count\n";
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    out << format_number(h.edges[i]) << ',' << format_number(h.edges[i + 1]) << ','
        << h.counts[i] << '\n';
  }
}

void write_systematics_csv(std::ostream& out, const SystematicsReport& r) {
  out << "offset,bias_classical,bias_quantum,classical_ok,quantum_ok\n";
  for (const auto& p : r.points) {
    out << format_number(p.offset) << ',' << format_number(p.bias_classical) << ','
        << format_number(p.bias_quantum) << ',' << (p.classical_ok ? 1 : 0) << ','
        << (p.quantum_ok ? 1 : 0) << '\n';
  }
}

}  // namespace wlisim
