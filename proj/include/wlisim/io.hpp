#pragma once

// CSV and JSON emission. Floating-point output uses 9 significant digits.

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "wlisim/experiments.hpp"

namespace wlisim {

/// printf("%.9g").
std::string format_number(double x);

void write_spectrogram_csv(std::ostream& out, const Spectrogram& s);
/// Reads either CSV layout (chosen by the header). Throws FormatError on a
/// malformed file or unevenly spaced wavelengths.
Spectrogram read_spectrogram_csv(std::istream& in, const std::string& source = "<csv>");

nlohmann::json to_json(const FitResult& r);
nlohmann::json to_json(const MonteCarloReport& r);
nlohmann::json to_json(const SystematicsReport& r);
nlohmann::json to_json(const FringeReport& r);
nlohmann::json to_json(const CalibrationReport& r);

void write_trials_csv(std::ostream& out, const MonteCarloReport& r);
void write_histogram_csv(std::ostream& out, const Histogram& h);
void write_systematics_csv(std::ostream& out, const SystematicsReport& r);

/// JSON text with every double rounded to 9 significant digits.
std::string dump_json(const nlohmann::json& j);

}  // namespace wlisim
