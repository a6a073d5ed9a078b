#pragma once

// JSON scenario configuration.
//
// Unknown keys are rejected. Errors carry "<source>:<line>: message". A
// top-level "base" names a preset the file is applied on top of (objects
// merge key by key; "truth" is replaced as a whole).

#include <string>
#include <vector>

#include "wlisim/errors.hpp"
#include "wlisim/experiments.hpp"

namespace wlisim {

class ConfigError : public FormatError {
 public:
  using FormatError::FormatError;
};

/// `source` is used in error messages only.
Scenario parse_scenario(const std::string& text, const std::string& source = "<config>");
Scenario load_scenario(const std::string& path);

/// Effective configuration with every key spelled out; parses back to the
/// same scenario.
std::string dump_scenario(const Scenario& s);

std::vector<std::string> preset_names();
/// JSON text of a named preset ("paper-classical", "paper-quantum").
const std::string& preset_json(const std::string& name);
Scenario preset(const std::string& name);

}  // namespace wlisim
