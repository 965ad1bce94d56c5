#pragma once

#include <string>
#include <vector>

#include "betamix/simulate.hpp"
#include "betamix/specdsl.hpp"

namespace betamix {

// Built-in model files: the simulation-study ladder (model-1a..1e with the
// four common-precision priors, model-2a..2e with regression precision) and
// the gasoline-yield ladder (prater-1.1..1.4, prater-2.1..2.6).
std::vector<std::string> model_preset_names();
bool is_model_preset(const std::string& name);
SpecFile model_preset(const std::string& name);        // throws SpecError
std::string model_preset_text(const std::string& name);
std::string model_preset_blurb(const std::string& name);

// Built-in generator configurations for synthetic data.
std::vector<std::string> simulate_preset_names();
GenConfig simulate_preset(const std::string& name);  // throws SpecError

}  // namespace betamix
