#pragma once

#include <string>

#include "didint/simulation.hpp"

namespace didint {

// Plain-text DGP description: INI sections [design], [schedule], [baseline],
// one [covariate:NAME] and one [gamma:NAME] per covariate. See README for keys.
// Throws ValidationError with the offending key on any problem.
DgpSpec parse_dgp_config(const std::string& text);
DgpSpec load_dgp_config(const std::string& path);

std::string format_dgp_config(const DgpSpec& spec);
void save_dgp_config(const DgpSpec& spec, const std::string& path);

}  // namespace didint
