#pragma once

#include "envs/env.hpp"
#include "json.hpp"

namespace s2d::harness {

/// Certificate for the shipped (sparse, sparse + shaping) pair. Random-goal gridworlds are checked
/// once per candidate goal and pass only if every goal passes.
nlohmann::json check_pbrs(const env::EnvSpec& spec, double gamma, double tol);

}  // namespace s2d::harness
