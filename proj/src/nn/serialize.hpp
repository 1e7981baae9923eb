#pragma once

#include <string>

#include "json.hpp"
#include "nn/network.hpp"

namespace s2d::nn {

inline constexpr int kSnapshotVersion = 1;

// {"version", "layer_dims", "activation", "seed", "blocks": [[...row-major...], ...]}
nlohmann::json to_json(const Network& net);
Network network_from_json(const nlohmann::json& doc);

void save_network(const Network& net, const std::string& path);
Network load_network(const std::string& path);

}  // namespace s2d::nn
