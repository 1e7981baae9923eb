#include "nn/serialize.hpp"

#include <fstream>

#include "common/error.hpp"

namespace s2d::nn {

nlohmann::json to_json(const Network& net) {
  require(net.params().allFinite(), ErrorCode::Numeric, "cannot serialize a network with non-finite parameters");
  nlohmann::json doc;
  doc["version"] = kSnapshotVersion;
  doc["layer_dims"] = net.layer_dims();
  doc["activation"] = net.activation();
  doc["seed"] = net.seed();
  auto blocks = nlohmann::json::array();
  for (std::size_t b = 0; b < net.num_blocks(); ++b) {
    auto values = net.block_values(b);
    blocks.push_back(std::vector<double>(values.begin(), values.end()));
  }
  doc["blocks"] = std::move(blocks);
  return doc;
}

Network network_from_json(const nlohmann::json& doc) {
  try {
    require(doc.at("version").get<int>() == kSnapshotVersion, ErrorCode::InvalidSpec,
            "unsupported network snapshot version");
    auto dims = doc.at("layer_dims").get<std::vector<std::size_t>>();
    require(doc.value("activation", std::string("relu")) == "relu", ErrorCode::InvalidSpec,
            "only relu hidden activations are supported");
    std::vector<double> flat;
    for (const auto& block : doc.at("blocks")) {
      auto values = block.get<std::vector<double>>();
      flat.insert(flat.end(), values.begin(), values.end());
    }
    Vector params = Eigen::Map<const Vector>(flat.data(), static_cast<Eigen::Index>(flat.size()));
    Network net = Network::from_params(std::move(dims), std::move(params), doc.value("seed", std::uint64_t{0}));
    require(doc.at("blocks").size() == net.num_blocks(), ErrorCode::InvalidSpec, "block count mismatch");
    for (std::size_t b = 0; b < net.num_blocks(); ++b) {
      require(doc.at("blocks")[b].size() == net.block(b).size, ErrorCode::InvalidSpec, "block size mismatch");
    }
    return net;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidSpec, std::string("malformed network snapshot: ") + e.what());
  }
}

void save_network(const Network& net, const std::string& path) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorCode::Io, "cannot open " + path + " for writing");
  out << to_json(net).dump() << '\n';
}

Network load_network(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::Io, "cannot open " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidSpec, std::string("cannot parse ") + path + ": " + e.what());
  }
  return network_from_json(doc);
}

}  // namespace s2d::nn
