#include "rwre/snapshot.hpp"

#include <fstream>

namespace rwre {

nlohmann::json to_json(const TorusEnvironment& env) {
  nlohmann::json sites = nlohmann::json::array();
  for (std::size_t s = 0; s < env.size(); ++s) {
    auto probs = env.site_probs(s);
    sites.push_back(std::vector<double>(probs.begin(), probs.end()));
  }
  return {{"d", env.dim()}, {"n", env.half_period()}, {"order", kSnapshotOrder}, {"sites", std::move(sites)}};
}

TorusEnvironment environment_from_json(const nlohmann::json& j) {
  try {
    const int d = j.at("d").get<int>();
    const int n = j.at("n").get<int>();
    if (j.contains("order") && j.at("order").get<std::string>() != kSnapshotOrder) {
      throw Error(ErrorCode::InvalidSpec, "unsupported site order");
    }
    std::vector<double> probs;
    for (const auto& site : j.at("sites")) {
      if (site.size() != static_cast<std::size_t>(2 * d + 1)) {
        throw Error(ErrorCode::InvalidSpec, "site with wrong number of moves");
      }
      for (const auto& p : site) probs.push_back(p.get<double>());
    }
    return TorusEnvironment(d, n, std::move(probs));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidSpec, std::string("bad environment snapshot: ") + e.what());
  }
}

void save_environment(const TorusEnvironment& env, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::ConfigError, "cannot write " + path.string());
  out << to_json(env).dump() << '\n';
}

TorusEnvironment load_environment(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot read " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidSpec, std::string("bad environment snapshot: ") + e.what());
  }
  return environment_from_json(j);
}

}  // namespace rwre
