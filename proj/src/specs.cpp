#include "fgplab/specs.hpp"

#include <fstream>
#include <sstream>

#include "fgplab/calculus.hpp"

namespace fgplab {

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
}

nlohmann::json read_json_arg(const std::string& text_or_path) {
  const auto first = text_or_path.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && (text_or_path[first] == '{' || text_or_path[first] == '[')) {
    try {
      return nlohmann::json::parse(text_or_path);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("inline JSON: ") + e.what());
    }
  }
  return read_json_file(text_or_path);
}

PortfolioSpec portfolio_from_json(const nlohmann::json& spec) {
  try {
    const std::string kind = spec.at("kind").get<std::string>();
    std::optional<Index> n;
    if (spec.contains("n")) n = spec.at("n").get<Index>();
    if (kind == "market") return {PortfolioMap::market(), n};
    if (kind == "constant") {
      const auto w = spec.at("weights").get<std::vector<double>>();
      SimplexPoint weights(Eigen::Map<const Vector>(w.data(), static_cast<Index>(w.size())), Openness::Closed);
      return {PortfolioMap::constant(weights), weights.size()};
    }
    if (kind == "counterexample") return {counterexample_portfolio(spec.at("lambda").get<double>()), Index{3}};
    GeneratingFunction phi = GeneratingFunction::from_json(spec);
    if (auto d = phi.dimension()) n = d;
    return {PortfolioMap::generated_by(std::move(phi)), n};
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("portfolio spec: ") + e.what());
  }
}

}  // namespace fgplab
