#pragma once

#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "fgplab/portfolio_map.hpp"

namespace fgplab {

// Parses text as JSON, or reads it from the file it names.
nlohmann::json read_json_arg(const std::string& text_or_path);
nlohmann::json read_json_file(const std::string& path);

// Portfolio specs: any generator spec (the generated portfolio),
// {"kind":"market"}, {"kind":"constant","weights":[...]},
// {"kind":"counterexample","lambda":l}.  "n" sets the dimension where the
// kind leaves it open.
struct PortfolioSpec {
  PortfolioMap map;
  std::optional<Index> dimension;
};

PortfolioSpec portfolio_from_json(const nlohmann::json& spec);

}  // namespace fgplab
