#include <set>
#include <tuple>

#include "mdiew/errors.hpp"
#include "mdiew/scenario.hpp"

namespace mdiew {

nlohmann::json to_json(const CountTable& c) {
  nlohmann::json cells = nlohmann::json::array();
  const std::size_t n = c.n_inputs();
  for (std::size_t x = 0; x < n; ++x) {
    for (std::size_t y = 0; y < n; ++y) {
      for (int a = 0; a < kOutcomes; ++a) {
        for (int b = 0; b < kOutcomes; ++b) {
          cells.push_back({{"x", x},
                           {"y", y},
                           {"a", to_string(kBellLabels[a])},
                           {"b", to_string(kBellLabels[b])},
                           {"n", c.at(a, b, x, y)}});
        }
      }
    }
  }
  return {{"inputs", c.input_labels()},
          {"integration_time_s", c.integration_time_s()},
          {"metadata", c.metadata},
          {"counts", std::move(cells)}};
}

CountTable count_table_from_json(const nlohmann::json& j) {
  try {
    if (!j.is_object()) throw ParseError("count table: top level must be an object");
    const auto labels = j.at("inputs").get<std::vector<std::string>>();
    const double time = j.at("integration_time_s").get<double>();
    CountTable c(labels, time);
    if (j.contains("metadata")) {
      if (!j["metadata"].is_object()) throw ParseError("count table: metadata must be an object");
      c.metadata = j["metadata"];
    }
    const auto& cells = j.at("counts");
    if (!cells.is_array()) throw ParseError("count table: counts must be an array");
    std::set<std::tuple<std::size_t, std::size_t, int, int>> seen;
    for (const auto& cell : cells) {
      const auto x = cell.at("x").get<std::size_t>();
      const auto y = cell.at("y").get<std::size_t>();
      if (x >= labels.size() || y >= labels.size()) {
        throw ParseError("count table: input index out of range");
      }
      const int a = static_cast<int>(bell_label_from_string(cell.at("a").get<std::string>()));
      const int b = static_cast<int>(bell_label_from_string(cell.at("b").get<std::string>()));
      const auto& nval = cell.at("n");
      if (!nval.is_number_unsigned() && !(nval.is_number_integer() && nval.get<long long>() >= 0)) {
        throw ParseError("count table: n must be a nonnegative integer");
      }
      if (!seen.emplace(x, y, a, b).second) {
        throw ParseError("count table: duplicate cell (x=" + std::to_string(x) +
                         ", y=" + std::to_string(y) + ")");
      }
      c.at(a, b, x, y) = nval.get<std::uint64_t>();
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("count table: ") + e.what());
  }
}

}  // namespace mdiew
