#include <set>
#include <tuple>

#include "mdiew/errors.hpp"
#include "mdiew/witness.hpp"

namespace mdiew {

nlohmann::json to_json(const WitnessCoefficients& c) {
  nlohmann::json beta = nlohmann::json::array();
  for (std::size_t x = 0; x < c.n_inputs; ++x) {
    for (std::size_t y = 0; y < c.n_inputs; ++y) {
      for (int a = 0; a < kOutcomes; ++a) {
        for (int b = 0; b < kOutcomes; ++b) {
          beta.push_back({{"x", x},
                          {"y", y},
                          {"a", to_string(kBellLabels[a])},
                          {"b", to_string(kBellLabels[b])},
                          {"value", c.at(a, b, x, y)}});
        }
      }
    }
  }
  nlohmann::json dual = nlohmann::json::array();
  for (const auto& m : c.dual_y) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.dim(); ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (Eigen::Index j = 0; j < m.dim(); ++j) row.push_back({m(i, j).real(), m(i, j).imag()});
      rows.push_back(std::move(row));
    }
    dual.push_back(std::move(rows));
  }
  return {{"input_set_id", c.input_set_id},
          {"n_inputs", c.n_inputs},
          {"provenance", c.provenance},
          {"beta", std::move(beta)},
          {"dual_Y", std::move(dual)}};
}

WitnessCoefficients coefficients_from_json(const nlohmann::json& j) {
  try {
    if (!j.is_object()) throw ParseError("coefficients: top level must be an object");
    WitnessCoefficients c;
    c.input_set_id = j.at("input_set_id").get<std::string>();
    c.n_inputs = j.value("n_inputs", std::size_t{6});
    c.provenance = j.value("provenance", std::string{});
    const std::size_t n = c.n_inputs;
    c.beta.assign(n * n * kJointOutcomes, 0.0);
    std::set<std::tuple<std::size_t, std::size_t, int, int>> seen;
    for (const auto& cell : j.at("beta")) {
      const auto x = cell.at("x").get<std::size_t>();
      const auto y = cell.at("y").get<std::size_t>();
      if (x >= n || y >= n) throw ParseError("coefficients: input index out of range");
      const int a = static_cast<int>(bell_label_from_string(cell.at("a").get<std::string>()));
      const int b = static_cast<int>(bell_label_from_string(cell.at("b").get<std::string>()));
      if (!seen.emplace(x, y, a, b).second) throw ParseError("coefficients: duplicate beta cell");
      c.beta[CorrelationTable::index(a, b, x, y, n)] = cell.at("value").get<double>();
    }
    const auto& dual = j.at("dual_Y");
    if (!dual.is_array() || dual.size() != kJointOutcomes) {
      throw ParseError("coefficients: dual_Y must hold 16 matrices");
    }
    for (std::size_t k = 0; k < dual.size(); ++k) {
      const auto& rows = dual[k];
      const auto d = static_cast<Eigen::Index>(rows.size());
      CMatrix m(d, d);
      for (Eigen::Index r = 0; r < d; ++r) {
        const auto& row = rows[static_cast<std::size_t>(r)];
        if (static_cast<Eigen::Index>(row.size()) != d) throw ParseError("coefficients: ragged dual_Y");
        for (Eigen::Index q = 0; q < d; ++q) {
          const auto& e = row[static_cast<std::size_t>(q)];
          m(r, q) = Complex(e.at(0).get<double>(), e.at(1).get<double>());
        }
      }
      try {
        c.dual_y[k] = HermitianMatrix(m);
      } catch (const StructuralError& e) {
        throw ParseError(std::string("coefficients: ") + e.what());
      }
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("coefficients: ") + e.what());
  }
}

}  // namespace mdiew
