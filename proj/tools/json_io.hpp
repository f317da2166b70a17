#pragma once

#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "soskit/gram.hpp"
#include "soskit/moments.hpp"
#include "soskit/poly.hpp"

namespace soskit::cli {

using nlohmann::json;

// Malformed or schema-violating input.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline const json& need(const json& j, const std::string& key) {
  if (!j.contains(key)) throw InputError("missing field '" + key + "'");
  return j.at(key);
}

inline void check_keys(const json& j, const std::set<std::string>& allowed) {
  for (const auto& [k, v] : j.items())
    if (!allowed.contains(k)) throw InputError("unknown field '" + k + "'");
}

inline double number(const json& j, const std::string& what) {
  if (j.is_number()) return j.get<double>();
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
  }
  throw InputError(what + ": expected a number");
}

inline int integer(const json& j, const std::string& what) {
  if (!j.is_number_integer()) throw InputError(what + ": expected an integer");
  return j.get<int>();
}

inline std::vector<double> numbers(const json& j, const std::string& what) {
  if (!j.is_array()) throw InputError(what + ": expected an array");
  std::vector<double> out;
  for (const auto& e : j) out.push_back(number(e, what));
  return out;
}

inline std::vector<std::string> strings(const json& j, const std::string& what) {
  if (!j.is_array()) throw InputError(what + ": expected an array of strings");
  std::vector<std::string> out;
  for (const auto& e : j) {
    if (!e.is_string()) throw InputError(what + ": expected an array of strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

inline Eigen::MatrixXd matrix(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw InputError(what + ": expected a nonempty array of rows");
  const std::size_t cols = j.at(0).is_array() ? j.at(0).size() : 0;
  if (cols == 0) throw InputError(what + ": expected a nonempty array of rows");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto row = numbers(j.at(i), what);
    if (row.size() != cols) throw InputError(what + ": ragged rows");
    for (std::size_t k = 0; k < cols; ++k) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = row[k];
  }
  return m;
}

// [lo, hi]; null or "inf" strings mark infinite ends.
inline Interval interval(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 2) throw InputError(what + ": expected [lo, hi]");
  Interval iv;
  iv.lo = j.at(0).is_null() ? -std::numeric_limits<double>::infinity() : number(j.at(0), what);
  iv.hi = j.at(1).is_null() ? std::numeric_limits<double>::infinity() : number(j.at(1), what);
  if (std::isnan(iv.lo) || std::isnan(iv.hi) || iv.lo > iv.hi) throw InputError(what + ": invalid interval");
  return iv;
}

inline Polynomial polynomial(const json& j, const std::vector<std::string>& vars, const std::string& what) {
  if (!j.is_string()) throw InputError(what + ": expected a polynomial string");
  try {
    return parse(j.get<std::string>(), vars);
  } catch (const ParseError& e) {
    throw InputError(what + ": " + e.what());
  }
}

inline std::vector<Polynomial> polynomials(const json& j, const std::vector<std::string>& vars,
                                           const std::string& what) {
  std::vector<Polynomial> out;
  for (const auto& s : strings(j, what)) out.push_back(polynomial(json(s), vars, what));
  return out;
}

inline PolyMatrix poly_matrix(const json& j, const std::vector<std::string>& vars, const std::string& what) {
  if (!j.is_array() || j.empty()) throw InputError(what + ": expected a square array of polynomial strings");
  std::vector<std::vector<Polynomial>> grid;
  for (const auto& row : j) {
    if (!row.is_array() || row.size() != j.size()) throw InputError(what + ": matrix must be square");
    grid.push_back(polynomials(row, vars, what));
  }
  try {
    return PolyMatrix::from_grid(grid, static_cast<int>(vars.size()));
  } catch (const std::invalid_argument& e) {
    throw InputError(what + ": " + e.what());
  }
}

inline json to_json(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return nullptr;
  return v > 0 ? "inf" : "-inf";
}

inline json to_json(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(to_json(m(i, k)));
    out.push_back(row);
  }
  return out;
}

inline json to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(to_json(v(i)));
  return out;
}

inline json to_json(const std::vector<double>& v) {
  json out = json::array();
  for (double x : v) out.push_back(to_json(x));
  return out;
}

inline json monomials(const std::vector<Exponent>& basis, const std::vector<std::string>& vars) {
  json out = json::array();
  for (const auto& e : basis) out.push_back(to_string(Polynomial::monomial(e, 1.0), vars));
  return out;
}

inline json to_json(const AtomicMeasure& m) {
  json atoms = json::array();
  for (std::size_t k = 0; k < m.atoms.size(); ++k) {
    json a;
    a["point"] = to_json(m.atoms[k]);
    a["weight"] = to_json(m.weights[k]);
    atoms.push_back(a);
  }
  return {{"atoms", atoms}, {"moment_residual", to_json(m.moment_residual)}};
}

}  // namespace soskit::cli
