#pragma once

// JSON round-trips for the public value types plus the small formatting
// helpers shared by the command-line tool. Floating point text output is
// pinned to twelve significant digits so repeated runs are byte-identical.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "quadchaos/bounds.hpp"
#include "quadchaos/calibration.hpp"
#include "quadchaos/distribution.hpp"
#include "quadchaos/matrix.hpp"
#include "quadchaos/norms.hpp"

namespace quadchaos {

using json = nlohmann::json;

inline std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

inline std::string join_csv(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += fields[i];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Distribution models

inline json model_to_json(const DistributionModel& m) {
  json j;
  j["kind"] = m.name();
  if (m.scale() != 1.0) j["scale"] = m.scale();
  switch (m.kind()) {
    case DistKind::weibull_sym:
      j["r"] = m.weibull_r();
      break;
    case DistKind::trunc_weibull_sym:
      j["r"] = m.weibull_r();
      j["cutoff"] = m.cutoff();
      break;
    case DistKind::custom_tail:
      j["table"] = {{"t", m.table().t}, {"n", m.table().n}};
      break;
    default:
      break;
  }
  return j;
}

inline DistributionModel model_from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind")) {
    throw std::invalid_argument("model JSON needs a \"kind\" field");
  }
  const std::string kind = j.at("kind").get<std::string>();
  const double scale = j.value("scale", 1.0);
  if (kind == "square_tail") return DistributionModel::square_tail(scale);
  if (kind == "gaussian") return DistributionModel::gaussian(scale);
  if (kind == "rademacher") return DistributionModel::rademacher(scale);
  if (kind == "weibull_sym") {
    return DistributionModel::weibull_sym(j.at("r").get<double>(), scale);
  }
  if (kind == "trunc_weibull_sym") {
    return DistributionModel::trunc_weibull_sym(
        j.at("r").get<double>(), j.at("cutoff").get<double>(), scale);
  }
  if (kind == "custom_tail") {
    const auto& tj = j.at("table");
    TailTable table;
    table.t = tj.at("t").get<std::vector<double>>();
    table.n = tj.at("n").get<std::vector<double>>();
    return DistributionModel::custom_tail(std::move(table), scale);
  }
  throw std::invalid_argument("unknown model kind: " + kind);
}

// ---------------------------------------------------------------------------
// Coefficient matrices

inline json matrix_to_json(const CoeffMatrix& A) {
  json rows = json::array();
  for (std::size_t i = 0; i < A.rows(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < A.cols(); ++j) row.push_back(A(i, j));
    rows.push_back(std::move(row));
  }
  return json{{"rows", std::move(rows)},
              {"symmetric", A.symmetric()},
              {"zero_diag", A.zero_diag()}};
}

// Accepts either a literal matrix {"rows": [[...]], "symmetric", "zero_diag"}
// or a generator spec {"family", "n", "m", "seed", "symmetric_zero_diag"}.
inline CoeffMatrix matrix_from_json(const json& j) {
  if (!j.is_object()) {
    throw std::invalid_argument("matrix JSON must be an object");
  }
  if (j.contains("rows")) {
    const auto rows = j.at("rows").get<std::vector<std::vector<double>>>();
    return CoeffMatrix::from_rows(rows, j.value("symmetric", false),
                                  j.value("zero_diag", false));
  }
  if (j.contains("family")) {
    const auto family =
        matrix_family_from_name(j.at("family").get<std::string>());
    const auto n = j.at("n").get<std::size_t>();
    const auto m = j.value("m", n);
    const auto seed = j.value("seed", std::uint64_t{1});
    return generate_matrix(family, n, m, seed,
                           j.value("symmetric_zero_diag", false));
  }
  throw std::invalid_argument("matrix JSON needs \"rows\" or \"family\"");
}

// ---------------------------------------------------------------------------
// Norm solutions and bound reports

inline json solution_to_json(const NormSolution& s) {
  json cert;
  cert["x"] = s.certificate_x;
  if (!s.certificate_y.empty()) cert["y"] = s.certificate_y;
  json j;
  j["value"] = s.value;
  j["lower"] = s.value;  // the certificate is feasible, so value is attained
  j["upper"] = s.upper;
  j["method"] = solve_method_name(s.method);
  j["feasibility_slack"] = s.feasibility_slack;
  j["certificate"] = std::move(cert);
  return j;
}

inline json report_to_json(const BoundReport& r) {
  json methods = json::object();
  for (const auto& [part, method] : r.component_methods) {
    methods[part] = method;
  }
  return json{{"p", r.p},
              {"bilinear_term", r.bilinear_term},
              {"row_term", r.row_term},
              {"col_term", r.col_term},
              {"total", r.total},
              {"component_methods", std::move(methods)}};
}

// ---------------------------------------------------------------------------
// Calibration packs

inline json window_to_json(const RatioWindow& w) {
  return json{{"lo", w.lo}, {"hi", w.hi}};
}

inline RatioWindow window_from_json(const json& j) {
  RatioWindow w;
  w.lo = j.at("lo").get<double>();
  w.hi = j.at("hi").get<double>();
  return w;
}

inline json pack_to_json(const CalibrationPack& p) {
  json gk = json::object(), rw = json::object();
  for (const auto& [k, v] : p.growth_K) gk[k] = v;
  for (const auto& [k, v] : p.ratio_windows) rw[k] = window_to_json(v);
  return json{{"C_up", p.C_up},
              {"c_low", p.c_low},
              {"c_exp", p.c_exp},
              {"mc_margin", p.mc_margin},
              {"growth_K", std::move(gk)},
              {"ratio_windows", std::move(rw)},
              {"decoupling_window", window_to_json(p.decoupling_window)},
              {"linear_window", window_to_json(p.linear_window)},
              {"latala_window", window_to_json(p.latala_window)},
              {"seed", p.seed},
              {"samples", p.samples}};
}

inline CalibrationPack pack_from_json(const json& j) {
  CalibrationPack p;
  p.C_up = j.at("C_up").get<double>();
  p.c_low = j.at("c_low").get<double>();
  p.c_exp = j.at("c_exp").get<double>();
  p.mc_margin = j.value("mc_margin", 1.25);
  for (const auto& [k, v] : j.at("growth_K").items()) {
    p.growth_K[k] = v.get<double>();
  }
  for (const auto& [k, v] : j.at("ratio_windows").items()) {
    p.ratio_windows[k] = window_from_json(v);
  }
  p.decoupling_window = window_from_json(j.at("decoupling_window"));
  p.linear_window = window_from_json(j.at("linear_window"));
  p.latala_window = window_from_json(j.at("latala_window"));
  p.seed = j.value("seed", std::uint64_t{0});
  p.samples = j.value("samples", std::uint64_t{0});
  return p;
}

// ---------------------------------------------------------------------------
// Files

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  json j;
  in >> j;
  return j;
}

inline void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << '\n';
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace quadchaos
