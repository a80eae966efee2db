#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "certfp/engine.hpp"
#include "certfp/expression.hpp"
#include "certfp/grid_function.hpp"
#include "certfp/operators.hpp"

namespace certfp {

// Schema or syntax problem in a problem document. For syntax errors the
// line/column of the offending byte is filled in; for schema errors the
// location string names the JSON path.
struct ParseFailure : std::runtime_error {
  ParseFailure(const std::string& message, int line_, int column_)
      : std::runtime_error(message), line(line_), column(column_) {}
  explicit ParseFailure(const std::string& message)
      : std::runtime_error(message), line(-1), column(-1) {}
  int line;
  int column;
};

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& obj, const std::string& where,
                                std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed)
      if (key == a) { ok = true; break; }
    if (!ok)
      throw ParseFailure("unknown field '" + key + "' in " + where);
  }
}

inline const nlohmann::json& require_field(const nlohmann::json& obj, const char* key,
                                           const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end())
    throw ParseFailure("missing field '" + std::string(key) + "' in " + where);
  return *it;
}

inline expr::Expression parse_expr(const std::string& src, const std::string& where,
                                   const char* allowed_vars,
                                   std::vector<std::string>* warnings = nullptr) {
  expr::Expression e = [&] {
    try {
      return expr::Expression::parse(src);
    } catch (const expr::ParseError& err) {
      throw ParseFailure(where + ": " + err.what());
    }
  }();
  for (char v : {'t', 's', 'u'}) {
    if (e.uses(v) && std::string(allowed_vars).find(v) == std::string::npos)
      throw ParseFailure(where + ": variable '" + std::string(1, v) +
                         "' is not meaningful here");
  }
  if (warnings)
    for (const auto& w : e.warnings()) warnings->push_back(where + ": " + w);
  return e;
}

}  // namespace detail

// Everything the CLI needs to pose a fixed-point problem: the space, the
// operator with its declared constants, the starting point, and optional
// noise and stop sections. Parsing is strict: unknown fields are rejected
// with their location, so a document round-trips losslessly.
struct ProblemDocument {
  struct NonlinearitySpec {
    std::string rule;                    // linear | scaled_sin | scaled_atan | affine | expression
    double lambda = 0.0;
    std::optional<std::string> expr;     // rule == expression: f(s,u)
    std::optional<std::string> offset;   // rule == affine: h(s)
    std::optional<double> lip;
    std::optional<double> zero_bound;
  };

  struct OperatorSpec {
    std::string kind;                    // hammerstein | volterra | green | affine
    std::optional<std::string> forcing_expr;
    std::optional<std::vector<double>> forcing_table;
    std::optional<std::string> kernel_name;  // "dirichlet_green"
    std::vector<std::pair<std::string, std::string>> kernel_separable;  // (phi, psi)
    std::optional<std::vector<std::vector<double>>> kernel_table;
    std::optional<NonlinearitySpec> nonlinearity;
    double alpha = 0.0, beta = 0.0;      // green boundary values
    double slope = 0.0, offset = 0.0;    // affine
  };

  struct NoiseSpec {
    std::string kind;                    // constant | sequence | summable | quadrature
    double eta_bar = 0.0;
    std::vector<double> etas;
    double eta0 = 0.0, rho = 0.0;
    std::optional<std::uint64_t> seed;
  };

  struct StopSpec {
    std::string rule;                    // apriori | gauge | residual | fixed
    std::optional<double> eps;
    std::optional<std::size_t> n;
  };

  int schema_version = 1;
  Interval interval{0.0, 1.0};
  std::size_t grid_size = 401;
  OperatorSpec op;
  std::string x0_kind = "zero";          // zero | expression | table
  std::string x0_expr;
  std::vector<double> x0_table;
  std::optional<NoiseSpec> noise;
  std::optional<StopSpec> stop;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> parse_warnings;  // expression-level warnings, not schema

  std::uint64_t effective_seed() const { return seed.value_or(0); }

  static ProblemDocument parse_text(const std::string& text, const std::string& name);
  static ProblemDocument parse_file(const std::string& path);
  nlohmann::json to_json() const;

  FixedPointOperator build_operator(std::optional<std::size_t> m_override = {}) const;
  GridFunction build_x0(std::optional<std::size_t> m_override = {}) const;
  NoiseBudget build_noise() const;
  std::optional<StopRule> build_stop() const;

  // Quadrature-estimated budgets compare against the same problem on the
  // refined 2m-1 grid; only expression-backed data can be re-sampled there.
  bool refinable() const {
    if (op.kind == "affine") return false;
    if (op.forcing_table || op.kernel_table) return false;
    if (x0_kind == "table") return false;
    return true;
  }
};

inline ProblemDocument ProblemDocument::parse_text(const std::string& text,
                                                   const std::string& name) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& err) {
    // Recover line/column from the byte offset nlohmann reports.
    std::size_t byte = err.byte > 0 ? err.byte - 1 : 0;
    byte = std::min(byte, text.size());
    int line = 1, col = 1;
    for (std::size_t i = 0; i < byte; ++i) {
      if (text[i] == '\n') { ++line; col = 1; }
      else ++col;
    }
    throw ParseFailure(name + ": " + err.what(), line, col);
  }
  if (!root.is_object()) throw ParseFailure(name + ": document must be a JSON object");

  detail::reject_unknown_keys(root, name, {"schema_version", "interval", "grid_size",
                                           "operator", "x0", "noise", "stop", "seed"});

  ProblemDocument doc;
  doc.schema_version = detail::require_field(root, "schema_version", name).get<int>();
  if (doc.schema_version != 1)
    throw ParseFailure(name + ": unsupported schema_version " +
                       std::to_string(doc.schema_version));

  {
    const auto& iv = detail::require_field(root, "interval", name);
    detail::reject_unknown_keys(iv, name + ".interval", {"a", "b"});
    doc.interval = Interval(detail::require_field(iv, "a", name + ".interval").get<double>(),
                            detail::require_field(iv, "b", name + ".interval").get<double>());
  }

  if (root.contains("grid_size")) {
    doc.grid_size = root["grid_size"].get<std::size_t>();
    if (doc.grid_size < 2) throw ParseFailure(name + ": grid_size must be >= 2");
  }
  if (root.contains("seed")) doc.seed = root["seed"].get<std::uint64_t>();

  {
    const auto& jop = detail::require_field(root, "operator", name);
    const std::string where = name + ".operator";
    detail::reject_unknown_keys(jop, where,
                                {"kind", "forcing", "kernel", "nonlinearity", "alpha",
                                 "beta", "slope", "offset"});
    OperatorSpec& spec = doc.op;
    spec.kind = detail::require_field(jop, "kind", where).get<std::string>();

    if (spec.kind == "affine") {
      spec.slope = detail::require_field(jop, "slope", where).get<double>();
      spec.offset = detail::require_field(jop, "offset", where).get<double>();
      if (jop.contains("forcing") || jop.contains("kernel") || jop.contains("nonlinearity"))
        throw ParseFailure(where + ": affine operators take only slope and offset");
    } else if (spec.kind == "hammerstein" || spec.kind == "volterra" ||
               spec.kind == "green") {
      if (spec.kind == "green") {
        spec.alpha = detail::require_field(jop, "alpha", where).get<double>();
        spec.beta = detail::require_field(jop, "beta", where).get<double>();
        const auto& jk = detail::require_field(jop, "kernel", where);
        if (!jk.is_string() || jk.get<std::string>() != "dirichlet_green")
          throw ParseFailure(where + ".kernel: green operators use \"dirichlet_green\"");
        spec.kernel_name = "dirichlet_green";
        if (jop.contains("forcing"))
          throw ParseFailure(where + ": green forcing comes from alpha/beta");
      } else {
        const auto& jf = detail::require_field(jop, "forcing", where);
        if (jf.is_string()) {
          spec.forcing_expr = jf.get<std::string>();
          detail::parse_expr(*spec.forcing_expr, where + ".forcing", "t", &doc.parse_warnings);
        } else if (jf.is_object()) {
          detail::reject_unknown_keys(jf, where + ".forcing", {"table"});
          spec.forcing_table =
              detail::require_field(jf, "table", where + ".forcing").get<std::vector<double>>();
          if (spec.forcing_table->size() != doc.grid_size)
            throw ParseFailure(where + ".forcing: table length must equal grid_size");
        } else {
          throw ParseFailure(where + ".forcing: expected expression or {\"table\": [...]}");
        }

        const auto& jk = detail::require_field(jop, "kernel", where);
        if (jk.is_object() && jk.contains("separable")) {
          detail::reject_unknown_keys(jk, where + ".kernel", {"separable"});
          for (const auto& jterm : jk["separable"]) {
            detail::reject_unknown_keys(jterm, where + ".kernel.separable[]",
                                        {"phi", "psi"});
            std::string phi =
                detail::require_field(jterm, "phi", where + ".kernel").get<std::string>();
            std::string psi =
                detail::require_field(jterm, "psi", where + ".kernel").get<std::string>();
            detail::parse_expr(phi, where + ".kernel.phi", "t", &doc.parse_warnings);
            detail::parse_expr(psi, where + ".kernel.psi", "s", &doc.parse_warnings);
            spec.kernel_separable.emplace_back(std::move(phi), std::move(psi));
          }
          if (spec.kernel_separable.empty())
            throw ParseFailure(where + ".kernel: separable list must be nonempty");
        } else if (jk.is_object() && jk.contains("table")) {
          detail::reject_unknown_keys(jk, where + ".kernel", {"table"});
          spec.kernel_table = jk["table"].get<std::vector<std::vector<double>>>();
          if (spec.kernel_table->size() != doc.grid_size)
            throw ParseFailure(where + ".kernel: table must be grid_size x grid_size");
          for (const auto& row : *spec.kernel_table)
            if (row.size() != doc.grid_size)
              throw ParseFailure(where + ".kernel: table must be grid_size x grid_size");
        } else {
          throw ParseFailure(where + ".kernel: expected separable terms or a table");
        }
      }

      const auto& jn = detail::require_field(jop, "nonlinearity", where);
      const std::string nwhere = where + ".nonlinearity";
      detail::reject_unknown_keys(jn, nwhere,
                                  {"rule", "lambda", "expr", "offset", "lip", "zero_bound"});
      NonlinearitySpec nl;
      nl.rule = detail::require_field(jn, "rule", nwhere).get<std::string>();
      if (nl.rule == "linear" || nl.rule == "scaled_sin" || nl.rule == "scaled_atan" ||
          nl.rule == "affine") {
        nl.lambda = detail::require_field(jn, "lambda", nwhere).get<double>();
      }
      if (nl.rule == "affine") {
        nl.offset = detail::require_field(jn, "offset", nwhere).get<std::string>();
        detail::parse_expr(*nl.offset, nwhere + ".offset", "s", &doc.parse_warnings);
        if (!jn.contains("zero_bound"))
          throw ParseFailure(nwhere + ": affine rule needs a declared zero_bound");
      } else if (nl.rule == "expression") {
        nl.expr = detail::require_field(jn, "expr", nwhere).get<std::string>();
        detail::parse_expr(*nl.expr, nwhere + ".expr", "su", &doc.parse_warnings);
        if (!jn.contains("lip") || !jn.contains("zero_bound"))
          throw ParseFailure(nwhere + ": expression rule needs declared lip and zero_bound");
      } else if (nl.rule != "linear" && nl.rule != "scaled_sin" && nl.rule != "scaled_atan") {
        throw ParseFailure(nwhere + ": unknown rule '" + nl.rule + "'");
      }
      if (jn.contains("lip")) nl.lip = jn["lip"].get<double>();
      if (jn.contains("zero_bound")) nl.zero_bound = jn["zero_bound"].get<double>();
      spec.nonlinearity = std::move(nl);
    } else {
      throw ParseFailure(where + ": unknown kind '" + spec.kind + "'");
    }
  }

  {
    const auto& jx = detail::require_field(root, "x0", name);
    if (jx.is_string()) {
      const std::string s = jx.get<std::string>();
      if (s == "zero") {
        doc.x0_kind = "zero";
      } else {
        doc.x0_kind = "expression";
        doc.x0_expr = s;
        detail::parse_expr(s, name + ".x0", "t", &doc.parse_warnings);
      }
    } else if (jx.is_object()) {
      detail::reject_unknown_keys(jx, name + ".x0", {"table"});
      doc.x0_kind = "table";
      doc.x0_table = detail::require_field(jx, "table", name + ".x0").get<std::vector<double>>();
      if (doc.x0_table.size() != doc.grid_size)
        throw ParseFailure(name + ".x0: table length must equal grid_size");
    } else {
      throw ParseFailure(name + ".x0: expected \"zero\", an expression, or a table");
    }
  }

  if (root.contains("noise")) {
    const auto& jn = root["noise"];
    const std::string where = name + ".noise";
    detail::reject_unknown_keys(jn, where, {"kind", "eta_bar", "etas", "eta0", "rho", "seed"});
    NoiseSpec ns;
    ns.kind = detail::require_field(jn, "kind", where).get<std::string>();
    if (ns.kind == "constant") {
      ns.eta_bar = detail::require_field(jn, "eta_bar", where).get<double>();
    } else if (ns.kind == "sequence") {
      ns.etas = detail::require_field(jn, "etas", where).get<std::vector<double>>();
    } else if (ns.kind == "summable") {
      ns.eta0 = detail::require_field(jn, "eta0", where).get<double>();
      ns.rho = detail::require_field(jn, "rho", where).get<double>();
    } else if (ns.kind != "quadrature") {
      throw ParseFailure(where + ": unknown kind '" + ns.kind + "'");
    }
    if (jn.contains("seed")) ns.seed = jn["seed"].get<std::uint64_t>();
    doc.noise = std::move(ns);
  }

  if (root.contains("stop")) {
    const auto& js = root["stop"];
    const std::string where = name + ".stop";
    detail::reject_unknown_keys(js, where, {"rule", "eps", "n"});
    StopSpec ss;
    ss.rule = detail::require_field(js, "rule", where).get<std::string>();
    if (js.contains("eps")) ss.eps = js["eps"].get<double>();
    if (js.contains("n")) ss.n = js["n"].get<std::size_t>();
    if (ss.rule == "apriori" || ss.rule == "gauge" || ss.rule == "residual") {
      if (!ss.eps) throw ParseFailure(where + ": rule '" + ss.rule + "' needs eps");
    } else if (ss.rule == "fixed") {
      if (!ss.n) throw ParseFailure(where + ": rule 'fixed' needs n");
    } else {
      throw ParseFailure(where + ": unknown rule '" + ss.rule + "'");
    }
    doc.stop = std::move(ss);
  }

  return doc;
}

inline ProblemDocument ProblemDocument::parse_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseFailure(path + ": cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_text(buf.str(), path);
}

inline nlohmann::json ProblemDocument::to_json() const {
  nlohmann::json root;
  root["schema_version"] = schema_version;
  root["interval"] = {{"a", interval.a}, {"b", interval.b}};
  root["grid_size"] = grid_size;
  if (seed) root["seed"] = *seed;

  nlohmann::json jop;
  jop["kind"] = op.kind;
  if (op.kind == "affine") {
    jop["slope"] = op.slope;
    jop["offset"] = op.offset;
  } else {
    if (op.kind == "green") {
      jop["alpha"] = op.alpha;
      jop["beta"] = op.beta;
      jop["kernel"] = "dirichlet_green";
    } else {
      if (op.forcing_expr) jop["forcing"] = *op.forcing_expr;
      else jop["forcing"] = {{"table", *op.forcing_table}};
      if (!op.kernel_separable.empty()) {
        nlohmann::json terms = nlohmann::json::array();
        for (const auto& [phi, psi] : op.kernel_separable)
          terms.push_back({{"phi", phi}, {"psi", psi}});
        jop["kernel"] = {{"separable", std::move(terms)}};
      } else {
        jop["kernel"] = {{"table", *op.kernel_table}};
      }
    }
    nlohmann::json jn;
    const NonlinearitySpec& nl = *op.nonlinearity;
    jn["rule"] = nl.rule;
    if (nl.rule != "expression") jn["lambda"] = nl.lambda;
    if (nl.expr) jn["expr"] = *nl.expr;
    if (nl.offset) jn["offset"] = *nl.offset;
    if (nl.lip) jn["lip"] = *nl.lip;
    if (nl.zero_bound) jn["zero_bound"] = *nl.zero_bound;
    jop["nonlinearity"] = std::move(jn);
  }
  root["operator"] = std::move(jop);

  if (x0_kind == "zero") root["x0"] = "zero";
  else if (x0_kind == "expression") root["x0"] = x0_expr;
  else root["x0"] = {{"table", x0_table}};

  if (noise) {
    nlohmann::json jn;
    jn["kind"] = noise->kind;
    if (noise->kind == "constant") jn["eta_bar"] = noise->eta_bar;
    if (noise->kind == "sequence") jn["etas"] = noise->etas;
    if (noise->kind == "summable") {
      jn["eta0"] = noise->eta0;
      jn["rho"] = noise->rho;
    }
    if (noise->seed) jn["seed"] = *noise->seed;
    root["noise"] = std::move(jn);
  }

  if (stop) {
    nlohmann::json js;
    js["rule"] = stop->rule;
    if (stop->eps) js["eps"] = *stop->eps;
    if (stop->n) js["n"] = *stop->n;
    root["stop"] = std::move(js);
  }

  return root;
}

inline FixedPointOperator ProblemDocument::build_operator(
    std::optional<std::size_t> m_override) const {
  const std::size_t m = m_override.value_or(grid_size);
  if (m != grid_size && !refinable())
    throw std::invalid_argument("ProblemDocument: tabulated data cannot change grids");

  if (op.kind == "affine")
    return FixedPointOperator::affine_scalar_on(op.slope, op.offset, interval, m);

  Nonlinearity f = [&] {
    const NonlinearitySpec& nl = *op.nonlinearity;
    if (nl.rule == "linear") return Nonlinearity::linear(nl.lambda);
    if (nl.rule == "scaled_sin") return Nonlinearity::scaled_sin(nl.lambda);
    if (nl.rule == "scaled_atan") return Nonlinearity::scaled_atan(nl.lambda);
    if (nl.rule == "affine")
      return Nonlinearity::affine(nl.lambda, expr::Expression::parse(*nl.offset),
                                  *nl.zero_bound);
    return Nonlinearity::expression(expr::Expression::parse(*nl.expr), *nl.lip,
                                    *nl.zero_bound);
  }();
  f.declare(op.nonlinearity->lip, op.nonlinearity->zero_bound);

  if (op.kind == "green")
    return FixedPointOperator::green(interval, m, op.alpha, op.beta, std::move(f));

  GridFunction g = [&] {
    if (op.forcing_expr) {
      const expr::Expression e = expr::Expression::parse(*op.forcing_expr);
      return GridFunction::sampled(interval, m,
                                   [&](double t) { return e.eval(t, 0.0, 0.0); });
    }
    if (op.forcing_table->size() != m)
      throw std::invalid_argument("ProblemDocument: forcing table size != grid_size");
    return GridFunction(interval, *op.forcing_table);
  }();

  Kernel k = [&] {
    if (!op.kernel_separable.empty()) {
      std::vector<Kernel::SeparableTerm> terms;
      for (const auto& [phi, psi] : op.kernel_separable)
        terms.push_back({expr::Expression::parse(phi), expr::Expression::parse(psi)});
      return Kernel::separable(std::move(terms));
    }
    std::vector<double> flat;
    flat.reserve(m * m);
    if (op.kernel_table->size() != m)
      throw std::invalid_argument("ProblemDocument: kernel table must be m x m");
    for (const auto& row : *op.kernel_table) {
      if (row.size() != m)
        throw std::invalid_argument("ProblemDocument: kernel table must be m x m");
      flat.insert(flat.end(), row.begin(), row.end());
    }
    return Kernel::tabulated(m, std::move(flat));
  }();

  if (op.kind == "volterra")
    return FixedPointOperator::volterra(std::move(g), std::move(k), std::move(f));
  return FixedPointOperator::hammerstein(std::move(g), std::move(k), std::move(f));
}

inline GridFunction ProblemDocument::build_x0(std::optional<std::size_t> m_override) const {
  const std::size_t m = m_override.value_or(grid_size);
  if (x0_kind == "zero") return GridFunction::zero(interval, m);
  if (x0_kind == "expression") {
    const expr::Expression e = expr::Expression::parse(x0_expr);
    return GridFunction::sampled(interval, m, [&](double t) { return e.eval(t, 0.0, 0.0); });
  }
  if (x0_table.size() != m)
    throw std::invalid_argument("ProblemDocument: x0 table size != grid_size");
  return GridFunction(interval, x0_table);
}

inline NoiseBudget ProblemDocument::build_noise() const {
  if (!noise) return NoiseBudget::none();
  const std::uint64_t s = noise->seed.value_or(effective_seed());
  if (noise->kind == "constant") return NoiseBudget::constant(noise->eta_bar, s);
  if (noise->kind == "sequence") return NoiseBudget::sequence(noise->etas, s);
  if (noise->kind == "summable") return NoiseBudget::summable(noise->eta0, noise->rho, s);
  return NoiseBudget::quadrature();
}

inline std::optional<StopRule> ProblemDocument::build_stop() const {
  if (!stop) return {};
  if (stop->rule == "apriori") return StopRule::apriori_geo(*stop->eps);
  if (stop->rule == "gauge") return StopRule::apriori_gauge(*stop->eps);
  if (stop->rule == "residual") return StopRule::residual(*stop->eps);
  return StopRule::fixed_count(*stop->n);
}

}  // namespace certfp
