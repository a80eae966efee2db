// certfp: certify contraction data packets, run Picard iteration with
// machine-checkable error certificates, and quantify perturbation and noise
// resilience. Subcommands: certify | solve | stability | inexact.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "certfp/certfp.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitParse = 1;
constexpr int kExitCertification = 2;
constexpr int kExitBudget = 3;

std::string resolve_out_dir(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("CERTFP_REPORT_DIR"); env && *env) return env;
  return ".";
}

std::string stem_of(const std::string& path) { return fs::path(path).stem().string(); }

void write_json(const fs::path& path, const json& doc) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << doc.dump(2) << "\n";
}

void print_parse_failure(const certfp::ParseFailure& err) {
  if (err.line >= 0)
    std::cerr << "parse error at line " << err.line << ", column " << err.column << ": "
              << err.what() << "\n";
  else
    std::cerr << "parse error: " << err.what() << "\n";
}

void print_checklist_failure(const certfp::ChecklistFailure& f) {
  std::cerr << "certification failed at " << f.item << ": " << f.message
            << " (value=" << f.value << ")\n";
}

struct LoadedProblem {
  certfp::ProblemDocument doc;
  certfp::DataPacket packet;
  std::uint64_t seed;  // flag override, else the document seed
};

// Parse + certify, converting failures into the exit-code contract.
std::optional<LoadedProblem> load_and_certify(const std::string& path,
                                              std::optional<std::uint64_t> seed_flag,
                                              std::size_t samples, int& exit_code,
                                              const fs::path& report_path) {
  certfp::ProblemDocument doc;
  try {
    doc = certfp::ProblemDocument::parse_file(path);
  } catch (const certfp::ParseFailure& err) {
    print_parse_failure(err);
    exit_code = kExitParse;
    return std::nullopt;
  }

  for (const auto& w : doc.parse_warnings) std::cerr << "warning: " << w << "\n";

  const std::uint64_t seed = seed_flag.value_or(doc.effective_seed());
  certfp::PacketOptions opts;
  opts.seed = seed;
  opts.invariance_samples = samples;
  certfp::PacketResult built = [&] {
    try {
      return certfp::build_packet(doc.build_operator(), doc.build_x0(), opts);
    } catch (const std::exception& err) {
      std::cerr << "invalid problem data: " << err.what() << "\n";
      return certfp::PacketResult(certfp::ChecklistFailure{"C1", 0.0, err.what()});
    }
  }();

  if (!certfp::packet_ok(built)) {
    const auto& f = certfp::failure_of(built);
    print_checklist_failure(f);
    if (!report_path.empty()) {
      write_json(report_path,
                 json{{"schema_version", 1},
                      {"problem", path},
                      {"checklist_failure",
                       {{"item", f.item}, {"value", f.value}, {"message", f.message}}}});
    }
    exit_code = kExitCertification;
    return std::nullopt;
  }

  return LoadedProblem{std::move(doc), certfp::packet_of(std::move(built)), seed};
}

int run_certify(const std::string& path, const std::string& out_flag, std::size_t samples,
                std::optional<std::uint64_t> seed_flag) {
  const fs::path out_dir = resolve_out_dir(out_flag);
  fs::create_directories(out_dir);
  const fs::path report_path = out_dir / (stem_of(path) + ".report.json");

  int code = kExitOk;
  auto loaded = load_and_certify(path, seed_flag, samples, code, report_path);
  if (!loaded) return code;
  const certfp::DataPacket& p = loaded->packet;

  json report{{"schema_version", 1},
              {"problem", path},
              {"seed", loaded->seed},
              {"checklist", certfp::checklist_json(p.checklist)},
              {"constants", certfp::constants_json(p)}};
  write_json(report_path, report);

  std::cout << "certified: kappa=" << p.modulus.kappa << " R=" << p.region.radius
            << " delta0=" << p.delta0 << " (L_f=" << p.lip_f << ", M=" << p.kernel_bound
            << ")\n"
            << "report: " << report_path.string() << "\n";
  return kExitOk;
}

int run_solve(const std::string& path, std::optional<double> eps_flag,
              const std::string& rule_flag, std::size_t max_iter,
              const std::string& out_flag, std::optional<std::uint64_t> seed_flag) {
  const fs::path out_dir = resolve_out_dir(out_flag);
  fs::create_directories(out_dir);
  const fs::path report_path = out_dir / (stem_of(path) + ".report.json");
  const fs::path csv_path = out_dir / (stem_of(path) + ".trace.csv");

  int code = kExitOk;
  auto loaded = load_and_certify(path, seed_flag, 16, code, report_path);
  if (!loaded) return code;
  const certfp::ProblemDocument& doc = loaded->doc;
  const certfp::DataPacket& p = loaded->packet;

  // Stop rule: flags take precedence, then the document stop section, then a
  // residual rule at 1e-6.
  std::optional<double> eps_target = eps_flag;
  certfp::StopRule rule = certfp::StopRule::residual(1e-6);
  if (eps_flag) {
    const double eps = *eps_flag;
    if (rule_flag == "apriori") rule = certfp::StopRule::apriori_geo(eps);
    else if (rule_flag == "gauge") rule = certfp::StopRule::apriori_gauge(eps);
    else rule = certfp::StopRule::residual(eps);
  } else if (doc.stop) {
    rule = *doc.build_stop();
    if (doc.stop->eps) eps_target = doc.stop->eps;
  } else {
    eps_target = 1e-6;
  }

  certfp::NoiseBudget budget = doc.build_noise();
  if (seed_flag) budget.seed = *seed_flag;
  const bool quadrature =
      budget.source == certfp::NoiseBudget::Source::QuadratureEstimated;
  std::optional<certfp::FixedPointOperator> refined;
  if (quadrature) {
    if (!doc.refinable()) {
      std::cerr << "quadrature noise estimation needs expression-backed data\n";
      return kExitParse;
    }
    refined = doc.build_operator(2 * doc.grid_size - 1);
  }

  certfp::IterationTrace trace =
      certfp::inexact_run(p, budget, rule, max_iter, refined ? &*refined : nullptr);

  {
    std::ofstream csv(csv_path);
    certfp::write_trace_csv(trace, csv);
  }
  json report{{"schema_version", 1},
              {"problem", path},
              {"seed", loaded->seed},
              {"checklist", certfp::checklist_json(p.checklist)},
              {"constants", certfp::constants_json(p)},
              {"trace", certfp::trace_summary_json(trace, csv_path.string())}};
  write_json(report_path, report);

  std::cout << "steps=" << trace.step_count << " stop=" << trace.stop_reason
            << " certified_error=" << trace.certified_error << "\n"
            << "report: " << report_path.string() << "\ntrace:  " << csv_path.string()
            << "\n";

  if (!trace.complete) {
    std::cerr << "iteration budget exhausted before the stop rule was met\n";
    return kExitBudget;
  }
  if (eps_target && trace.certified_error > *eps_target) {
    std::cerr << "stop rule met but certified error " << trace.certified_error
              << " exceeds target " << *eps_target << "\n";
    return kExitBudget;
  }
  return kExitOk;
}

int run_stability(const std::string& path_a, const std::string& path_b,
                  std::size_t samples, std::optional<std::uint64_t> seed_flag,
                  const std::string& out_flag) {
  const fs::path out_dir = resolve_out_dir(out_flag);
  fs::create_directories(out_dir);
  const fs::path report_path =
      out_dir / (stem_of(path_a) + "_vs_" + stem_of(path_b) + ".stability.json");

  certfp::ProblemDocument doc_a, doc_b;
  try {
    doc_a = certfp::ProblemDocument::parse_file(path_a);
    doc_b = certfp::ProblemDocument::parse_file(path_b);
  } catch (const certfp::ParseFailure& err) {
    print_parse_failure(err);
    return kExitParse;
  }

  if (doc_a.interval != doc_b.interval || doc_a.grid_size != doc_b.grid_size) {
    std::cerr << "incompatible grids: the two problems must share interval and grid_size\n";
    return kExitCertification;
  }

  const std::uint64_t seed = seed_flag.value_or(doc_a.effective_seed());
  certfp::PacketOptions opts;
  opts.seed = seed;

  auto build = [&](const certfp::ProblemDocument& doc,
                   std::optional<certfp::DataPacket>& out) -> int {
    certfp::PacketResult r = certfp::build_packet(doc.build_operator(), doc.build_x0(), opts);
    if (!certfp::packet_ok(r)) {
      print_checklist_failure(certfp::failure_of(r));
      return kExitCertification;
    }
    out = certfp::packet_of(std::move(r));
    return kExitOk;
  };

  std::optional<certfp::DataPacket> pa, pb;
  if (int rc = build(doc_a, pa); rc != kExitOk) return rc;
  if (int rc = build(doc_b, pb); rc != kExitOk) return rc;

  // Shared working ball: the larger radius, re-verified on both maps.
  const double r_max = std::max(pa->region.radius, pb->region.radius);
  for (auto* pp : {&pa, &pb}) {
    certfp::PacketResult enlarged = certfp::enlarge_region(**pp, r_max, opts);
    if (!certfp::packet_ok(enlarged)) {
      print_checklist_failure(certfp::failure_of(enlarged));
      return kExitCertification;
    }
    *pp = certfp::packet_of(std::move(enlarged));
  }

  // Analytic perturbation size when the pair differs only in forcing/kernel.
  std::optional<double> analytic;
  const auto& oa = doc_a.op;
  const auto& ob = doc_b.op;
  const bool same_nonlinearity = [&] {
    if (oa.kind != ob.kind) return false;
    if (oa.kind == "affine") return oa.slope == ob.slope;
    json na, nb;
    auto dump_nl = [](const certfp::ProblemDocument::NonlinearitySpec& nl) {
      return json{{"rule", nl.rule},
                  {"lambda", nl.lambda},
                  {"expr", nl.expr.value_or("")},
                  {"offset", nl.offset.value_or("")}};
    };
    return dump_nl(*oa.nonlinearity) == dump_nl(*ob.nonlinearity);
  }();
  if (same_nonlinearity) {
    if (oa.kind == "affine") {
      analytic = std::abs(oa.offset - ob.offset);
    } else {
      const double dg = certfp::sup_distance(pa->op.forcing(), pb->op.forcing());
      const double dK =
          oa.kind == "volterra"
              ? certfp::kernel_deviation_V(pa->op.kernel(), pb->op.kernel(),
                                           doc_a.interval, doc_a.grid_size)
              : certfp::kernel_deviation_H(pa->op.kernel(), pb->op.kernel(),
                                           doc_a.interval, doc_a.grid_size);
      analytic = oa.kind == "green"
                     ? certfp::bvp_perturbation_bound(dg, dK, pa->zero_bound, pa->lip_f, r_max)
                     : certfp::hammerstein_perturbation_bound(dg, dK, pa->zero_bound,
                                                              pa->lip_f, r_max);
    }
  }

  const certfp::PerturbationReport rep =
      certfp::two_sided_stability(*pa, *pb, samples, seed, analytic);

  json report{{"schema_version", 1},
              {"problem_a", path_a},
              {"problem_b", path_b},
              {"seed", seed},
              {"shared_radius", r_max},
              {"stability", certfp::stability_json(rep)}};
  write_json(report_path, report);

  std::cout << "eps_estimate=" << rep.eps_estimate;
  if (rep.eps_analytic) std::cout << " eps_analytic=" << *rep.eps_analytic;
  std::cout << " kappa=" << rep.kappa << " stab_bound=" << rep.stab_bound
            << " observed_gap=" << *rep.observed_gap << "\n"
            << "report: " << report_path.string() << "\n";
  return kExitOk;
}

int run_inexact(const std::string& path, std::optional<double> eta_bar,
                const std::string& eta_seq, bool quadrature, std::size_t steps,
                std::optional<std::uint64_t> seed_flag, const std::string& out_flag) {
  const fs::path out_dir = resolve_out_dir(out_flag);
  fs::create_directories(out_dir);
  const fs::path report_path = out_dir / (stem_of(path) + ".inexact.json");
  const fs::path csv_path = out_dir / (stem_of(path) + ".inexact.csv");

  int code = kExitOk;
  auto loaded = load_and_certify(path, seed_flag, 16, code, report_path);
  if (!loaded) return code;
  const certfp::ProblemDocument& doc = loaded->doc;
  const certfp::DataPacket& p = loaded->packet;

  const std::uint64_t seed =
      seed_flag.value_or(doc.noise && doc.noise->seed ? *doc.noise->seed
                                                      : doc.effective_seed());

  certfp::NoiseBudget budget;
  if (eta_bar) {
    budget = certfp::NoiseBudget::constant(*eta_bar, seed);
  } else if (!eta_seq.empty()) {
    std::vector<double> etas;
    std::stringstream ss(eta_seq);
    std::string item;
    while (std::getline(ss, item, ',')) etas.push_back(std::stod(item));
    budget = certfp::NoiseBudget::sequence(std::move(etas), seed);
  } else if (quadrature) {
    budget = certfp::NoiseBudget::quadrature();
  } else if (doc.noise) {
    budget = doc.build_noise();
  } else {
    std::cerr << "no noise budget: pass --eta-bar, --eta-seq, or --quadrature, or add a "
                 "noise section to the document\n";
    return kExitParse;
  }

  std::optional<certfp::FixedPointOperator> refined;
  if (budget.source == certfp::NoiseBudget::Source::QuadratureEstimated) {
    if (!doc.refinable()) {
      std::cerr << "quadrature noise estimation needs expression-backed data\n";
      return kExitParse;
    }
    refined = doc.build_operator(2 * doc.grid_size - 1);
  }

  std::vector<certfp::GridFunction> iterates;
  certfp::IterationTrace trace =
      certfp::inexact_run(p, budget, certfp::StopRule::fixed_count(steps), steps + 1,
                          refined ? &*refined : nullptr, &iterates);

  // Reference solution by an exact high-accuracy run on the same grid.
  const certfp::IterationTrace ref_trace =
      certfp::picard_run(p, certfp::StopRule::residual(1e-12), 1000000);

  double eta_sup = 0.0;
  for (const auto& s : trace.steps) eta_sup = std::max(eta_sup, s.eta);
  const double floor = certfp::error_floor(p.modulus.kappa, eta_sup);

  double steady_error = 0.0;
  const std::size_t window = std::min<std::size_t>(50, iterates.size());
  for (std::size_t i = iterates.size() - window; i < iterates.size(); ++i)
    steady_error =
        std::max(steady_error, certfp::sup_distance(iterates[i], ref_trace.final_iterate));

  {
    std::ofstream csv(csv_path);
    certfp::write_trace_csv(trace, csv);
  }
  json report{{"schema_version", 1},
              {"problem", path},
              {"seed", seed},
              {"constants", certfp::constants_json(p)},
              {"trace", certfp::trace_summary_json(trace, csv_path.string())},
              {"noise",
               {{"eta_sup", eta_sup},
                {"error_floor", floor},
                {"observed_steady_error", steady_error},
                {"steady_window", window},
                {"reference_certified_error", ref_trace.certified_error}}}};
  write_json(report_path, report);

  std::cout << "steps=" << trace.step_count << " eta_sup=" << eta_sup
            << " error_floor=" << floor << " observed_steady_error=" << steady_error
            << "\nreport: " << report_path.string() << "\n";

  if (!trace.complete) return kExitBudget;
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"certified fixed-point solver"};
  app.require_subcommand(1);

  std::string problem, problem_b, out_dir, rule = "residual", eta_seq;
  std::optional<double> eps, eta_bar;
  std::optional<std::uint64_t> seed;
  std::size_t max_iter = 100000, samples = 16, steps = 100;
  bool quadrature = false;

  auto* certify = app.add_subcommand("certify", "run the admissibility checklist");
  certify->add_option("problem", problem, "problem document")->required();
  certify->add_option("--out", out_dir, "report directory");
  certify->add_option("--samples", samples, "invariance sample count");
  certify->add_option("--seed", seed, "sampling seed");

  auto* solve = app.add_subcommand("solve", "Picard iteration with certificates");
  solve->add_option("problem", problem, "problem document")->required();
  auto* eps_opt = solve->add_option("--eps", eps, "target certified error");
  solve->add_option("--rule", rule, "stop rule: apriori | gauge | residual")
      ->check(CLI::IsMember({"apriori", "gauge", "residual"}))
      ->needs(eps_opt);
  solve->add_option("--max-iter", max_iter, "iteration budget");
  solve->add_option("--out", out_dir, "report directory");
  solve->add_option("--seed", seed, "noise seed override");

  auto* stability = app.add_subcommand("stability", "two-sided data dependence bound");
  stability->add_option("problem_a", problem, "first problem document")->required();
  stability->add_option("problem_b", problem_b, "second problem document")->required();
  stability->add_option("--samples", samples, "perturbation sample count");
  stability->add_option("--seed", seed, "sampling seed");
  stability->add_option("--out", out_dir, "report directory");

  auto* inexact = app.add_subcommand("inexact", "noisy evaluation resilience");
  inexact->add_option("problem", problem, "problem document")->required();
  inexact->add_option("--eta-bar", eta_bar, "constant per-step noise level");
  inexact->add_option("--eta-seq", eta_seq, "comma-separated noise sequence");
  inexact->add_flag("--quadrature", quadrature, "estimate noise from grid refinement");
  inexact->add_option("--steps", steps, "number of iteration steps");
  inexact->add_option("--seed", seed, "noise seed");
  inexact->add_option("--out", out_dir, "report directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitParse;
  }

  try {
    if (certify->parsed()) return run_certify(problem, out_dir, samples, seed);
    if (solve->parsed()) return run_solve(problem, eps, rule, max_iter, out_dir, seed);
    if (stability->parsed())
      return run_stability(problem, problem_b, samples, seed, out_dir);
    if (inexact->parsed())
      return run_inexact(problem, eta_bar, eta_seq, quadrature, steps, seed, out_dir);
  } catch (const certfp::ParseFailure& err) {
    print_parse_failure(err);
    return kExitParse;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitParse;
  }
  return kExitParse;
}
