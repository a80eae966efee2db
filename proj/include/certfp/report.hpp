#pragma once

#include <string>

#include <json.hpp>

#include "certfp/engine.hpp"
#include "certfp/operators.hpp"
#include "certfp/stability.hpp"

namespace certfp {

inline nlohmann::json checklist_json(const Checklist& list) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& item : list.items) {
    out.push_back({{"item", item.id},
                   {"name", item.name},
                   {"passed", item.passed},
                   {"evidence", item.evidence},
                   {"note", item.note}});
  }
  return out;
}

inline nlohmann::json constants_json(const DataPacket& packet) {
  return {{"L_f", packet.lip_f},
          {"M", packet.kernel_bound},
          {"kappa", packet.modulus.kappa},
          {"kappa_method", packet.modulus.method == CertifiedModulus::Method::Analytic
                               ? "analytic"
                               : "grid_sup_monotone_ratio"},
          {"kappa_radius", packet.modulus.radius},
          {"R", packet.region.radius},
          {"delta0", packet.delta0},
          {"M_f0", packet.zero_bound},
          {"forcing_norm", packet.forcing_norm}};
}

inline nlohmann::json trace_summary_json(const IterationTrace& trace,
                                         const std::string& csv_path) {
  return {{"steps", trace.step_count},
          {"stop_reason", trace.stop_reason},
          {"complete", trace.complete},
          {"certified_error", trace.certified_error},
          {"csv", csv_path}};
}

inline nlohmann::json stability_json(const PerturbationReport& rep) {
  nlohmann::json out = {{"eps_estimate", rep.eps_estimate},
                        {"kappa", rep.kappa},
                        {"stab_bound", rep.stab_bound}};
  if (rep.eps_analytic) out["eps_analytic"] = *rep.eps_analytic;
  if (rep.observed_gap) out["observed_gap"] = *rep.observed_gap;
  return out;
}

}  // namespace certfp
