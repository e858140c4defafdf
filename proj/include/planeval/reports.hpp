// Machine-readable result files (line-delimited JSON records, versioned) and
// the human-readable summary tables.
#pragma once

#include <cstdio>
#include <string>
#include <vector>

#include <json.hpp>

#include "planeval/closed_loop.hpp"
#include "planeval/pipeline.hpp"

namespace planeval {

using json = nlohmann::json;

inline constexpr int kResultsFormatVersion = 1;

namespace report_detail {

inline json subscores_json(const SubscoreVector& s) {
  return json{{"nc", s.nc}, {"dac", s.dac}, {"ddc", s.ddc}, {"tlc", s.tlc}, {"ep", s.ep},
              {"ttc", s.ttc}, {"c", s.c},   {"lk", s.lk},   {"hc", s.hc},   {"ec", s.ec}};
}

inline json stage_json(const StageScore& s) {
  json terms = json::array();
  for (const auto& t : s.terms) {
    terms.push_back({{"name", t.name}, {"value", t.value}, {"weight", t.weight}, {"contribution", t.contribution}});
  }
  return json{{"total", s.total}, {"terms", terms}};
}

inline json fine_json(const FineGrainedScores& f) {
  json rows = json::array();
  for (int i = 0; i < f.matrix.agents; ++i) {
    json row = json::array();
    for (int h = 0; h < f.matrix.steps; ++h) row.push_back(f.matrix.at(i, h));
    rows.push_back(std::move(row));
  }
  json samples = json::array();
  for (const auto& step : f.twdac.map_samples) samples.push_back(step);
  return json{{"pwnc_total", f.pwnc_total},
              {"twdac_total", f.twdac_total},
              {"pwnc_matrix", rows},
              {"twdac_steps", f.twdac.step_scores},
              {"twdac_samples", samples}};
}

inline std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

}  // namespace report_detail

/// Per-candidate records plus a summary record for the selected trajectory
/// and the expert. One JSON object per line; the first line is the header.
inline std::string open_loop_results_jsonl(const Scenario& scenario, const OpenLoopEvaluation& ev,
                                           const MetricConfig& cfg) {
  std::string out;
  json header{{"format", "planeval_open_loop_results"},
              {"version", kResultsFormatVersion},
              {"scenario", scenario.name},
              {"candidates", ev.result.candidates.size()},
              {"shortlist", ev.result.shortlist.size()}};
  out += header.dump();
  out += '\n';
  const SubscoreVector human = ev.has_expert ? ev.expert : SubscoreVector{};
  for (const auto& cand : ev.result.candidates) {
    json rec{{"record", "candidate"},
             {"index", cand.index},
             {"imitation", cand.imitation},
             {"progress", cand.progress},
             {"subscores", report_detail::subscores_json(cand.sub)},
             {"pdms", pdms(cand.sub, cfg)},
             {"epdms", epdms(cand.sub, human, cfg)}};
    if (cand.stage1) rec["stage1"] = report_detail::stage_json(*cand.stage1);
    if (cand.stage2) rec["stage2"] = report_detail::stage_json(*cand.stage2);
    if (cand.fine) rec["fine"] = report_detail::fine_json(*cand.fine);
    out += rec.dump();
    out += '\n';
  }
  json sel{{"record", "selection"},
           {"stage1_choice", ev.result.stage1_choice},
           {"final_choice", ev.result.final_choice},
           {"selected_subscores", report_detail::subscores_json(ev.selected)},
           {"selected_pdms", ev.selected_pdms},
           {"selected_epdms", ev.selected_epdms}};
  if (ev.has_expert) {
    sel["expert_subscores"] = report_detail::subscores_json(ev.expert);
    sel["expert_pdms"] = ev.expert_pdms;
  }
  out += sel.dump();
  out += '\n';
  return out;
}

/// Table mirroring the open-loop benchmark columns.
inline std::string open_loop_summary_table(const Scenario& scenario, const OpenLoopEvaluation& ev) {
  using report_detail::fixed3;
  std::string out;
  out += "scenario: " + scenario.name + "\n";
  out += "row       NC     DAC    TTC    EP     Comfort  PDMS   EPDMS\n";
  const auto row = [&](const char* label, const SubscoreVector& s, double p, double e) {
    out += label;
    out += "  " + fixed3(s.nc) + "  " + fixed3(s.dac) + "  " + fixed3(s.ttc) + "  " + fixed3(s.ep) +
           "  " + fixed3(s.c) + "    " + fixed3(p) + "  " + fixed3(e) + "\n";
  };
  row("selected", ev.selected, ev.selected_pdms, ev.selected_epdms);
  if (ev.has_expert) row("expert  ", ev.expert, ev.expert_pdms, 1.0);
  out += "extended selected: DDC " + fixed3(ev.selected.ddc) + "  TLC " + fixed3(ev.selected.tlc) +
         "  LK " + fixed3(ev.selected.lk) + "  HC " + fixed3(ev.selected.hc) + "  EC " +
         fixed3(ev.selected.ec) + "\n";
  return out;
}

inline json episode_json(const std::string& route_name, const EpisodeResult& r) {
  json infractions = json::array();
  for (const auto& ev : r.infractions) {
    infractions.push_back({{"kind", to_string(ev.kind)}, {"step", ev.step}, {"penalty", ev.penalty}});
  }
  return json{{"record", "route"},
              {"route", route_name},
              {"rc", r.rc},
              {"ds", r.ds},
              {"success", r.success},
              {"terminal", to_string(r.terminal)},
              {"steps", r.steps},
              {"infractions", infractions}};
}

inline std::string closed_loop_results_jsonl(const std::vector<std::string>& route_names,
                                             const std::vector<EpisodeResult>& results) {
  std::string out;
  json header{{"format", "planeval_closed_loop_results"},
              {"version", kResultsFormatVersion},
              {"routes", results.size()}};
  out += header.dump();
  out += '\n';
  for (std::size_t i = 0; i < results.size(); ++i) {
    out += episode_json(route_names[i], results[i]).dump();
    out += '\n';
  }
  json agg{{"record", "aggregate"},
           {"driving_score", driving_score(results)},
           {"success_rate", success_rate(results)}};
  out += agg.dump();
  out += '\n';
  return out;
}

/// Table mirroring the closed-loop benchmark columns (DS, SR%).
inline std::string closed_loop_summary_table(const std::vector<std::string>& route_names,
                                             const std::vector<EpisodeResult>& results) {
  using report_detail::fixed3;
  std::string out = "route                          RC      DS      success  terminal\n";
  for (std::size_t i = 0; i < results.size(); ++i) {
    std::string name = route_names[i];
    name.resize(28, ' ');
    out += name + "  " + fixed3(results[i].rc) + "  " + fixed3(results[i].ds) + "  " +
           (results[i].success ? "yes" : "no ") + "      " + to_string(results[i].terminal) + "\n";
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "aggregate: DS %.2f  SR(%%) %.2f\n", driving_score(results),
                100.0 * success_rate(results));
  out += buf;
  return out;
}

}  // namespace planeval
