// End-to-end planning pipeline: anchor-seeded candidates, scene-level scoring
// against logged agent futures, top-K' proposal, sparse-world refinement,
// fine-grained scoring, and the final weighted log-sum pick.
#pragma once

#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

#include "planeval/anchors.hpp"
#include "planeval/fine_grained.hpp"
#include "planeval/metrics.hpp"
#include "planeval/selection.hpp"
#include "planeval/world.hpp"

namespace planeval {

struct PlannerConfig {
  MetricConfig metrics;
  SelectionConfig selection;
  RefineParams refine;
  FineGrainedConfig fine;
  double imitation_lambda = 0.1;
  int workers = 1;
};

/// Runs fn(i) for i in [0, n) across up to `workers` threads. Output must be
/// written to per-index slots; the schedule never affects results. The first
/// exception thrown by fn is rethrown on the calling thread. The worker count
/// is a cap: never more threads than items or hardware cores.
inline void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
  const int hw = static_cast<int>(std::thread::hardware_concurrency());
  workers = std::min(workers, std::max(1, hw));
  if (workers <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  const int thread_count = std::min(workers, n);
  std::vector<std::thread> threads;
  threads.reserve(thread_count);
  for (int t = 0; t < thread_count; ++t) {
    threads.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n && !failed.load(); i = next.fetch_add(1)) {
        try {
          fn(i);
        } catch (...) {
          const std::lock_guard<std::mutex> lock(error_mutex);
          if (!failed.exchange(true)) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : threads) th.join();
  if (error) std::rethrow_exception(error);
}

/// Anchor vocabulary transformed into the scenario frame at the ego pose.
/// Anchors longer than the scenario horizon are truncated (a shorter planning
/// window uses the head of each anchor); shorter ones are an error.
inline std::vector<std::vector<Pose2>> candidates_from_anchors(const AnchorSet& anchors,
                                                               const Scenario& scenario) {
  if (anchors.horizon < scenario.horizon_steps) {
    throw ValidationError("candidates_from_anchors: anchor horizon " + std::to_string(anchors.horizon) +
                          " shorter than scenario horizon " + std::to_string(scenario.horizon_steps));
  }
  std::vector<std::vector<Pose2>> out;
  out.reserve(anchors.k);
  for (int a = 0; a < anchors.k; ++a) {
    std::vector<Pose2> traj = anchors.pose_trajectory(a);
    traj.resize(scenario.horizon_steps);
    for (auto& pose : traj) {
      const Vec2 world = to_world(scenario.ego.pose, pose.position());
      pose = {world.x, world.y, normalize_angle(pose.heading + scenario.ego.pose.heading)};
    }
    out.push_back(std::move(traj));
  }
  return out;
}

struct PlanResult {
  std::vector<Candidate> candidates;  // all inputs, stage-1 scored
  std::vector<int> shortlist;         // candidate indices surviving stage 1, ranked
  int stage1_choice = -1;             // top candidate of stage 1
  int final_choice = -1;              // winner of the fine-grained stage
  std::vector<Pose2> selected_traj;   // refined trajectory of the winner
  std::vector<SparseWorld> worlds;    // refined worlds, aligned with shortlist
};

/// Scene-level subscores of one trajectory against the logged agent futures.
/// EP is filled by the caller (it normalizes over the whole candidate set).
inline SubscoreVector scene_subscores(const std::vector<Pose2>& traj, const Scenario& scenario,
                                      const MetricConfig& cfg) {
  SparseWorld logged;
  logged.candidate_index = -1;
  logged.ego_traj = traj;
  logged.agent_futures.reserve(scenario.agents.size());
  for (const auto& a : scenario.agents) logged.agent_futures.push_back(a.future);

  SubscoreVector sub;
  sub.nc = score_nc(logged, scenario, cfg);
  sub.dac = score_dac(traj, scenario, cfg);
  sub.ttc = score_ttc(logged, scenario, cfg);
  sub.c = traj.size() >= 3 ? score_comfort(traj, scenario.dt, cfg) : 1.0;
  const auto ext = score_extended(logged, scenario, cfg);
  sub.ddc = ext.ddc;
  sub.tlc = ext.tlc;
  sub.lk = ext.lk;
  sub.hc = ext.hc;
  sub.ec = ext.ec;
  return sub;
}

/// Full pipeline over an explicit candidate list. The returned final choice
/// is the candidate index; selected_traj is the refined (smoothed) ego
/// trajectory of the winning sparse world.
inline PlanResult plan_candidates(const Scenario& scenario, const AnchorSet* anchors,
                                  std::vector<std::vector<Pose2>> candidate_trajs,
                                  const PlannerConfig& cfg) {
  const int n = static_cast<int>(candidate_trajs.size());
  if (n == 0) throw ValidationError("plan: empty candidate set");
  for (int i = 0; i < n; ++i) {
    if (candidate_trajs[i].size() != static_cast<std::size_t>(scenario.horizon_steps)) {
      throw ValidationError("plan: candidate " + std::to_string(i) + " has " +
                            std::to_string(candidate_trajs[i].size()) + " poses, horizon is " +
                            std::to_string(scenario.horizon_steps));
    }
  }

  PlanResult result;
  result.candidates.resize(n);
  parallel_for(n, cfg.workers, [&](int i) {
    Candidate cand;
    cand.index = i;
    cand.traj = std::move(candidate_trajs[i]);
    cand.imitation = imitation_score(cand.traj, scenario, anchors, cfg.imitation_lambda);
    cand.sub = scene_subscores(cand.traj, scenario, cfg.metrics);
    cand.progress = route_progress(cand.traj, scenario.route);
    result.candidates[i] = std::move(cand);
  });

  std::vector<double> progress(n);
  std::vector<bool> safe(n);
  for (int i = 0; i < n; ++i) {
    progress[i] = result.candidates[i].progress;
    safe[i] = result.candidates[i].sub.nc > 0.0 && result.candidates[i].sub.dac == 1.0;
  }
  const auto ep = ep_scores(progress, safe);
  for (int i = 0; i < n; ++i) result.candidates[i].sub.ep = ep[i];

  SelectionConfig selection = cfg.selection;
  selection.top_k = std::min(selection.top_k, n);
  result.shortlist = proposal_stage(result.candidates, selection);
  result.stage1_choice = result.shortlist.front();

  result.worlds.resize(result.shortlist.size());
  parallel_for(static_cast<int>(result.worlds.size()), cfg.workers, [&](int w) {
    const int idx = result.shortlist[w];
    SparseWorld world;
    world.candidate_index = idx;
    world.ego_traj = result.candidates[idx].traj;
    world.agent_futures.reserve(scenario.agents.size());
    for (const auto& a : scenario.agents) world.agent_futures.push_back(a.future);
    result.worlds[w] = refine_world(world, scenario, cfg.refine);
    result.candidates[idx].fine = fine_grained_scores(result.worlds[w], scenario, cfg.fine);
  });

  result.final_choice = final_select(result.candidates, result.shortlist, selection);

  for (std::size_t w = 0; w < result.worlds.size(); ++w) {
    if (result.shortlist[w] == result.final_choice) {
      result.selected_traj = result.worlds[w].ego_traj;
      break;
    }
  }
  return result;
}

inline PlanResult plan(const Scenario& scenario, const AnchorSet& anchors, const PlannerConfig& cfg) {
  return plan_candidates(scenario, &anchors, candidates_from_anchors(anchors, scenario), cfg);
}

/// Post-hoc evaluation of one trajectory against the logged futures: full
/// subscore vector with EP normalized over the candidate set the planner saw.
inline SubscoreVector evaluate_trajectory(const std::vector<Pose2>& traj, const Scenario& scenario,
                                          const PlanResult& context, const MetricConfig& cfg);

struct OpenLoopEvaluation {
  PlanResult result;
  SubscoreVector selected;   // evaluation of the emitted plan vs logged futures
  double selected_pdms = 0.0;
  double selected_epdms = 0.0;
  bool has_expert = false;
  SubscoreVector expert;     // human reference scores; all-ones when absent
  double expert_pdms = 0.0;
};

/// Plans once and scores both the selected trajectory and the expert (when
/// present) against the logged futures. EPDMS uses the expert subscores as
/// the human vector; without an expert the masking degenerates to identity.
inline OpenLoopEvaluation evaluate_open_loop(const Scenario& scenario, const AnchorSet& anchors,
                                             const PlannerConfig& cfg) {
  OpenLoopEvaluation ev;
  ev.result = plan(scenario, anchors, cfg);
  ev.selected = evaluate_trajectory(ev.result.selected_traj, scenario, ev.result, cfg.metrics);
  ev.selected_pdms = pdms(ev.selected, cfg.metrics);
  if (!scenario.expert.empty()) {
    ev.has_expert = true;
    ev.expert = evaluate_trajectory(scenario.expert, scenario, ev.result, cfg.metrics);
    ev.expert_pdms = pdms(ev.expert, cfg.metrics);
  }
  ev.selected_epdms = epdms(ev.selected, ev.expert, cfg.metrics);
  return ev;
}

inline SubscoreVector evaluate_trajectory(const std::vector<Pose2>& traj, const Scenario& scenario,
                                          const PlanResult& context, const MetricConfig& cfg) {
  SubscoreVector sub = scene_subscores(traj, scenario, cfg);
  std::vector<double> progress;
  std::vector<bool> safe;
  progress.reserve(context.candidates.size() + 1);
  safe.reserve(context.candidates.size() + 1);
  for (const auto& cand : context.candidates) {
    progress.push_back(cand.progress);
    safe.push_back(cand.sub.nc > 0.0 && cand.sub.dac == 1.0);
  }
  progress.push_back(route_progress(traj, scenario.route));
  safe.push_back(sub.nc > 0.0 && sub.dac == 1.0);
  sub.ep = ep_scores(progress, safe).back();
  return sub;
}

}  // namespace planeval
