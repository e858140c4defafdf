// Two-stage candidate selection: the scene-level weighted log-sum filter to
// the top K' candidates, then the fine-grained weighted log-sum final pick.
#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "planeval/anchors.hpp"
#include "planeval/fine_grained.hpp"
#include "planeval/metrics.hpp"

namespace planeval {

struct ScoreTerm {
  std::string name;
  double value = 0.0;
  double weight = 0.0;
  double contribution = 0.0;  // weight * log(max(value, epsilon))
};

struct StageScore {
  double total = 0.0;
  std::vector<ScoreTerm> terms;
};

struct Candidate {
  int index = 0;
  std::vector<Pose2> traj;
  double imitation = 1.0;
  SubscoreVector sub;
  std::optional<FineGrainedScores> fine;  // present only after stage-2 scoring
  double progress = 0.0;                  // route-projected meters, cached for EP
  std::optional<StageScore> stage1;
  std::optional<StageScore> stage2;
};

struct Stage1Weights {
  double imitation = 1.0;
  double nc = 2.0;
  double dac = 2.0;
  double ttc = 1.0;
  double ep = 1.0;
  double c = 1.0;
};

struct Stage2Weights {
  double imitation = 1.0;
  double pwnc = 3.0;
  double twdac = 3.0;
  double ep = 1.0;
  double c = 1.0;
  double ttc = 1.0;
};

struct SelectionConfig {
  Stage1Weights stage1;
  Stage2Weights stage2;
  int top_k = 128;        // K'
  double epsilon = 1e-6;  // probability floor before the log

  void validate() const {
    const double weights[] = {stage1.imitation, stage1.nc, stage1.dac, stage1.ttc, stage1.ep, stage1.c,
                              stage2.imitation, stage2.pwnc, stage2.twdac, stage2.ep, stage2.c, stage2.ttc};
    for (const double w : weights) {
      if (w < 0.0) throw ValidationError("selection config: weights must be non-negative");
    }
    if (top_k < 1) throw ValidationError("selection config: top_k must be >= 1");
    if (!(epsilon > 0.0 && epsilon <= 1e-3)) throw ValidationError("selection config: epsilon outside (0, 1e-3]");
  }
};

namespace detail {

inline ScoreTerm log_term(const std::string& name, double value, double weight, double epsilon) {
  return {name, value, weight, weight * std::log(std::max(value, epsilon))};
}

inline StageScore stage1_score(const Candidate& cand, const SelectionConfig& cfg) {
  StageScore s;
  s.terms = {
      log_term("imitation", cand.imitation, cfg.stage1.imitation, cfg.epsilon),
      log_term("nc", cand.sub.nc, cfg.stage1.nc, cfg.epsilon),
      log_term("dac", cand.sub.dac, cfg.stage1.dac, cfg.epsilon),
      log_term("ttc", cand.sub.ttc, cfg.stage1.ttc, cfg.epsilon),
      log_term("ep", cand.sub.ep, cfg.stage1.ep, cfg.epsilon),
      log_term("c", cand.sub.c, cfg.stage1.c, cfg.epsilon),
  };
  for (const auto& t : s.terms) s.total += t.contribution;
  return s;
}

inline StageScore stage2_score(const Candidate& cand, const SelectionConfig& cfg) {
  const auto& fine = *cand.fine;
  StageScore s;
  s.terms = {
      log_term("imitation", cand.imitation, cfg.stage2.imitation, cfg.epsilon),
      log_term("pwnc", fine.pwnc_total, cfg.stage2.pwnc, cfg.epsilon),
      log_term("twdac", fine.twdac_total, cfg.stage2.twdac, cfg.epsilon),
      log_term("ep", cand.sub.ep, cfg.stage2.ep, cfg.epsilon),
      log_term("c", cand.sub.c, cfg.stage2.c, cfg.epsilon),
      log_term("ttc", cand.sub.ttc, cfg.stage2.ttc, cfg.epsilon),
  };
  for (const auto& t : s.terms) s.total += t.contribution;
  return s;
}

}  // namespace detail

/// Scene-level weighted log-sum ranking; fills each candidate's stage-1 score
/// and returns the indices (into `candidates`) of the top K' entries, best
/// first, ties broken by lower candidate index.
inline std::vector<int> proposal_stage(std::vector<Candidate>& candidates, const SelectionConfig& cfg) {
  if (static_cast<int>(candidates.size()) < cfg.top_k) {
    throw ValidationError("proposal_stage: " + std::to_string(candidates.size()) +
                          " candidates but top_k is " + std::to_string(cfg.top_k));
  }
  for (auto& cand : candidates) cand.stage1 = detail::stage1_score(cand, cfg);
  std::vector<int> order(candidates.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (candidates[a].stage1->total != candidates[b].stage1->total) {
      return candidates[a].stage1->total > candidates[b].stage1->total;
    }
    return candidates[a].index < candidates[b].index;
  });
  order.resize(cfg.top_k);
  return order;
}

/// Fine-grained weighted log-sum argmax over the candidates named by
/// `subset`, all of which must carry FineGrainedScores; ties break by higher
/// imitation, then lower index. Returns the winning candidate's `index`.
inline int final_select(std::vector<Candidate>& candidates, const std::vector<int>& subset,
                        const SelectionConfig& cfg) {
  if (subset.empty()) throw ValidationError("final_select: empty candidate set");
  int best = -1;
  for (const int i : subset) {
    auto& cand = candidates[i];
    if (!cand.fine) throw ValidationError("final_select: candidate " + std::to_string(cand.index) + " has no fine-grained scores");
    cand.stage2 = detail::stage2_score(cand, cfg);
    if (best < 0) {
      best = i;
      continue;
    }
    const auto& incumbent = candidates[best];
    const double s_new = cand.stage2->total, s_old = incumbent.stage2->total;
    if (s_new > s_old ||
        (s_new == s_old && (cand.imitation > incumbent.imitation ||
                            (cand.imitation == incumbent.imitation && cand.index < incumbent.index)))) {
      best = i;
    }
  }
  return candidates[best].index;
}

inline int final_select(std::vector<Candidate>& candidates, const SelectionConfig& cfg) {
  std::vector<int> all(candidates.size());
  std::iota(all.begin(), all.end(), 0);
  return final_select(candidates, all, cfg);
}

/// Imitation score in [0, 1]: exp(-lambda * flattened L2 to the expert) when
/// the scenario carries one, otherwise the anchor prior 1 / (1 + distance to
/// the nearest anchor).
inline double imitation_score(const std::vector<Pose2>& traj, const Scenario& scenario,
                              const AnchorSet* anchors, double lambda = 0.1) {
  if (!scenario.expert.empty()) {
    double sum = 0.0;
    for (std::size_t h = 0; h < traj.size(); ++h) {
      sum += squared_norm(traj[h].position() - scenario.expert[h].position());
    }
    return std::exp(-lambda * std::sqrt(sum));
  }
  if (anchors == nullptr) return 1.0;
  // Anchor distances live in the ego frame; move the candidate back into it.
  // A shorter trajectory (a truncated planning window) compares against the
  // anchor heads.
  if (anchors->horizon < static_cast<int>(traj.size())) {
    throw ValidationError("imitation_score: anchor horizon shorter than the trajectory");
  }
  std::vector<Vec2> local(traj.size());
  for (std::size_t h = 0; h < traj.size(); ++h) local[h] = to_local(scenario.ego.pose, traj[h].position());
  double best = std::numeric_limits<double>::infinity();
  for (const auto& anchor : anchors->anchors) {
    double sum = 0.0;
    for (std::size_t h = 0; h < local.size(); ++h) sum += squared_norm(local[h] - anchor[h]);
    best = std::min(best, sum);
  }
  return 1.0 / (1.0 + std::sqrt(best));
}

}  // namespace planeval
