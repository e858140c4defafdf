// Fine-grained safety scores: the pair-wise collision-free matrix (agent x
// step) with its double-product aggregate, and the time-wise drivable
// compliance vector with nine-keypoint map sampling and product aggregate.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "planeval/metrics.hpp"
#include "planeval/world.hpp"

namespace planeval {

/// N x H collision-free probabilities; rows are agents, columns timesteps.
/// Entries for masked (absent) agent steps are fixed to 1.
struct PwNCMatrix {
  int agents = 0;
  int steps = 0;
  std::vector<double> values;

  double at(int agent, int step) const { return values[static_cast<std::size_t>(agent) * steps + step]; }
  double& at(int agent, int step) { return values[static_cast<std::size_t>(agent) * steps + step]; }
};

/// Per-step drivable compliance scores plus the H x 9 keypoint map samples.
struct TwDACVector {
  std::vector<double> step_scores;
  std::vector<std::array<double, 9>> map_samples;
};

struct FineGrainedScores {
  double pwnc_total = 1.0;
  double twdac_total = 1.0;
  PwNCMatrix matrix;
  TwDACVector twdac;
};

struct FineGrainedConfig {
  double d_safe = 3.0;        // clearance at which the pwnc ramp reaches 1
  double twdac_margin = 0.1;  // box inflation for the corner-compliance check
};

/// Geometric stand-in for the learned pair-wise collision head: 0 on box
/// overlap, otherwise a linear clearance ramp min(1, distance / d_safe).
inline PwNCMatrix pwnc_oracle(const SparseWorld& world, const Scenario& scenario, double d_safe = 3.0) {
  PwNCMatrix m;
  m.agents = static_cast<int>(world.agent_futures.size());
  m.steps = static_cast<int>(world.ego_traj.size());
  m.values.assign(static_cast<std::size_t>(m.agents) * m.steps, 1.0);
  std::vector<BoxShadow> ego_shadows(m.steps);
  for (int h = 0; h < m.steps; ++h) ego_shadows[h] = make_shadow(scenario.ego_box(world.ego_traj[h]));
  for (int i = 0; i < m.agents; ++i) {
    const auto& agent = scenario.agents[i];
    for (int h = 0; h < m.steps; ++h) {
      if (!agent.valid[h]) continue;  // absent agents cannot collide
      // Axis-aligned separation lower-bounds the true distance; boxes farther
      // apart than d_safe on either axis keep the ramp saturated at 1.
      const Vec2 delta = world.agent_futures[i][h].position() - world.ego_traj[h].position();
      const double reach = agent.length + agent.width + scenario.ego.length + scenario.ego.width;
      if (std::abs(delta.x) - reach > d_safe || std::abs(delta.y) - reach > d_safe) continue;
      const BoxShadow agent_shadow = make_shadow(agent.box_at(world.agent_futures[i][h]));
      if (shadow_overlap(ego_shadows[h], agent_shadow)) {
        m.at(i, h) = 0.0;
      } else {
        m.at(i, h) = std::min(1.0, shadow_min_distance(ego_shadows[h], agent_shadow) / d_safe);
      }
    }
  }
  return m;
}

namespace detail {

/// Product of probabilities accumulated in log space with an underflow floor
/// of 1e-300; an exact zero factor short-circuits to an exact 0. The log
/// terms are summed in sorted order, which makes the result independent of
/// the factor order (permuting agents or steps is bit-exact).
class LogProduct {
 public:
  void reserve(std::size_t n) { logs_.reserve(n); }

  void multiply(double p) {
    if (p == 0.0) {
      zero_ = true;
    } else if (!zero_ && p != 1.0) {
      logs_.push_back(std::log(p));
    }
  }

  double value() const {
    if (zero_) return 0.0;
    std::vector<double> sorted = logs_;
    std::sort(sorted.begin(), sorted.end());
    double sum = 0.0;
    for (const double v : sorted) sum += v;
    constexpr double kFloor = -690.77552789821368;  // log(1e-300)
    return std::exp(std::max(sum, kFloor));
  }

 private:
  std::vector<double> logs_;
  bool zero_ = false;
};

}  // namespace detail

/// Double product over all agents and timesteps.
inline double pwnc_aggregate(const PwNCMatrix& m) {
  detail::LogProduct product;
  product.reserve(m.values.size());
  for (const double v : m.values) product.multiply(v);
  return product.value();
}

/// Geometric stand-in for the learned time-wise drivable head. The step score
/// is 1 when the margin-inflated ego box keeps all four corners at drivable
/// probability >= 0.5, otherwise the mean corner sample; the map samples are
/// the drivable probabilities at the nine key points of the uninflated box.
inline TwDACVector twdac_oracle(const std::vector<Pose2>& ego_traj, const Scenario& scenario,
                                double margin = 0.1) {
  const ProbGrid& grid = scenario.road.drivable;
  TwDACVector out;
  out.step_scores.reserve(ego_traj.size());
  out.map_samples.reserve(ego_traj.size());
  for (const auto& pose : ego_traj) {
    const OrientedBox box = scenario.ego_box(pose);
    double corner_sum = 0.0;
    bool all_compliant = true;
    for (const Vec2 corner : box.inflated(margin).corners()) {
      const double p = drivable_prob(grid, corner);
      corner_sum += p;
      all_compliant = all_compliant && p >= 0.5;
    }
    out.step_scores.push_back(all_compliant ? 1.0 : corner_sum / 4.0);
    std::array<double, 9> samples{};
    const auto keypoints = ego_keypoints(box);
    for (int k = 0; k < 9; ++k) samples[k] = drivable_prob(grid, keypoints[k]);
    out.map_samples.push_back(samples);
  }
  return out;
}

/// Product over timesteps of (step score * product of the nine samples).
inline double twdac_aggregate(const TwDACVector& vec) {
  detail::LogProduct product;
  for (std::size_t h = 0; h < vec.step_scores.size(); ++h) {
    product.multiply(vec.step_scores[h]);
    for (const double s : vec.map_samples[h]) product.multiply(s);
  }
  return product.value();
}

inline FineGrainedScores fine_grained_scores(const SparseWorld& world, const Scenario& scenario,
                                             const FineGrainedConfig& cfg = {}) {
  FineGrainedScores out;
  out.matrix = pwnc_oracle(world, scenario, cfg.d_safe);
  out.twdac = twdac_oracle(world.ego_traj, scenario, cfg.twdac_margin);
  out.pwnc_total = pwnc_aggregate(out.matrix);
  out.twdac_total = twdac_aggregate(out.twdac);
  return out;
}

}  // namespace planeval
