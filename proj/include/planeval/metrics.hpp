// Scene-level subscores (NC, DAC, TTC, EP, C plus the five extended metrics)
// and the PDMS / EPDMS aggregation formulas.
#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "planeval/world.hpp"

namespace planeval {

/// Per-candidate scene-level metric values. Ranges: nc and ddc in {0, 1/2, 1},
/// ep in [0, 1], all others in {0, 1}.
struct SubscoreVector {
  double nc = 1.0;
  double dac = 1.0;
  double ddc = 1.0;
  double tlc = 1.0;
  double ep = 1.0;
  double ttc = 1.0;
  double c = 1.0;
  double lk = 1.0;
  double hc = 1.0;
  double ec = 1.0;
};

struct ComfortBounds {
  double a_lon_max = 4.89;     // m/s^2
  double a_lat_max = 4.89;     // m/s^2
  double jerk_max = 8.37;      // m/s^3
  double yaw_rate_max = 0.95;  // rad/s
};

struct MetricConfig {
  // Weighted-average weights for pdms / epdms.
  double w_ep = 5.0;
  double w_ttc = 5.0;
  double w_c = 2.0;
  double w_lk = 2.0;
  double w_hc = 2.0;
  double w_ec = 2.0;
  ComfortBounds comfort;
  double t_ttc = 1.0;              // constant-velocity projection bound, seconds
  double lk_threshold = 0.5;       // lateral offset bound, meters
  double ddc_d1 = 2.0;             // wrong-way distance for ddc = 1
  double ddc_d2 = 6.0;             // wrong-way distance for ddc = 0.5
  double ec_threshold = 1.0;       // plan-consistency bound, meters
  int ec_steps = 3;                // leading waypoints compared for ec
  double stationary_speed = 0.05;  // m/s; below this the ego counts as stopped
  double drivable_threshold = 0.5;

  void validate() const {
    if (!(w_ep > 0 && w_ttc > 0 && w_c > 0 && w_lk > 0 && w_hc > 0 && w_ec > 0)) {
      throw ValidationError("metric config: weights must be positive");
    }
    if (!(t_ttc > 0 && lk_threshold > 0 && ddc_d1 > 0 && ddc_d2 > ddc_d1 && ec_threshold > 0)) {
      throw ValidationError("metric config: thresholds must be positive (and ddc_d2 > ddc_d1)");
    }
    if (!(comfort.a_lon_max > 0 && comfort.a_lat_max > 0 && comfort.jerk_max > 0 && comfort.yaw_rate_max > 0)) {
      throw ValidationError("metric config: comfort bounds must be positive");
    }
  }
};

namespace detail {

/// Finite-difference velocity at step h of a pose sequence (forward
/// difference at the first step).
inline Vec2 step_velocity(const std::vector<Pose2>& traj, int h, double dt) {
  const int n = static_cast<int>(traj.size());
  if (n < 2) return {};
  if (h <= 0) return (traj[1].position() - traj[0].position()) / dt;
  if (h >= n) h = n - 1;
  return (traj[h].position() - traj[h - 1].position()) / dt;
}

struct ContactInfo {
  int step = 0;
  Vec2 point;  // centroid of the overlap region
};

/// First step at which the ego and agent boxes overlap, with the contact
/// centroid; nullopt when the trajectories never collide.
inline std::optional<ContactInfo> first_contact(const std::vector<BoxShadow>& ego_shadows,
                                                const Scenario& scenario, const AgentInstance& agent,
                                                const std::vector<Pose2>& agent_future,
                                                const std::vector<Pose2>& ego_traj) {
  for (int h = 0; h < static_cast<int>(ego_traj.size()); ++h) {
    if (!agent.valid[h]) continue;
    const OrientedBox agent_box = agent.box_at(agent_future[h]);
    if (!shadow_overlap(ego_shadows[h], make_shadow(agent_box))) continue;
    const OrientedBox ego_box = scenario.ego_box(ego_traj[h]);
    const auto corners = agent_box.corners();
    const auto clipped = clip_polygon_to_box({corners.begin(), corners.end()}, ego_box);
    const Vec2 point = clipped.empty() ? agent_box.pose.position() : polygon_centroid(clipped);
    return ContactInfo{h, point};
  }
  return std::nullopt;
}

}  // namespace detail

/// No at-fault collisions. 1 with no contact at all, 0.5 when the only
/// contacts are with static objects, 0 on an at-fault vehicle/pedestrian
/// contact. A contact is forgiven (not at fault) when the ego is stationary
/// at the step of first contact and the contact centroid lies in the ego's
/// rear half.
inline double score_nc(const SparseWorld& world, const Scenario& scenario, const MetricConfig& cfg = {}) {
  bool static_contact = false;
  std::vector<BoxShadow> ego_shadows(world.ego_traj.size());
  for (std::size_t h = 0; h < world.ego_traj.size(); ++h) {
    ego_shadows[h] = make_shadow(scenario.ego_box(world.ego_traj[h]));
  }
  for (std::size_t i = 0; i < world.agent_futures.size(); ++i) {
    const auto& agent = scenario.agents[i];
    const auto contact =
        detail::first_contact(ego_shadows, scenario, agent, world.agent_futures[i], world.ego_traj);
    if (!contact) continue;
    if (agent.kind == AgentKind::static_object) {
      static_contact = true;
      continue;
    }
    const int h = contact->step;
    const double speed = h == 0 ? scenario.ego.speed : norm(detail::step_velocity(world.ego_traj, h, scenario.dt));
    const bool rear = to_local(world.ego_traj[h], contact->point).x <= 0.0;
    if (speed < cfg.stationary_speed && rear) continue;  // not at fault
    return 0.0;
  }
  return static_contact ? 0.5 : 1.0;
}

/// Drivable-area compliance: 1 iff all four corner keypoints of the ego box
/// sample drivable probability >= threshold at every step (out-of-map = 0).
inline double score_dac(const std::vector<Pose2>& ego_traj, const Scenario& scenario,
                        const MetricConfig& cfg = {}) {
  for (const auto& pose : ego_traj) {
    for (const Vec2 corner : scenario.ego_box(pose).corners()) {
      if (drivable_prob(scenario.road.drivable, corner) < cfg.drivable_threshold) return 0.0;
    }
  }
  return 1.0;
}

/// Time-to-collision bound: at every step, the ego and all vehicle agents are
/// projected forward at constant velocity in sub-steps of dt/2 up to t_ttc.
/// Returns 0 if any projection produces box overlap. Pedestrians and static
/// objects are the business of NC and the pair-wise scores, not of TTC.
inline double score_ttc(const SparseWorld& world, const Scenario& scenario, const MetricConfig& cfg = {}) {
  const double sub_dt = scenario.dt / 2.0;
  const int n_sub = static_cast<int>(std::floor(cfg.t_ttc / sub_dt + 1e-9));
  const int h_count = static_cast<int>(world.ego_traj.size());
  std::vector<BoxShadow> ego_shadows(h_count);
  std::vector<Vec2> ego_vel(h_count);
  for (int h = 0; h < h_count; ++h) {
    ego_shadows[h] = make_shadow(scenario.ego_box(world.ego_traj[h]));
    ego_vel[h] = h == 0 ? unit_vector(scenario.ego.pose.heading) * scenario.ego.speed
                        : detail::step_velocity(world.ego_traj, h, scenario.dt);
  }
  for (std::size_t i = 0; i < world.agent_futures.size(); ++i) {
    const auto& agent = scenario.agents[i];
    if (agent.kind != AgentKind::vehicle) continue;
    const auto& future = world.agent_futures[i];
    for (int h = 0; h < h_count; ++h) {
      if (!agent.valid[h]) continue;
      const BoxShadow agent_shadow = make_shadow(agent.box_at(future[h]));
      const Vec2 agent_vel = h == 0 ? detail::step_velocity(future, 1, scenario.dt)
                                    : detail::step_velocity(future, h, scenario.dt);
      const Vec2 closing = agent_vel - ego_vel[h];
      for (int k = 1; k <= n_sub; ++k) {
        const double t = k * sub_dt;
        // Only the relative motion matters for the overlap test.
        if (shadow_overlap(ego_shadows[h], translated(agent_shadow, closing * t))) return 0.0;
      }
    }
  }
  return 1.0;
}

/// Route-projected progress of a trajectory in meters: arc length of the
/// route between the projections of the first and last waypoints.
inline double route_progress(const std::vector<Pose2>& traj, const Polyline& route) {
  if (traj.empty()) return 0.0;
  const double s0 = project_to_polyline(route, traj.front().position()).arc;
  const double s1 = project_to_polyline(route, traj.back().position()).arc;
  return s1 - s0;
}

/// Ego-progress scores for a candidate set: each progress is divided by the
/// maximum progress over the safe candidates (nc > 0 and dac = 1), or over
/// all candidates when none is safe; results clamp to [0, 1]. A denominator
/// below 0.1 m makes every score 1.
inline std::vector<double> ep_scores(const std::vector<double>& progress, const std::vector<bool>& safe) {
  double denom = -std::numeric_limits<double>::infinity();
  bool any_safe = false;
  for (std::size_t i = 0; i < progress.size(); ++i) {
    if (safe[i]) {
      any_safe = true;
      denom = std::max(denom, progress[i]);
    }
  }
  if (!any_safe) {
    for (const double p : progress) denom = std::max(denom, p);
  }
  std::vector<double> out(progress.size(), 1.0);
  if (denom < 0.1) return out;
  for (std::size_t i = 0; i < progress.size(); ++i) out[i] = std::clamp(progress[i] / denom, 0.0, 1.0);
  return out;
}

struct ComfortDiagnostics {
  double max_a_lon = 0.0;
  double max_a_lat = 0.0;
  double max_jerk = 0.0;
  double max_yaw_rate = 0.0;
};

/// Comfort: finite-difference longitudinal/lateral acceleration, jerk, and
/// yaw rate all within bounds (inclusive comparisons). Needs H >= 3.
inline double score_comfort(const std::vector<Pose2>& traj, double dt, const MetricConfig& cfg = {},
                            ComfortDiagnostics* diag = nullptr) {
  const int n = static_cast<int>(traj.size());
  if (n < 3) throw ValidationError("score_comfort: needs at least 3 waypoints");
  std::vector<Vec2> vel(n - 1);
  for (int h = 0; h + 1 < n; ++h) vel[h] = (traj[h + 1].position() - traj[h].position()) / dt;
  std::vector<Vec2> acc(n - 2);
  for (int h = 0; h + 2 < n; ++h) acc[h] = (vel[h + 1] - vel[h]) / dt;

  ComfortDiagnostics d;
  for (int h = 0; h + 2 < n; ++h) {
    const Vec2 dir = unit_vector(traj[h + 1].heading);
    d.max_a_lon = std::max(d.max_a_lon, std::abs(dot(acc[h], dir)));
    d.max_a_lat = std::max(d.max_a_lat, std::abs(cross(dir, acc[h])));
  }
  for (int h = 0; h + 3 < n; ++h) d.max_jerk = std::max(d.max_jerk, norm(acc[h + 1] - acc[h]) / dt);
  for (int h = 0; h + 1 < n; ++h) {
    d.max_yaw_rate = std::max(d.max_yaw_rate, std::abs(normalize_angle(traj[h + 1].heading - traj[h].heading)) / dt);
  }
  if (diag) *diag = d;
  const auto& b = cfg.comfort;
  const bool ok = d.max_a_lon <= b.a_lon_max && d.max_a_lat <= b.a_lat_max && d.max_jerk <= b.jerk_max &&
                  d.max_yaw_rate <= b.yaw_rate_max;
  return ok ? 1.0 : 0.0;
}

struct ExtendedScores {
  double ddc = 1.0;
  double tlc = 1.0;
  double lk = 1.0;
  double hc = 1.0;
  double ec = 1.0;
};

/// The five extended subscores: driving-direction compliance, traffic-light
/// compliance, lane keeping, history comfort, extended (plan-consistency)
/// comfort. HC and EC default to 1 when the scenario carries no history or
/// previous plan.
inline ExtendedScores score_extended(const SparseWorld& world, const Scenario& scenario,
                                     const MetricConfig& cfg = {}) {
  ExtendedScores out;
  const auto& traj = world.ego_traj;

  // DDC: distance traveled against the nearest centerline direction.
  if (!scenario.road.centerlines.empty()) {
    double wrong_way = 0.0;
    for (std::size_t h = 1; h < traj.size(); ++h) {
      const Vec2 step = traj[h].position() - traj[h - 1].position();
      const double len = norm(step);
      if (len <= 1e-12) continue;
      double best_d = std::numeric_limits<double>::infinity();
      double direction = 0.0;
      for (const auto& cl : scenario.road.centerlines) {
        const auto proj = project_to_polyline(cl.line, traj[h].position());
        if (proj.distance < best_d) {
          best_d = proj.distance;
          direction = cl.headings[proj.segment];
        }
      }
      if (dot(step, unit_vector(direction)) < 0.0) wrong_way += len;
    }
    out.ddc = wrong_way < cfg.ddc_d1 ? 1.0 : (wrong_way < cfg.ddc_d2 ? 0.5 : 0.0);
  }

  // TLC: 0 iff the ego box crosses a stop line while its light is red.
  for (const auto& light : scenario.road.lights) {
    for (std::size_t h = 0; h < traj.size() && out.tlc > 0.0; ++h) {
      const double t = static_cast<double>(h) * scenario.dt;
      if (light.red_at(t) && box_intersects_segment(scenario.ego_box(traj[h]), light.stop_a, light.stop_b)) {
        out.tlc = 0.0;
      }
    }
  }

  // LK: lateral offset to the nearest centerline within threshold at every step.
  if (!scenario.road.centerlines.empty()) {
    for (const auto& pose : traj) {
      double best_d = std::numeric_limits<double>::infinity();
      for (const auto& cl : scenario.road.centerlines) {
        best_d = std::min(best_d, project_to_polyline(cl.line, pose.position()).distance);
      }
      if (best_d > cfg.lk_threshold) {
        out.lk = 0.0;
        break;
      }
    }
  }

  // HC: comfort bounds over history tail + plan.
  if (!scenario.history.empty()) {
    std::vector<Pose2> joined = scenario.history;
    joined.insert(joined.end(), traj.begin(), traj.end());
    if (joined.size() >= 3) out.hc = score_comfort(joined, scenario.dt, cfg);
  }

  // EC: leading waypoints stay close to the previous frame's plan, which is
  // one step ahead of the current one.
  if (!scenario.prev_plan.empty()) {
    const int steps = std::min<int>(cfg.ec_steps, static_cast<int>(traj.size()));
    for (int h = 0; h < steps; ++h) {
      const std::size_t prev_index = static_cast<std::size_t>(h) + 1;
      if (prev_index >= scenario.prev_plan.size()) break;
      if (distance(traj[h].position(), scenario.prev_plan[prev_index].position()) > cfg.ec_threshold) {
        out.ec = 0.0;
        break;
      }
    }
  }
  return out;
}

/// PDMS for one frame: (nc * dac) * weighted average of {ep, ttc, c}.
inline double pdms(const SubscoreVector& s, const MetricConfig& cfg = {}) {
  const double weighted = (cfg.w_ep * s.ep + cfg.w_ttc * s.ttc + cfg.w_c * s.c) / (cfg.w_ep + cfg.w_ttc + cfg.w_c);
  return s.nc * s.dac * weighted;
}

/// EPDMS masking: a metric where the human score is exactly 0 is forced to 1.
inline double masked_subscore(double pred, double human) { return human == 0.0 ? 1.0 : pred; }

/// Extended PDMS with human-violation masking: multiplicative set
/// {nc, dac, ddc, tlc}, weighted set {ep, ttc, lk, hc, ec}.
inline double epdms(const SubscoreVector& pred, const SubscoreVector& human, const MetricConfig& cfg = {}) {
  const double penalty = masked_subscore(pred.nc, human.nc) * masked_subscore(pred.dac, human.dac) *
                         masked_subscore(pred.ddc, human.ddc) * masked_subscore(pred.tlc, human.tlc);
  const double w_total = cfg.w_ep + cfg.w_ttc + cfg.w_lk + cfg.w_hc + cfg.w_ec;
  const double weighted = (cfg.w_ep * masked_subscore(pred.ep, human.ep) +
                           cfg.w_ttc * masked_subscore(pred.ttc, human.ttc) +
                           cfg.w_lk * masked_subscore(pred.lk, human.lk) +
                           cfg.w_hc * masked_subscore(pred.hc, human.hc) +
                           cfg.w_ec * masked_subscore(pred.ec, human.ec)) /
                          w_total;
  return penalty * weighted;
}

}  // namespace planeval
