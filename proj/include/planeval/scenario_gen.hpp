// Deterministic synthetic scenario generator: straight / lead-brake /
// crossing-pedestrian / merge / turn / narrow-road templates with
// kinematically feasible experts built from constant-curvature arcs and
// trapezoidal speed profiles.
#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "planeval/anchors.hpp"
#include "planeval/metrics.hpp"
#include "planeval/world.hpp"

namespace planeval {

enum class Template { straight, lead_brake, crossing_ped, merge, turn, narrow };

inline const char* to_string(Template t) {
  switch (t) {
    case Template::straight: return "straight";
    case Template::lead_brake: return "lead_brake";
    case Template::crossing_ped: return "crossing_ped";
    case Template::merge: return "merge";
    case Template::turn: return "turn";
    case Template::narrow: return "narrow";
  }
  return "?";
}

struct GenSpec {
  Template tmpl = Template::straight;
  std::uint64_t seed = 0;
  int count = 1;
  double speed_min = 5.0;   // m/s
  double speed_max = 12.0;
  double gap_min = 8.0;     // m, template-specific spacing range
  double gap_max = 20.0;
  double trigger_min = 0.5;  // s, hazard onset range
  double trigger_max = 2.0;
  int horizon = 8;
  double dt = 0.5;

  void validate() const {
    if (count < 1) throw ValidationError("gen_spec.count: must be >= 1");
    if (horizon < 3) throw ValidationError("gen_spec.horizon: must be >= 3");
    if (!(dt > 0.0)) throw ValidationError("gen_spec.dt: must be > 0");
    if (speed_min < 0.0 || speed_max < speed_min) throw ValidationError("gen_spec.speed range: invalid");
    if (gap_min <= 0.0 || gap_max < gap_min) throw ValidationError("gen_spec.gap range: invalid");
    if (trigger_min < 0.0 || trigger_max < trigger_min) throw ValidationError("gen_spec.trigger range: invalid");
  }
};

namespace gen_detail {

struct PathSegment {
  double curvature = 0.0;  // 1/m, signed
  double length = 0.0;     // arc meters, >= 0
};

/// Pose on a piecewise constant-curvature path at arc position s.
inline Pose2 path_pose(const std::vector<PathSegment>& path, double s) {
  Pose2 p{0.0, 0.0, 0.0};
  for (const auto& seg : path) {
    const double run = std::min(std::max(s, 0.0), seg.length);
    if (run > 0.0) {
      if (std::abs(seg.curvature) < 1e-12) {
        p.x += run * std::cos(p.heading);
        p.y += run * std::sin(p.heading);
      } else {
        const double h2 = p.heading + seg.curvature * run;
        p.x += (std::sin(h2) - std::sin(p.heading)) / seg.curvature;
        p.y -= (std::cos(h2) - std::cos(p.heading)) / seg.curvature;
        p.heading = normalize_angle(h2);
      }
    }
    s -= seg.length;
    if (s <= 0.0) break;
  }
  return p;
}

/// Speed ramp from v0 toward v1 at |accel|, holding v1 afterwards.
inline double ramp_speed(double t, double v0, double v1, double accel) {
  const double reach = std::abs(v1 - v0) / std::max(accel, 1e-9);
  if (t >= reach) return v1;
  return v0 + (v1 > v0 ? accel : -accel) * t;
}

/// Expert trajectory: positions along `path` with arc positions integrated
/// from the speed ramp (trapezoid rule, exact for piecewise-linear speed).
inline std::vector<Pose2> synthesize_expert(const std::vector<PathSegment>& path, int horizon, double dt,
                                            double v0, double v1, double accel) {
  std::vector<Pose2> out;
  out.reserve(horizon);
  double s = 0.0;
  out.push_back(path_pose(path, 0.0));
  for (int h = 1; h < horizon; ++h) {
    const double va = ramp_speed((h - 1) * dt, v0, v1, accel);
    const double vb = ramp_speed(h * dt, v0, v1, accel);
    s += dt * (va + vb) / 2.0;
    out.push_back(path_pose(path, s));
  }
  return out;
}

/// Band grid: probability 1 for cells within half_width of the reference
/// line, 0 outside. The reference may be any polyline (straight or curved).
inline ProbGrid band_grid(const Polyline& reference, double half_width, double resolution, double margin) {
  double min_x = reference.points.front().x, max_x = min_x;
  double min_y = reference.points.front().y, max_y = min_y;
  for (const Vec2 p : reference.points) {
    min_x = std::min(min_x, p.x);
    max_x = std::max(max_x, p.x);
    min_y = std::min(min_y, p.y);
    max_y = std::max(max_y, p.y);
  }
  ProbGrid g;
  g.resolution = resolution;
  g.origin = {min_x - margin, min_y - margin, 0.0};
  g.width = std::max(2, static_cast<int>(std::ceil((max_x - min_x + 2.0 * margin) / resolution)) + 1);
  g.height = std::max(2, static_cast<int>(std::ceil((max_y - min_y + 2.0 * margin) / resolution)) + 1);
  g.values.resize(static_cast<std::size_t>(g.width) * g.height);
  for (int row = 0; row < g.height; ++row) {
    for (int col = 0; col < g.width; ++col) {
      const Vec2 center{g.origin.x + col * resolution, g.origin.y + row * resolution};
      const double d = project_to_polyline(reference, center).distance;
      g.values[static_cast<std::size_t>(row) * g.width + col] = d <= half_width ? 1.0 : 0.0;
    }
  }
  return g;
}

inline Polyline sampled_route(const std::vector<PathSegment>& path, double total, double spacing) {
  Polyline route;
  for (double s = 0.0; s < total - spacing * 0.5; s += spacing) {
    route.points.push_back(path_pose(path, s).position());
  }
  route.points.push_back(path_pose(path, total).position());
  return route;
}

inline Centerline centerline_from_route(const Polyline& route) {
  Centerline cl;
  cl.line = route;
  for (std::size_t i = 0; i < route.points.size(); ++i) {
    const std::size_t a = i + 1 < route.points.size() ? i : i - 1;
    const Vec2 d = route.points[a + 1 < route.points.size() ? a + 1 : a] - route.points[a];
    cl.headings.push_back(std::atan2(d.y, d.x));
  }
  return cl;
}

inline AgentInstance constant_agent(std::int64_t id, AgentKind kind, double length, double width,
                                    int horizon, const Pose2& pose) {
  AgentInstance a;
  a.id = id;
  a.kind = kind;
  a.length = length;
  a.width = width;
  a.future.assign(horizon, pose);
  a.valid.assign(horizon, 1);
  return a;
}

}  // namespace gen_detail

/// Deterministic generation: `count` scenarios drawn from the seeded ranges.
/// Every emitted expert passes score_comfort under default bounds; the
/// lead_brake expert additionally stays collision-free.
inline std::vector<Scenario> generate(const GenSpec& spec) {
  using namespace gen_detail;
  spec.validate();
  Rng rng(spec.seed);
  std::vector<Scenario> out;
  out.reserve(spec.count);
  const MetricConfig metric_cfg;

  for (int index = 0; index < spec.count; ++index) {
    Scenario s;
    s.name = std::string(to_string(spec.tmpl)) + "_" + std::to_string(spec.seed) + "_" + std::to_string(index);
    s.horizon_steps = spec.horizon;
    s.dt = spec.dt;
    s.ego.pose = {0.0, 0.0, 0.0};
    s.ego.length = 4.6;
    s.ego.width = 1.9;

    const double v0 = rng.uniform(spec.speed_min, spec.speed_max);
    double v_start = v0;
    const double span = std::max(40.0, v0 * spec.horizon * spec.dt + 25.0);
    std::vector<PathSegment> expert_path{{0.0, span + 20.0}};
    double road_half_width = 4.0;
    double route_length = span;
    std::vector<PathSegment> road_path{{0.0, span + 20.0}};
    double expert_v1 = v0;
    double expert_accel = 0.0;

    switch (spec.tmpl) {
      case Template::straight: {
        expert_v1 = rng.uniform(0.0, v0);
        expert_accel = std::min(3.0, rng.uniform(0.5, 2.5));
        if (rng.uniform() < 0.4) expert_v1 = v0;  // plain constant-speed runs
        break;
      }
      case Template::lead_brake: {
        const double gap = rng.uniform(spec.gap_min, spec.gap_max);
        const double trigger = rng.uniform(spec.trigger_min, spec.trigger_max);
        const double lead_decel = rng.uniform(2.5, 4.0);
        AgentInstance lead;
        lead.id = 1;
        lead.kind = AgentKind::vehicle;
        lead.length = 4.4;
        lead.width = 1.8;
        const double stop_time = v0 / lead_decel;
        for (int h = 0; h < spec.horizon; ++h) {
          const double t = h * spec.dt;
          double x = 0.0;
          if (t <= trigger) {
            x = gap + v0 * t;
          } else {
            const double tau = std::min(t - trigger, stop_time);
            x = gap + v0 * trigger + v0 * tau - 0.5 * lead_decel * tau * tau;
          }
          lead.future.push_back({x, 0.0, 0.0});
          lead.valid.push_back(1);
        }
        s.agents.push_back(std::move(lead));
        // Brake so the ego stops with at least 2 m of spare gap.
        const double lead_stop = gap + v0 * trigger + v0 * v0 / (2.0 * lead_decel);
        const double ego_stop_target = std::max(2.0, lead_stop - 4.4 / 2.0 - s.ego.length / 2.0 - 2.0);
        expert_v1 = 0.0;
        expert_accel = std::clamp(v0 * v0 / (2.0 * ego_stop_target), 1.0, 3.5);
        break;
      }
      case Template::crossing_ped: {
        const double x_cross = rng.uniform(spec.gap_min, spec.gap_max);
        const double trigger = rng.uniform(spec.trigger_min, spec.trigger_max);
        const double ped_speed = rng.uniform(0.8, 2.0);
        const double y_start = -road_half_width - 1.0;
        AgentInstance ped;
        ped.id = 1;
        ped.kind = AgentKind::pedestrian;
        ped.length = 0.6;
        ped.width = 0.6;
        for (int h = 0; h < spec.horizon; ++h) {
          const double t = h * spec.dt;
          const double y = y_start + ped_speed * std::max(0.0, t - trigger);
          ped.future.push_back({x_cross, y, kPi / 2.0});
          ped.valid.push_back(1);
        }
        s.agents.push_back(std::move(ped));
        // Pass ahead of the crossing when clearly possible, otherwise stop short.
        const double t_reach = x_cross / std::max(v0, 0.1);
        const double t_enter = trigger + (std::abs(y_start) - road_half_width) / ped_speed;
        if (t_reach + 0.8 < t_enter) {
          expert_v1 = v0;
        } else {
          expert_v1 = 0.0;
          const double stop_target = std::max(2.0, x_cross - 5.0);
          expert_accel = std::clamp(v0 * v0 / (2.0 * stop_target), 1.0, 3.5);
        }
        break;
      }
      case Template::merge: {
        const double x_merge = rng.uniform(spec.gap_min, spec.gap_max);
        const double trigger = rng.uniform(spec.trigger_min, spec.trigger_max);
        const double v_merge = v0 * rng.uniform(0.8, 1.1);
        const double merge_duration = 2.0;
        AgentInstance merger;
        merger.id = 1;
        merger.kind = AgentKind::vehicle;
        merger.length = 4.4;
        merger.width = 1.8;
        for (int h = 0; h < spec.horizon; ++h) {
          const double t = h * spec.dt;
          const double frac = std::clamp((t - trigger) / merge_duration, 0.0, 1.0);
          const double y = 3.5 * (1.0 - frac);
          merger.future.push_back({x_merge + v_merge * t, y, normalize_angle(-0.2 * frac * (1.0 - frac) * 4.0)});
          merger.valid.push_back(1);
        }
        s.agents.push_back(std::move(merger));
        expert_v1 = v_merge * 0.8;
        expert_accel = 1.5;
        road_half_width = 5.5;
        break;
      }
      case Template::turn: {
        const double radius = rng.uniform(12.0, 30.0);
        const double sign = rng.uniform() < 0.5 ? 1.0 : -1.0;
        const double v_turn = std::min(v0, std::sqrt(0.6 * metric_cfg.comfort.a_lat_max * radius));
        const double lead_in = rng.uniform(4.0, 8.0);
        expert_path = {{0.0, lead_in}, {sign / radius, radius * kPi / 2.0}, {0.0, span}};
        road_path = expert_path;
        route_length = lead_in + radius * kPi / 2.0 + std::max(5.0, v_turn * spec.horizon * spec.dt);
        v_start = v_turn;
        expert_v1 = v_turn;
        break;
      }
      case Template::narrow: {
        road_half_width = 2.6;
        const double x_obstacle = rng.uniform(spec.gap_min + 2.0, spec.gap_max + 4.0);
        const double intrusion = rng.uniform(0.4, 1.0);
        const double side = rng.uniform() < 0.5 ? -1.0 : 1.0;
        const double y_obstacle = side * (road_half_width - intrusion);
        s.agents.push_back(constant_agent(1, AgentKind::static_object, 4.2, 1.9, spec.horizon,
                                          {x_obstacle, y_obstacle, 0.0}));
        if (rng.uniform() < 0.5) {
          const double x2 = x_obstacle + rng.uniform(7.0, 12.0);
          s.agents.push_back(constant_agent(2, AgentKind::static_object, 4.2, 1.9, spec.horizon,
                                            {x2, -side * (road_half_width - rng.uniform(0.2, 0.6)), 0.0}));
        }
        // The expert threads the gap with a two-arc jog away from the obstacle.
        const double shift = intrusion + 0.6;
        const double run = std::max(8.0, x_obstacle - 3.0);
        const double theta = 2.0 * std::atan(shift / run);
        const double radius = (run / 2.0) / std::sin(theta);
        const double jog = -side;
        expert_path = {{jog / radius, radius * theta}, {-jog / radius, radius * theta}, {0.0, span}};
        // Lateral accel capped at 1.5 m/s^2 keeps the jerk at the S-switch
        // (2 * a_lat / dt) inside the comfort bound.
        const double v_safe = std::min(v0, std::sqrt(1.5 * radius));
        v_start = v_safe;
        expert_v1 = v_safe;
        break;
      }
    }

    s.expert = synthesize_expert(expert_path, spec.horizon, spec.dt, v_start, expert_v1, expert_accel);
    s.ego.speed = v_start;
    s.route = sampled_route(road_path, route_length, 2.0);
    s.road.centerlines.push_back(centerline_from_route(s.route));
    // The band reference extends behind the start so the ego box's rear
    // corners begin on pavement.
    Polyline band_ref = s.route;
    band_ref.points.insert(band_ref.points.begin(), Vec2{-8.0, 0.0});
    s.road.drivable = band_grid(band_ref, road_half_width, 0.5, 8.0);

    s.validate();
    if (score_comfort(s.expert, s.dt, metric_cfg) != 1.0) {
      throw ValidationError("generate: " + s.name + ": expert violates comfort bounds (infeasible parameters)");
    }
    if (spec.tmpl == Template::lead_brake) {
      SparseWorld logged;
      logged.ego_traj = s.expert;
      for (const auto& a : s.agents) logged.agent_futures.push_back(a.future);
      if (score_nc(logged, s, metric_cfg) != 1.0) {
        throw ValidationError("generate: " + s.name + ": expert cannot stay collision-free (infeasible gap)");
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

/// Expert trajectories transformed into the ego frame at t = 0 (origin at the
/// ego pose, +x along the ego heading).
inline TrajectoryCorpus corpus_from(const std::vector<Scenario>& scenarios) {
  TrajectoryCorpus corpus;
  for (const auto& s : scenarios) {
    if (s.expert.empty()) throw ValidationError("corpus_from: scenario '" + s.name + "' has no expert");
    if (corpus.horizon == 0) corpus.horizon = static_cast<int>(s.expert.size());
    if (corpus.horizon != static_cast<int>(s.expert.size())) {
      throw ValidationError("corpus_from: non-uniform expert horizon at scenario '" + s.name + "'");
    }
    std::vector<Vec2> local(s.expert.size());
    for (std::size_t h = 0; h < s.expert.size(); ++h) local[h] = to_local(s.ego.pose, s.expert[h].position());
    corpus.trajectories.push_back(std::move(local));
  }
  return corpus;
}

}  // namespace planeval
