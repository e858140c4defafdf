// Scenario data model (road, agents, ego, route) plus construction and
// reactive refinement of trajectory-conditioned sparse worlds.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "planeval/geometry.hpp"

namespace planeval {

enum class AgentKind { vehicle, pedestrian, static_object };

inline const char* to_string(AgentKind k) {
  switch (k) {
    case AgentKind::vehicle: return "vehicle";
    case AgentKind::pedestrian: return "pedestrian";
    case AgentKind::static_object: return "static_object";
  }
  return "?";
}

struct AgentInstance {
  std::int64_t id = 0;
  AgentKind kind = AgentKind::vehicle;
  double length = 0.0;  // full extent along heading
  double width = 0.0;   // full extent across heading
  std::vector<Pose2> future;        // H poses, future[0] at t = 0
  std::vector<std::uint8_t> valid;  // presence flag per step

  OrientedBox box_at(const Pose2& pose) const {
    return {pose, length / 2.0, width / 2.0};
  }
};

struct LightPhase {
  double t_start = 0.0;
  double t_end = 0.0;
  bool red = false;
};

struct TrafficLight {
  Vec2 stop_a, stop_b;  // stop-line segment endpoints
  std::vector<LightPhase> phases;

  /// Phase state at time t; moments outside the schedule are treated as green.
  bool red_at(double t) const {
    for (const auto& ph : phases) {
      if (t >= ph.t_start && t < ph.t_end) return ph.red;
    }
    return false;
  }
};

struct Centerline {
  Polyline line;
  std::vector<double> headings;  // direction sample per point
};

struct RoadModel {
  ProbGrid drivable;
  std::vector<Centerline> centerlines;
  std::vector<TrafficLight> lights;
};

struct EgoState {
  Pose2 pose;
  double speed = 0.0;   // m/s along heading at t = 0
  double length = 4.0;  // full box dims
  double width = 2.0;
};

/// Marked region the ego must yield in while any of the listed agents is
/// present; used by the closed-loop give-way infraction check.
struct GivewayZone {
  std::vector<Vec2> polygon;
  std::vector<std::int64_t> priority_agents;
};

/// Complete world description for one planning problem. Trajectories use a
/// uniform convention throughout the library: waypoint h is the pose at time
/// h * dt, so waypoint 0 is the current pose.
struct Scenario {
  std::string name = "scenario";
  RoadModel road;
  EgoState ego;
  std::vector<AgentInstance> agents;
  Polyline route;
  std::vector<Pose2> expert;     // empty = absent; length H otherwise
  std::vector<Pose2> history;    // optional ego tail before t = 0, oldest first
  std::vector<Pose2> prev_plan;  // optional previous frame's plan
  std::vector<GivewayZone> giveway;
  int horizon_steps = 8;
  double dt = 0.5;

  OrientedBox ego_box(const Pose2& pose) const {
    return {pose, ego.length / 2.0, ego.width / 2.0};
  }

  void validate() const {
    if (name.empty()) throw ValidationError("name: must be non-empty");
    for (const char ch : name) {
      // The text format is whitespace-tokenized, so names are single tokens.
      if (ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r') {
        throw ValidationError("name: must not contain whitespace");
      }
    }
    if (horizon_steps < 1) throw ValidationError("horizon_steps: must be >= 1");
    if (!(dt > 0.0)) throw ValidationError("dt: must be > 0");
    if (!(ego.length > 0.0 && ego.width > 0.0)) throw ValidationError("ego: box dims must be positive");
    road.drivable.validate();
    route.validate("route");
    for (std::size_t c = 0; c < road.centerlines.size(); ++c) {
      const auto& cl = road.centerlines[c];
      cl.line.validate("centerlines[" + std::to_string(c) + "]");
      if (cl.headings.size() != cl.line.points.size()) {
        throw ValidationError("centerlines[" + std::to_string(c) + "].headings: one sample per point required");
      }
    }
    for (std::size_t l = 0; l < road.lights.size(); ++l) {
      const auto& phases = road.lights[l].phases;
      for (std::size_t i = 0; i < phases.size(); ++i) {
        if (!(phases[i].t_end > phases[i].t_start)) {
          throw ValidationError("lights[" + std::to_string(l) + "].phases[" + std::to_string(i) + "]: empty interval");
        }
        for (std::size_t j = i + 1; j < phases.size(); ++j) {
          if (phases[i].t_start < phases[j].t_end && phases[j].t_start < phases[i].t_end) {
            throw ValidationError("lights[" + std::to_string(l) + "].phases: overlapping intervals " +
                                  std::to_string(i) + " and " + std::to_string(j));
          }
        }
      }
    }
    for (std::size_t i = 0; i < agents.size(); ++i) {
      const auto& a = agents[i];
      const std::string path = "agents[id=" + std::to_string(a.id) + "]";
      for (std::size_t j = i + 1; j < agents.size(); ++j) {
        if (agents[j].id == a.id) throw ValidationError(path + ": duplicate agent id");
      }
      if (!(a.length > 0.0 && a.width > 0.0)) throw ValidationError(path + ": box dims must be positive");
      if (a.future.size() != static_cast<std::size_t>(horizon_steps)) {
        throw ValidationError(path + ".future: length " + std::to_string(a.future.size()) +
                              " != horizon_steps " + std::to_string(horizon_steps));
      }
      if (a.valid.size() != a.future.size()) {
        throw ValidationError(path + ".valid: mask length must equal future length");
      }
    }
    if (!expert.empty() && expert.size() != static_cast<std::size_t>(horizon_steps)) {
      throw ValidationError("expert: length " + std::to_string(expert.size()) + " != horizon_steps " +
                            std::to_string(horizon_steps));
    }
    if (!prev_plan.empty() && prev_plan.size() != static_cast<std::size_t>(horizon_steps)) {
      throw ValidationError("prev_plan: length must equal horizon_steps when present");
    }
    for (std::size_t z = 0; z < giveway.size(); ++z) {
      if (giveway[z].polygon.size() < 3) {
        throw ValidationError("giveway[" + std::to_string(z) + "].polygon: needs at least 3 vertices");
      }
    }
  }
};

/// One candidate ego trajectory paired with its own copy of the agent
/// futures; the unit of fine-grained reasoning.
struct SparseWorld {
  int candidate_index = 0;
  std::vector<Pose2> ego_traj;
  std::vector<std::vector<Pose2>> agent_futures;
  bool refined = false;
};

inline std::vector<SparseWorld> build_sparse_worlds(const std::vector<std::vector<Pose2>>& candidates,
                                                    const Scenario& scenario) {
  std::vector<SparseWorld> worlds;
  worlds.reserve(candidates.size());
  for (std::size_t j = 0; j < candidates.size(); ++j) {
    if (candidates[j].size() != static_cast<std::size_t>(scenario.horizon_steps)) {
      throw ValidationError("candidates[" + std::to_string(j) + "]: length " +
                            std::to_string(candidates[j].size()) + " != horizon_steps " +
                            std::to_string(scenario.horizon_steps));
    }
    SparseWorld w;
    w.candidate_index = static_cast<int>(j);
    w.ego_traj = candidates[j];
    w.agent_futures.reserve(scenario.agents.size());
    for (const auto& a : scenario.agents) w.agent_futures.push_back(a.future);
    worlds.push_back(std::move(w));
  }
  return worlds;
}

struct RefineParams {
  int reaction_steps = 1;       // agents see the ego pose this many steps back
  double react_distance = 5.0;  // conflict trigger distance, meters
  double yield_factor = 0.5;    // per-step speed rescale while in conflict
  int iterations = 1;           // interaction passes inside one refinement
  bool smooth_ego = true;
};

namespace detail {

/// Heading reconstruction from consecutive waypoint positions; the final
/// heading copies the penultimate segment, degenerate steps carry the
/// previous heading.
inline void rebuild_headings(std::vector<Pose2>& traj, double first_heading) {
  if (traj.empty()) return;
  double prev = first_heading;
  traj[0].heading = first_heading;
  for (std::size_t i = 1; i < traj.size(); ++i) {
    const Vec2 d = traj[i].position() - traj[i - 1].position();
    if (norm(d) > 1e-9) prev = std::atan2(d.y, d.x);
    traj[i].heading = prev;
  }
}

}  // namespace detail

/// Deterministic stand-in for joint ego/agent refinement: the ego candidate
/// gets one midpoint-averaging pass with pinned endpoints, then each vehicle
/// agent scans its future in step order and, whenever its box conflicts with
/// the ego box `reaction_steps` earlier (overlap, or clearance below
/// react_distance), rescales its remaining per-step displacement by
/// yield_factor. Pedestrians and static objects are never modified.
/// Re-applying to an already refined world is an exact no-op.
inline SparseWorld refine_world(const SparseWorld& world, const Scenario& scenario,
                                const RefineParams& params = {}) {
  SparseWorld out = world;
  if (out.refined) return out;
  out.refined = true;
  const int h_count = static_cast<int>(out.ego_traj.size());

  if (params.smooth_ego && h_count >= 3) {
    const std::vector<Pose2> src = out.ego_traj;
    for (int i = 1; i + 1 < h_count; ++i) {
      out.ego_traj[i].x = (src[i - 1].x + src[i + 1].x) / 2.0;
      out.ego_traj[i].y = (src[i - 1].y + src[i + 1].y) / 2.0;
    }
    detail::rebuild_headings(out.ego_traj, src[0].heading);
  }

  std::vector<BoxShadow> ego_shadows(h_count);
  for (int h = 0; h < h_count; ++h) ego_shadows[h] = make_shadow(scenario.ego_box(out.ego_traj[h]));

  for (int pass = 0; pass < params.iterations; ++pass) {
    for (std::size_t i = 0; i < out.agent_futures.size(); ++i) {
      const AgentInstance& agent = scenario.agents[i];
      if (agent.kind != AgentKind::vehicle) continue;
      auto& future = out.agent_futures[i];
      const std::vector<Pose2> orig = future;
      // Centers farther apart than this cannot conflict, whatever the headings.
      const double reach = (agent.length + agent.width + scenario.ego.length + scenario.ego.width) / 2.0 +
                           params.react_distance;
      double factor = 1.0;
      for (int h = 1; h < static_cast<int>(future.size()); ++h) {
        if (!agent.valid[h]) continue;
        const Vec2 step = orig[h].position() - orig[h - 1].position();
        Vec2 pos = future[h - 1].position() + step * factor;
        const int ego_step = std::max(0, h - params.reaction_steps);
        const Vec2 delta = pos - out.ego_traj[ego_step].position();
        if (std::abs(delta.x) > reach || std::abs(delta.y) > reach) {
          future[h].x = pos.x;
          future[h].y = pos.y;
          continue;
        }
        BoxShadow agent_shadow = make_shadow(agent.box_at({pos.x, pos.y, future[h].heading}));
        if (shadow_overlap(agent_shadow, ego_shadows[ego_step]) ||
            shadow_min_distance(agent_shadow, ego_shadows[ego_step]) < params.react_distance) {
          factor *= params.yield_factor;
          pos = future[h - 1].position() + step * factor;
        }
        future[h].x = pos.x;
        future[h].y = pos.y;
      }
    }
  }
  return out;
}

}  // namespace planeval
