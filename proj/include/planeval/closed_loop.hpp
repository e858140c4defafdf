// Closed-loop episode execution: receding-horizon replanning over a logged
// scenario, per-step infraction detection with the benchmark penalty table,
// and the Driving Score / Success Rate aggregates.
#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "planeval/pipeline.hpp"
#include "planeval/scenario_format.hpp"
#include "planeval/world.hpp"

namespace planeval {

enum class InfractionKind {
  pedestrian_collision,
  vehicle_collision,
  other_collision,
  red_light,
  scenario_timeout,
  too_slow,
  no_give_way,
};

/// Penalty factors of the benchmark infraction table.
inline double penalty_factor(InfractionKind k) {
  switch (k) {
    case InfractionKind::pedestrian_collision: return 0.50;
    case InfractionKind::vehicle_collision: return 0.60;
    case InfractionKind::other_collision: return 0.65;
    case InfractionKind::red_light: return 0.70;
    case InfractionKind::scenario_timeout: return 0.70;
    case InfractionKind::too_slow: return 0.70;
    case InfractionKind::no_give_way: return 0.70;
  }
  return 1.0;
}

inline const char* to_string(InfractionKind k) {
  switch (k) {
    case InfractionKind::pedestrian_collision: return "pedestrian_collision";
    case InfractionKind::vehicle_collision: return "vehicle_collision";
    case InfractionKind::other_collision: return "other_collision";
    case InfractionKind::red_light: return "red_light";
    case InfractionKind::scenario_timeout: return "scenario_timeout";
    case InfractionKind::too_slow: return "too_slow";
    case InfractionKind::no_give_way: return "no_give_way";
  }
  return "?";
}

enum class Terminal { goal, off_road, route_deviation, agent_blocked, route_timeout };

inline const char* to_string(Terminal t) {
  switch (t) {
    case Terminal::goal: return "goal";
    case Terminal::off_road: return "off_road";
    case Terminal::route_deviation: return "route_deviation";
    case Terminal::agent_blocked: return "agent_blocked";
    case Terminal::route_timeout: return "route_timeout";
  }
  return "?";
}

struct InfractionEvent {
  InfractionKind kind;
  int step = 0;
  double penalty = 1.0;
};

struct EpisodeResult {
  double rc = 0.0;  // route completion percentage [0, 100]
  std::vector<InfractionEvent> infractions;
  double ds = 0.0;  // rc * product of penalties
  bool success = false;
  Terminal terminal = Terminal::route_timeout;
  int steps = 0;  // executed simulation steps
};

struct ClosedLoopConfig {
  double scenario_timeout_s = 240.0;  // penalty event, not terminal
  double idle_limit_s = 180.0;        // agent_blocked terminal
  double idle_speed = 0.05;
  double deviation_limit_m = 30.0;
  double slow_floor = 0.5;     // m/s mean over the slow window
  double slow_window_s = 10.0;
  double clear_ahead_m = 15.0;  // distance checked for "route ahead unobstructed"
  double clear_lateral_m = 2.0;
  double yield_speed = 0.5;  // entering a give-way zone faster than this counts as not yielding
};

/// One closed-loop evaluation unit: a scenario whose horizon covers the whole
/// episode, a goal tolerance, a time limit, and the replan settings.
struct RouteSpec {
  Scenario scenario;
  double goal_radius = 2.0;
  double time_limit = 300.0;
  int plan_horizon = 6;  // steps handed to the planner per replan
  int exec_steps = 1;    // executed waypoints per replan
  bool reactive = false; // vehicles yield to the executed ego when true
  ClosedLoopConfig rules;
};

/// A planner maps a horizon-window scenario to a trajectory of
/// window.horizon_steps poses starting at the current ego pose.
using PlannerFn = std::function<std::vector<Pose2>(const Scenario&)>;

inline PlannerFn pipeline_planner(AnchorSet anchors, PlannerConfig cfg) {
  return [anchors = std::move(anchors), cfg](const Scenario& window) {
    return plan(window, anchors, cfg).selected_traj;
  };
}

/// Mutable per-step view handed to detect_infractions. Carries the dedup
/// state that coalesces duplicate events until the triggering contact clears.
struct SimState {
  const Scenario* scenario = nullptr;
  ClosedLoopConfig rules;
  int step = 0;
  double t = 0.0;
  double dt = 0.5;
  OrientedBox ego_box;
  double ego_speed = 0.0;
  std::vector<Pose2> agent_pose;
  std::vector<std::uint8_t> agent_present;
  // Coalescing state.
  std::vector<std::uint8_t> in_contact;
  std::vector<std::uint8_t> light_crossing;
  std::vector<std::uint8_t> zone_active;
  bool timeout_fired = false;
  bool slow_fired = false;
  std::vector<double> speed_window;
};

namespace detail {

inline bool route_ahead_clear(const SimState& s) {
  const auto& route = s.scenario->route;
  const auto proj = project_to_polyline(route, s.ego_box.pose.position());
  for (double ahead = 1.0; ahead <= s.rules.clear_ahead_m; ahead += 1.0) {
    const Vec2 p = polyline_point_at(route, proj.arc + ahead);
    for (std::size_t i = 0; i < s.agent_pose.size(); ++i) {
      if (!s.agent_present[i]) continue;
      const auto& agent = s.scenario->agents[i];
      const OrientedBox box = agent.box_at(s.agent_pose[i]);
      const auto corners = box.corners();
      double d = std::numeric_limits<double>::infinity();
      for (int c = 0; c < 4; ++c) {
        d = std::min(d, point_segment_distance(p, corners[c], corners[(c + 1) % 4]));
      }
      if (box.contains(p) || d < s.rules.clear_lateral_m) return false;
    }
  }
  return true;
}

}  // namespace detail

/// Per-step infraction scan. Collision, red-light, and give-way events fire
/// once per contact episode; scenario_timeout fires once; too_slow fires once
/// per contiguous slow window while the route ahead is unobstructed.
inline std::vector<InfractionEvent> detect_infractions(SimState& s, const RoadModel& road, double dt) {
  std::vector<InfractionEvent> events;
  const auto emit = [&](InfractionKind kind) {
    events.push_back({kind, s.step, penalty_factor(kind)});
  };

  for (std::size_t i = 0; i < s.agent_pose.size(); ++i) {
    const auto& agent = s.scenario->agents[i];
    const bool contact = s.agent_present[i] && obb_overlap(s.ego_box, agent.box_at(s.agent_pose[i]));
    if (contact && !s.in_contact[i]) {
      switch (agent.kind) {
        case AgentKind::pedestrian: emit(InfractionKind::pedestrian_collision); break;
        case AgentKind::vehicle: emit(InfractionKind::vehicle_collision); break;
        case AgentKind::static_object: emit(InfractionKind::other_collision); break;
      }
    }
    s.in_contact[i] = contact;
  }

  for (std::size_t l = 0; l < road.lights.size(); ++l) {
    const auto& light = road.lights[l];
    const bool crossing = light.red_at(s.t) && box_intersects_segment(s.ego_box, light.stop_a, light.stop_b);
    if (crossing && !s.light_crossing[l]) emit(InfractionKind::red_light);
    s.light_crossing[l] = crossing;
  }

  if (!s.timeout_fired && s.t > s.rules.scenario_timeout_s) {
    s.timeout_fired = true;
    emit(InfractionKind::scenario_timeout);
  }

  s.speed_window.push_back(s.ego_speed);
  const std::size_t window = std::max<std::size_t>(1, static_cast<std::size_t>(s.rules.slow_window_s / dt));
  if (s.speed_window.size() > window) s.speed_window.erase(s.speed_window.begin());
  if (s.speed_window.size() == window) {
    double mean = 0.0;
    for (const double v : s.speed_window) mean += v;
    mean /= static_cast<double>(window);
    if (mean < s.rules.slow_floor) {
      if (!s.slow_fired && detail::route_ahead_clear(s)) {
        s.slow_fired = true;
        emit(InfractionKind::too_slow);
      }
    } else {
      s.slow_fired = false;
    }
  }

  for (std::size_t z = 0; z < s.scenario->giveway.size(); ++z) {
    const auto& zone = s.scenario->giveway[z];
    const bool ego_in = point_in_polygon(zone.polygon, s.ego_box.pose.position());
    bool priority_present = false;
    for (const auto id : zone.priority_agents) {
      for (std::size_t i = 0; i < s.agent_pose.size() && !priority_present; ++i) {
        if (s.scenario->agents[i].id == id && s.agent_present[i] &&
            point_in_polygon(zone.polygon, s.agent_pose[i].position())) {
          priority_present = true;
        }
      }
    }
    if (ego_in && priority_present && s.ego_speed > s.rules.yield_speed && !s.zone_active[z]) {
      emit(InfractionKind::no_give_way);
      s.zone_active[z] = true;
    }
    if (!ego_in) s.zone_active[z] = false;
  }

  return events;
}

namespace detail {

/// Planner window at simulation step `start`: current ego state, agent
/// futures sliced from the episode state, same road and route. Beyond the
/// logged horizon agents hold their last pose with valid = false.
inline Scenario make_window(const Scenario& episode, int start, int plan_horizon, const Pose2& ego_pose,
                            double ego_speed, const std::vector<Pose2>& agent_now) {
  Scenario window;
  window.name = episode.name;
  window.road = episode.road;
  window.route = episode.route;
  window.dt = episode.dt;
  window.horizon_steps = plan_horizon;
  window.ego = episode.ego;
  window.ego.pose = ego_pose;
  window.ego.speed = ego_speed;
  window.giveway = episode.giveway;
  const int full = episode.horizon_steps;
  window.agents.reserve(episode.agents.size());
  for (std::size_t i = 0; i < episode.agents.size(); ++i) {
    const auto& src = episode.agents[i];
    AgentInstance a;
    a.id = src.id;
    a.kind = src.kind;
    a.length = src.length;
    a.width = src.width;
    const int anchor_step = std::min(start, full - 1);
    // Keep the logged motion shape but root it at the agent's current
    // simulated position (they differ in reactive mode).
    const Vec2 offset = agent_now[i].position() - src.future[anchor_step].position();
    for (int h = 0; h < plan_horizon; ++h) {
      const int logged = std::min(start + h, full - 1);
      Pose2 p = src.future[logged];
      p.x += offset.x;
      p.y += offset.y;
      a.future.push_back(p);
      a.valid.push_back(start + h < full ? src.valid[logged] : 0);
    }
    window.agents.push_back(std::move(a));
  }
  // Lights in the window keep absolute schedules; shift them so window time 0
  // is the current simulation time.
  for (auto& light : window.road.lights) {
    for (auto& ph : light.phases) {
      ph.t_start -= start * episode.dt;
      ph.t_end -= start * episode.dt;
    }
  }
  return window;
}

}  // namespace detail

/// Runs one closed-loop episode: plan over the window, execute exec_steps
/// waypoints with agents advancing along their logged (optionally reactive)
/// futures, detect infractions each step, and terminate on goal, a terminal
/// condition, or the time limit. Off-road, route deviation, agent blocked,
/// and route timeout end the episode without a penalty factor; route
/// completion is capped at the termination point (goal termination is 100).
inline EpisodeResult run_episode(const RouteSpec& route, const PlannerFn& planner, int exec_steps = 0) {
  const Scenario& episode = route.scenario;
  episode.validate();
  if (exec_steps <= 0) exec_steps = route.exec_steps;
  const int plan_horizon = std::min(route.plan_horizon, episode.horizon_steps);
  if (plan_horizon < 2) throw ValidationError("run_episode: plan_horizon must be >= 2");
  const double dt = episode.dt;
  const int n_agents = static_cast<int>(episode.agents.size());

  SimState sim;
  sim.scenario = &episode;
  sim.rules = route.rules;
  sim.dt = dt;
  sim.agent_pose.resize(n_agents);
  sim.agent_present.assign(n_agents, 0);
  sim.in_contact.assign(n_agents, 0);
  sim.light_crossing.assign(episode.road.lights.size(), 0);
  sim.zone_active.assign(episode.giveway.size(), 0);

  std::vector<double> yield_factor(n_agents, 1.0);
  std::vector<Pose2> agent_now(n_agents);
  for (int i = 0; i < n_agents; ++i) agent_now[i] = episode.agents[i].future.front();

  const auto agent_logged = [&](int i, int step) {
    const int s = std::min(step, episode.horizon_steps - 1);
    return episode.agents[i].future[s];
  };
  const auto agent_present_at = [&](int i, int step) {
    return step < episode.horizon_steps && episode.agents[i].valid[step];
  };

  Pose2 ego_pose = episode.ego.pose;
  double ego_speed = episode.ego.speed;
  const double s_start = project_to_polyline(episode.route, ego_pose.position()).arc;
  const double s_goal = arc_length(episode.route);
  double s_best = s_start;
  double idle_time = 0.0;

  EpisodeResult result;
  result.terminal = Terminal::route_timeout;
  int step = 0;
  bool done = false;

  // The initial pose may already satisfy the goal.
  if (distance(ego_pose.position(), episode.route.points.back()) <= route.goal_radius) {
    result.terminal = Terminal::goal;
    done = true;
  }

  while (!done) {
    if ((step + 1) * dt > route.time_limit) {
      result.terminal = Terminal::route_timeout;
      break;
    }
    const Scenario window = detail::make_window(episode, step, plan_horizon, ego_pose, ego_speed, agent_now);
    std::vector<Pose2> plan_traj;
    try {
      plan_traj = planner(window);
    } catch (const std::exception& e) {
      throw std::runtime_error("planner failed at step " + std::to_string(step) + ": " + e.what());
    }
    if (plan_traj.size() != static_cast<std::size_t>(plan_horizon)) {
      throw std::runtime_error("planner returned " + std::to_string(plan_traj.size()) +
                               " poses at step " + std::to_string(step) + ", expected " +
                               std::to_string(plan_horizon));
    }

    for (int e = 1; e <= exec_steps && !done; ++e) {
      ++step;
      const Pose2 prev_pose = ego_pose;
      ego_pose = plan_traj[std::min<std::size_t>(e, plan_traj.size() - 1)];
      ego_speed = distance(ego_pose.position(), prev_pose.position()) / dt;

      for (int i = 0; i < n_agents; ++i) {
        const auto& agent = episode.agents[i];
        if (route.reactive && agent.kind == AgentKind::vehicle) {
          const Vec2 delta = agent_logged(i, step).position() - agent_logged(i, step - 1).position();
          Vec2 pos = agent_now[i].position() + delta * yield_factor[i];
          Pose2 pose{pos.x, pos.y, agent_logged(i, step).heading};
          const OrientedBox box = agent.box_at(pose);
          const OrientedBox ego_box = route.scenario.ego_box(prev_pose);
          if (obb_overlap(box, ego_box) || min_distance(box, ego_box) < 5.0) {
            yield_factor[i] *= 0.5;
            pos = agent_now[i].position() + delta * yield_factor[i];
            pose = {pos.x, pos.y, agent_logged(i, step).heading};
          }
          agent_now[i] = pose;
        } else {
          agent_now[i] = agent_logged(i, step);
        }
        sim.agent_present[i] = agent_present_at(i, step) ? 1 : 0;
        sim.agent_pose[i] = agent_now[i];
      }

      sim.step = step;
      sim.t = step * dt;
      sim.ego_box = episode.ego_box(ego_pose);
      sim.ego_speed = ego_speed;
      const auto events = detect_infractions(sim, episode.road, dt);
      result.infractions.insert(result.infractions.end(), events.begin(), events.end());

      const auto proj = project_to_polyline(episode.route, ego_pose.position());
      s_best = std::max(s_best, proj.arc);

      if (distance(ego_pose.position(), episode.route.points.back()) <= route.goal_radius) {
        result.terminal = Terminal::goal;
        done = true;
      } else if (drivable_prob(episode.road.drivable, ego_pose.position()) < 0.5) {
        result.terminal = Terminal::off_road;
        done = true;
      } else if (proj.distance > route.rules.deviation_limit_m) {
        result.terminal = Terminal::route_deviation;
        done = true;
      } else {
        idle_time = ego_speed < route.rules.idle_speed ? idle_time + dt : 0.0;
        if (idle_time >= route.rules.idle_limit_s) {
          result.terminal = Terminal::agent_blocked;
          done = true;
        }
      }
    }
  }

  result.steps = step;
  if (result.terminal == Terminal::goal) {
    result.rc = 100.0;
  } else {
    const double denom = s_goal - s_start;
    result.rc = denom > 1e-9 ? std::clamp(100.0 * (s_best - s_start) / denom, 0.0, 100.0) : 0.0;
  }
  double penalty_product = 1.0;
  for (const auto& ev : result.infractions) penalty_product *= ev.penalty;
  result.ds = result.rc * penalty_product;
  result.success = result.terminal == Terminal::goal && result.infractions.empty();
  return result;
}

/// Mean over routes of route-completion times the penalty product.
inline double driving_score(const std::vector<EpisodeResult>& results) {
  if (results.empty()) throw ValidationError("driving_score: empty result set");
  double sum = 0.0;
  for (const auto& r : results) {
    double product = 1.0;
    for (const auto& ev : r.infractions) product *= ev.penalty;
    sum += r.rc * product;
  }
  return sum / static_cast<double>(results.size());
}

/// Fraction of routes that reached the goal within the limit with zero
/// infractions.
inline double success_rate(const std::vector<EpisodeResult>& results) {
  if (results.empty()) throw ValidationError("success_rate: empty result set");
  int n_success = 0;
  for (const auto& r : results) n_success += r.success ? 1 : 0;
  return static_cast<double>(n_success) / static_cast<double>(results.size());
}

inline constexpr int kSuiteFormatVersion = 1;

struct SuiteRoute {
  std::string scenario_path;  // resolved relative to the manifest location
  double goal_radius = 2.0;
  double time_limit = 300.0;
  int plan_horizon = 6;
  int exec_steps = 1;
  bool reactive = false;
};

inline std::string save_suite(const std::vector<SuiteRoute>& routes) {
  std::string out = "planeval_suite " + std::to_string(kSuiteFormatVersion) + "\n";
  out += "routes " + std::to_string(routes.size()) + "\n";
  for (const auto& r : routes) {
    out += "route " + r.scenario_path + ' ';
    append_double(out, r.goal_radius);
    out += ' ';
    append_double(out, r.time_limit);
    out += ' ' + std::to_string(r.plan_horizon) + ' ' + std::to_string(r.exec_steps) + ' ' +
           (r.reactive ? std::string("1") : std::string("0")) + '\n';
  }
  return out;
}

inline std::vector<SuiteRoute> load_suite(std::string_view text) {
  detail::TokenReader r(text);
  r.keyword("planeval_suite");
  const auto version = r.integer("format_version");
  if (version != kSuiteFormatVersion) {
    throw ParseError("format_version: unsupported suite version " + std::to_string(version));
  }
  r.keyword("routes");
  const auto n = r.integer("routes.count");
  std::vector<SuiteRoute> out;
  for (long long i = 0; i < n; ++i) {
    const std::string path = "routes[" + std::to_string(i) + "]";
    r.keyword("route");
    SuiteRoute route;
    route.scenario_path = std::string(r.token(path + ".scenario_path"));
    route.goal_radius = r.number(path + ".goal_radius");
    route.time_limit = r.number(path + ".time_limit");
    route.plan_horizon = static_cast<int>(r.integer(path + ".plan_horizon"));
    route.exec_steps = static_cast<int>(r.integer(path + ".exec_steps"));
    route.reactive = r.integer(path + ".reactive") != 0;
    out.push_back(std::move(route));
  }
  if (!r.done()) throw ParseError("trailing content after suite body");
  return out;
}

}  // namespace planeval
