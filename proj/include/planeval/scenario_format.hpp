// Text serialization for scenarios, probability grids, and suite manifests.
// The canonical layout is documented field-by-field in docs/formats.md; save_*
// always emits canonical form, so save(load(x)) is byte-identical for
// canonical inputs. Units are meters, seconds, radians throughout.
#pragma once

#include <cctype>
#include <string>
#include <string_view>
#include <vector>

#include "planeval/world.hpp"

namespace planeval {

inline constexpr int kScenarioFormatVersion = 1;
inline constexpr int kGridFormatVersion = 1;

namespace detail {

class TokenReader {
 public:
  explicit TokenReader(std::string_view text) : text_(text) {}

  bool done() {
    skip_space();
    return pos_ >= text_.size();
  }

  std::string_view token(const std::string& field) {
    skip_space();
    if (pos_ >= text_.size()) throw ParseError(field + ": unexpected end of input");
    const std::size_t start = pos_;
    while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    return text_.substr(start, pos_ - start);
  }

  void keyword(std::string_view expected) {
    const auto t = token(std::string(expected));
    if (t != expected) {
      throw ParseError(std::string(expected) + ": expected keyword, found '" + std::string(t) + "'");
    }
  }

  double number(const std::string& field) {
    const auto t = token(field);
    double v = 0.0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (res.ec != std::errc() || res.ptr != t.data() + t.size()) {
      throw ParseError(field + ": not a number: '" + std::string(t) + "'");
    }
    return v;
  }

  long long integer(const std::string& field) {
    const auto t = token(field);
    long long v = 0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (res.ec != std::errc() || res.ptr != t.data() + t.size()) {
      throw ParseError(field + ": not an integer: '" + std::string(t) + "'");
    }
    return v;
  }

 private:
  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

inline void append_pose(std::string& out, const Pose2& p) {
  append_double(out, p.x);
  out += ' ';
  append_double(out, p.y);
  out += ' ';
  append_double(out, p.heading);
  out += '\n';
}

inline Pose2 read_pose(TokenReader& r, const std::string& field) {
  Pose2 p;
  p.x = r.number(field + ".x");
  p.y = r.number(field + ".y");
  p.heading = r.number(field + ".heading");
  return p;
}

inline void append_grid_body(std::string& out, const ProbGrid& g) {
  append_double(out, g.origin.x);
  out += ' ';
  append_double(out, g.origin.y);
  out += ' ';
  append_double(out, g.resolution);
  out += ' ';
  out += std::to_string(g.width);
  out += ' ';
  out += std::to_string(g.height);
  out += '\n';
  for (int row = 0; row < g.height; ++row) {
    for (int col = 0; col < g.width; ++col) {
      if (col) out += ' ';
      append_double(out, g.at(row, col));
    }
    out += '\n';
  }
}

inline ProbGrid read_grid_body(TokenReader& r, const std::string& field) {
  ProbGrid g;
  g.origin.x = r.number(field + ".origin_x");
  g.origin.y = r.number(field + ".origin_y");
  g.resolution = r.number(field + ".resolution");
  g.width = static_cast<int>(r.integer(field + ".width"));
  g.height = static_cast<int>(r.integer(field + ".height"));
  if (g.width < 2 || g.height < 2) throw ValidationError(field + ".width/height: cell counts must be >= 2");
  g.values.resize(static_cast<std::size_t>(g.width) * g.height);
  for (std::size_t i = 0; i < g.values.size(); ++i) {
    g.values[i] = r.number(field + ".values[" + std::to_string(i) + "]");
  }
  return g;
}

}  // namespace detail

/// Standalone grid file: `planeval_grid <version>` header followed by the
/// same body layout embedded in scenario files.
inline std::string save_grid(const ProbGrid& grid) {
  std::string out = "planeval_grid " + std::to_string(kGridFormatVersion) + "\n";
  detail::append_grid_body(out, grid);
  return out;
}

inline ProbGrid load_grid(std::string_view text) {
  detail::TokenReader r(text);
  r.keyword("planeval_grid");
  const auto version = r.integer("format_version");
  if (version != kGridFormatVersion) {
    throw ParseError("format_version: unsupported grid version " + std::to_string(version));
  }
  ProbGrid g = detail::read_grid_body(r, "grid");
  g.validate();
  return g;
}

inline std::string save_scenario(const Scenario& s) {
  std::string out = "planeval_scenario " + std::to_string(kScenarioFormatVersion) + "\n";
  out += "name " + s.name + "\n";
  out += "horizon " + std::to_string(s.horizon_steps) + "\n";
  out += "dt ";
  append_double(out, s.dt);
  out += "\nego ";
  append_double(out, s.ego.pose.x);
  out += ' ';
  append_double(out, s.ego.pose.y);
  out += ' ';
  append_double(out, s.ego.pose.heading);
  out += ' ';
  append_double(out, s.ego.speed);
  out += ' ';
  append_double(out, s.ego.length);
  out += ' ';
  append_double(out, s.ego.width);
  out += "\ngrid ";
  detail::append_grid_body(out, s.road.drivable);
  out += "centerlines " + std::to_string(s.road.centerlines.size()) + "\n";
  for (const auto& cl : s.road.centerlines) {
    out += "centerline " + std::to_string(cl.line.points.size()) + "\n";
    for (std::size_t i = 0; i < cl.line.points.size(); ++i) {
      append_double(out, cl.line.points[i].x);
      out += ' ';
      append_double(out, cl.line.points[i].y);
      out += ' ';
      append_double(out, cl.headings[i]);
      out += '\n';
    }
  }
  out += "lights " + std::to_string(s.road.lights.size()) + "\n";
  for (const auto& light : s.road.lights) {
    out += "light ";
    append_double(out, light.stop_a.x);
    out += ' ';
    append_double(out, light.stop_a.y);
    out += ' ';
    append_double(out, light.stop_b.x);
    out += ' ';
    append_double(out, light.stop_b.y);
    out += ' ';
    out += std::to_string(light.phases.size());
    out += '\n';
    for (const auto& ph : light.phases) {
      append_double(out, ph.t_start);
      out += ' ';
      append_double(out, ph.t_end);
      out += ' ';
      out += ph.red ? "red" : "green";
      out += '\n';
    }
  }
  out += "route " + std::to_string(s.route.points.size()) + "\n";
  for (const Vec2 p : s.route.points) {
    append_double(out, p.x);
    out += ' ';
    append_double(out, p.y);
    out += '\n';
  }
  out += "agents " + std::to_string(s.agents.size()) + "\n";
  for (const auto& a : s.agents) {
    out += "agent " + std::to_string(a.id) + " " + to_string(a.kind) + " ";
    append_double(out, a.length);
    out += ' ';
    append_double(out, a.width);
    out += '\n';
    for (std::size_t h = 0; h < a.future.size(); ++h) {
      append_double(out, a.future[h].x);
      out += ' ';
      append_double(out, a.future[h].y);
      out += ' ';
      append_double(out, a.future[h].heading);
      out += ' ';
      out += a.valid[h] ? '1' : '0';
      out += '\n';
    }
  }
  out += "expert " + std::to_string(s.expert.size()) + "\n";
  for (const auto& p : s.expert) detail::append_pose(out, p);
  out += "history " + std::to_string(s.history.size()) + "\n";
  for (const auto& p : s.history) detail::append_pose(out, p);
  out += "prev_plan " + std::to_string(s.prev_plan.size()) + "\n";
  for (const auto& p : s.prev_plan) detail::append_pose(out, p);
  out += "giveway " + std::to_string(s.giveway.size()) + "\n";
  for (const auto& z : s.giveway) {
    out += "zone " + std::to_string(z.polygon.size()) + " " + std::to_string(z.priority_agents.size());
    for (const auto id : z.priority_agents) out += " " + std::to_string(id);
    out += '\n';
    for (const Vec2 p : z.polygon) {
      append_double(out, p.x);
      out += ' ';
      append_double(out, p.y);
      out += '\n';
    }
  }
  return out;
}

inline Scenario load_scenario(std::string_view text) {
  detail::TokenReader r(text);
  Scenario s;
  r.keyword("planeval_scenario");
  const auto version = r.integer("format_version");
  if (version != kScenarioFormatVersion) {
    throw ParseError("format_version: unsupported scenario version " + std::to_string(version));
  }
  r.keyword("name");
  s.name = std::string(r.token("name"));
  r.keyword("horizon");
  s.horizon_steps = static_cast<int>(r.integer("horizon"));
  r.keyword("dt");
  s.dt = r.number("dt");
  r.keyword("ego");
  s.ego.pose = detail::read_pose(r, "ego.pose");
  s.ego.speed = r.number("ego.speed");
  s.ego.length = r.number("ego.length");
  s.ego.width = r.number("ego.width");
  r.keyword("grid");
  s.road.drivable = detail::read_grid_body(r, "grid");

  r.keyword("centerlines");
  const auto n_center = r.integer("centerlines.count");
  for (long long c = 0; c < n_center; ++c) {
    const std::string path = "centerlines[" + std::to_string(c) + "]";
    r.keyword("centerline");
    const auto n_pts = r.integer(path + ".count");
    Centerline cl;
    for (long long i = 0; i < n_pts; ++i) {
      Vec2 p;
      p.x = r.number(path + ".x");
      p.y = r.number(path + ".y");
      cl.line.points.push_back(p);
      cl.headings.push_back(r.number(path + ".heading"));
    }
    s.road.centerlines.push_back(std::move(cl));
  }

  r.keyword("lights");
  const auto n_lights = r.integer("lights.count");
  for (long long l = 0; l < n_lights; ++l) {
    const std::string path = "lights[" + std::to_string(l) + "]";
    r.keyword("light");
    TrafficLight light;
    light.stop_a.x = r.number(path + ".stop_a.x");
    light.stop_a.y = r.number(path + ".stop_a.y");
    light.stop_b.x = r.number(path + ".stop_b.x");
    light.stop_b.y = r.number(path + ".stop_b.y");
    const auto n_phases = r.integer(path + ".phases.count");
    for (long long i = 0; i < n_phases; ++i) {
      LightPhase ph;
      ph.t_start = r.number(path + ".phase.t_start");
      ph.t_end = r.number(path + ".phase.t_end");
      const auto state = r.token(path + ".phase.state");
      if (state == "red") {
        ph.red = true;
      } else if (state == "green") {
        ph.red = false;
      } else {
        throw ParseError(path + ".phase.state: expected red|green, found '" + std::string(state) + "'");
      }
      light.phases.push_back(ph);
    }
    s.road.lights.push_back(std::move(light));
  }

  r.keyword("route");
  const auto n_route = r.integer("route.count");
  for (long long i = 0; i < n_route; ++i) {
    Vec2 p;
    p.x = r.number("route.x");
    p.y = r.number("route.y");
    s.route.points.push_back(p);
  }

  r.keyword("agents");
  const auto n_agents = r.integer("agents.count");
  for (long long i = 0; i < n_agents; ++i) {
    r.keyword("agent");
    AgentInstance a;
    a.id = r.integer("agent.id");
    const std::string path = "agents[id=" + std::to_string(a.id) + "]";
    const auto kind = r.token(path + ".class");
    if (kind == "vehicle") {
      a.kind = AgentKind::vehicle;
    } else if (kind == "pedestrian") {
      a.kind = AgentKind::pedestrian;
    } else if (kind == "static_object") {
      a.kind = AgentKind::static_object;
    } else {
      throw ParseError(path + ".class: expected vehicle|pedestrian|static_object, found '" + std::string(kind) + "'");
    }
    a.length = r.number(path + ".length");
    a.width = r.number(path + ".width");
    for (int h = 0; h < s.horizon_steps; ++h) {
      const std::string step = path + ".future[" + std::to_string(h) + "]";
      a.future.push_back(detail::read_pose(r, step));
      const auto valid = r.integer(step + ".valid");
      a.valid.push_back(valid != 0);
    }
    s.agents.push_back(std::move(a));
  }

  r.keyword("expert");
  const auto n_expert = r.integer("expert.count");
  for (long long i = 0; i < n_expert; ++i) s.expert.push_back(detail::read_pose(r, "expert[" + std::to_string(i) + "]"));

  r.keyword("history");
  const auto n_history = r.integer("history.count");
  for (long long i = 0; i < n_history; ++i) s.history.push_back(detail::read_pose(r, "history[" + std::to_string(i) + "]"));

  r.keyword("prev_plan");
  const auto n_prev = r.integer("prev_plan.count");
  for (long long i = 0; i < n_prev; ++i) s.prev_plan.push_back(detail::read_pose(r, "prev_plan[" + std::to_string(i) + "]"));

  r.keyword("giveway");
  const auto n_zones = r.integer("giveway.count");
  for (long long z = 0; z < n_zones; ++z) {
    const std::string path = "giveway[" + std::to_string(z) + "]";
    r.keyword("zone");
    GivewayZone zone;
    const auto n_verts = r.integer(path + ".vertex_count");
    const auto n_priority = r.integer(path + ".priority_count");
    for (long long i = 0; i < n_priority; ++i) zone.priority_agents.push_back(r.integer(path + ".priority"));
    for (long long i = 0; i < n_verts; ++i) {
      Vec2 p;
      p.x = r.number(path + ".x");
      p.y = r.number(path + ".y");
      zone.polygon.push_back(p);
    }
    s.giveway.push_back(std::move(zone));
  }

  if (!r.done()) throw ParseError("trailing content after scenario body");
  s.validate();
  return s;
}

}  // namespace planeval
