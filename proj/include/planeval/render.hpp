// Static SVG scene rendering: drivable map, route, agents with their logged
// futures (black), expert trajectory (purple), candidate trajectories shaded
// by final-stage score, and the selected plan (blue). Output is
// deterministic: fixed ordering and shortest round-trip number formatting.
#pragma once

#include <cstdio>
#include <string>
#include <vector>

#include "planeval/pipeline.hpp"
#include "planeval/world.hpp"

namespace planeval {

struct RenderOptions {
  double pixels_per_meter = 10.0;
  bool draw_candidates = true;
  int max_candidates = 64;  // strongest stage-2 candidates drawn
};

namespace render_detail {

class SvgWriter {
 public:
  SvgWriter(const ProbGrid& grid, double scale) : scale_(scale) {
    min_x_ = grid.origin.x - grid.resolution / 2.0;
    max_y_ = grid.max_y() + grid.resolution / 2.0;
    width_ = (grid.max_x() + grid.resolution / 2.0 - min_x_) * scale_;
    height_ = (max_y_ - (grid.origin.y - grid.resolution / 2.0)) * scale_;
  }

  double px(double x) const { return (x - min_x_) * scale_; }
  double py(double y) const { return (max_y_ - y) * scale_; }

  void open(std::string& out) const {
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"";
    append_double(out, width_);
    out += "\" height=\"";
    append_double(out, height_);
    out += "\" viewBox=\"0 0 ";
    append_double(out, width_);
    out += ' ';
    append_double(out, height_);
    out += "\">\n<rect width=\"100%\" height=\"100%\" fill=\"#f4f4f4\"/>\n";
  }

  void rect(std::string& out, double x, double y, double w, double h, const char* fill) const {
    out += "<rect x=\"";
    append_double(out, px(x));
    out += "\" y=\"";
    append_double(out, py(y + h));
    out += "\" width=\"";
    append_double(out, w * scale_);
    out += "\" height=\"";
    append_double(out, h * scale_);
    out += "\" fill=\"";
    out += fill;
    out += "\"/>\n";
  }

  void polyline(std::string& out, const std::vector<Vec2>& pts, const char* stroke, double width,
                const char* dash = nullptr) const {
    if (pts.size() < 2) return;
    out += "<polyline fill=\"none\" stroke=\"";
    out += stroke;
    out += "\" stroke-width=\"";
    append_double(out, width);
    out += "\"";
    if (dash) {
      out += " stroke-dasharray=\"";
      out += dash;
      out += "\"";
    }
    out += " points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (i) out += ' ';
      append_double(out, px(pts[i].x));
      out += ',';
      append_double(out, py(pts[i].y));
    }
    out += "\"/>\n";
  }

  void polyline(std::string& out, const std::vector<Pose2>& poses, const char* stroke, double width,
                const char* dash = nullptr) const {
    std::vector<Vec2> pts;
    pts.reserve(poses.size());
    for (const auto& p : poses) pts.push_back(p.position());
    polyline(out, pts, stroke, width, dash);
  }

  void box(std::string& out, const OrientedBox& b, const char* stroke, const char* fill) const {
    const auto corners = b.corners();
    out += "<polygon stroke=\"";
    out += stroke;
    out += "\" stroke-width=\"1\" fill=\"";
    out += fill;
    out += "\" points=\"";
    for (int i = 0; i < 4; ++i) {
      if (i) out += ' ';
      append_double(out, px(corners[i].x));
      out += ',';
      append_double(out, py(corners[i].y));
    }
    out += "\"/>\n";
  }

 private:
  double scale_, min_x_, max_y_, width_, height_;
};

/// Red (unsafe) to green (safe) shade for a fraction in [0, 1].
inline std::string score_color(double frac) {
  const int r = static_cast<int>(211 + (46 - 211) * frac);
  const int g = static_cast<int>(47 + (125 - 47) * frac);
  const int b = static_cast<int>(47 + (50 - 47) * frac);
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
  return buf;
}

}  // namespace render_detail

inline std::string render_svg(const Scenario& scenario, const RenderOptions& opts = {},
                              const PlanResult* result = nullptr) {
  using render_detail::SvgWriter;
  const ProbGrid& grid = scenario.road.drivable;
  SvgWriter svg(grid, opts.pixels_per_meter);
  std::string out;
  svg.open(out);

  // Non-drivable cells only; the light background stands for drivable space.
  for (int row = 0; row < grid.height; ++row) {
    for (int col = 0; col < grid.width; ++col) {
      if (grid.at(row, col) < 0.5) {
        svg.rect(out, grid.origin.x + (col - 0.5) * grid.resolution,
                 grid.origin.y + (row - 0.5) * grid.resolution, grid.resolution, grid.resolution,
                 "#b9b9b9");
      }
    }
  }

  for (const auto& cl : scenario.road.centerlines) svg.polyline(out, cl.line.points, "#9e9e9e", 1.0, "4 4");
  svg.polyline(out, scenario.route.points, "#2e7d32", 1.5, "8 4");
  for (const auto& light : scenario.road.lights) {
    svg.polyline(out, std::vector<Vec2>{light.stop_a, light.stop_b}, "#c62828", 2.5);
  }
  for (const auto& zone : scenario.giveway) {
    std::vector<Vec2> ring = zone.polygon;
    ring.push_back(ring.front());
    svg.polyline(out, ring, "#ef6c00", 1.0, "2 2");
  }

  for (const auto& agent : scenario.agents) {
    std::vector<Vec2> future;
    for (std::size_t h = 0; h < agent.future.size(); ++h) {
      if (agent.valid[h]) future.push_back(agent.future[h].position());
    }
    svg.polyline(out, future, "#000000", 1.0);
    if (!agent.valid.empty() && agent.valid.front()) {
      const char* fill = agent.kind == AgentKind::static_object ? "#616161" : "#212121";
      svg.box(out, agent.box_at(agent.future.front()), "#000000", fill);
    }
  }

  if (result && opts.draw_candidates && !result->shortlist.empty()) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const int idx : result->shortlist) {
      if (!result->candidates[idx].stage2) continue;
      lo = std::min(lo, result->candidates[idx].stage2->total);
      hi = std::max(hi, result->candidates[idx].stage2->total);
    }
    int drawn = 0;
    for (const int idx : result->shortlist) {
      if (drawn >= opts.max_candidates) break;
      const auto& cand = result->candidates[idx];
      if (!cand.stage2 || idx == result->final_choice) continue;
      const double frac = hi > lo ? (cand.stage2->total - lo) / (hi - lo) : 1.0;
      svg.polyline(out, cand.traj, render_detail::score_color(frac).c_str(), 0.8);
      ++drawn;
    }
  }

  if (!scenario.expert.empty()) svg.polyline(out, scenario.expert, "#7b1fa2", 2.0);
  if (result && !result->selected_traj.empty()) svg.polyline(out, result->selected_traj, "#1565c0", 2.5);

  svg.box(out, scenario.ego_box(scenario.ego.pose), "#1565c0", "none");
  out += "</svg>\n";
  return out;
}

}  // namespace planeval
