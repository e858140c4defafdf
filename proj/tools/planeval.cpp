// planeval command-line interface: anchor fitting, scenario generation,
// open-loop and closed-loop evaluation, and scene rendering.
//
// Exit codes: 0 success, 1 runtime error, 2 invalid input.

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "planeval/anchors.hpp"
#include "planeval/closed_loop.hpp"
#include "planeval/pipeline.hpp"
#include "planeval/render.hpp"
#include "planeval/reports.hpp"
#include "planeval/scenario_format.hpp"
#include "planeval/scenario_gen.hpp"

namespace fs = std::filesystem;
using namespace planeval;

namespace {

struct CliOptions {
  std::string config_path;
  int workers = 1;
  int top_k = -1;  // -1 keeps the config value
};

double get_or(const json& obj, const char* key, double fallback) {
  return obj.contains(key) ? obj.at(key).get<double>() : fallback;
}

/// Config file layout mirrors the PlannerConfig structure; every key is
/// optional and command-line flags win over file values.
PlannerConfig load_planner_config(const CliOptions& opts) {
  PlannerConfig cfg;
  if (!opts.config_path.empty()) {
    const json root = json::parse(read_file(opts.config_path));
    if (root.contains("metrics")) {
      const auto& m = root.at("metrics");
      cfg.metrics.w_ep = get_or(m, "w_ep", cfg.metrics.w_ep);
      cfg.metrics.w_ttc = get_or(m, "w_ttc", cfg.metrics.w_ttc);
      cfg.metrics.w_c = get_or(m, "w_c", cfg.metrics.w_c);
      cfg.metrics.w_lk = get_or(m, "w_lk", cfg.metrics.w_lk);
      cfg.metrics.w_hc = get_or(m, "w_hc", cfg.metrics.w_hc);
      cfg.metrics.w_ec = get_or(m, "w_ec", cfg.metrics.w_ec);
      cfg.metrics.t_ttc = get_or(m, "t_ttc", cfg.metrics.t_ttc);
      cfg.metrics.lk_threshold = get_or(m, "lk_threshold", cfg.metrics.lk_threshold);
      cfg.metrics.ddc_d1 = get_or(m, "ddc_d1", cfg.metrics.ddc_d1);
      cfg.metrics.ddc_d2 = get_or(m, "ddc_d2", cfg.metrics.ddc_d2);
      cfg.metrics.ec_threshold = get_or(m, "ec_threshold", cfg.metrics.ec_threshold);
      cfg.metrics.stationary_speed = get_or(m, "stationary_speed", cfg.metrics.stationary_speed);
      if (m.contains("comfort")) {
        const auto& c = m.at("comfort");
        cfg.metrics.comfort.a_lon_max = get_or(c, "a_lon_max", cfg.metrics.comfort.a_lon_max);
        cfg.metrics.comfort.a_lat_max = get_or(c, "a_lat_max", cfg.metrics.comfort.a_lat_max);
        cfg.metrics.comfort.jerk_max = get_or(c, "jerk_max", cfg.metrics.comfort.jerk_max);
        cfg.metrics.comfort.yaw_rate_max = get_or(c, "yaw_rate_max", cfg.metrics.comfort.yaw_rate_max);
      }
    }
    if (root.contains("selection")) {
      const auto& s = root.at("selection");
      cfg.selection.epsilon = get_or(s, "epsilon", cfg.selection.epsilon);
      cfg.selection.top_k = static_cast<int>(get_or(s, "top_k", cfg.selection.top_k));
      if (s.contains("stage1")) {
        const auto& w = s.at("stage1");
        cfg.selection.stage1.imitation = get_or(w, "imitation", cfg.selection.stage1.imitation);
        cfg.selection.stage1.nc = get_or(w, "nc", cfg.selection.stage1.nc);
        cfg.selection.stage1.dac = get_or(w, "dac", cfg.selection.stage1.dac);
        cfg.selection.stage1.ttc = get_or(w, "ttc", cfg.selection.stage1.ttc);
        cfg.selection.stage1.ep = get_or(w, "ep", cfg.selection.stage1.ep);
        cfg.selection.stage1.c = get_or(w, "c", cfg.selection.stage1.c);
      }
      if (s.contains("stage2")) {
        const auto& w = s.at("stage2");
        cfg.selection.stage2.imitation = get_or(w, "imitation", cfg.selection.stage2.imitation);
        cfg.selection.stage2.pwnc = get_or(w, "pwnc", cfg.selection.stage2.pwnc);
        cfg.selection.stage2.twdac = get_or(w, "twdac", cfg.selection.stage2.twdac);
        cfg.selection.stage2.ep = get_or(w, "ep", cfg.selection.stage2.ep);
        cfg.selection.stage2.c = get_or(w, "c", cfg.selection.stage2.c);
        cfg.selection.stage2.ttc = get_or(w, "ttc", cfg.selection.stage2.ttc);
      }
    }
    if (root.contains("refine")) {
      const auto& r = root.at("refine");
      cfg.refine.reaction_steps = static_cast<int>(get_or(r, "reaction_steps", cfg.refine.reaction_steps));
      cfg.refine.react_distance = get_or(r, "react_distance", cfg.refine.react_distance);
      cfg.refine.yield_factor = get_or(r, "yield_factor", cfg.refine.yield_factor);
      cfg.refine.iterations = static_cast<int>(get_or(r, "iterations", cfg.refine.iterations));
      if (r.contains("smooth_ego")) cfg.refine.smooth_ego = r.at("smooth_ego").get<bool>();
    }
    if (root.contains("fine")) {
      const auto& f = root.at("fine");
      cfg.fine.d_safe = get_or(f, "d_safe", cfg.fine.d_safe);
      cfg.fine.twdac_margin = get_or(f, "twdac_margin", cfg.fine.twdac_margin);
    }
    cfg.imitation_lambda = get_or(root, "imitation_lambda", cfg.imitation_lambda);
    cfg.workers = static_cast<int>(get_or(root, "workers", cfg.workers));
  }
  if (opts.workers > 0) cfg.workers = opts.workers;
  if (opts.top_k > 0) cfg.selection.top_k = opts.top_k;
  cfg.metrics.validate();
  cfg.selection.validate();
  return cfg;
}

std::vector<Scenario> load_scenarios_sorted(const std::string& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".scn") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Scenario> out;
  out.reserve(files.size());
  for (const auto& f : files) out.push_back(load_scenario(read_file(f.string())));
  return out;
}

TrajectoryCorpus load_corpus_arg(const std::string& path) {
  if (fs::is_directory(path)) return corpus_from(load_scenarios_sorted(path));
  return load_corpus(read_file(path));
}

int cmd_fit_anchors(const std::string& corpus_path, int k, std::uint64_t seed, const std::string& out_path) {
  const TrajectoryCorpus corpus = load_corpus_arg(corpus_path);
  const AnchorSet set = fit_anchors(corpus, k, seed);
  write_file(out_path, save_anchors(set));
  std::cout << "fit " << set.k << " anchors (horizon " << set.horizon << ") from "
            << corpus.trajectories.size() << " trajectories -> " << out_path << "\n";
  return 0;
}

struct GenCliArgs {
  std::string template_name = "straight";
  std::uint64_t seed = 0;
  int count = 1;
  std::string out_dir = ".";
  int horizon = 8;
  double dt = 0.5;
  double speed_min = 5.0, speed_max = 12.0;
  double gap_min = 8.0, gap_max = 20.0;
  double trigger_min = 0.5, trigger_max = 2.0;
  std::string manifest_path;
  std::string corpus_out;
  double goal_radius = 3.0;
  double time_limit = 120.0;
  int plan_horizon = 6;
  int exec_steps = 1;
  bool reactive = false;
};

int cmd_gen_scenarios(const GenCliArgs& args) {
  GenSpec spec;
  if (args.template_name == "straight") spec.tmpl = Template::straight;
  else if (args.template_name == "lead_brake") spec.tmpl = Template::lead_brake;
  else if (args.template_name == "crossing_ped") spec.tmpl = Template::crossing_ped;
  else if (args.template_name == "merge") spec.tmpl = Template::merge;
  else if (args.template_name == "turn") spec.tmpl = Template::turn;
  else if (args.template_name == "narrow") spec.tmpl = Template::narrow;
  else throw ValidationError("--template: unknown template '" + args.template_name + "'");
  spec.seed = args.seed;
  spec.count = args.count;
  spec.horizon = args.horizon;
  spec.dt = args.dt;
  spec.speed_min = args.speed_min;
  spec.speed_max = args.speed_max;
  spec.gap_min = args.gap_min;
  spec.gap_max = args.gap_max;
  spec.trigger_min = args.trigger_min;
  spec.trigger_max = args.trigger_max;

  const auto scenarios = generate(spec);
  fs::create_directories(args.out_dir);
  const fs::path manifest_dir =
      args.manifest_path.empty() ? fs::path(args.out_dir) : fs::absolute(args.manifest_path).parent_path();
  std::vector<SuiteRoute> routes;
  for (const auto& s : scenarios) {
    const std::string filename = s.name + ".scn";
    write_file((fs::path(args.out_dir) / filename).string(), save_scenario(s));
    SuiteRoute route;
    // Manifest entries are resolved relative to the manifest location.
    route.scenario_path =
        fs::proximate(fs::absolute(args.out_dir) / filename, manifest_dir).string();
    route.goal_radius = args.goal_radius;
    route.time_limit = args.time_limit;
    route.plan_horizon = args.plan_horizon;
    route.exec_steps = args.exec_steps;
    route.reactive = args.reactive;
    routes.push_back(std::move(route));
  }
  if (!args.manifest_path.empty()) write_file(args.manifest_path, save_suite(routes));
  if (!args.corpus_out.empty()) write_file(args.corpus_out, save_corpus(corpus_from(scenarios)));
  std::cout << "generated " << scenarios.size() << " " << args.template_name << " scenarios -> "
            << args.out_dir << "\n";
  return 0;
}

int cmd_eval_open_loop(const std::string& scenario_path, const std::string& anchors_path,
                       const CliOptions& opts, const std::string& out_dir, bool render) {
  const Scenario scenario = load_scenario(read_file(scenario_path));
  const AnchorSet anchors = load_anchors(read_file(anchors_path));
  const PlannerConfig cfg = load_planner_config(opts);
  const OpenLoopEvaluation ev = evaluate_open_loop(scenario, anchors, cfg);

  fs::create_directories(out_dir);
  write_file((fs::path(out_dir) / "open_loop_results.jsonl").string(),
             open_loop_results_jsonl(scenario, ev, cfg.metrics));
  const std::string table = open_loop_summary_table(scenario, ev);
  write_file((fs::path(out_dir) / "open_loop_summary.txt").string(), table);
  if (render) {
    write_file((fs::path(out_dir) / (scenario.name + ".svg")).string(),
               render_svg(scenario, {}, &ev.result));
  }
  std::cout << table;
  return 0;
}

int cmd_eval_closed_loop(const std::string& suite_path, const std::string& anchors_path,
                         const CliOptions& opts, const std::string& out_dir) {
  const auto routes = load_suite(read_file(suite_path));
  if (routes.empty()) throw ValidationError("suite: contains no routes");
  const AnchorSet anchors = load_anchors(read_file(anchors_path));
  const PlannerConfig cfg = load_planner_config(opts);
  const fs::path base = fs::path(suite_path).parent_path();

  std::vector<std::string> names(routes.size());
  std::vector<EpisodeResult> results(routes.size());
  const PlannerFn planner = pipeline_planner(anchors, cfg);
  parallel_for(static_cast<int>(routes.size()), cfg.workers, [&](int i) {
    RouteSpec spec;
    const fs::path scn = fs::path(routes[i].scenario_path).is_absolute()
                             ? fs::path(routes[i].scenario_path)
                             : base / routes[i].scenario_path;
    spec.scenario = load_scenario(read_file(scn.string()));
    spec.goal_radius = routes[i].goal_radius;
    spec.time_limit = routes[i].time_limit;
    spec.plan_horizon = routes[i].plan_horizon;
    spec.exec_steps = routes[i].exec_steps;
    spec.reactive = routes[i].reactive;
    names[i] = spec.scenario.name;
    results[i] = run_episode(spec, planner);
  });

  fs::create_directories(out_dir);
  write_file((fs::path(out_dir) / "closed_loop_results.jsonl").string(),
             closed_loop_results_jsonl(names, results));
  const std::string table = closed_loop_summary_table(names, results);
  write_file((fs::path(out_dir) / "closed_loop_summary.txt").string(), table);
  std::cout << table;
  return 0;
}

int cmd_render(const std::string& scenario_path, const std::string& out_path,
               const std::string& anchors_path, const CliOptions& opts) {
  const Scenario scenario = load_scenario(read_file(scenario_path));
  if (anchors_path.empty()) {
    write_file(out_path, render_svg(scenario));
  } else {
    const AnchorSet anchors = load_anchors(read_file(anchors_path));
    const PlannerConfig cfg = load_planner_config(opts);
    const PlanResult result = plan(scenario, anchors, cfg);
    write_file(out_path, render_svg(scenario, {}, &result));
  }
  std::cout << "rendered " << scenario.name << " -> " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"planeval: sparse-world trajectory evaluation and planning engine"};
  app.require_subcommand(1);

  CliOptions opts;

  auto* fit = app.add_subcommand("fit-anchors", "Fit trajectory anchors with K-means");
  std::string corpus_path, anchors_out;
  int k = 256;
  std::uint64_t seed = 0;
  fit->add_option("--corpus", corpus_path, "Corpus file or directory of .scn files")->required();
  fit->add_option("--k", k, "Number of anchors");
  fit->add_option("--seed", seed, "Clustering seed");
  fit->add_option("--out", anchors_out, "Output anchor file")->required();

  auto* gen = app.add_subcommand("gen-scenarios", "Generate synthetic scenarios");
  GenCliArgs gen_args;
  gen->add_option("--template", gen_args.template_name,
                  "straight|lead_brake|crossing_ped|merge|turn|narrow");
  gen->add_option("--seed", gen_args.seed, "Generator seed");
  gen->add_option("--count", gen_args.count, "Scenario count");
  gen->add_option("--out-dir", gen_args.out_dir, "Output directory")->required();
  gen->add_option("--horizon", gen_args.horizon, "Steps per scenario");
  gen->add_option("--dt", gen_args.dt, "Step length in seconds");
  gen->add_option("--speed-min", gen_args.speed_min, "Ego speed range low, m/s");
  gen->add_option("--speed-max", gen_args.speed_max, "Ego speed range high, m/s");
  gen->add_option("--gap-min", gen_args.gap_min, "Spacing range low, m");
  gen->add_option("--gap-max", gen_args.gap_max, "Spacing range high, m");
  gen->add_option("--trigger-min", gen_args.trigger_min, "Hazard onset low, s");
  gen->add_option("--trigger-max", gen_args.trigger_max, "Hazard onset high, s");
  gen->add_option("--manifest", gen_args.manifest_path, "Write a route suite manifest here");
  gen->add_option("--corpus-out", gen_args.corpus_out, "Write the expert corpus here");
  gen->add_option("--goal-radius", gen_args.goal_radius, "Manifest goal radius, m");
  gen->add_option("--time-limit", gen_args.time_limit, "Manifest time limit, s");
  gen->add_option("--plan-horizon", gen_args.plan_horizon, "Manifest replan horizon, steps");
  gen->add_option("--exec-steps", gen_args.exec_steps, "Manifest executed steps per replan");
  gen->add_flag("--reactive", gen_args.reactive, "Manifest: vehicles yield to the ego");

  auto* open = app.add_subcommand("eval-open-loop", "Evaluate one scenario open-loop");
  std::string scenario_path, anchors_path, out_dir = "out";
  bool render_flag = false;
  open->add_option("--scenario", scenario_path, "Scenario file")->required();
  open->add_option("--anchors", anchors_path, "Anchor file")->required();
  open->add_option("--config", opts.config_path, "JSON config file");
  open->add_option("--out-dir", out_dir, "Report directory");
  open->add_option("--workers", opts.workers, "Worker threads");
  open->add_option("--top-k", opts.top_k, "Stage-1 survivor count K'");
  open->add_flag("--render", render_flag, "Also emit an SVG rendering");

  auto* closed = app.add_subcommand("eval-closed-loop", "Run a closed-loop route suite");
  std::string suite_path;
  closed->add_option("--suite", suite_path, "Suite manifest file")->required();
  closed->add_option("--anchors", anchors_path, "Anchor file")->required();
  closed->add_option("--config", opts.config_path, "JSON config file");
  closed->add_option("--out-dir", out_dir, "Report directory");
  closed->add_option("--workers", opts.workers, "Worker threads");

  auto* render_cmd = app.add_subcommand("render", "Render a scenario to SVG");
  std::string render_out = "scene.svg";
  std::string render_anchors;
  render_cmd->add_option("--scenario", scenario_path, "Scenario file")->required();
  render_cmd->add_option("--out", render_out, "Output SVG path");
  render_cmd->add_option("--anchors", render_anchors, "Run the pipeline and draw candidates");
  render_cmd->add_option("--config", opts.config_path, "JSON config file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (fit->parsed()) return cmd_fit_anchors(corpus_path, k, seed, anchors_out);
    if (gen->parsed()) return cmd_gen_scenarios(gen_args);
    if (open->parsed()) return cmd_eval_open_loop(scenario_path, anchors_path, opts, out_dir, render_flag);
    if (closed->parsed()) return cmd_eval_closed_loop(suite_path, anchors_path, opts, out_dir);
    if (render_cmd->parsed()) return cmd_render(scenario_path, render_out, render_anchors, opts);
  } catch (const ParseError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return 2;
  } catch (const json::exception& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
