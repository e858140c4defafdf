#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "planeval/anchors.hpp"
#include "test_oracles.hpp"

using namespace planeval;
using Catch::Approx;

namespace {

std::vector<Vec2> line_traj(int horizon, double step_x, double step_y) {
  std::vector<Vec2> out;
  for (int h = 0; h < horizon; ++h) out.push_back({step_x * h, step_y * h});
  return out;
}

/// Three well-separated templates with sigma-jitter, the synthetic corpus the
/// recovery criterion uses.
struct ClusteredCorpus {
  TrajectoryCorpus corpus;
  std::vector<std::vector<Vec2>> templates;
};

ClusteredCorpus three_cluster_corpus(std::uint64_t seed, int per_cluster = 60, double sigma = 0.1) {
  const int horizon = 8;
  ClusteredCorpus out;
  out.templates = {line_traj(horizon, 3.0, 0.0), line_traj(horizon, 2.0, 1.0), line_traj(horizon, 1.0, -1.2)};
  out.corpus.horizon = horizon;
  Rng rng(seed);
  for (const auto& tmpl : out.templates) {
    for (int i = 0; i < per_cluster; ++i) {
      std::vector<Vec2> traj = tmpl;
      for (auto& p : traj) {
        p.x += rng.uniform(-sigma, sigma);
        p.y += rng.uniform(-sigma, sigma);
      }
      out.corpus.trajectories.push_back(std::move(traj));
    }
  }
  return out;
}

}  // namespace

TEST_CASE("fit_anchors with K equal to corpus size reproduces the corpus", "[anchors]") {
  TrajectoryCorpus corpus;
  corpus.horizon = 4;
  corpus.trajectories = {line_traj(4, 1.0, 0.0), line_traj(4, 2.0, 0.5), line_traj(4, 0.5, -1.0)};
  const AnchorSet set = fit_anchors(corpus, 3, 7);
  for (const auto& traj : corpus.trajectories) {
    const auto [index, dist] = nearest_anchor(traj, set);
    (void)index;
    CHECK(dist <= 1e-9);
  }
}

TEST_CASE("fit_anchors with K=1 yields the corpus mean", "[anchors]") {
  TrajectoryCorpus corpus;
  corpus.horizon = 3;
  corpus.trajectories = {{{0, 0}, {1, 0}, {2, 0}}, {{0, 0}, {1, 2}, {2, 4}}, {{0, 0}, {1, 1}, {2, 2}}};
  const AnchorSet set = fit_anchors(corpus, 1, 3);
  REQUIRE(set.anchors.size() == 1);
  for (int h = 0; h < 3; ++h) {
    Vec2 mean;
    for (const auto& t : corpus.trajectories) mean = mean + t[h];
    mean = mean / 3.0;
    CHECK(set.anchors[0][h].x == Approx(mean.x).margin(1e-9));
    CHECK(set.anchors[0][h].y == Approx(mean.y).margin(1e-9));
  }
}

TEST_CASE("fit_anchors recovers well-separated cluster templates", "[anchors]") {
  const auto data = three_cluster_corpus(1234);
  const AnchorSet set = fit_anchors(data.corpus, 3, 17);
  const double denom = std::sqrt(2.0 * data.corpus.horizon);
  for (const auto& tmpl : data.templates) {
    const auto [index, dist] = nearest_anchor(tmpl, set);
    (void)index;
    CHECK(dist / denom < 0.2);
  }
}

TEST_CASE("fit_anchors rejects corpora smaller than K", "[anchors]") {
  TrajectoryCorpus corpus;
  corpus.horizon = 4;
  corpus.trajectories = {line_traj(4, 1.0, 0.0)};
  REQUIRE_THROWS_AS(fit_anchors(corpus, 2, 0), ValidationError);
}

TEST_CASE("fit_anchors is deterministic for a fixed seed", "[anchors]") {
  const auto data = three_cluster_corpus(88);
  const AnchorSet a = fit_anchors(data.corpus, 5, 42);
  const AnchorSet b = fit_anchors(data.corpus, 5, 42);
  CHECK(save_anchors(a) == save_anchors(b));
  const AnchorSet c = fit_anchors(data.corpus, 5, 43);
  CHECK(save_anchors(a) != save_anchors(c));
}

TEST_CASE("within-cluster SSE is monotone non-increasing", "[anchors]") {
  const auto data = three_cluster_corpus(7, 40, 0.8);
  FitDiagnostics diag;
  fit_anchors(data.corpus, 6, 11, &diag);
  REQUIRE(diag.iterations >= 1);
  for (std::size_t i = 1; i < diag.sse_per_iteration.size(); ++i) {
    CHECK(diag.sse_per_iteration[i] <= diag.sse_per_iteration[i - 1] + 1e-9);
  }
}

TEST_CASE("converged centroids satisfy Voronoi consistency", "[anchors]") {
  const auto data = three_cluster_corpus(21, 50, 0.5);
  const AnchorSet set = fit_anchors(data.corpus, 4, 9);
  for (const auto& traj : data.corpus.trajectories) {
    const auto [index, dist] = nearest_anchor(traj, set);
    (void)index;
    for (const auto& anchor : set.anchors) {
      CHECK(dist <= flattened_l2(traj, anchor) + 1e-9);
    }
  }
}

TEST_CASE("nearest_anchor identity, tie-break, exhaustive oracle", "[anchors]") {
  AnchorSet set;
  set.k = 8;
  set.horizon = 6;
  set.seed = 0;
  Rng rng(55);
  for (int a = 0; a < 8; ++a) {
    std::vector<Vec2> anchor;
    for (int h = 0; h < 6; ++h) anchor.push_back({rng.uniform(-5, 5), rng.uniform(-5, 5)});
    set.anchors.push_back(std::move(anchor));
  }

  const auto [idx5, d5] = nearest_anchor(set.anchors[5], set);
  CHECK(idx5 == 5);
  CHECK(d5 == 0.0);

  // Symmetric tie: indices 2 and 7 hold mirrored anchors, query on the axis.
  AnchorSet ties;
  ties.k = 8;
  ties.horizon = 2;
  ties.anchors.assign(8, {{50.0, 50.0}, {60.0, 60.0}});
  ties.anchors[2] = {{1.0, 0.0}, {2.0, 0.0}};
  ties.anchors[7] = {{-1.0, 0.0}, {-2.0, 0.0}};
  const auto [tie_idx, tie_d] = nearest_anchor({{0.0, 0.0}, {0.0, 0.0}}, ties);
  CHECK(tie_idx == 2);
  CHECK(tie_d == Approx(std::sqrt(5.0)));

  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Vec2> query;
    for (int h = 0; h < 6; ++h) query.push_back({rng.uniform(-6, 6), rng.uniform(-6, 6)});
    const auto [index, dist] = nearest_anchor(query, set);
    int best = 0;
    double best_d = flattened_l2(query, set.anchors[0]);
    for (int a = 1; a < 8; ++a) {
      const double d = flattened_l2(query, set.anchors[a]);
      if (d < best_d) {
        best_d = d;
        best = a;
      }
    }
    CHECK(index == best);
    CHECK(dist == best_d);
  }

  REQUIRE_THROWS_AS(nearest_anchor(line_traj(4, 1.0, 0.0), set), ValidationError);
}

TEST_CASE("anchor pose trajectories reconstruct headings from motion", "[anchors]") {
  AnchorSet set;
  set.k = 1;
  set.horizon = 4;
  set.anchors = {{{0.0, 0.0}, {1.0, 0.0}, {1.0, 1.0}, {1.0, 2.0}}};
  const auto poses = set.pose_trajectory(0);
  CHECK(poses[0].heading == 0.0);
  CHECK(poses[1].heading == Approx(0.0));
  CHECK(poses[2].heading == Approx(kPi / 2.0));
  CHECK(poses[3].heading == Approx(kPi / 2.0));  // final copies the penultimate segment
}
