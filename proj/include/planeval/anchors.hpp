// Trajectory anchor vocabulary: K-means over an ego-frame trajectory corpus
// (Lloyd's algorithm with k-means++ seeding) plus nearest-anchor lookup and
// the anchor file format.
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "planeval/geometry.hpp"
#include "planeval/scenario_format.hpp"

namespace planeval {

inline constexpr int kAnchorFormatVersion = 1;

/// Ego-frame (x, y) trajectories with a uniform horizon: origin at t = 0,
/// heading aligned to +x, so the first waypoint of each entry is (0, 0).
struct TrajectoryCorpus {
  int horizon = 0;
  std::vector<std::vector<Vec2>> trajectories;
};

struct AnchorSet {
  int k = 0;
  int horizon = 0;
  std::uint64_t seed = 0;
  std::vector<std::vector<Vec2>> anchors;

  /// Anchors are pairwise distinct (flattened L2 > 1e-9).
  void validate() const;

  /// Anchor as a pose sequence: headings reconstructed from consecutive
  /// waypoint differences, final heading copied from the penultimate segment.
  std::vector<Pose2> pose_trajectory(int index) const {
    const auto& pts = anchors[index];
    std::vector<Pose2> out(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) out[i] = {pts[i].x, pts[i].y, 0.0};
    detail::rebuild_headings(out, 0.0);
    return out;
  }
};

inline double flattened_l2(const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += squared_norm(a[i] - b[i]);
  return std::sqrt(sum);
}

inline void AnchorSet::validate() const {
  if (k < 1 || horizon < 1) throw ValidationError("anchors: k and horizon must be >= 1");
  if (anchors.size() != static_cast<std::size_t>(k)) throw ValidationError("anchors: count must equal k");
  for (int a = 0; a < k; ++a) {
    if (anchors[a].size() != static_cast<std::size_t>(horizon)) {
      throw ValidationError("anchors[" + std::to_string(a) + "]: horizon mismatch");
    }
    for (int b = a + 1; b < k; ++b) {
      if (flattened_l2(anchors[a], anchors[b]) <= 1e-9) {
        throw ValidationError("anchors[" + std::to_string(a) + "] and anchors[" + std::to_string(b) +
                              "] are identical");
      }
    }
  }
}

struct FitDiagnostics {
  std::vector<double> sse_per_iteration;  // within-cluster sum of squares trace
  int iterations = 0;
};

namespace detail {

inline double sq_dist(const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += squared_norm(a[i] - b[i]);
  return sum;
}

}  // namespace detail

/// Lloyd's algorithm on flattened 2H-dimensional vectors. k-means++ seeding
/// from the given seed; converges when the max centroid shift drops below
/// 1e-6 m or after 200 iterations; an emptied cluster is reseeded to the
/// corpus point farthest from its assigned centroid. Deterministic for a
/// fixed (corpus order, k, seed).
inline AnchorSet fit_anchors(const TrajectoryCorpus& corpus, int k, std::uint64_t seed,
                             FitDiagnostics* diagnostics = nullptr) {
  const int n = static_cast<int>(corpus.trajectories.size());
  if (k < 1) throw ValidationError("fit_anchors: k must be >= 1");
  if (n < k) {
    throw ValidationError("fit_anchors: corpus size " + std::to_string(n) + " smaller than k " +
                          std::to_string(k));
  }
  for (const auto& t : corpus.trajectories) {
    if (t.size() != static_cast<std::size_t>(corpus.horizon)) {
      throw ValidationError("fit_anchors: corpus horizon not uniform");
    }
  }

  Rng rng(seed);
  std::vector<std::vector<Vec2>> centroids;
  centroids.reserve(k);

  // k-means++ seeding.
  centroids.push_back(corpus.trajectories[rng.below(static_cast<std::uint64_t>(n))]);
  std::vector<double> d2(n, 0.0);
  while (static_cast<int>(centroids.size()) < k) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : centroids) best = std::min(best, detail::sq_dist(corpus.trajectories[i], c));
      d2[i] = best;
      total += best;
    }
    int pick = 0;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double cumulative = 0.0;
      pick = n - 1;
      for (int i = 0; i < n; ++i) {
        cumulative += d2[i];
        if (cumulative >= target) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    }
    centroids.push_back(corpus.trajectories[pick]);
  }

  std::vector<int> assignment(n, 0);
  FitDiagnostics diag;
  for (int iter = 0; iter < 200; ++iter) {
    // Assignment step; ties go to the lowest centroid index.
    double sse = 0.0;
    for (int i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      int best_c = 0;
      for (int c = 0; c < k; ++c) {
        const double d = detail::sq_dist(corpus.trajectories[i], centroids[c]);
        if (d < best) {
          best = d;
          best_c = c;
        }
      }
      assignment[i] = best_c;
      sse += best;
    }
    diag.sse_per_iteration.push_back(sse);
    diag.iterations = iter + 1;

    // Update step.
    std::vector<std::vector<Vec2>> next(k, std::vector<Vec2>(corpus.horizon));
    std::vector<int> counts(k, 0);
    for (int i = 0; i < n; ++i) {
      auto& c = next[assignment[i]];
      for (int h = 0; h < corpus.horizon; ++h) c[h] = c[h] + corpus.trajectories[i][h];
      ++counts[assignment[i]];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        for (int h = 0; h < corpus.horizon; ++h) next[c][h] = next[c][h] / counts[c];
      } else {
        // Reseed an emptied cluster to the point farthest from its centroid.
        int farthest = 0;
        double far_d = -1.0;
        for (int i = 0; i < n; ++i) {
          const double d = detail::sq_dist(corpus.trajectories[i], centroids[assignment[i]]);
          if (d > far_d) {
            far_d = d;
            farthest = i;
          }
        }
        next[c] = corpus.trajectories[farthest];
      }
    }

    double max_shift = 0.0;
    for (int c = 0; c < k; ++c) max_shift = std::max(max_shift, std::sqrt(detail::sq_dist(next[c], centroids[c])));
    centroids = std::move(next);
    if (max_shift < 1e-6) break;
  }

  if (diagnostics) *diagnostics = diag;
  AnchorSet set;
  set.k = k;
  set.horizon = corpus.horizon;
  set.seed = seed;
  set.anchors = std::move(centroids);
  set.validate();
  return set;
}

/// Index of the anchor minimizing flattened L2; ties break to the lowest
/// index. Throws on horizon mismatch.
inline std::pair<int, double> nearest_anchor(const std::vector<Vec2>& traj, const AnchorSet& set) {
  if (traj.size() != static_cast<std::size_t>(set.horizon)) {
    throw ValidationError("nearest_anchor: trajectory horizon " + std::to_string(traj.size()) +
                          " != anchor horizon " + std::to_string(set.horizon));
  }
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int i = 0; i < set.k; ++i) {
    const double d = flattened_l2(traj, set.anchors[i]);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return {best, best_d};
}

inline constexpr int kCorpusFormatVersion = 1;

inline std::string save_corpus(const TrajectoryCorpus& corpus) {
  std::string out = "planeval_corpus " + std::to_string(kCorpusFormatVersion) + "\n";
  out += "h " + std::to_string(corpus.horizon) + "\n";
  out += "count " + std::to_string(corpus.trajectories.size()) + "\n";
  for (const auto& traj : corpus.trajectories) {
    for (std::size_t i = 0; i < traj.size(); ++i) {
      if (i) out += ' ';
      append_double(out, traj[i].x);
      out += ' ';
      append_double(out, traj[i].y);
    }
    out += '\n';
  }
  return out;
}

inline TrajectoryCorpus load_corpus(std::string_view text) {
  detail::TokenReader r(text);
  r.keyword("planeval_corpus");
  const auto version = r.integer("format_version");
  if (version != kCorpusFormatVersion) {
    throw ParseError("format_version: unsupported corpus version " + std::to_string(version));
  }
  TrajectoryCorpus corpus;
  r.keyword("h");
  corpus.horizon = static_cast<int>(r.integer("h"));
  r.keyword("count");
  const auto count = r.integer("count");
  if (corpus.horizon < 1 || count < 1) throw ValidationError("corpus: h and count must be >= 1");
  corpus.trajectories.assign(count, std::vector<Vec2>(corpus.horizon));
  for (long long t = 0; t < count; ++t) {
    for (int h = 0; h < corpus.horizon; ++h) {
      const std::string field = "trajectories[" + std::to_string(t) + "][" + std::to_string(h) + "]";
      corpus.trajectories[t][h].x = r.number(field + ".x");
      corpus.trajectories[t][h].y = r.number(field + ".y");
    }
  }
  if (!r.done()) throw ParseError("trailing content after corpus body");
  return corpus;
}

inline std::string save_anchors(const AnchorSet& set) {
  std::string out = "planeval_anchors " + std::to_string(kAnchorFormatVersion) + "\n";
  out += "k " + std::to_string(set.k) + "\n";
  out += "h " + std::to_string(set.horizon) + "\n";
  out += "seed " + std::to_string(set.seed) + "\n";
  for (const auto& anchor : set.anchors) {
    for (std::size_t i = 0; i < anchor.size(); ++i) {
      if (i) out += ' ';
      append_double(out, anchor[i].x);
      out += ' ';
      append_double(out, anchor[i].y);
    }
    out += '\n';
  }
  return out;
}

inline AnchorSet load_anchors(std::string_view text) {
  detail::TokenReader r(text);
  r.keyword("planeval_anchors");
  const auto version = r.integer("format_version");
  if (version != kAnchorFormatVersion) {
    throw ParseError("format_version: unsupported anchor version " + std::to_string(version));
  }
  AnchorSet set;
  r.keyword("k");
  set.k = static_cast<int>(r.integer("k"));
  r.keyword("h");
  set.horizon = static_cast<int>(r.integer("h"));
  r.keyword("seed");
  set.seed = static_cast<std::uint64_t>(r.integer("seed"));
  if (set.k < 1 || set.horizon < 1) throw ValidationError("anchors: k and h must be >= 1");
  set.anchors.assign(set.k, std::vector<Vec2>(set.horizon));
  for (int a = 0; a < set.k; ++a) {
    for (int h = 0; h < set.horizon; ++h) {
      const std::string field = "anchors[" + std::to_string(a) + "][" + std::to_string(h) + "]";
      set.anchors[a][h].x = r.number(field + ".x");
      set.anchors[a][h].y = r.number(field + ".y");
    }
  }
  if (!r.done()) throw ParseError("trailing content after anchor body");
  set.validate();
  return set;
}

}  // namespace planeval
