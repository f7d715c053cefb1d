#include "carbonshift/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

#include "carbonshift/rng.hpp"

namespace carbonshift {

namespace {

double dist2(const Point2& a, const Point2& b) {
  const double dx = a[0] - b[0];
  const double dy = a[1] - b[1];
  return dx * dx + dy * dy;
}

std::vector<Point2> seed_centroids(const std::vector<Point2>& points, std::size_t k, Rng& rng) {
  std::vector<Point2> centroids;
  centroids.reserve(k);
  centroids.push_back(points[rng.index(points.size())]);

  std::vector<double> d2(points.size());
  while (centroids.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : centroids) best = std::min(best, dist2(points[i], c));
      d2[i] = best;
      total += best;
    }
    // total > 0 because there are at least k distinct points.
    const double target = rng.next_unit() * total;
    double cum = 0.0;
    std::size_t pick = points.size() - 1;
    for (std::size_t i = 0; i < points.size(); ++i) {
      cum += d2[i];
      if (cum > target && d2[i] > 0.0) {
        pick = i;
        break;
      }
    }
    centroids.push_back(points[pick]);
  }
  return centroids;
}

}  // namespace

KMeansResult kmeans_cluster(const std::vector<Point2>& points, std::size_t k, std::uint64_t seed) {
  if (k == 0) throw std::invalid_argument("kmeans_cluster: k must be positive");
  if (points.size() < k)
    throw std::invalid_argument("kmeans_cluster: fewer points than clusters");
  std::set<Point2> distinct(points.begin(), points.end());
  if (distinct.size() < k)
    throw std::invalid_argument("kmeans_cluster: fewer than k distinct points");

  constexpr std::size_t max_iterations = 300;
  constexpr double movement_eps = 1e-9;

  Rng rng(seed);
  KMeansResult result;
  result.centroids = seed_centroids(points, k, rng);
  result.assignment.assign(points.size(), 0);

  for (std::size_t iter = 0; iter < max_iterations; ++iter) {
    double objective = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      double best = dist2(points[i], result.centroids[0]);
      std::size_t best_c = 0;
      for (std::size_t c = 1; c < k; ++c) {
        const double d = dist2(points[i], result.centroids[c]);
        if (d < best) {
          best = d;
          best_c = c;
        }
      }
      result.assignment[i] = best_c;
      objective += best;
    }
    result.objective.push_back(objective);
    result.iterations = iter + 1;

    std::vector<Point2> next(k, Point2{0.0, 0.0});
    std::vector<std::size_t> count(k, 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
      next[result.assignment[i]][0] += points[i][0];
      next[result.assignment[i]][1] += points[i][1];
      ++count[result.assignment[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (count[c] > 0) {
        next[c][0] /= static_cast<double>(count[c]);
        next[c][1] /= static_cast<double>(count[c]);
      } else {
        // Re-seed to the farthest point from its own centroid.
        double far_d = -1.0;
        std::size_t far_i = 0;
        for (std::size_t i = 0; i < points.size(); ++i) {
          const double d = dist2(points[i], result.centroids[result.assignment[i]]);
          if (d > far_d) {
            far_d = d;
            far_i = i;
          }
        }
        next[c] = points[far_i];
      }
    }

    double moved = 0.0;
    for (std::size_t c = 0; c < k; ++c) moved = std::max(moved, std::sqrt(dist2(next[c], result.centroids[c])));
    result.centroids = std::move(next);
    if (moved < movement_eps) break;
  }
  return result;
}

}  // namespace carbonshift
