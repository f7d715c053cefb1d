#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace carbonshift {

using Point2 = std::array<double, 2>;

struct KMeansResult {
  std::vector<std::size_t> assignment;  // point index -> cluster index
  std::vector<Point2> centroids;
  std::vector<double> objective;  // within-cluster sum of squares per Lloyd iteration
  std::size_t iterations = 0;
};

// k-means++ seeding followed by Lloyd iterations. Stops when no centroid
// moves more than 1e-9 or after 300 iterations. An emptied cluster is
// re-seeded to the point farthest from its centroid. Same seed, same result.
// Requires at least k distinct points.
KMeansResult kmeans_cluster(const std::vector<Point2>& points, std::size_t k, std::uint64_t seed);

}  // namespace carbonshift
