#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "planewarp/image.hpp"

namespace planewarp {

struct SuperpixelStats {
  Eigen::Vector3d mean_rgb = Eigen::Vector3d::Zero();
  Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
  std::size_t count = 0;
};

/// Labels are contiguous 0..count()-1 and every label owns at least one pixel.
struct SuperpixelLabeling {
  Grid<int> labels;
  std::vector<SuperpixelStats> stats;

  int count() const noexcept { return static_cast<int>(stats.size()); }
};

struct RegionStats {
  std::size_t count = 0;
  Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
};

/// m binary masks that partition the image, stored as a region-id map.
class SeedRegions {
 public:
  SeedRegions() = default;
  /// Validates that ids lie in [0, m) and every region is non-empty.
  SeedRegions(Grid<int> region_ids, int m);

  int count() const noexcept { return count_; }
  int height() const noexcept { return ids_.height(); }
  int width() const noexcept { return ids_.width(); }
  const Grid<int>& ids() const noexcept { return ids_; }
  const std::vector<RegionStats>& stats() const noexcept { return stats_; }

  Mask mask(int region) const;
  std::vector<Mask> masks() const;

 private:
  Grid<int> ids_;
  int count_ = 0;
  std::vector<RegionStats> stats_;
};

struct SlicOptions {
  int iterations = 10;
  /// Components smaller than step² / min_size_divisor are merged into a neighbor.
  int min_size_divisor = 4;
};

inline constexpr double kDefaultCompactness = 10.0;

/// SLIC superpixels: local k-means over CIELAB color and position, seeded on
/// a regular grid with step √(N / n_superpixels), then connectivity enforcement.
SuperpixelLabeling slic_segment(const Image& image, int n_superpixels,
                                double compactness = kDefaultCompactness,
                                const SlicOptions& options = {});

/// Recomputes per-label statistics; labels must already be contiguous.
SuperpixelLabeling make_labeling(const Image& image, Grid<int> labels);

struct KMeansOptions {
  int max_iterations = 100;
  double tolerance = 1e-6;
};

/// Clusters superpixels on (R, G, B, x/w, y/h) with seeded k-means++ and
/// returns the union of each cluster's superpixels as one seed region.
SeedRegions cluster_regions(const SuperpixelLabeling& labeling, const Image& image, int m,
                            std::uint64_t seed, const KMeansOptions& options = {});

/// sRGB in [0,1] to CIELAB (D65).
Eigen::Vector3d rgb_to_lab(const Eigen::Vector3d& rgb);

}  // namespace planewarp
