#pragma once

#include <vector>

#include "planewarp/image.hpp"
#include "planewarp/segmentation.hpp"

namespace planewarp {

/// m per-region maps over the input view, values in [0,1].
using SelectionMaps = std::vector<ScalarField>;

struct SoftSelectionOptions {
  double temperature = 0.05;
  double spatial_weight = 0.25;  ///< β on the normalized-coordinate distance.
};

/// Binary maps equal to the seed masks.
SelectionMaps hard_selection(const SeedRegions& seeds);

/// Softmax over regions of -(‖rgb - mean_rgb_j‖² + β‖xy - centroid_j‖²) / temperature,
/// with pixel coordinates normalized by the image dimensions. Sums to one per pixel.
///
/// Deterministic stand-in for a learned selection network: each region
/// attracts the pixels that resemble it in color and position.
SelectionMaps soft_selection(const Image& image, const SeedRegions& seeds,
                             const SoftSelectionOptions& options = {});

}  // namespace planewarp
