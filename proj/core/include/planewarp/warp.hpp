#pragma once

#include <array>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "planewarp/geometry.hpp"
#include "planewarp/image.hpp"

namespace planewarp {

/// Default ε of the normalized mask transfer.
inline constexpr double kDefaultMaskEpsilon = 1e-4;

struct BilinearSample {
  std::array<double, 3> value{};
  bool inside = false;
};

/// True iff (x, y) lies in [0, w-1] x [0, h-1].
inline bool inside_bounds(int height, int width, double x, double y) noexcept {
  return x >= 0.0 && y >= 0.0 && x <= width - 1 && y <= height - 1;
}

/// 4-neighbor bilinear interpolation with zero padding outside the image.
BilinearSample bilinear_sample(const Image& image, double x, double y);
double bilinear_sample(const ScalarField& field, double x, double y);

/// Source location of target pixel (x, y) under H⁻¹. `valid` is false when
/// the homogeneous divisor is not safely positive, i.e. the point lies at
/// infinity or behind one of the cameras.
struct SourceLocation {
  double x = 0.0;
  double y = 0.0;
  bool valid = false;
};

SourceLocation map_to_source(const Eigen::Matrix3d& H_inv, double x, double y,
                             double w_eps = GeometryTolerances{}.w_eps);

struct WarpedImage {
  Image image;
  Mask inside;
};

/// Inverse warp: every target pixel gathers the source at H_inv · (x, y, 1)ᵀ.
WarpedImage warp_image(const Image& source, const Eigen::Matrix3d& H_inv, int out_height,
                       int out_width);

/// Transfers m selection maps to the target view and normalizes them:
/// (sample_j + ε) / Σ_k (sample_k + ε). Weights sum to one at every pixel.
std::vector<ScalarField> warp_masks_normalized(std::span<const ScalarField> masks,
                                               std::span<const Eigen::Matrix3d> H_invs,
                                               double epsilon, int out_height, int out_width);

/// Per-region warped candidates with their normalized weights.
struct CandidateSet {
  std::vector<Image> candidates;
  std::vector<ScalarField> weights;
  /// Set where every region's source lookup falls outside the input.
  Mask outside;

  std::size_t size() const noexcept { return candidates.size(); }
};

CandidateSet build_candidates(const Image& source, std::span<const ScalarField> selection,
                              std::span<const Eigen::Matrix3d> H_invs, double epsilon,
                              int out_height, int out_width);

/// Σ_j candidate_j · weight_j, clamped to [0,1].
Image compose(const CandidateSet& candidates);

/// Copies into each flagged pixel the value of the Euclidean-nearest
/// unflagged pixel (ties: smallest row, then smallest column).
Image fill_holes(const Image& image, const Mask& outside);

}  // namespace planewarp
