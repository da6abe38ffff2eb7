#pragma once

#include <optional>

#include <Eigen/Core>

#include "planewarp/image.hpp"

namespace planewarp {

/// Numerical guards shared by the geometry routines.
struct GeometryTolerances {
  double degeneracy_eps = 1e-8;  ///< |1 - ñᵀRᵀt| must exceed this.
  double offset_eps = 1e-9;      ///< |plane offset| must exceed this.
  double norm_eps = 1e-9;        ///< pooled normal magnitude must exceed this.
  double w_eps = 1e-12;          ///< homogeneous divisor magnitude must exceed this.
};

/// Pinhole camera. Pixel centers sit at integer coordinates, origin at the
/// top-left pixel, x to the right and y down.
struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;

  Eigen::Matrix3d matrix() const;
  Eigen::Matrix3d inverse() const;

  /// Ray direction K⁻¹(u, v, 1)ᵀ, with unit z component.
  Eigen::Vector3d back_project(double u, double v) const;
  Eigen::Vector2d project(const Eigen::Vector3d& point) const;

  bool valid() const noexcept;
};

/// Rigid motion X' = R X + t.
struct Pose {
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  Eigen::Vector3d t = Eigen::Vector3d::Zero();

  static Pose identity() { return {}; }

  Pose inverse() const;
  Eigen::Vector3d apply(const Eigen::Vector3d& x) const { return R * x + t; }

  /// Orthonormality and det(R) = +1, both within tol.
  bool is_rigid(double tol = 1e-9) const;
};

/// (a ∘ b)(x) = a(b(x)).
Pose compose(const Pose& a, const Pose& b);

/// Plane nᵀQ + offset = 0 with a unit normal.
struct Plane {
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
  double offset = -1.0;

  /// ñ = n / offset. Throws DegeneratePlane when |offset| <= offset_eps.
  Eigen::Vector3d scaled(double offset_eps = GeometryTolerances{}.offset_eps) const;

  double signed_distance(const Eigen::Vector3d& point) const {
    return normal.dot(point) + offset;
  }

  /// The same plane expressed in the frame reached by `pose`.
  Plane transformed(const Pose& pose) const;
};

/// Plane through the back-projection of `center` at `depth`, with the given
/// normal (normalized here). Throws DegeneratePlane / ZeroNormal.
Plane plane_through_pixel(const Eigen::Vector3d& normal, double depth,
                          const Eigen::Vector2d& center, const Intrinsics& K,
                          const GeometryTolerances& tol = {});

/// Result of pooling per-pixel depth and normals over one region.
struct PlaneEstimate {
  Plane plane;
  double mean_depth = 0.0;
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  std::size_t pixel_count = 0;
};

/// Masked means of normal, depth and pixel coordinates over the pixels of
/// `region_mask` that carry a valid depth, then the plane through the pooled
/// center point. Throws EmptyRegion, ZeroNormal or DegeneratePlane.
PlaneEstimate pool_plane(const Mask& region_mask, const NormalMap& normals,
                         const DepthMap& depths, const Intrinsics& K,
                         const GeometryTolerances& tol = {});

/// Pixel-to-pixel map H together with its inverse, both left at whatever
/// homogeneous scale the construction produced.
class Homography {
 public:
  Homography() = default;
  Homography(const Eigen::Matrix3d& forward, const Eigen::Matrix3d& inverse)
      : forward_(forward), inverse_(inverse) {}

  static Homography identity() { return {}; }

  const Eigen::Matrix3d& forward() const noexcept { return forward_; }
  const Eigen::Matrix3d& inverse() const noexcept { return inverse_; }

 private:
  Eigen::Matrix3d forward_ = Eigen::Matrix3d::Identity();
  Eigen::Matrix3d inverse_ = Eigen::Matrix3d::Identity();
};

/// H = K (R - t ñᵀ) K⁻¹ mapping source pixels on `plane` to target pixels.
Homography homography_from_plane(const Intrinsics& K, const Pose& pose, const Plane& plane,
                                 const GeometryTolerances& tol = {});

/// Sherman–Morrison closed form of H⁻¹ = K (Rᵀ + Rᵀt ñᵀRᵀ / (1 - ñᵀRᵀt)) K⁻¹.
Eigen::Matrix3d invert_homography(const Intrinsics& K, const Pose& pose, const Plane& plane,
                                  const GeometryTolerances& tol = {});

/// Same closed form, parameterized directly by ñ.
Eigen::Matrix3d invert_homography_scaled(const Intrinsics& K, const Pose& pose,
                                         const Eigen::Vector3d& scaled_normal,
                                         const GeometryTolerances& tol = {});

/// Projective image of (u, v). Empty when the homogeneous divisor vanishes
/// (|w| < w_eps). Results outside the image are returned as-is.
std::optional<Eigen::Vector2d> apply_homography(const Eigen::Matrix3d& H,
                                                const Eigen::Vector2d& pixel,
                                                double w_eps = GeometryTolerances{}.w_eps);

/// Closest rotation in Frobenius norm (via SVD), with det = +1.
Eigen::Matrix3d nearest_rotation(const Eigen::Matrix3d& M);

}  // namespace planewarp
