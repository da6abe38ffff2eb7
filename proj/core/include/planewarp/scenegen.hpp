#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "planewarp/geometry.hpp"
#include "planewarp/image.hpp"
#include "planewarp/segmentation.hpp"

namespace planewarp {

enum class TextureKind { Checker, Noise, Gradient };

struct TextureSpec {
  TextureKind kind = TextureKind::Noise;
  double frequency = 2.0;  ///< cycles (checker) or lattice cells (noise) per scene unit
  std::uint64_t seed = 0;
  Eigen::Vector3d color_a{0.15, 0.2, 0.25};
  Eigen::Vector3d color_b{0.85, 0.8, 0.7};
  int texels_per_unit = 64;
};

/// A rectangle [u_min, u_max] x [v_min, v_max] of the plane through `origin`
/// spanned by u_axis() and axis_v(), in world coordinates. axis_u need not be
/// perpendicular to the normal; only its in-plane component is used.
struct TexturedPlane {
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
  Eigen::Vector3d axis_u = Eigen::Vector3d::UnitX();
  double u_min = -1.0;
  double u_max = 1.0;
  double v_min = -1.0;
  double v_max = 1.0;
  TextureSpec texture;

  /// axis_u projected into the plane and normalized (zero if parallel to the normal).
  Eigen::Vector3d u_axis() const;
  Eigen::Vector3d axis_v() const { return normal.normalized().cross(u_axis()); }
  Plane plane() const;
};

struct PlanarScene {
  Intrinsics K;
  int width = 0;
  int height = 0;
  Eigen::Vector3d background{0.5, 0.5, 0.5};
  std::vector<TexturedPlane> planes;
  /// World-to-camera extrinsics of the two views (optional in scene files).
  Pose source_pose;
  Pose target_pose;
};

struct RenderedView {
  Image image;
  DepthMap depth;
  NormalMap normals;  ///< camera frame
  Grid<int> region;   ///< index of the visible plane, -1 for background
  Pose pose;          ///< world-to-camera
};

/// Ray casts every pixel center against all planes; the nearest hit within
/// its extent wins. `pose` maps world to camera coordinates.
RenderedView render(const PlanarScene& scene, const Pose& pose);

/// Pose taking source-camera coordinates to target-camera coordinates:
/// (R_t R_sᵀ, t_t - R_t R_sᵀ t_s) for world-to-camera poses.
Pose relative_pose(const Pose& source, const Pose& target);

struct ScenePair {
  RenderedView source;
  RenderedView target;
  Pose relative;
};

ScenePair make_pair(const PlanarScene& scene, const Pose& source_pose, const Pose& target_pose);

/// Target pixels whose surface point is seen by the source camera, inside
/// its image, with all four bilinear neighbors on the same plane.
Mask covisibility(const ScenePair& pair, const Intrinsics& K);

/// Region partition from the rendered plane ids. Background, if present,
/// becomes the last region.
struct ViewRegions {
  SeedRegions regions;
  std::vector<int> plane_of_region;  ///< -1 for the background region
};

ViewRegions seed_regions_from_view(const RenderedView& view);

/// Ground-truth plane of each scene plane in the given camera frame.
std::vector<Plane> planes_in_camera(const PlanarScene& scene, const Pose& pose);

/// Texture raster of a plane, one texel per 1/texels_per_unit scene units.
Image make_texture(const TexturedPlane& plane);

/// Plain-text scene description, one directive per line ('#' starts a comment):
///   camera fx fy cx cy width height
///   background r g b
///   plane ox oy oz nx ny nz ux uy uz u_min u_max v_min v_max <checker|noise|gradient> freq seed
///   source_pose r00 r01 r02 t0 r10 r11 r12 t1 r20 r21 r22 t2   (camera-to-world)
///   target_pose ...                                            (camera-to-world)
PlanarScene parse_scene(std::istream& in);
PlanarScene load_scene(const std::string& path);
void write_scene(std::ostream& out, const PlanarScene& scene);

}  // namespace planewarp
