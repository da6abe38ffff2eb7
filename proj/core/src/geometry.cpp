#include "planewarp/geometry.hpp"

#include <cmath>

#include <Eigen/Dense>
#include <Eigen/SVD>

namespace planewarp {

Eigen::Matrix3d Intrinsics::matrix() const {
  Eigen::Matrix3d K;
  K << fx, 0.0, cx,
       0.0, fy, cy,
       0.0, 0.0, 1.0;
  return K;
}

Eigen::Matrix3d Intrinsics::inverse() const {
  Eigen::Matrix3d K_inv;
  K_inv << 1.0 / fx, 0.0, -cx / fx,
           0.0, 1.0 / fy, -cy / fy,
           0.0, 0.0, 1.0;
  return K_inv;
}

Eigen::Vector3d Intrinsics::back_project(double u, double v) const {
  return {(u - cx) / fx, (v - cy) / fy, 1.0};
}

Eigen::Vector2d Intrinsics::project(const Eigen::Vector3d& point) const {
  return {fx * point.x() / point.z() + cx, fy * point.y() / point.z() + cy};
}

bool Intrinsics::valid() const noexcept {
  return std::isfinite(fx) && std::isfinite(fy) && std::isfinite(cx) && std::isfinite(cy) &&
         fx > 0.0 && fy > 0.0;
}

Pose Pose::inverse() const {
  Pose inv;
  inv.R = R.transpose();
  inv.t = -(inv.R * t);
  return inv;
}

bool Pose::is_rigid(double tol) const {
  if (!R.allFinite() || !t.allFinite()) return false;
  const double ortho = (R.transpose() * R - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  return ortho <= tol && std::abs(R.determinant() - 1.0) <= tol;
}

Pose compose(const Pose& a, const Pose& b) {
  Pose out;
  out.R = a.R * b.R;
  out.t = a.R * b.t + a.t;
  return out;
}

Eigen::Vector3d Plane::scaled(double offset_eps) const {
  if (!(std::abs(offset) > offset_eps)) {
    throw Error(Errc::DegeneratePlane, "plane passes through the camera center");
  }
  return normal / offset;
}

Plane Plane::transformed(const Pose& pose) const {
  // nᵀX + d = 0 with X = Rᵀ(X' - t)  =>  (Rn)ᵀX' + d - (Rn)ᵀt = 0.
  Plane out;
  out.normal = pose.R * normal;
  out.offset = offset - out.normal.dot(pose.t);
  return out;
}

Plane plane_through_pixel(const Eigen::Vector3d& normal, double depth,
                          const Eigen::Vector2d& center, const Intrinsics& K,
                          const GeometryTolerances& tol) {
  const double len = normal.norm();
  if (!(len > tol.norm_eps)) {
    throw Error(Errc::ZeroNormal, "normal magnitude below norm_eps");
  }
  Plane plane;
  plane.normal = normal / len;
  const Eigen::Vector3d Q = depth * K.back_project(center.x(), center.y());
  plane.offset = -plane.normal.dot(Q);
  if (!std::isfinite(plane.offset)) {
    throw Error(Errc::NonFinite, "plane offset is not finite");
  }
  if (!(std::abs(plane.offset) > tol.offset_eps)) {
    throw Error(Errc::DegeneratePlane, "plane passes through the camera center");
  }
  return plane;
}

PlaneEstimate pool_plane(const Mask& region_mask, const NormalMap& normals,
                         const DepthMap& depths, const Intrinsics& K,
                         const GeometryTolerances& tol) {
  if (!region_mask.same_shape(normals) || !region_mask.same_shape(depths.depth)) {
    throw Error(Errc::InvalidArgument, "mask, normal and depth maps differ in size");
  }
  Eigen::Vector3d normal_sum = Eigen::Vector3d::Zero();
  double depth_sum = 0.0;
  double x_sum = 0.0;
  double y_sum = 0.0;
  std::size_t count = 0;
  for (int y = 0; y < region_mask.height(); ++y) {
    for (int x = 0; x < region_mask.width(); ++x) {
      if (!region_mask(y, x) || !depths.valid(y, x)) continue;
      normal_sum += normals(y, x);
      depth_sum += depths.depth(y, x);
      x_sum += x;
      y_sum += y;
      ++count;
    }
  }
  if (count == 0) {
    throw Error(Errc::EmptyRegion, "region has no pixel with valid depth");
  }
  const double n = static_cast<double>(count);
  PlaneEstimate est;
  est.pixel_count = count;
  est.mean_depth = depth_sum / n;
  est.center = {x_sum / n, y_sum / n};
  const Eigen::Vector3d mean_normal = normal_sum / n;
  est.plane = plane_through_pixel(mean_normal, est.mean_depth, est.center, K, tol);
  return est;
}

namespace {

double sherman_morrison_denominator(const Pose& pose, const Eigen::Vector3d& scaled_normal,
                                    const GeometryTolerances& tol) {
  const Eigen::Vector3d rt_t = pose.R.transpose() * pose.t;
  const double denom = 1.0 - scaled_normal.dot(rt_t);
  if (!std::isfinite(denom) || !(std::abs(denom) > tol.degeneracy_eps)) {
    throw Error(Errc::DegenerateHomography, "1 - ñᵀRᵀt vanishes");
  }
  return denom;
}

// K M K⁻¹, kept exact when M is the identity.
Eigen::Matrix3d conjugate(const Intrinsics& K, const Eigen::Matrix3d& M) {
  if (M == Eigen::Matrix3d::Identity()) return M;
  return K.matrix() * M * K.inverse();
}

}  // namespace

Eigen::Matrix3d invert_homography_scaled(const Intrinsics& K, const Pose& pose,
                                         const Eigen::Vector3d& scaled_normal,
                                         const GeometryTolerances& tol) {
  const double denom = sherman_morrison_denominator(pose, scaled_normal, tol);
  const Eigen::Matrix3d Rt = pose.R.transpose();
  const Eigen::Vector3d a = Rt * pose.t;
  const Eigen::RowVector3d b = scaled_normal.transpose() * Rt;
  const Eigen::Matrix3d central_inv = Rt + (a * b) / denom;
  return conjugate(K, central_inv);
}

Eigen::Matrix3d invert_homography(const Intrinsics& K, const Pose& pose, const Plane& plane,
                                  const GeometryTolerances& tol) {
  return invert_homography_scaled(K, pose, plane.scaled(tol.offset_eps), tol);
}

Homography homography_from_plane(const Intrinsics& K, const Pose& pose, const Plane& plane,
                                 const GeometryTolerances& tol) {
  const Eigen::Vector3d n_scaled = plane.scaled(tol.offset_eps);
  const Eigen::Matrix3d central = pose.R - pose.t * n_scaled.transpose();
  const Eigen::Matrix3d forward = conjugate(K, central);
  return {forward, invert_homography_scaled(K, pose, n_scaled, tol)};
}

std::optional<Eigen::Vector2d> apply_homography(const Eigen::Matrix3d& H,
                                                const Eigen::Vector2d& pixel, double w_eps) {
  const Eigen::Vector3d p = H * Eigen::Vector3d(pixel.x(), pixel.y(), 1.0);
  if (!(std::abs(p.z()) >= w_eps)) return std::nullopt;
  return Eigen::Vector2d(p.x() / p.z(), p.y() / p.z());
}

Eigen::Matrix3d nearest_rotation(const Eigen::Matrix3d& M) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d D = Eigen::Matrix3d::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) D(2, 2) = -1.0;
  return svd.matrixU() * D * svd.matrixV().transpose();
}

}  // namespace planewarp
