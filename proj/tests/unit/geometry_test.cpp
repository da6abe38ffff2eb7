#include "planewarp/geometry.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "test_support.hpp"

namespace planewarp {
namespace {

using testing::cofactor_inverse;
using testing::random_plane;
using testing::random_pose;

Intrinsics square_camera() { return {100.0, 100.0, 112.0, 112.0}; }

Mask central_square(int size, int half) {
  Mask m(size, size, 0);
  for (int y = size / 2 - half; y < size / 2 + half; ++y) {
    for (int x = size / 2 - half; x < size / 2 + half; ++x) m(y, x) = 1;
  }
  return m;
}

// Projects pixel (u, v) of the source camera onto `plane` and then into the target.
Eigen::Vector2d project_through_plane(const Intrinsics& K, const Pose& pose, const Plane& plane,
                                      const Eigen::Vector2d& pixel) {
  const Eigen::Vector3d ray = K.back_project(pixel.x(), pixel.y());
  const double depth = -plane.offset / plane.normal.dot(ray);
  const Eigen::Vector3d Q = depth * ray;
  return K.project(pose.apply(Q));
}

double normalized_identity_error(const Eigen::Matrix3d& product) {
  return (product / product(2, 2) - Eigen::Matrix3d::Identity()).norm();
}

TEST(IntrinsicsTest, AnalyticInverseMatchesCofactors) {
  const Intrinsics K{320.5, 280.25, 100.0, 77.5};
  EXPECT_LT((K.inverse() - cofactor_inverse(K.matrix())).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((K.matrix() * K.inverse() - Eigen::Matrix3d::Identity()).norm(), 1e-15);
}

TEST(PoseTest, InverseAndRigidity) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 50; ++i) {
    const Pose p = random_pose(rng);
    EXPECT_TRUE(p.is_rigid());
    const Pose id = compose(p, p.inverse());
    EXPECT_LT((id.R - Eigen::Matrix3d::Identity()).norm(), 1e-12);
    EXPECT_LT(id.t.norm(), 1e-12);
  }
  Pose reflected;
  reflected.R(2, 2) = -1.0;
  EXPECT_FALSE(reflected.is_rigid());
}

TEST(PoolPlaneTest, FrontoParallelConstantMaps) {
  const int size = 224;
  const Intrinsics K = square_camera();
  NormalMap normals(size, size, Eigen::Vector3d::UnitZ());
  DepthMap depth(size, size);
  for (auto& d : depth.depth.data()) d = 5.0;
  for (auto& v : depth.valid.data()) v = 1;

  const PlaneEstimate est = pool_plane(central_square(size, 20), normals, depth, K);
  EXPECT_DOUBLE_EQ(est.mean_depth, 5.0);
  EXPECT_LT((est.plane.normal - Eigen::Vector3d::UnitZ()).norm(), 1e-15);
  EXPECT_NEAR(est.plane.offset, -5.0, 1e-12);
  EXPECT_LT((est.plane.scaled() - Eigen::Vector3d(0, 0, -0.2)).norm(), 1e-12);
}

TEST(PoolPlaneTest, SymmetricNormalsAverage) {
  const int size = 64;
  NormalMap normals(size, size);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      normals(y, x) = x < size / 2 ? Eigen::Vector3d::UnitZ() : Eigen::Vector3d::UnitY();
    }
  }
  DepthMap depth(size, size);
  for (auto& d : depth.depth.data()) d = 3.0;
  for (auto& v : depth.valid.data()) v = 1;
  Mask mask(size, size, 0);
  for (int y = 10; y < 20; ++y) {
    for (int x = size / 2 - 8; x < size / 2 + 8; ++x) mask(y, x) = 1;
  }
  const PlaneEstimate est = pool_plane(mask, normals, depth, {50, 50, 31.5, 31.5});
  EXPECT_LT((est.plane.normal - Eigen::Vector3d(0, 1, 1) / std::sqrt(2.0)).norm(), 1e-15);
}

TEST(PoolPlaneTest, MatchesNaiveAccumulationOracle) {
  std::mt19937_64 rng(17);
  const int h = 48, w = 64;
  const Intrinsics K{90.0, 95.0, 31.0, 24.5};
  NormalMap normals(h, w);
  DepthMap depth(h, w);
  Mask mask(h, w, 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      normals(y, x) = Eigen::Vector3d(0.1 * std::sin(0.2 * x), 0.2 * std::cos(0.1 * y), 1.0 + 0.05 * x / w);
      depth.depth(y, x) = 3.0 + std::sin(0.05 * x) + 0.5 * std::cos(0.07 * y);
      depth.valid(y, x) = ((x * 7 + y * 3) % 11) != 0;
      const double r2 = (x - 30.0) * (x - 30.0) / 400.0 + (y - 20.0) * (y - 20.0) / 150.0;
      mask(y, x) = (r2 < 1.0 && (x + y) % 5 != 0) ? 1 : 0;
    }
  }

  // Oracle: collect the qualifying pixels first, then take plain means.
  std::vector<std::pair<int, int>> pixels;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (mask(y, x) && depth.valid(y, x)) pixels.emplace_back(y, x);
    }
  }
  double sd = 0, sx = 0, sy = 0, nx = 0, ny = 0, nz = 0;
  for (const auto& [y, x] : pixels) {
    sd += depth.depth(y, x);
    sx += x;
    sy += y;
    nx += normals(y, x).x();
    ny += normals(y, x).y();
    nz += normals(y, x).z();
  }
  const double count = static_cast<double>(pixels.size());
  const double d_bar = sd / count;
  const double cx = sx / count, cy = sy / count;
  const double len = std::sqrt(nx * nx + ny * ny + nz * nz);
  const double ux = nx / len, uy = ny / len, uz = nz / len;
  const double Qx = d_bar * (cx - K.cx) / K.fx;
  const double Qy = d_bar * (cy - K.cy) / K.fy;
  const double Qz = d_bar;
  const double offset = -(ux * Qx + uy * Qy + uz * Qz);

  const PlaneEstimate est = pool_plane(mask, normals, depth, K);
  EXPECT_EQ(est.pixel_count, pixels.size());
  EXPECT_NEAR(est.mean_depth, d_bar, 1e-12);
  EXPECT_NEAR(est.center.x(), cx, 1e-12);
  EXPECT_NEAR(est.center.y(), cy, 1e-12);
  EXPECT_NEAR(est.plane.normal.x(), ux, 1e-12);
  EXPECT_NEAR(est.plane.normal.y(), uy, 1e-12);
  EXPECT_NEAR(est.plane.normal.z(), uz, 1e-12);
  EXPECT_NEAR(est.plane.offset, offset, 1e-12);
}

TEST(PoolPlaneTest, DoublingDepthDoublesOffset) {
  std::mt19937_64 rng(5);
  const int size = 32;
  const Intrinsics K{40, 40, 15.5, 15.5};
  NormalMap normals(size, size);
  DepthMap depth(size, size), doubled(size, size);
  Mask mask(size, size, 0);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      normals(y, x) = Eigen::Vector3d(testing::uniform(rng, -0.2, 0.2), testing::uniform(rng, -0.2, 0.2), 1.0);
      depth.depth(y, x) = testing::uniform(rng, 2.0, 4.0);
      depth.valid(y, x) = 1;
      doubled.depth(y, x) = 2.0 * depth.depth(y, x);
      doubled.valid(y, x) = 1;
      mask(y, x) = (x * y) % 3 == 0;
    }
  }
  const PlaneEstimate a = pool_plane(mask, normals, depth, K);
  const PlaneEstimate b = pool_plane(mask, normals, doubled, K);
  EXPECT_NEAR(b.mean_depth, 2.0 * a.mean_depth, 1e-12);
  EXPECT_NEAR(std::abs(b.plane.offset), 2.0 * std::abs(a.plane.offset), 1e-12);
  EXPECT_LT((a.plane.normal - b.plane.normal).norm(), 1e-15);
}

TEST(PoolPlaneTest, MaskPermutationInvariant) {
  // Mirroring the mask and the maps about the principal point permutes the
  // pixels; the pooled depth and the plane offset are unchanged.
  const int size = 33;
  const Intrinsics K{40, 40, 16, 16};
  NormalMap normals(size, size), mirrored_normals(size, size);
  DepthMap depth(size, size), mirrored_depth(size, size);
  Mask mask(size, size, 0), mirrored_mask(size, size, 0);
  std::mt19937_64 rng(9);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const Eigen::Vector3d n(testing::uniform(rng, -0.3, 0.3), testing::uniform(rng, -0.3, 0.3), 1.0);
      const double d = testing::uniform(rng, 2.0, 3.0);
      const bool in = testing::uniform(rng, 0.0, 1.0) < 0.4;
      normals(y, x) = n;
      depth.depth(y, x) = d;
      depth.valid(y, x) = 1;
      mask(y, x) = in;
      const int mx = size - 1 - x, my = size - 1 - y;
      mirrored_normals(my, mx) = Eigen::Vector3d(-n.x(), -n.y(), n.z());
      mirrored_depth.depth(my, mx) = d;
      mirrored_depth.valid(my, mx) = 1;
      mirrored_mask(my, mx) = in;
    }
  }
  const PlaneEstimate a = pool_plane(mask, normals, depth, K);
  const PlaneEstimate b = pool_plane(mirrored_mask, mirrored_normals, mirrored_depth, K);
  EXPECT_NEAR(a.mean_depth, b.mean_depth, 1e-12);
  EXPECT_NEAR(a.plane.offset, b.plane.offset, 1e-12);
  EXPECT_NEAR(a.plane.normal.z(), b.plane.normal.z(), 1e-12);
}

TEST(PoolPlaneTest, ErrorPaths) {
  const int size = 16;
  const Intrinsics K{20, 20, 7.5, 7.5};
  NormalMap normals(size, size, Eigen::Vector3d::UnitZ());
  DepthMap depth(size, size);
  const Mask all(size, size, 1);
  try {
    pool_plane(all, normals, depth, K);
    FAIL() << "expected EmptyRegion";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::EmptyRegion);
  }

  for (auto& d : depth.depth.data()) d = 2.0;
  for (auto& v : depth.valid.data()) v = 1;
  NormalMap cancelling(size, size);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      cancelling(y, x) = x < size / 2 ? Eigen::Vector3d::UnitZ() : Eigen::Vector3d(0, 0, -1);
    }
  }
  try {
    pool_plane(all, cancelling, depth, K);
    FAIL() << "expected ZeroNormal";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ZeroNormal);
  }

  // Plane containing the viewing ray through the region center.
  NormalMap sideways(size, size, Eigen::Vector3d::UnitX());
  try {
    pool_plane(all, sideways, depth, K);
    FAIL() << "expected DegeneratePlane";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::DegeneratePlane);
  }
}

TEST(HomographyTest, IdentityMotionGivesIdentity) {
  std::mt19937_64 rng(1);
  const Intrinsics K = square_camera();
  for (int i = 0; i < 10; ++i) {
    const Homography H = homography_from_plane(K, Pose::identity(), random_plane(rng, K));
    EXPECT_LT((H.forward() - Eigen::Matrix3d::Identity()).norm(), 1e-12);
    EXPECT_LT((H.inverse() - Eigen::Matrix3d::Identity()).norm(), 1e-12);
  }
}

TEST(HomographyTest, FrontoParallelForwardMotion) {
  const Intrinsics K = square_camera();
  const double d = 5.0, tz = 1.5;
  Plane plane;
  plane.normal = Eigen::Vector3d::UnitZ();
  plane.offset = -d;
  Pose pose;
  pose.t = {0.0, 0.0, tz};
  const Homography H = homography_from_plane(K, pose, plane);
  for (const auto& px : {Eigen::Vector2d(0, 0), Eigen::Vector2d(10, 200), Eigen::Vector2d(150.5, 33.25)}) {
    const auto mapped = apply_homography(H.forward(), px);
    ASSERT_TRUE(mapped);
    EXPECT_NEAR(mapped->x(), K.cx + (px.x() - K.cx) * d / (d + tz), 1e-9);
    EXPECT_NEAR(mapped->y(), K.cy + (px.y() - K.cy) * d / (d + tz), 1e-9);
  }
}

TEST(HomographyTest, PureRotationMatchesProjection) {
  std::mt19937_64 rng(21);
  const Intrinsics K = square_camera();
  Pose pose;
  pose.R = testing::random_rotation(rng, 0.2);
  const Homography H = homography_from_plane(K, pose, random_plane(rng, K));
  EXPECT_LT((H.forward() - K.matrix() * pose.R * K.inverse()).norm(), 1e-12);
  for (int i = 0; i < 100; ++i) {
    const Eigen::Vector2d px(testing::uniform(rng, 0, 223), testing::uniform(rng, 0, 223));
    const Eigen::Vector2d expected = K.project(pose.R * K.back_project(px.x(), px.y()));
    const auto mapped = apply_homography(H.forward(), px);
    ASSERT_TRUE(mapped);
    EXPECT_LT((*mapped - expected).norm(), 1e-9);
  }
}

TEST(HomographyTest, AgreesWithTwoCameraProjection) {
  std::mt19937_64 rng(33);
  const Intrinsics K = square_camera();
  for (int trial = 0; trial < 100; ++trial) {
    const Plane plane = random_plane(rng, K);
    const Pose pose = random_pose(rng);
    const Homography H = homography_from_plane(K, pose, plane);
    for (int i = 0; i < 5; ++i) {
      const Eigen::Vector2d px(testing::uniform(rng, 0, 223), testing::uniform(rng, 0, 223));
      const Eigen::Vector3d ray = K.back_project(px.x(), px.y());
      if (-plane.offset / plane.normal.dot(ray) <= 0) continue;
      const auto mapped = apply_homography(H.forward(), px);
      ASSERT_TRUE(mapped);
      EXPECT_LT((*mapped - project_through_plane(K, pose, plane, px)).norm(), 1e-9);
    }
  }
}

TEST(InvertHomographyTest, MatchesCofactorInverse) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 1000; ++trial) {
    const Intrinsics K{testing::uniform(rng, 50, 500), testing::uniform(rng, 50, 500),
                       testing::uniform(rng, 0, 300), testing::uniform(rng, 0, 300)};
    const Plane plane = random_plane(rng, K);
    const Pose pose = random_pose(rng);
    const Homography H = homography_from_plane(K, pose, plane);
    EXPECT_LT(normalized_identity_error(H.forward() * H.inverse()), 1e-9);
    const Eigen::Matrix3d oracle = cofactor_inverse(H.forward());
    EXPECT_LT((H.inverse() - oracle).norm() / oracle.norm(), 1e-9);
  }
}

TEST(InvertHomographyTest, DegenerateDenominatorThrows) {
  const Intrinsics K = square_camera();
  Pose pose;
  pose.R = Eigen::AngleAxisd(0.3, Eigen::Vector3d::UnitY()).toRotationMatrix();
  pose.t = {0.2, -0.1, 0.5};
  // Choose ñ with ñᵀRᵀt = 1: ñ = Rᵀt / |Rᵀt|², i.e. normal ∥ Rᵀt, offset = |Rᵀt|.
  const Eigen::Vector3d a = pose.R.transpose() * pose.t;
  Plane plane;
  plane.normal = a.normalized();
  plane.offset = a.norm();
  EXPECT_NEAR(plane.scaled().dot(a), 1.0, 1e-15);
  try {
    invert_homography(K, pose, plane);
    FAIL() << "expected DegenerateHomography";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::DegenerateHomography);
  }
  EXPECT_THROW(homography_from_plane(K, pose, plane), Error);
}

TEST(InvertHomographyTest, IdentityMotion) {
  const Intrinsics K = square_camera();
  Plane plane;
  plane.offset = -3.0;
  EXPECT_LT((invert_homography(K, Pose::identity(), plane) - Eigen::Matrix3d::Identity()).norm(), 1e-15);
}

TEST(HomographyTest, ReversePoseComposesToIdentity) {
  std::mt19937_64 rng(44);
  const Intrinsics K = square_camera();
  for (int i = 0; i < 200; ++i) {
    const Plane plane = random_plane(rng, K);
    const Pose pose = random_pose(rng);
    const Homography forward = homography_from_plane(K, pose, plane);
    const Homography backward = homography_from_plane(K, pose.inverse(), plane.transformed(pose));
    EXPECT_LT(normalized_identity_error(backward.forward() * forward.forward()), 1e-8);
  }
}

TEST(ApplyHomographyTest, Examples) {
  const Eigen::Vector2d p(10, 20);
  EXPECT_EQ(*apply_homography(Eigen::Matrix3d::Identity(), p), p);
  Eigen::Matrix3d scale = Eigen::Vector3d(2, 2, 1).asDiagonal();
  EXPECT_EQ(*apply_homography(scale, p), Eigen::Vector2d(20, 40));
  Eigen::Matrix3d half = Eigen::Matrix3d::Identity();
  half.row(2) << 0, 0, 0.5;
  EXPECT_EQ(*apply_homography(half, p), Eigen::Vector2d(20, 40));
  Eigen::Matrix3d vanishing = Eigen::Matrix3d::Identity();
  vanishing.row(2) << 0.1, 0, -1.0;
  EXPECT_FALSE(apply_homography(vanishing, p).has_value());
}

TEST(ApplyHomographyTest, InverseRoundTrip) {
  std::mt19937_64 rng(8);
  const Intrinsics K = square_camera();
  for (int i = 0; i < 200; ++i) {
    const Homography H = homography_from_plane(K, random_pose(rng), random_plane(rng, K));
    const Eigen::Vector2d p(testing::uniform(rng, 0, 223), testing::uniform(rng, 0, 223));
    const auto back = apply_homography(H.inverse(), p);
    ASSERT_TRUE(back);
    const auto there = apply_homography(H.forward(), *back);
    ASSERT_TRUE(there);
    EXPECT_LT((*there - p).norm(), 1e-9);
  }
}

TEST(NearestRotationTest, ProjectsPerturbedRotation) {
  std::mt19937_64 rng(12);
  const Eigen::Matrix3d R = testing::random_rotation(rng, 1.0);
  Eigen::Matrix3d noisy = R;
  noisy(0, 1) += 1e-5;
  const Eigen::Matrix3d fixed = nearest_rotation(noisy);
  EXPECT_LT((fixed.transpose() * fixed - Eigen::Matrix3d::Identity()).norm(), 1e-14);
  EXPECT_NEAR(fixed.determinant(), 1.0, 1e-14);
  EXPECT_LT((fixed - R).norm(), 1e-5);
}

}  // namespace
}  // namespace planewarp
