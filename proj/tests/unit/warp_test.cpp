#include "planewarp/warp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "test_support.hpp"

namespace planewarp {
namespace {

using testing::uniform;

Image ramp_image(int h, int w, int channels) {
  Image img(h, w, channels);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < channels; ++c) img(y, x, c) = 0.01 * x + 0.001 * y + 0.1 * c;
    }
  }
  return img;
}

// Reference: sum over the four integer neighbors with tent weights.
double reference_sample(const Image& img, int c, double x, double y) {
  double acc = 0.0;
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  for (int qy = y0; qy <= y0 + 1; ++qy) {
    for (int qx = x0; qx <= x0 + 1; ++qx) {
      if (qx < 0 || qy < 0 || qx >= img.width() || qy >= img.height()) continue;
      const double wgt = (1.0 - std::abs(x - qx)) * (1.0 - std::abs(y - qy));
      acc += img(qy, qx, c) * wgt;
    }
  }
  return acc;
}

Eigen::Matrix3d random_inverse_homography(std::mt19937_64& rng, const Intrinsics& K) {
  const Plane plane = testing::random_plane(rng, K);
  const Pose pose = testing::random_pose(rng);
  return invert_homography(K, pose, plane);
}

ScalarField random_field(std::mt19937_64& rng, int h, int w) {
  ScalarField f(h, w);
  for (auto& v : f.data()) v = uniform(rng, 0.0, 1.0);
  return f;
}

TEST(BilinearSampleTest, Examples) {
  Image img = ramp_image(10, 12, 1);
  const BilinearSample exact = bilinear_sample(img, 3, 4);
  EXPECT_TRUE(exact.inside);
  EXPECT_EQ(exact.value[0], img(4, 3, 0));

  img(4, 3, 0) = 0.2;
  img(4, 4, 0) = 0.6;
  const BilinearSample half = bilinear_sample(img, 3.5, 4);
  EXPECT_TRUE(half.inside);
  EXPECT_NEAR(half.value[0], 0.4, 1e-15);

  const BilinearSample far = bilinear_sample(img, -5, 10);
  EXPECT_FALSE(far.inside);
  EXPECT_EQ(far.value[0], 0.0);
}

TEST(BilinearSampleTest, BorderUsesZeroPadding) {
  Image img(4, 4, 1, 1.0);
  const BilinearSample s = bilinear_sample(img, -0.5, 1.0);
  EXPECT_FALSE(s.inside);
  EXPECT_DOUBLE_EQ(s.value[0], 0.5);
  EXPECT_TRUE(bilinear_sample(img, 3.0, 3.0).inside);
  EXPECT_DOUBLE_EQ(bilinear_sample(img, 3.0, 3.0).value[0], 1.0);
  EXPECT_FALSE(bilinear_sample(img, 3.25, 3.0).inside);
  EXPECT_DOUBLE_EQ(bilinear_sample(img, 3.25, 3.0).value[0], 0.75);
}

TEST(BilinearSampleTest, MatchesReferenceEverywhere) {
  std::mt19937_64 rng(4);
  const Image img = testing::smooth_image(rng, 20, 30);
  for (int i = 0; i < 2000; ++i) {
    const double x = uniform(rng, -2.0, 32.0);
    const double y = uniform(rng, -2.0, 22.0);
    const BilinearSample s = bilinear_sample(img, x, y);
    for (int c = 0; c < 3; ++c) {
      EXPECT_NEAR(s.value[static_cast<std::size_t>(c)], reference_sample(img, c, x, y), 1e-14);
    }
    EXPECT_EQ(s.inside, x >= 0 && y >= 0 && x <= 29 && y <= 19);
  }
}

TEST(WarpImageTest, IdentityIsExact) {
  std::mt19937_64 rng(2);
  const Image img = testing::smooth_image(rng, 32, 40);
  const WarpedImage out = warp_image(img, Eigen::Matrix3d::Identity(), 32, 40);
  EXPECT_EQ(out.image, img);
  for (const auto v : out.inside.data()) EXPECT_EQ(v, 1);
}

TEST(WarpImageTest, IntegerShift) {
  const Image img = ramp_image(16, 20, 3);
  Eigen::Matrix3d shift = Eigen::Matrix3d::Identity();
  shift(0, 2) = 1.0;
  const WarpedImage out = warp_image(img, shift, 16, 20);
  for (int y = 0; y < 16; ++y) {
    for (int x = 0; x < 19; ++x) {
      EXPECT_EQ(out.inside(y, x), 1);
      for (int c = 0; c < 3; ++c) EXPECT_EQ(out.image(y, x, c), img(y, x + 1, c));
    }
    EXPECT_EQ(out.inside(y, 19), 0);
  }
}

TEST(WarpImageTest, MatchesScalarReference) {
  std::mt19937_64 rng(7);
  const Intrinsics K = testing::default_intrinsics(64);
  const Image img = testing::smooth_image(rng, 64, 64);
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::Matrix3d H_inv = random_inverse_homography(rng, K);
    const WarpedImage out = warp_image(img, H_inv, 64, 64);
    for (int y = 0; y < 64; ++y) {
      for (int x = 0; x < 64; ++x) {
        const Eigen::Vector3d p = H_inv * Eigen::Vector3d(x, y, 1.0);
        if (p.z() <= 0) {
          EXPECT_EQ(out.inside(y, x), 0);
          continue;
        }
        const double sx = p.x() / p.z(), sy = p.y() / p.z();
        for (int c = 0; c < 3; ++c) EXPECT_NEAR(out.image(y, x, c), reference_sample(img, c, sx, sy), 1e-12);
        EXPECT_EQ(out.inside(y, x), sx >= 0 && sy >= 0 && sx <= 63 && sy <= 63);
      }
    }
  }
}

TEST(WarpImageTest, Linearity) {
  std::mt19937_64 rng(11);
  const Intrinsics K = testing::default_intrinsics(48);
  const Image a = testing::smooth_image(rng, 48, 48);
  const Image b = testing::smooth_image(rng, 48, 48);
  const double alpha = 0.3, beta = -1.7;
  Image mix(48, 48, 3);
  for (std::size_t i = 0; i < mix.data().size(); ++i) {
    mix.data()[i] = alpha * a.data()[i] + beta * b.data()[i];
  }
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::Matrix3d H_inv = random_inverse_homography(rng, K);
    const Image wa = warp_image(a, H_inv, 48, 48).image;
    const Image wb = warp_image(b, H_inv, 48, 48).image;
    const Image wm = warp_image(mix, H_inv, 48, 48).image;
    for (std::size_t i = 0; i < wm.data().size(); ++i) {
      EXPECT_NEAR(wm.data()[i], alpha * wa.data()[i] + beta * wb.data()[i], 1e-12);
    }
  }
}

TEST(WarpImageTest, BehindCameraIsOutside) {
  const Image img(8, 8, 1, 0.5);
  Eigen::Matrix3d flip = Eigen::Matrix3d::Identity();
  flip(2, 2) = -1.0;
  const WarpedImage out = warp_image(img, flip, 8, 8);
  for (const auto v : out.inside.data()) EXPECT_EQ(v, 0);
  for (const auto v : out.image.data()) EXPECT_EQ(v, 0.0);
}

TEST(WarpImageTest, NonFiniteMatrixRejected) {
  Eigen::Matrix3d bad = Eigen::Matrix3d::Identity();
  bad(0, 0) = std::nan("");
  EXPECT_THROW(warp_image(Image(4, 4, 1), bad, 4, 4), Error);
}

TEST(WarpMasksTest, AllOutsideGivesUniformWeights) {
  const int m = 5;
  std::vector<ScalarField> masks(m, ScalarField(10, 10, 1.0));
  Eigen::Matrix3d away = Eigen::Matrix3d::Identity();
  away(0, 2) = 1000.0;
  std::vector<Eigen::Matrix3d> H(m, away);
  const auto weights = warp_masks_normalized(masks, H, kDefaultMaskEpsilon, 10, 10);
  for (const auto& w : weights) {
    for (const auto v : w.data()) EXPECT_NEAR(v, 1.0 / m, 1e-15);
  }
}

TEST(WarpMasksTest, TwoMaskExample) {
  std::vector<ScalarField> masks{ScalarField(6, 6, 1.0), ScalarField(6, 6, 1.0)};
  Eigen::Matrix3d away = Eigen::Matrix3d::Identity();
  away(1, 2) = -50.0;
  const std::vector<Eigen::Matrix3d> H{Eigen::Matrix3d::Identity(), away};
  const auto weights = warp_masks_normalized(masks, H, 0.0001, 6, 6);
  for (int y = 0; y < 6; ++y) {
    for (int x = 0; x < 6; ++x) {
      EXPECT_NEAR(weights[0](y, x), 1.0001 / 1.0002, 1e-15);
      EXPECT_NEAR(weights[1](y, x), 0.0001 / 1.0002, 1e-15);
    }
  }
}

TEST(WarpMasksTest, DefaultEpsilon) { EXPECT_EQ(kDefaultMaskEpsilon, 0.0001); }

TEST(WarpMasksTest, WeightsSumToOneForRandomSets) {
  std::mt19937_64 rng(23);
  const int size = 40;
  const Intrinsics K = testing::default_intrinsics(size);
  for (int trial = 0; trial < 20; ++trial) {
    const int m = 1 + static_cast<int>(rng() % 6);
    std::vector<ScalarField> masks;
    std::vector<Eigen::Matrix3d> H;
    for (int j = 0; j < m; ++j) {
      masks.push_back(random_field(rng, size, size));
      H.push_back(random_inverse_homography(rng, K));
    }
    const auto weights = warp_masks_normalized(masks, H, kDefaultMaskEpsilon, size, size);
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) {
        double total = 0.0;
        for (const auto& w : weights) {
          EXPECT_GE(w(y, x), 0.0);
          total += w(y, x);
        }
        EXPECT_NEAR(total, 1.0, 1e-12);
      }
    }
  }
}

TEST(WarpMasksTest, ErrorPaths) {
  std::vector<ScalarField> masks{ScalarField(4, 4, 1.0)};
  const std::vector<Eigen::Matrix3d> H{Eigen::Matrix3d::Identity()};
  EXPECT_THROW(warp_masks_normalized(masks, H, 0.0, 4, 4), Error);
  EXPECT_THROW(warp_masks_normalized(masks, std::span<const Eigen::Matrix3d>(), 1e-4, 4, 4), Error);
}

CandidateSet random_candidates(std::mt19937_64& rng, int m, int h, int w) {
  CandidateSet set;
  for (int j = 0; j < m; ++j) {
    set.candidates.push_back(testing::smooth_image(rng, h, w));
    set.weights.push_back(random_field(rng, h, w));
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double total = 0.0;
      for (const auto& f : set.weights) total += f(y, x);
      for (auto& f : set.weights) f(y, x) /= total;
    }
  }
  set.outside = Mask(h, w, 0);
  return set;
}

TEST(ComposeTest, SingleIdentityCandidateReproducesInput) {
  std::mt19937_64 rng(1);
  const Image img = testing::smooth_image(rng, 24, 24);
  const std::vector<ScalarField> sel{ScalarField(24, 24, 1.0)};
  const std::vector<Eigen::Matrix3d> H{Eigen::Matrix3d::Identity()};
  const CandidateSet set = build_candidates(img, sel, H, kDefaultMaskEpsilon, 24, 24);
  EXPECT_EQ(compose(set), img);
}

TEST(ComposeTest, IdenticalCandidatesReproduceThatImage) {
  std::mt19937_64 rng(5);
  CandidateSet set = random_candidates(rng, 4, 16, 16);
  for (auto& c : set.candidates) c = set.candidates.front();
  EXPECT_EQ(compose(set), set.candidates.front());
}

TEST(ComposeTest, MatchesWeightedSum) {
  std::mt19937_64 rng(6);
  const CandidateSet set = random_candidates(rng, 3, 20, 20);
  const Image out = compose(set);
  for (int y = 0; y < 20; ++y) {
    for (int x = 0; x < 20; ++x) {
      for (int c = 0; c < 3; ++c) {
        double sum = 0.0;
        for (std::size_t j = 0; j < set.size(); ++j) sum += set.weights[j](y, x) * set.candidates[j](y, x, c);
        EXPECT_NEAR(out(y, x, c), std::clamp(sum, 0.0, 1.0), 1e-14);
      }
    }
  }
}

TEST(ComposeTest, PermutationInvariant) {
  std::mt19937_64 rng(9);
  const CandidateSet set = random_candidates(rng, 5, 12, 12);
  std::vector<std::size_t> order(set.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  CandidateSet permuted;
  for (const auto j : order) {
    permuted.candidates.push_back(set.candidates[j]);
    permuted.weights.push_back(set.weights[j]);
  }
  permuted.outside = set.outside;
  const Image a = compose(set);
  const Image b = compose(permuted);
  for (std::size_t i = 0; i < a.data().size(); ++i) EXPECT_NEAR(a.data()[i], b.data()[i], 1e-14);
}

TEST(ComposeTest, OutputClamped) {
  CandidateSet set;
  set.candidates = {Image(2, 2, 1, 1.8), Image(2, 2, 1, -0.5)};
  set.weights = {ScalarField(2, 2, 0.5), ScalarField(2, 2, 0.5)};
  set.outside = Mask(2, 2, 0);
  const Image mid = compose(set);
  for (const auto v : mid.data()) EXPECT_NEAR(v, 0.65, 1e-15);
  set.weights = {ScalarField(2, 2, 0.1), ScalarField(2, 2, 0.9)};
  const Image low = compose(set);
  for (const auto v : low.data()) EXPECT_EQ(v, 0.0);
  set.weights = {ScalarField(2, 2, 0.9), ScalarField(2, 2, 0.1)};
  const Image high = compose(set);
  for (const auto v : high.data()) EXPECT_EQ(v, 1.0);
}

TEST(BuildCandidatesTest, OutsideFlagsAndRandomConsistency) {
  std::mt19937_64 rng(31);
  const int size = 32;
  const Intrinsics K = testing::default_intrinsics(size);
  const Image img = testing::smooth_image(rng, size, size);
  std::vector<ScalarField> sel{random_field(rng, size, size), random_field(rng, size, size)};
  const std::vector<Eigen::Matrix3d> H{random_inverse_homography(rng, K), random_inverse_homography(rng, K)};
  const CandidateSet set = build_candidates(img, sel, H, kDefaultMaskEpsilon, size, size);
  const auto weights = warp_masks_normalized(sel, H, kDefaultMaskEpsilon, size, size);
  for (std::size_t j = 0; j < 2; ++j) {
    const WarpedImage w = warp_image(img, H[j], size, size);
    EXPECT_EQ(set.candidates[j], w.image);
    EXPECT_EQ(set.weights[j], weights[j]);
  }
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const bool any = warp_image(img, H[0], size, size).inside(y, x) ||
                       warp_image(img, H[1], size, size).inside(y, x);
      if (x % 7 == 0) {
        EXPECT_EQ(set.outside(y, x), any ? 0 : 1);
      }
    }
  }
}

// Brute-force nearest valid pixel with the same tie-break.
Image reference_fill(const Image& img, const Mask& outside) {
  Image out = img;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      if (!outside(y, x)) continue;
      long best = -1;
      int by = 0, bx = 0;
      for (int qy = 0; qy < img.height(); ++qy) {
        for (int qx = 0; qx < img.width(); ++qx) {
          if (outside(qy, qx)) continue;
          const long d = static_cast<long>(qx - x) * (qx - x) + static_cast<long>(qy - y) * (qy - y);
          if (best < 0 || d < best) {
            best = d;
            by = qy;
            bx = qx;
          }
        }
      }
      for (int c = 0; c < img.channels(); ++c) out(y, x, c) = img(by, bx, c);
    }
  }
  return out;
}

TEST(FillHolesTest, NoHolesIsIdentity) {
  std::mt19937_64 rng(3);
  const Image img = testing::smooth_image(rng, 10, 10);
  EXPECT_EQ(fill_holes(img, Mask(10, 10, 0)), img);
}

TEST(FillHolesTest, SingleHoleCopiesOnlyNeighbor) {
  Image img(1, 2, 3);
  img(0, 1, 0) = 0.3;
  img(0, 1, 1) = 0.6;
  img(0, 1, 2) = 0.9;
  Mask outside(1, 2, 0);
  outside(0, 0) = 1;
  const Image out = fill_holes(img, outside);
  for (int c = 0; c < 3; ++c) EXPECT_EQ(out(0, 0, c), img(0, 1, c));
}

TEST(FillHolesTest, LeftHalfFromConstantRight) {
  Image img(12, 12, 3, 0.0);
  Mask outside(12, 12, 0);
  for (int y = 0; y < 12; ++y) {
    for (int x = 0; x < 12; ++x) {
      if (x < 6) {
        outside(y, x) = 1;
      } else {
        for (int c = 0; c < 3; ++c) img(y, x, c) = 0.42;
      }
    }
  }
  const Image filled = fill_holes(img, outside);
  for (const auto v : filled.data()) EXPECT_EQ(v, 0.42);
}

TEST(FillHolesTest, MatchesBruteForce) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    const int h = 5 + static_cast<int>(rng() % 20), w = 5 + static_cast<int>(rng() % 20);
    Image img(h, w, 3);
    for (auto& v : img.data()) v = uniform(rng, 0, 1);
    Mask outside(h, w, 0);
    const double p = uniform(rng, 0.3, 0.97);
    for (auto& v : outside.data()) v = uniform(rng, 0, 1) < p;
    outside(static_cast<int>(rng() % h), static_cast<int>(rng() % w)) = 0;
    EXPECT_EQ(fill_holes(img, outside), reference_fill(img, outside));
  }
}

TEST(FillHolesTest, TieBreakSmallestRowThenColumn) {
  Image img(3, 3, 1, 0.0);
  img(0, 1, 0) = 0.1;
  img(1, 0, 0) = 0.2;
  img(1, 2, 0) = 0.3;
  img(2, 1, 0) = 0.4;
  Mask outside(3, 3, 1);
  outside(0, 1) = outside(1, 0) = outside(1, 2) = outside(2, 1) = 0;
  EXPECT_EQ(fill_holes(img, outside)(1, 1, 0), 0.1);
  outside(0, 1) = 1;
  EXPECT_EQ(fill_holes(img, outside)(1, 1, 0), 0.2);
}

TEST(FillHolesTest, AllOutsideThrows) {
  try {
    fill_holes(Image(3, 3, 1), Mask(3, 3, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::AllOutside);
  }
}

}  // namespace
}  // namespace planewarp
