#include "planewarp/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <random>

namespace planewarp {
namespace {

double srgb_to_linear(double c) {
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

double lab_f(double t) {
  constexpr double delta = 6.0 / 29.0;
  return t > delta * delta * delta ? std::cbrt(t) : t / (3.0 * delta * delta) + 4.0 / 29.0;
}

Eigen::Vector3d pixel_rgb(const Image& image, int y, int x) {
  if (image.channels() == 1) {
    const double v = image(y, x, 0);
    return {v, v, v};
  }
  return {image(y, x, 0), image(y, x, 1), image(y, x, 2)};
}

// Uniform double in [0, 1) from the top 53 bits; independent of the
// standard library's distribution implementations.
double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

struct Center {
  Eigen::Vector3d lab;
  double x = 0.0;
  double y = 0.0;
};

Grid<int> enforce_connectivity(const Grid<int>& labels, int min_size) {
  const int h = labels.height();
  const int w = labels.width();
  Grid<int> out(h, w, -1);
  constexpr int dx[4] = {-1, 0, 1, 0};
  constexpr int dy[4] = {0, -1, 0, 1};
  std::vector<std::pair<int, int>> component;
  std::deque<std::pair<int, int>> queue;
  int next = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (out(y, x) >= 0) continue;
      // Left and upper neighbors precede (y, x) in raster order, so they are final.
      int adjacent = -1;
      for (int k = 0; k < 2; ++k) {
        const int nx = x + dx[k];
        const int ny = y + dy[k];
        if (nx >= 0 && ny >= 0 && out(ny, nx) >= 0) {
          adjacent = out(ny, nx);
          break;
        }
      }
      const int old = labels(y, x);
      component.clear();
      queue.clear();
      queue.emplace_back(y, x);
      out(y, x) = next;
      while (!queue.empty()) {
        const auto [cy, cx] = queue.front();
        queue.pop_front();
        component.emplace_back(cy, cx);
        for (int k = 0; k < 4; ++k) {
          const int nx = cx + dx[k];
          const int ny = cy + dy[k];
          if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
          if (out(ny, nx) >= 0 || labels(ny, nx) != old) continue;
          out(ny, nx) = next;
          queue.emplace_back(ny, nx);
        }
      }
      const bool orphan = old < 0 || static_cast<int>(component.size()) < min_size;
      if (orphan && adjacent >= 0) {
        for (const auto& [cy, cx] : component) out(cy, cx) = adjacent;
      } else {
        ++next;
      }
    }
  }
  return out;
}

}  // namespace

Eigen::Vector3d rgb_to_lab(const Eigen::Vector3d& rgb) {
  const double r = srgb_to_linear(rgb.x());
  const double g = srgb_to_linear(rgb.y());
  const double b = srgb_to_linear(rgb.z());
  const double X = (0.4124564 * r + 0.3575761 * g + 0.1804375 * b) / 0.95047;
  const double Y = (0.2126729 * r + 0.7151522 * g + 0.0721750 * b);
  const double Z = (0.0193339 * r + 0.1191920 * g + 0.9503041 * b) / 1.08883;
  const double fx = lab_f(X);
  const double fy = lab_f(Y);
  const double fz = lab_f(Z);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

SeedRegions::SeedRegions(Grid<int> region_ids, int m) : ids_(std::move(region_ids)), count_(m) {
  if (m < 1) throw Error(Errc::InvalidCount, "region count must be positive");
  stats_.assign(static_cast<std::size_t>(m), RegionStats{});
  for (int y = 0; y < ids_.height(); ++y) {
    for (int x = 0; x < ids_.width(); ++x) {
      const int id = ids_(y, x);
      if (id < 0 || id >= m) throw Error(Errc::InvalidArgument, "region id out of range");
      auto& s = stats_[static_cast<std::size_t>(id)];
      ++s.count;
      s.centroid += Eigen::Vector2d(x, y);
    }
  }
  for (auto& s : stats_) {
    if (s.count == 0) throw Error(Errc::EmptyRegion, "seed region has no pixels");
    s.centroid /= static_cast<double>(s.count);
  }
}

Mask SeedRegions::mask(int region) const {
  Mask out(ids_.height(), ids_.width(), 0);
  auto src = ids_.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] == region ? 1 : 0;
  return out;
}

std::vector<Mask> SeedRegions::masks() const {
  std::vector<Mask> out;
  out.reserve(static_cast<std::size_t>(count_));
  for (int j = 0; j < count_; ++j) out.push_back(mask(j));
  return out;
}

SuperpixelLabeling make_labeling(const Image& image, Grid<int> labels) {
  if (labels.height() != image.height() || labels.width() != image.width()) {
    throw Error(Errc::InvalidArgument, "label map does not match the image");
  }
  int max_label = -1;
  for (const int l : labels.data()) {
    if (l < 0) throw Error(Errc::InvalidArgument, "negative superpixel label");
    max_label = std::max(max_label, l);
  }
  SuperpixelLabeling out;
  out.stats.assign(static_cast<std::size_t>(max_label + 1), SuperpixelStats{});
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      auto& s = out.stats[static_cast<std::size_t>(labels(y, x))];
      s.mean_rgb += pixel_rgb(image, y, x);
      s.centroid += Eigen::Vector2d(x, y);
      ++s.count;
    }
  }
  for (auto& s : out.stats) {
    if (s.count == 0) throw Error(Errc::InvalidArgument, "superpixel labels are not contiguous");
    s.mean_rgb /= static_cast<double>(s.count);
    s.centroid /= static_cast<double>(s.count);
  }
  out.labels = std::move(labels);
  return out;
}

SuperpixelLabeling slic_segment(const Image& image, int n_superpixels, double compactness,
                                const SlicOptions& options) {
  if (image.empty()) throw Error(Errc::InvalidArgument, "empty image");
  const int h = image.height();
  const int w = image.width();
  const long pixels = static_cast<long>(h) * w;
  if (n_superpixels < 1 || n_superpixels > pixels) {
    throw Error(Errc::InvalidCount, "superpixel count must lie in [1, pixel count]");
  }
  if (!(compactness > 0.0)) throw Error(Errc::InvalidArgument, "compactness must be positive");

  Grid<Eigen::Vector3d> lab(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) lab(y, x) = rgb_to_lab(pixel_rgb(image, y, x));
  }

  const double step = std::sqrt(static_cast<double>(pixels) / n_superpixels);
  const int nx = std::max(1, static_cast<int>(std::lround(w / step)));
  const int ny = std::max(1, static_cast<int>(std::lround(h / step)));

  auto gradient = [&](int y, int x) {
    const int xl = std::max(0, x - 1), xr = std::min(w - 1, x + 1);
    const int yu = std::max(0, y - 1), yd = std::min(h - 1, y + 1);
    return (lab(y, xr) - lab(y, xl)).squaredNorm() + (lab(yd, x) - lab(yu, x)).squaredNorm();
  };

  std::vector<Center> centers;
  centers.reserve(static_cast<std::size_t>(nx * ny));
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int gx = std::clamp(static_cast<int>((i + 0.5) * w / nx), 0, w - 1);
      const int gy = std::clamp(static_cast<int>((j + 0.5) * h / ny), 0, h - 1);
      // Nudge the seed to the lowest-gradient position in its 3x3 neighborhood.
      int bx = gx, by = gy;
      double best = gradient(gy, gx);
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int sx = gx + dx, sy = gy + dy;
          if (sx < 0 || sy < 0 || sx >= w || sy >= h) continue;
          const double g = gradient(sy, sx);
          if (g < best) {
            best = g;
            bx = sx;
            by = sy;
          }
        }
      }
      centers.push_back({lab(by, bx), static_cast<double>(bx), static_cast<double>(by)});
    }
  }

  const double spatial_weight = (compactness / step) * (compactness / step);
  Grid<int> labels(h, w, -1);
  Grid<double> distance(h, w);
  const int radius = static_cast<int>(std::ceil(step));
  for (int iter = 0; iter < options.iterations; ++iter) {
    std::fill(distance.data().begin(), distance.data().end(),
              std::numeric_limits<double>::infinity());
    for (std::size_t k = 0; k < centers.size(); ++k) {
      const Center& c = centers[k];
      const int x0 = std::max(0, static_cast<int>(std::floor(c.x)) - radius);
      const int x1 = std::min(w - 1, static_cast<int>(std::ceil(c.x)) + radius);
      const int y0 = std::max(0, static_cast<int>(std::floor(c.y)) - radius);
      const int y1 = std::min(h - 1, static_cast<int>(std::ceil(c.y)) + radius);
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          const double ddx = x - c.x;
          const double ddy = y - c.y;
          const double d = (lab(y, x) - c.lab).squaredNorm() +
                           spatial_weight * (ddx * ddx + ddy * ddy);
          if (d < distance(y, x)) {
            distance(y, x) = d;
            labels(y, x) = static_cast<int>(k);
          }
        }
      }
    }
    std::vector<Center> sums(centers.size(), Center{Eigen::Vector3d::Zero(), 0.0, 0.0});
    std::vector<std::size_t> counts(centers.size(), 0);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const int l = labels(y, x);
        if (l < 0) continue;
        auto& s = sums[static_cast<std::size_t>(l)];
        s.lab += lab(y, x);
        s.x += x;
        s.y += y;
        ++counts[static_cast<std::size_t>(l)];
      }
    }
    for (std::size_t k = 0; k < centers.size(); ++k) {
      if (counts[k] == 0) continue;
      const double n = static_cast<double>(counts[k]);
      centers[k] = {sums[k].lab / n, sums[k].x / n, sums[k].y / n};
    }
  }

  const int min_size = std::max(1, static_cast<int>(step * step) / options.min_size_divisor);
  return make_labeling(image, enforce_connectivity(labels, min_size));
}

SeedRegions cluster_regions(const SuperpixelLabeling& labeling, const Image& image, int m,
                            std::uint64_t seed, const KMeansOptions& options) {
  const int n = labeling.count();
  if (m < 1) throw Error(Errc::InvalidCount, "region count must be positive");
  if (m > n) throw Error(Errc::TooManyClusters, "more regions requested than superpixels");
  if (labeling.labels.height() != image.height() || labeling.labels.width() != image.width()) {
    throw Error(Errc::InvalidArgument, "labeling does not match the image");
  }
  const double w = image.width();
  const double h = image.height();

  // Canonical superpixel order: by first pixel in raster order. Makes the
  // result independent of how the labeling numbered its superpixels.
  std::vector<long> first_pixel(static_cast<std::size_t>(n), -1);
  {
    long idx = 0;
    for (const int l : labeling.labels.data()) {
      auto& f = first_pixel[static_cast<std::size_t>(l)];
      if (f < 0) f = idx;
      ++idx;
    }
  }
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return first_pixel[static_cast<std::size_t>(a)] < first_pixel[static_cast<std::size_t>(b)];
  });

  using Feature = Eigen::Matrix<double, 5, 1>;
  std::vector<Feature> features(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const auto& s = labeling.stats[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
    features[static_cast<std::size_t>(i)] << s.mean_rgb, s.centroid.x() / w, s.centroid.y() / h;
  }

  // k-means++ seeding.
  std::mt19937_64 rng(seed);
  std::vector<Feature> centroids;
  centroids.reserve(static_cast<std::size_t>(m));
  std::vector<double> min_d2(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  std::vector<char> chosen(static_cast<std::size_t>(n), 0);
  int pick = std::min(n - 1, static_cast<int>(uniform01(rng) * n));
  for (int c = 0; c < m; ++c) {
    chosen[static_cast<std::size_t>(pick)] = 1;
    centroids.push_back(features[static_cast<std::size_t>(pick)]);
    if (c + 1 == m) break;
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      const double d2 = (features[static_cast<std::size_t>(i)] - centroids.back()).squaredNorm();
      auto& md = min_d2[static_cast<std::size_t>(i)];
      md = std::min(md, d2);
      if (!chosen[static_cast<std::size_t>(i)]) total += md;
    }
    pick = -1;
    if (total > 0.0) {
      const double target = uniform01(rng) * total;
      double acc = 0.0;
      for (int i = 0; i < n; ++i) {
        if (chosen[static_cast<std::size_t>(i)]) continue;
        acc += min_d2[static_cast<std::size_t>(i)];
        if (acc > target && min_d2[static_cast<std::size_t>(i)] > 0.0) {
          pick = i;
          break;
        }
      }
    }
    if (pick < 0) {
      // Remaining points coincide with chosen centroids; take the next unchosen one.
      for (int i = 0; i < n; ++i) {
        if (!chosen[static_cast<std::size_t>(i)]) {
          pick = i;
          break;
        }
      }
    }
  }

  std::vector<int> assignment(static_cast<std::size_t>(n), 0);
  auto assign = [&] {
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double best_d2 = std::numeric_limits<double>::infinity();
      for (int c = 0; c < m; ++c) {
        const double d2 =
            (features[static_cast<std::size_t>(i)] - centroids[static_cast<std::size_t>(c)])
                .squaredNorm();
        if (d2 < best_d2) {  // strict: lowest index wins ties
          best_d2 = d2;
          best = c;
        }
      }
      assignment[static_cast<std::size_t>(i)] = best;
    }
  };
  // Moves the point farthest from its centroid (taken from a cluster with
  // more than one member) into each empty cluster.
  auto fill_empty = [&]() -> bool {
    bool changed = false;
    for (int c = 0; c < m; ++c) {
      std::vector<int> sizes(static_cast<std::size_t>(m), 0);
      for (const int a : assignment) ++sizes[static_cast<std::size_t>(a)];
      if (sizes[static_cast<std::size_t>(c)] > 0) continue;
      int far = -1;
      double far_d2 = -1.0;
      for (int i = 0; i < n; ++i) {
        const int a = assignment[static_cast<std::size_t>(i)];
        if (sizes[static_cast<std::size_t>(a)] < 2) continue;
        const double d2 =
            (features[static_cast<std::size_t>(i)] - centroids[static_cast<std::size_t>(a)])
                .squaredNorm();
        if (d2 > far_d2) {
          far_d2 = d2;
          far = i;
        }
      }
      assignment[static_cast<std::size_t>(far)] = c;
      centroids[static_cast<std::size_t>(c)] = features[static_cast<std::size_t>(far)];
      changed = true;
    }
    return changed;
  };

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    assign();
    fill_empty();
    std::vector<Feature> sums(static_cast<std::size_t>(m), Feature::Zero());
    std::vector<int> sizes(static_cast<std::size_t>(m), 0);
    for (int i = 0; i < n; ++i) {
      const int a = assignment[static_cast<std::size_t>(i)];
      sums[static_cast<std::size_t>(a)] += features[static_cast<std::size_t>(i)];
      ++sizes[static_cast<std::size_t>(a)];
    }
    double shift = 0.0;
    for (int c = 0; c < m; ++c) {
      const Feature updated = sums[static_cast<std::size_t>(c)] / sizes[static_cast<std::size_t>(c)];
      shift = std::max(shift, (updated - centroids[static_cast<std::size_t>(c)]).norm());
      centroids[static_cast<std::size_t>(c)] = updated;
    }
    if (shift < options.tolerance) break;
  }
  assign();
  fill_empty();

  std::vector<int> cluster_of_label(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    cluster_of_label[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] =
        assignment[static_cast<std::size_t>(i)];
  }
  Grid<int> ids(image.height(), image.width());
  auto src = labeling.labels.data();
  auto dst = ids.data();
  for (std::size_t p = 0; p < src.size(); ++p) {
    dst[p] = cluster_of_label[static_cast<std::size_t>(src[p])];
  }
  return SeedRegions(std::move(ids), m);
}

}  // namespace planewarp
