#include "planewarp/selection.hpp"

#include <cmath>
#include <limits>

#include "planewarp/parallel.hpp"

namespace planewarp {

SelectionMaps hard_selection(const SeedRegions& seeds) {
  SelectionMaps maps(static_cast<std::size_t>(seeds.count()),
                     ScalarField(seeds.height(), seeds.width(), 0.0));
  for (int y = 0; y < seeds.height(); ++y) {
    for (int x = 0; x < seeds.width(); ++x) {
      maps[static_cast<std::size_t>(seeds.ids()(y, x))](y, x) = 1.0;
    }
  }
  return maps;
}

SelectionMaps soft_selection(const Image& image, const SeedRegions& seeds,
                             const SoftSelectionOptions& options) {
  if (!(options.temperature > 0.0)) {
    throw Error(Errc::InvalidArgument, "temperature must be positive");
  }
  if (image.height() != seeds.height() || image.width() != seeds.width()) {
    throw Error(Errc::InvalidArgument, "seed regions do not match the image");
  }
  const int h = image.height();
  const int w = image.width();
  const auto m = static_cast<std::size_t>(seeds.count());

  auto rgb = [&](int y, int x) -> Eigen::Vector3d {
    if (image.channels() == 1) return Eigen::Vector3d::Constant(image(y, x, 0));
    return {image(y, x, 0), image(y, x, 1), image(y, x, 2)};
  };

  std::vector<Eigen::Vector3d> mean_rgb(m, Eigen::Vector3d::Zero());
  std::vector<Eigen::Vector2d> centroid(m);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) mean_rgb[static_cast<std::size_t>(seeds.ids()(y, x))] += rgb(y, x);
  }
  for (std::size_t j = 0; j < m; ++j) {
    const auto& s = seeds.stats()[j];
    mean_rgb[j] /= static_cast<double>(s.count);
    centroid[j] = {s.centroid.x() / w, s.centroid.y() / h};
  }

  SelectionMaps maps(m, ScalarField(h, w));
  parallel_chunks(h, 8, [&](int, int begin, int end) {
    std::vector<double> logits(m);
    for (int y = begin; y < end; ++y) {
      for (int x = 0; x < w; ++x) {
        const Eigen::Vector3d c = rgb(y, x);
        const Eigen::Vector2d p(static_cast<double>(x) / w, static_cast<double>(y) / h);
        double peak = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < m; ++j) {
          logits[j] = -((c - mean_rgb[j]).squaredNorm() +
                        options.spatial_weight * (p - centroid[j]).squaredNorm()) /
                      options.temperature;
          peak = std::max(peak, logits[j]);
        }
        double total = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
          logits[j] = std::exp(logits[j] - peak);
          total += logits[j];
        }
        for (std::size_t j = 0; j < m; ++j) maps[j](y, x) = logits[j] / total;
      }
    }
  });
  return maps;
}

}  // namespace planewarp
