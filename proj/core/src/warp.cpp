#include "planewarp/warp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "planewarp/parallel.hpp"

namespace planewarp {
namespace {

constexpr int kRowGrain = 8;

struct Stencil {
  int x0 = 0;
  int y0 = 0;
  double w[4] = {0.0, 0.0, 0.0, 0.0};  // (x0,y0) (x0+1,y0) (x0,y0+1) (x0+1,y0+1)
  bool any = false;
};

Stencil make_stencil(int height, int width, double x, double y) {
  Stencil s;
  if (!(x > -1.0 && y > -1.0 && x < width && y < height)) return s;
  const double fx0 = std::floor(x);
  const double fy0 = std::floor(y);
  s.x0 = static_cast<int>(fx0);
  s.y0 = static_cast<int>(fy0);
  const double ax = x - fx0;
  const double ay = y - fy0;
  s.w[0] = (1.0 - ax) * (1.0 - ay);
  s.w[1] = ax * (1.0 - ay);
  s.w[2] = (1.0 - ax) * ay;
  s.w[3] = ax * ay;
  s.any = true;
  return s;
}

template <typename Fetch>
double gather(const Stencil& s, int height, int width, Fetch&& fetch) {
  double acc = 0.0;
  const int xs[4] = {s.x0, s.x0 + 1, s.x0, s.x0 + 1};
  const int ys[4] = {s.y0, s.y0, s.y0 + 1, s.y0 + 1};
  for (int k = 0; k < 4; ++k) {
    if (xs[k] < 0 || ys[k] < 0 || xs[k] >= width || ys[k] >= height) continue;
    acc += fetch(ys[k], xs[k]) * s.w[k];
  }
  return acc;
}

void check_matrices(std::span<const Eigen::Matrix3d> H_invs) {
  for (const auto& H : H_invs) {
    if (!H.allFinite()) throw Error(Errc::NonFinite, "inverse homography is not finite");
  }
}

}  // namespace

BilinearSample bilinear_sample(const Image& image, double x, double y) {
  BilinearSample out;
  out.inside = inside_bounds(image.height(), image.width(), x, y);
  const Stencil s = make_stencil(image.height(), image.width(), x, y);
  if (!s.any) return out;
  for (int c = 0; c < image.channels(); ++c) {
    out.value[static_cast<std::size_t>(c)] =
        gather(s, image.height(), image.width(), [&](int yy, int xx) { return image(yy, xx, c); });
  }
  return out;
}

double bilinear_sample(const ScalarField& field, double x, double y) {
  const Stencil s = make_stencil(field.height(), field.width(), x, y);
  if (!s.any) return 0.0;
  return gather(s, field.height(), field.width(), [&](int yy, int xx) { return field(yy, xx); });
}

SourceLocation map_to_source(const Eigen::Matrix3d& H_inv, double x, double y, double w_eps) {
  const double a = H_inv(0, 0) * x + H_inv(0, 1) * y + H_inv(0, 2);
  const double b = H_inv(1, 0) * x + H_inv(1, 1) * y + H_inv(1, 2);
  const double w = H_inv(2, 0) * x + H_inv(2, 1) * y + H_inv(2, 2);
  if (!(w > w_eps)) return {};
  return {a / w, b / w, true};
}

WarpedImage warp_image(const Image& source, const Eigen::Matrix3d& H_inv, int out_height,
                       int out_width) {
  check_matrices(std::span(&H_inv, 1));
  WarpedImage out{Image(out_height, out_width, source.channels()), Mask(out_height, out_width)};
  parallel_chunks(out_height, kRowGrain, [&](int, int begin, int end) {
    for (int y = begin; y < end; ++y) {
      for (int x = 0; x < out_width; ++x) {
        const SourceLocation loc = map_to_source(H_inv, x, y);
        if (!loc.valid) continue;
        const BilinearSample s = bilinear_sample(source, loc.x, loc.y);
        double* px = out.image.pixel(y, x);
        for (int c = 0; c < source.channels(); ++c) px[c] = s.value[static_cast<std::size_t>(c)];
        out.inside(y, x) = s.inside ? 1 : 0;
      }
    }
  });
  return out;
}

std::vector<ScalarField> warp_masks_normalized(std::span<const ScalarField> masks,
                                               std::span<const Eigen::Matrix3d> H_invs,
                                               double epsilon, int out_height, int out_width) {
  if (masks.size() != H_invs.size() || masks.empty()) {
    throw Error(Errc::InvalidArgument, "need one inverse homography per mask");
  }
  if (!(epsilon > 0.0)) throw Error(Errc::InvalidArgument, "epsilon must be positive");
  for (const auto& m : masks) {
    if (!m.same_shape(masks.front())) throw Error(Errc::InvalidArgument, "mask sizes differ");
  }
  check_matrices(H_invs);

  const std::size_t count = masks.size();
  std::vector<ScalarField> weights(count, ScalarField(out_height, out_width));
  parallel_chunks(out_height, kRowGrain, [&](int, int begin, int end) {
    std::vector<double> numer(count);
    for (int y = begin; y < end; ++y) {
      for (int x = 0; x < out_width; ++x) {
        double total = 0.0;
        for (std::size_t j = 0; j < count; ++j) {
          const SourceLocation loc = map_to_source(H_invs[j], x, y);
          const double sample = loc.valid ? bilinear_sample(masks[j], loc.x, loc.y) : 0.0;
          numer[j] = sample + epsilon;
          total += numer[j];
        }
        for (std::size_t j = 0; j < count; ++j) weights[j](y, x) = numer[j] / total;
      }
    }
  });
  return weights;
}

CandidateSet build_candidates(const Image& source, std::span<const ScalarField> selection,
                              std::span<const Eigen::Matrix3d> H_invs, double epsilon,
                              int out_height, int out_width) {
  if (selection.size() != H_invs.size() || selection.empty()) {
    throw Error(Errc::InvalidArgument, "need one inverse homography per selection map");
  }
  if (!(epsilon > 0.0)) throw Error(Errc::InvalidArgument, "epsilon must be positive");
  for (const auto& m : selection) {
    if (m.height() != source.height() || m.width() != source.width()) {
      throw Error(Errc::InvalidArgument, "selection maps must match the source image size");
    }
  }
  check_matrices(H_invs);

  const std::size_t count = selection.size();
  CandidateSet set;
  set.candidates.assign(count, Image(out_height, out_width, source.channels()));
  set.weights.assign(count, ScalarField(out_height, out_width));
  set.outside = Mask(out_height, out_width, 1);

  parallel_chunks(out_height, kRowGrain, [&](int, int begin, int end) {
    std::vector<double> numer(count);
    for (int y = begin; y < end; ++y) {
      for (int x = 0; x < out_width; ++x) {
        double total = 0.0;
        bool any_inside = false;
        for (std::size_t j = 0; j < count; ++j) {
          const SourceLocation loc = map_to_source(H_invs[j], x, y);
          double sample = 0.0;
          if (loc.valid) {
            const BilinearSample s = bilinear_sample(source, loc.x, loc.y);
            double* px = set.candidates[j].pixel(y, x);
            for (int c = 0; c < source.channels(); ++c) {
              px[c] = s.value[static_cast<std::size_t>(c)];
            }
            any_inside = any_inside || s.inside;
            sample = bilinear_sample(selection[j], loc.x, loc.y);
          }
          numer[j] = sample + epsilon;
          total += numer[j];
        }
        for (std::size_t j = 0; j < count; ++j) set.weights[j](y, x) = numer[j] / total;
        set.outside(y, x) = any_inside ? 0 : 1;
      }
    }
  });
  return set;
}

Image compose(const CandidateSet& set) {
  if (set.candidates.empty() || set.candidates.size() != set.weights.size()) {
    throw Error(Errc::InvalidArgument, "candidate and weight counts differ");
  }
  const Image& first = set.candidates.front();
  const int h = first.height();
  const int w = first.width();
  const int channels = first.channels();
  const std::size_t count = set.size();
  Image out(h, w, channels);

  // Expanded around the heaviest candidate: Σ_j w_j I_j = I_p + Σ_{j≠p} w_j (I_j - I_p)
  // when Σ w_j = 1. Equal candidates then reproduce their common value exactly.
  parallel_chunks(h, kRowGrain, [&](int, int begin, int end) {
    for (int y = begin; y < end; ++y) {
      for (int x = 0; x < w; ++x) {
        std::size_t pivot = 0;
        for (std::size_t j = 1; j < count; ++j) {
          if (set.weights[j](y, x) > set.weights[pivot](y, x)) pivot = j;
        }
        const double* base = set.candidates[pivot].pixel(y, x);
        double* dst = out.pixel(y, x);
        for (int c = 0; c < channels; ++c) {
          double acc = 0.0;
          for (std::size_t j = 0; j < count; ++j) {
            if (j == pivot) continue;
            acc += set.weights[j](y, x) * (set.candidates[j].pixel(y, x)[c] - base[c]);
          }
          dst[c] = std::clamp(base[c] + acc, 0.0, 1.0);
        }
      }
    }
  });
  return out;
}

Image fill_holes(const Image& image, const Mask& outside) {
  if (image.height() != outside.height() || image.width() != outside.width()) {
    throw Error(Errc::InvalidArgument, "hole mask does not match image size");
  }
  const int h = image.height();
  const int w = image.width();
  bool any_hole = false;
  bool any_valid = false;
  for (const auto v : outside.data()) {
    any_hole = any_hole || v != 0;
    any_valid = any_valid || v == 0;
  }
  if (!any_hole) return image;
  if (!any_valid) throw Error(Errc::AllOutside, "every pixel is a hole");

  // Per column: nearest valid row at or above / at or below each row (-1 if none).
  Grid<int> up(h, w, -1);
  Grid<int> down(h, w, -1);
  for (int x = 0; x < w; ++x) {
    int last = -1;
    for (int y = 0; y < h; ++y) {
      if (!outside(y, x)) last = y;
      up(y, x) = last;
    }
    last = -1;
    for (int y = h - 1; y >= 0; --y) {
      if (!outside(y, x)) last = y;
      down(y, x) = last;
    }
  }

  Image out = image;
  parallel_chunks(h, kRowGrain, [&](int, int begin, int end) {
    for (int y = begin; y < end; ++y) {
      for (int x = 0; x < w; ++x) {
        if (!outside(y, x)) continue;
        long best_d2 = std::numeric_limits<long>::max();
        int best_row = 0;
        int best_col = 0;
        for (int c = 0; c < w; ++c) {
          const int a = up(y, c);
          const int b = down(y, c);
          int row = -1;
          if (a >= 0 && (b < 0 || y - a <= b - y)) {
            row = a;
          } else if (b >= 0) {
            row = b;
          }
          if (row < 0) continue;
          const long dx = x - c;
          const long dy = y - row;
          const long d2 = dx * dx + dy * dy;
          if (d2 < best_d2 || (d2 == best_d2 && (row < best_row ||
                                                 (row == best_row && c < best_col)))) {
            best_d2 = d2;
            best_row = row;
            best_col = c;
          }
        }
        const double* src = image.pixel(best_row, best_col);
        double* dst = out.pixel(y, x);
        for (int ch = 0; ch < image.channels(); ++ch) dst[ch] = src[ch];
      }
    }
  });
  return out;
}

}  // namespace planewarp
