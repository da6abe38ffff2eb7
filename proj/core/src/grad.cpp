#include "planewarp/grad.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include "planewarp/parallel.hpp"

namespace planewarp {
namespace {

constexpr int kRowGrain = 4;

double huber(double r, double delta) {
  const double a = std::abs(r);
  return a <= delta ? 0.5 * r * r / delta : a - 0.5 * delta;
}

double huber_slope(double r, double delta) {
  if (std::abs(r) <= delta) return r / delta;
  return r > 0.0 ? 1.0 : -1.0;
}

// Plane quantities of one region needed by the forward pass and the chain rule.
struct RegionState {
  Eigen::Vector3d unit_normal;
  double normal_length = 1.0;
  double depth = 1.0;
  Eigen::Vector3d ray;     // K⁻¹ (c, 1)ᵀ
  Eigen::Vector3d scaled;  // ñ
  Eigen::Matrix3d H_inv;
};

RegionState region_state(const SynthesisProblem& problem, const RegionPlane& region) {
  if (!(region.depth > 0.0) || !std::isfinite(region.depth) || !region.normal.allFinite()) {
    throw Error(Errc::NonFinite, "plane parameters must be finite with positive depth");
  }
  RegionState s;
  s.normal_length = region.normal.norm();
  const Plane plane =
      plane_through_pixel(region.normal, region.depth, region.center, problem.K, problem.tol);
  s.unit_normal = plane.normal;
  s.depth = region.depth;
  s.ray = problem.K.back_project(region.center.x(), region.center.y());
  s.scaled = plane.scaled(problem.tol.offset_eps);
  s.H_inv = invert_homography_scaled(problem.K, problem.pose, s.scaled, problem.tol);
  return s;
}

void validate(const SynthesisProblem& problem, const PlaneParams& params) {
  if (params.regions.size() != problem.selection.size() || params.regions.empty()) {
    throw Error(Errc::InvalidArgument, "need one plane per selection map");
  }
  if (problem.source.channels() != problem.target.channels()) {
    throw Error(Errc::InvalidArgument, "source and target channel counts differ");
  }
  if (problem.valid.height() != problem.target.height() ||
      problem.valid.width() != problem.target.width()) {
    throw Error(Errc::InvalidArgument, "validity mask does not match the target");
  }
  for (const auto& m : problem.selection) {
    if (m.height() != problem.source.height() || m.width() != problem.source.width()) {
      throw Error(Errc::InvalidArgument, "selection maps must match the source");
    }
  }
}

// Bilinear value and its spatial derivatives under zero padding.
struct Stencil4 {
  int x0 = 0;
  int y0 = 0;
  double w[4]{};
  double wx[4]{};
  double wy[4]{};
  bool any = false;
};

Stencil4 stencil(int height, int width, double x, double y) {
  Stencil4 s;
  if (!(x > -1.0 && y > -1.0 && x < width && y < height)) return s;
  const double fx = std::floor(x);
  const double fy = std::floor(y);
  s.x0 = static_cast<int>(fx);
  s.y0 = static_cast<int>(fy);
  const double ax = x - fx;
  const double ay = y - fy;
  s.w[0] = (1.0 - ax) * (1.0 - ay);
  s.w[1] = ax * (1.0 - ay);
  s.w[2] = (1.0 - ax) * ay;
  s.w[3] = ax * ay;
  s.wx[0] = -(1.0 - ay);
  s.wx[1] = 1.0 - ay;
  s.wx[2] = -ay;
  s.wx[3] = ay;
  s.wy[0] = -(1.0 - ax);
  s.wy[1] = -ax;
  s.wy[2] = 1.0 - ax;
  s.wy[3] = ax;
  s.any = true;
  return s;
}

struct Accumulator {
  double surrogate = 0.0;
  double l1 = 0.0;
  std::vector<Eigen::Matrix3d> d_hinv;  // ∂L/∂H⁻¹_j, unscaled by 1/(N·C)
};

struct PassResult {
  double surrogate = 0.0;
  double l1 = 0.0;
  std::vector<Eigen::Matrix3d> d_hinv;
};

PassResult run_pass(const SynthesisProblem& problem, const std::vector<RegionState>& regions,
                    bool want_gradient) {
  const Image& src = problem.source;
  const Image& tgt = problem.target;
  const int sh = src.height();
  const int sw = src.width();
  const int channels = src.channels();
  const std::size_t m = regions.size();
  const int h = tgt.height();
  const int w = tgt.width();

  std::size_t valid_count = 0;
  for (const auto v : problem.valid.data()) valid_count += v ? 1 : 0;
  if (valid_count == 0) throw Error(Errc::NoValidPixels, "no valid pixel enters the loss");

  const int chunks = chunk_count(h, kRowGrain);
  std::vector<Accumulator> partial(static_cast<std::size_t>(chunks));
  parallel_chunks(h, kRowGrain, [&](int chunk, int begin, int end) {
    Accumulator& acc = partial[static_cast<std::size_t>(chunk)];
    acc.d_hinv.assign(m, Eigen::Matrix3d::Zero());
    std::vector<SourceLocation> loc(m);
    std::vector<Stencil4> st(m);
    std::vector<double> numer(m), weight(m), mask_dx(m), mask_dy(m);
    std::vector<std::array<double, 3>> cand(m), cand_dx(m), cand_dy(m);
    for (int y = begin; y < end; ++y) {
      for (int x = 0; x < w; ++x) {
        if (!problem.valid(y, x)) continue;
        double total = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
          loc[j] = map_to_source(regions[j].H_inv, x, y, problem.tol.w_eps);
          st[j] = loc[j].valid ? stencil(sh, sw, loc[j].x, loc[j].y) : Stencil4{};
          cand[j] = {};
          cand_dx[j] = {};
          cand_dy[j] = {};
          double mv = 0.0, mdx = 0.0, mdy = 0.0;
          if (st[j].any) {
            const Stencil4& s = st[j];
            const int xs[4] = {s.x0, s.x0 + 1, s.x0, s.x0 + 1};
            const int ys[4] = {s.y0, s.y0, s.y0 + 1, s.y0 + 1};
            const ScalarField& sel = problem.selection[j];
            for (int k = 0; k < 4; ++k) {
              if (xs[k] < 0 || ys[k] < 0 || xs[k] >= sw || ys[k] >= sh) continue;
              const double sv = sel(ys[k], xs[k]);
              mv += sv * s.w[k];
              mdx += sv * s.wx[k];
              mdy += sv * s.wy[k];
              const double* px = src.pixel(ys[k], xs[k]);
              for (int c = 0; c < channels; ++c) {
                cand[j][c] += px[c] * s.w[k];
                cand_dx[j][c] += px[c] * s.wx[k];
                cand_dy[j][c] += px[c] * s.wy[k];
              }
            }
          }
          numer[j] = mv + problem.epsilon;
          mask_dx[j] = mdx;
          mask_dy[j] = mdy;
          total += numer[j];
        }

        // Same expansion around the heaviest region as compose().
        std::size_t pivot = 0;
        for (std::size_t j = 0; j < m; ++j) {
          weight[j] = numer[j] / total;
          if (weight[j] > weight[pivot]) pivot = j;
        }
        double d_out[3] = {0.0, 0.0, 0.0};
        double out[3] = {0.0, 0.0, 0.0};
        const double* t = tgt.pixel(y, x);
        for (int c = 0; c < channels; ++c) {
          double acc_c = 0.0;
          for (std::size_t j = 0; j < m; ++j) {
            if (j != pivot) acc_c += weight[j] * (cand[j][c] - cand[pivot][c]);
          }
          const double v = cand[pivot][c] + acc_c;
          out[c] = v;
          const double clamped = std::clamp(v, 0.0, 1.0);
          const double r = clamped - t[c];
          acc.surrogate += huber(r, problem.huber_delta);
          acc.l1 += std::abs(r);
          if (want_gradient && v >= 0.0 && v <= 1.0) {
            d_out[c] = huber_slope(r, problem.huber_delta);
          }
        }
        if (!want_gradient) continue;

        for (std::size_t j = 0; j < m; ++j) {
          if (!st[j].any) continue;
          double g_sx = 0.0;
          double g_sy = 0.0;
          for (int c = 0; c < channels; ++c) {
            if (d_out[c] == 0.0) continue;
            const double spread = (cand[j][c] - out[c]) / total;
            g_sx += d_out[c] * (weight[j] * cand_dx[j][c] + spread * mask_dx[j]);
            g_sy += d_out[c] * (weight[j] * cand_dy[j][c] + spread * mask_dy[j]);
          }
          if (g_sx == 0.0 && g_sy == 0.0) continue;
          // s = (A/W, B/W) with (A, B, W) = H⁻¹ (x, y, 1)ᵀ.
          const Eigen::Matrix3d& H = regions[j].H_inv;
          const double W = H(2, 0) * x + H(2, 1) * y + H(2, 2);
          const Eigen::RowVector3d p(x / W, y / W, 1.0 / W);
          Eigen::Matrix3d& G = acc.d_hinv[j];
          G.row(0) += g_sx * p;
          G.row(1) += g_sy * p;
          G.row(2) -= (g_sx * loc[j].x + g_sy * loc[j].y) * p;
        }
      }
    }
  });

  PassResult result;
  result.d_hinv.assign(m, Eigen::Matrix3d::Zero());
  for (const auto& acc : partial) {
    result.surrogate += acc.surrogate;
    result.l1 += acc.l1;
    if (want_gradient) {
      for (std::size_t j = 0; j < m; ++j) result.d_hinv[j] += acc.d_hinv[j];
    }
  }
  const double scale = 1.0 / (static_cast<double>(valid_count) * channels);
  result.surrogate *= scale;
  result.l1 *= scale;
  for (auto& G : result.d_hinv) G *= scale;
  return result;
}

std::vector<RegionState> region_states(const SynthesisProblem& problem, const PlaneParams& params) {
  validate(problem, params);
  std::vector<RegionState> states;
  states.reserve(params.regions.size());
  for (const auto& r : params.regions) states.push_back(region_state(problem, r));
  return states;
}

}  // namespace

double loss_l1(const Image& pred, const Image& target, const Mask& valid) {
  if (!pred.same_shape(target) || valid.height() != pred.height() ||
      valid.width() != pred.width()) {
    throw Error(Errc::InvalidArgument, "loss inputs differ in shape");
  }
  double total = 0.0;
  std::size_t count = 0;
  for (int y = 0; y < pred.height(); ++y) {
    for (int x = 0; x < pred.width(); ++x) {
      if (!valid(y, x)) continue;
      for (int c = 0; c < pred.channels(); ++c) total += std::abs(pred(y, x, c) - target(y, x, c));
      ++count;
    }
  }
  if (count == 0) throw Error(Errc::NoValidPixels, "no valid pixel to compare");
  return total / (static_cast<double>(count) * pred.channels());
}

double loss_l1(const Image& pred, const Image& target) {
  return loss_l1(pred, target, Mask(pred.height(), pred.width(), 1));
}

PlaneParams params_from_estimates(std::span<const PlaneEstimate> estimates) {
  PlaneParams params;
  params.regions.reserve(estimates.size());
  for (const auto& e : estimates) {
    params.regions.push_back({e.mean_depth, e.plane.normal, e.center});
  }
  return params;
}

std::vector<Eigen::Matrix3d> inverse_homographies(const SynthesisProblem& problem,
                                                  const PlaneParams& params) {
  std::vector<Eigen::Matrix3d> out;
  for (const auto& s : region_states(problem, params)) out.push_back(s.H_inv);
  return out;
}

Image synthesize(const SynthesisProblem& problem, const PlaneParams& params) {
  const auto H_invs = inverse_homographies(problem, params);
  const CandidateSet set =
      build_candidates(problem.source, problem.selection, H_invs, problem.epsilon,
                       problem.target.height(), problem.target.width());
  return compose(set);
}

double surrogate_objective(const SynthesisProblem& problem, const PlaneParams& params) {
  return run_pass(problem, region_states(problem, params), false).surrogate;
}

GradientResult synth_gradient(const SynthesisProblem& problem, const PlaneParams& params) {
  const auto states = region_states(problem, params);
  const PassResult pass = run_pass(problem, states, true);

  const Eigen::Matrix3d K = problem.K.matrix();
  const Eigen::Matrix3d K_inv_t = problem.K.inverse().transpose();
  const Eigen::Matrix3d& R = problem.pose.R;
  const Eigen::Vector3d a = R.transpose() * problem.pose.t;

  GradientResult result;
  result.surrogate_loss = pass.surrogate;
  result.l1_loss = pass.l1;
  result.regions.resize(states.size());
  for (std::size_t j = 0; j < states.size(); ++j) {
    const RegionState& s = states[j];
    // H⁻¹ = K (Rᵀ + a (Rñ)ᵀ / D) K⁻¹ with a = Rᵀt and D = 1 - ñᵀa.
    const double D = 1.0 - s.scaled.dot(a);
    const Eigen::Matrix3d G_central = K.transpose() * pass.d_hinv[j] * K_inv_t;
    const Eigen::Vector3d v = G_central.transpose() * a;
    const Eigen::Vector3d g_scaled =
        R.transpose() * v / D + (v.dot(R * s.scaled) / (D * D)) * a;

    // ñ = -n̂ / (d (n̂·r)).
    const double ds = s.depth * s.unit_normal.dot(s.ray);
    const double g_depth = -g_scaled.dot(s.scaled) / s.depth;
    const Eigen::Vector3d g_unit =
        -g_scaled / ds + (g_scaled.dot(s.unit_normal) / (ds * s.unit_normal.dot(s.ray))) * s.ray;
    const Eigen::Vector3d g_normal =
        (g_unit - s.unit_normal * s.unit_normal.dot(g_unit)) / s.normal_length;

    if (!std::isfinite(g_depth) || !g_normal.allFinite()) {
      throw Error(Errc::NonFinite, "gradient is not finite");
    }
    result.regions[j] = {g_depth, g_normal};
  }
  if (!std::isfinite(result.surrogate_loss)) throw Error(Errc::NonFinite, "loss is not finite");
  return result;
}

double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) /
         std::max({std::abs(analytic), std::abs(numeric), 1e-8});
}

double GradReport::max_rel_error() const {
  double worst = 0.0;
  for (const auto& e : entries) worst = std::max(worst, e.rel_error);
  return worst;
}

double GradReport::fraction_below(double tol) const {
  if (entries.empty()) return 1.0;
  std::size_t ok = 0;
  for (const auto& e : entries) ok += e.rel_error < tol ? 1 : 0;
  return static_cast<double>(ok) / static_cast<double>(entries.size());
}

GradReport check_gradient(const SynthesisProblem& problem, const PlaneParams& params,
                          double step_scale) {
  const GradientResult analytic = synth_gradient(problem, params);
  GradReport report;
  for (std::size_t j = 0; j < params.regions.size(); ++j) {
    for (int comp = 0; comp < 4; ++comp) {
      PlaneParams plus = params;
      PlaneParams minus = params;
      double step = 0.0;
      if (comp == 0) {
        step = step_scale * std::abs(params.regions[j].depth);
        plus.regions[j].depth += step;
        minus.regions[j].depth -= step;
      } else {
        step = step_scale * params.regions[j].normal.norm();
        plus.regions[j].normal[comp - 1] += step;
        minus.regions[j].normal[comp - 1] -= step;
      }
      const double numeric =
          (surrogate_objective(problem, plus) - surrogate_objective(problem, minus)) / (2.0 * step);
      const double a = comp == 0 ? analytic.regions[j].depth : analytic.regions[j].normal[comp - 1];
      report.entries.push_back(
          {static_cast<int>(j), comp, a, numeric, relative_error(a, numeric)});
    }
  }
  return report;
}

RefineResult refine_planes(const SynthesisProblem& problem, const PlaneParams& init,
                           const RefineOptions& options) {
  if (options.steps < 1) throw Error(Errc::InvalidArgument, "steps must be at least 1");
  if (!(options.lr > 0.0)) throw Error(Errc::InvalidArgument, "lr must be positive");

  const std::size_t m = init.regions.size();
  PlaneParams current = init;
  for (auto& r : current.regions) r.normal.normalize();

  std::vector<double> depth_scale(m);
  for (std::size_t j = 0; j < m; ++j) depth_scale[j] = init.regions[j].depth;

  // Adam moments per parameter; depths step in units of their initial value,
  // normals step in the tangent plane and are renormalized.
  std::vector<double> m_depth(m, 0.0), v_depth(m, 0.0);
  std::vector<Eigen::Vector3d> m_normal(m, Eigen::Vector3d::Zero());
  std::vector<Eigen::Vector3d> v_normal(m, Eigen::Vector3d::Zero());

  RefineResult result;
  result.best = current;
  result.best_loss = std::numeric_limits<double>::infinity();
  auto record = [&](int step, double loss) {
    TraceEntry entry{step, loss, {}, {}};
    for (const auto& r : current.regions) {
      entry.depths.push_back(r.depth);
      entry.normals.push_back(r.normal);
    }
    result.trace.push_back(std::move(entry));
    if (loss < result.best_loss) {
      result.best_loss = loss;
      result.best = current;
    }
  };

  constexpr double kTiny = 1e-12;
  for (int step = 0; step < options.steps; ++step) {
    const GradientResult g = synth_gradient(problem, current);
    record(step, g.l1_loss);

    const double progress = static_cast<double>(step) / options.steps;
    const double lr = options.lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
    const double bias1 = 1.0 - std::pow(options.beta1, step + 1);
    const double bias2 = 1.0 - std::pow(options.beta2, step + 1);
    for (std::size_t j = 0; j < m; ++j) {
      auto& region = current.regions[j];
      const double gd = g.regions[j].depth * depth_scale[j];
      m_depth[j] = options.beta1 * m_depth[j] + (1.0 - options.beta1) * gd;
      v_depth[j] = options.beta2 * v_depth[j] + (1.0 - options.beta2) * gd * gd;
      const double delta =
          lr * (m_depth[j] / bias1) / (std::sqrt(v_depth[j] / bias2) + kTiny);
      region.depth = std::max(region.depth - delta * depth_scale[j], 1e-3 * depth_scale[j]);

      if (!options.refine_normals) continue;
      const Eigen::Vector3d& gn = g.regions[j].normal;
      m_normal[j] = options.beta1 * m_normal[j] + (1.0 - options.beta1) * gn;
      v_normal[j] = options.beta2 * v_normal[j] + (1.0 - options.beta2) * gn.cwiseProduct(gn);
      Eigen::Vector3d tangent =
          lr * (m_normal[j] / bias1).cwiseQuotient(
                   ((v_normal[j] / bias2).cwiseSqrt().array() + kTiny).matrix());
      tangent -= region.normal * region.normal.dot(tangent);
      region.normal = (region.normal - tangent).normalized();
    }
  }
  const GradientResult final_eval = synth_gradient(problem, current);
  record(options.steps, final_eval.l1_loss);
  return result;
}

void write_loss_trace_csv(std::ostream& out, std::span<const TraceEntry> trace) {
  const std::size_t m = trace.empty() ? 0 : trace.front().depths.size();
  out << "step,loss";
  for (std::size_t j = 0; j < m; ++j) out << ",depth_" << j;
  out << '\n';
  const auto precision = out.precision(17);
  for (const auto& e : trace) {
    out << e.step << ',' << e.loss;
    for (const double d : e.depths) out << ',' << d;
    out << '\n';
  }
  out.precision(precision);
}

}  // namespace planewarp
