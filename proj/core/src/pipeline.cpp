#include "planewarp/pipeline.hpp"

#include <charconv>
#include <fstream>

namespace planewarp {
namespace {

double parse_real(const std::string& key, const std::string& value) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw Error(Errc::ParseError, "config key '" + key + "': not a number '" + value + "'");
  }
  return v;
}

template <typename Int>
Int parse_int(const std::string& key, const std::string& value) {
  Int v{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw Error(Errc::ParseError, "config key '" + key + "': not an integer '" + value + "'");
  }
  return v;
}

}  // namespace

std::string to_string(SelectionMode mode) { return mode == SelectionMode::Hard ? "hard" : "soft"; }

void RunConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(Errc::InvalidArgument, what);
  };
  require(m >= 1, "m must be at least 1");
  require(n_superpixels >= 1, "n_superpixels must be at least 1");
  require(compactness > 0.0, "compactness must be positive");
  require(epsilon > 0.0, "epsilon must be positive");
  require(temperature > 0.0, "temperature must be positive");
  require(beta >= 0.0, "beta must be non-negative");
  require(refine_steps >= 1, "refine_steps must be at least 1");
  require(refine_lr > 0.0, "refine_lr must be positive");
  require(huber_delta > 0.0, "huber_delta must be positive");
  require(depth_scale > 0.0, "depth_scale must be positive");
  require(tol.degeneracy_eps > 0.0 && tol.offset_eps > 0.0 && tol.norm_eps > 0.0 &&
              tol.w_eps > 0.0,
          "tolerances must be positive");
}

bool RunConfig::set(const std::string& key, const std::string& value) {
  if (key == "m") {
    m = parse_int<int>(key, value);
  } else if (key == "n_superpixels") {
    n_superpixels = parse_int<int>(key, value);
  } else if (key == "compactness") {
    compactness = parse_real(key, value);
  } else if (key == "epsilon") {
    epsilon = parse_real(key, value);
  } else if (key == "selection") {
    if (value == "hard") {
      selection = SelectionMode::Hard;
    } else if (value == "soft") {
      selection = SelectionMode::Soft;
    } else {
      throw Error(Errc::ParseError, "selection must be 'hard' or 'soft'");
    }
  } else if (key == "temperature") {
    temperature = parse_real(key, value);
  } else if (key == "beta") {
    beta = parse_real(key, value);
  } else if (key == "refine_steps") {
    refine_steps = parse_int<int>(key, value);
  } else if (key == "refine_lr") {
    refine_lr = parse_real(key, value);
  } else if (key == "huber_delta") {
    huber_delta = parse_real(key, value);
  } else if (key == "seed") {
    seed = parse_int<std::uint64_t>(key, value);
  } else if (key == "depth_scale") {
    depth_scale = parse_real(key, value);
  } else if (key == "degeneracy_eps") {
    tol.degeneracy_eps = parse_real(key, value);
  } else if (key == "offset_eps") {
    tol.offset_eps = parse_real(key, value);
  } else if (key == "norm_eps") {
    tol.norm_eps = parse_real(key, value);
  } else if (key == "w_eps") {
    tol.w_eps = parse_real(key, value);
  } else {
    return false;
  }
  return true;
}

void RunConfig::describe(Manifest& manifest) const {
  manifest.set("config", "m", std::to_string(m));
  manifest.set("config", "n_superpixels", std::to_string(n_superpixels));
  manifest.set("config", "compactness", compactness);
  manifest.set("config", "epsilon", epsilon);
  manifest.set("config", "selection", to_string(selection));
  manifest.set("config", "temperature", temperature);
  manifest.set("config", "beta", beta);
  manifest.set("config", "refine_steps", std::to_string(refine_steps));
  manifest.set("config", "refine_lr", refine_lr);
  manifest.set("config", "huber_delta", huber_delta);
  manifest.set("config", "seed", std::to_string(seed));
  manifest.set("config", "depth_scale", depth_scale);
  manifest.set("config", "degeneracy_eps", tol.degeneracy_eps);
  manifest.set("config", "offset_eps", tol.offset_eps);
  manifest.set("config", "norm_eps", tol.norm_eps);
  manifest.set("config", "w_eps", tol.w_eps);
}

RunConfig RunConfig::load(const std::string& path, RunConfig base) {
  const Manifest file = Manifest::load(path);
  if (const auto* entries = file.section("config")) {
    for (const auto& [k, v] : *entries) {
      if (!base.set(k, v)) throw Error(Errc::ParseError, "unknown config key '" + k + "'");
    }
  }
  return base;
}

RunConfig RunConfig::load(const std::string& path) { return load(path, RunConfig{}); }

std::vector<std::string> PipelineResult::warnings() const {
  std::vector<std::string> out;
  for (std::size_t j = 0; j < regions.size(); ++j) {
    if (!regions[j].warning.empty()) {
      out.push_back("region " + std::to_string(j) + ": " + regions[j].warning);
    }
  }
  return out;
}

SeedRegions segment(const RunConfig& config, const Image& image) {
  const SuperpixelLabeling labeling = slic_segment(image, config.n_superpixels, config.compactness);
  return cluster_regions(labeling, image, config.m, config.seed);
}

PipelineResult run_pipeline(const RunConfig& config, const PipelineInputs& in) {
  config.validate();
  if (!in.K.valid()) throw Error(Errc::InvalidArgument, "intrinsics are invalid");
  const int h = in.source.height();
  const int w = in.source.width();
  if (in.depth.height() != h || in.depth.width() != w || in.normals.height() != h ||
      in.normals.width() != w) {
    throw Error(Errc::InvalidArgument, "depth and normal maps must match the source image");
  }
  if (!in.relative.is_rigid(1e-9)) {
    throw Error(Errc::BadRotation, "relative rotation is not orthonormal");
  }

  PipelineResult result;
  result.seeds = in.seeds ? *in.seeds : segment(config, in.source);
  if (result.seeds.height() != h || result.seeds.width() != w) {
    throw Error(Errc::InvalidArgument, "seed regions must match the source image");
  }

  const int m = result.seeds.count();
  result.regions.resize(static_cast<std::size_t>(m));
  std::vector<Eigen::Matrix3d> H_invs(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) {
    RegionOutcome& outcome = result.regions[static_cast<std::size_t>(j)];
    try {
      const PlaneEstimate est =
          pool_plane(result.seeds.mask(j), in.normals, in.depth, in.K, config.tol);
      outcome.H_inv = homography_from_plane(in.K, in.relative, est.plane, config.tol).inverse();
      outcome.estimate = est;
    } catch (const Error& e) {
      switch (e.code()) {
        case Errc::EmptyRegion:
        case Errc::ZeroNormal:
        case Errc::DegeneratePlane:
        case Errc::DegenerateHomography:
          outcome.H_inv = Eigen::Matrix3d::Identity();
          outcome.warning = std::string(to_string(e.code())) + ", identity homography used";
          break;
        default:
          throw;
      }
    }
    H_invs[static_cast<std::size_t>(j)] = outcome.H_inv;
  }

  result.selection = config.selection == SelectionMode::Hard
                         ? hard_selection(result.seeds)
                         : soft_selection(in.source, result.seeds,
                                          {config.temperature, config.beta});
  result.candidates = build_candidates(in.source, result.selection, H_invs, config.epsilon, h, w);
  result.composite = compose(result.candidates);
  result.synthesized = fill_holes(result.composite, result.candidates.outside);

  std::size_t holes = 0;
  for (const auto v : result.candidates.outside.data()) holes += v ? 1 : 0;
  result.hole_fraction = static_cast<double>(holes) / static_cast<double>(h * w);

  if (in.target) {
    const Mask valid = in.target_valid ? *in.target_valid : Mask(h, w, 1);
    result.mean_l1 = loss_l1(result.synthesized, *in.target, valid);
  }
  return result;
}

SynthesisProblem make_problem(const RunConfig& config, const PipelineInputs& inputs,
                              const PipelineResult& result, const Image& target,
                              const Mask& valid) {
  SynthesisProblem problem;
  problem.source = inputs.source;
  problem.selection = result.selection;
  problem.K = inputs.K;
  problem.pose = inputs.relative;
  problem.target = target;
  problem.valid = valid;
  problem.epsilon = config.epsilon;
  problem.huber_delta = config.huber_delta;
  problem.tol = config.tol;
  return problem;
}

void describe_run(Manifest& manifest, const RunConfig& config, const PipelineResult& result) {
  manifest.set("run", "tool", kToolName);
  manifest.set("run", "version", kToolVersion);
  config.describe(manifest);
  manifest.set("metrics", "regions", std::to_string(result.seeds.count()));
  manifest.set("metrics", "hole_fraction", result.hole_fraction);
  if (result.mean_l1) manifest.set("metrics", "mean_l1", *result.mean_l1);
  std::size_t degraded = 0;
  for (std::size_t j = 0; j < result.regions.size(); ++j) {
    if (result.regions[j].warning.empty()) continue;
    ++degraded;
    manifest.set("warnings", "region." + std::to_string(j), result.regions[j].warning);
  }
  manifest.set("metrics", "degraded_regions", std::to_string(degraded));
}

}  // namespace planewarp
