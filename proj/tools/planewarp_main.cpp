// planewarp command-line tool.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "planewarp/grad.hpp"
#include "planewarp/io.hpp"
#include "planewarp/manifest.hpp"
#include "planewarp/parallel.hpp"
#include "planewarp/pipeline.hpp"
#include "planewarp/scenegen.hpp"

namespace pw = planewarp;
namespace fs = std::filesystem;

namespace {

struct ConfigFlag {
  const char* flag;
  const char* key;
  const char* help;
};

constexpr ConfigFlag kConfigFlags[] = {
    {"--m", "m", "number of seed regions"},
    {"--n-superpixels", "n_superpixels", "SLIC superpixel count"},
    {"--compactness", "compactness", "SLIC compactness"},
    {"--epsilon", "epsilon", "mask normalization epsilon"},
    {"--selection", "selection", "hard or soft"},
    {"--temperature", "temperature", "soft-selection temperature"},
    {"--beta", "beta", "soft-selection spatial weight"},
    {"--refine-steps", "refine_steps", "refinement iterations"},
    {"--refine-lr", "refine_lr", "refinement learning rate"},
    {"--huber-delta", "huber_delta", "loss smoothing width"},
    {"--seed", "seed", "k-means seed"},
    {"--depth-scale", "depth_scale", "raw units per scene unit for 16-bit depth"},
    {"--degeneracy-eps", "degeneracy_eps", "homography denominator tolerance"},
    {"--offset-eps", "offset_eps", "plane offset tolerance"},
    {"--norm-eps", "norm_eps", "normal length tolerance"},
    {"--w-eps", "w_eps", "homogeneous w tolerance"},
};

struct ConfigOptions {
  std::string config_path;
  std::map<std::string, std::string> values;
  std::vector<std::pair<std::string, CLI::Option*>> options;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "key=value config file")->check(CLI::ExistingFile);
    for (const auto& f : kConfigFlags) {
      options.emplace_back(f.key, app->add_option(f.flag, values[f.key], f.help));
    }
  }

  // defaults < config file < flags
  pw::RunConfig resolve() const {
    pw::RunConfig config;
    if (!config_path.empty()) config = pw::RunConfig::load(config_path, config);
    for (const auto& [key, opt] : options) {
      if (opt->count() > 0) config.set(key, values.at(key));
    }
    config.validate();
    return config;
  }
};

struct ViewInputs {
  std::string source, depth, normals, intrinsics;
  std::string relative_pose, poses;
  int src_index = 0, tgt_index = 1;
  std::string target, valid;

  void attach(CLI::App* app, bool target_required) {
    app->add_option("--source", source, "source image")->required()->check(CLI::ExistingFile);
    app->add_option("--depth", depth, "source depth (16-bit image or DEPTH text)")
        ->required()->check(CLI::ExistingFile);
    app->add_option("--normals", normals, "source normals (NORMALS text or RGB image)")
        ->required()->check(CLI::ExistingFile);
    app->add_option("--intrinsics", intrinsics, "file with 'fx fy cx cy'")
        ->required()->check(CLI::ExistingFile);
    auto* rel = app->add_option("--relative-pose", relative_pose,
                                "pose file whose first line maps source to target camera")
                    ->check(CLI::ExistingFile);
    auto* seq = app->add_option("--poses", poses, "camera-to-world pose file")->check(CLI::ExistingFile);
    rel->excludes(seq);
    app->add_option("--src-index", src_index, "source line in --poses")->needs(seq);
    app->add_option("--tgt-index", tgt_index, "target line in --poses")->needs(seq);
    auto* t = app->add_option("--target", target, "target image")->check(CLI::ExistingFile);
    if (target_required) t->required();
    app->add_option("--valid", valid, "target validity mask image")->check(CLI::ExistingFile)->needs(t);
  }

  pw::Pose relative() const {
    if (!relative_pose.empty()) {
      const auto list = pw::load_pose_file(relative_pose);
      if (list.empty()) throw pw::Error(pw::Errc::ParseError, relative_pose + ": no pose");
      return list.front();
    }
    if (poses.empty()) {
      throw pw::Error(pw::Errc::InvalidArgument, "one of --relative-pose or --poses is required");
    }
    const auto list = pw::load_pose_file(poses);
    const auto in_range = [&](int i) { return i >= 0 && i < static_cast<int>(list.size()); };
    if (!in_range(src_index) || !in_range(tgt_index)) {
      throw pw::Error(pw::Errc::InvalidArgument, "pose index out of range");
    }
    return pw::relative_from_camera_to_world(list[static_cast<std::size_t>(src_index)],
                                             list[static_cast<std::size_t>(tgt_index)]);
  }

  pw::PipelineInputs load(const pw::RunConfig& config) const {
    pw::PipelineInputs in;
    in.source = pw::read_image(source);
    in.depth = pw::load_depth(depth, config.depth_scale);
    in.normals = pw::load_normals(normals);
    in.K = pw::load_intrinsics(intrinsics);
    in.relative = relative();
    if (!target.empty()) {
      in.target = pw::read_image(target);
      if (!in.target->same_shape(in.source)) {
        throw pw::Error(pw::Errc::InvalidArgument, "target must match the source image");
      }
    }
    if (!valid.empty()) in.target_valid = read_mask(valid, in.source.height(), in.source.width());
    return in;
  }

  void record(pw::Manifest& manifest) const {
    const std::pair<const char*, const std::string*> files[] = {
        {"source", &source},        {"depth", &depth},   {"normals", &normals},
        {"intrinsics", &intrinsics}, {"relative_pose", &relative_pose},
        {"poses", &poses},          {"target", &target}, {"valid", &valid}};
    for (const auto& [role, path] : files) {
      if (path->empty()) continue;
      manifest.set("inputs", role, *path);
      manifest.set("inputs", std::string(role) + ".sha256", pw::sha256_file(*path));
    }
    if (!poses.empty()) {
      manifest.set("inputs", "src_index", std::to_string(src_index));
      manifest.set("inputs", "tgt_index", std::to_string(tgt_index));
    }
  }

  static pw::Mask read_mask(const std::string& path, int h, int w) {
    const pw::Image img = pw::read_image(path);
    if (img.height() != h || img.width() != w) {
      throw pw::Error(pw::Errc::InvalidArgument, path + ": mask size does not match the source");
    }
    pw::Mask mask(h, w, 0);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) mask(y, x) = img(y, x, 0) >= 0.5 ? 1 : 0;
    }
    return mask;
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void ensure_parent(const std::string& path) {
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

void save_manifest(const pw::Manifest& manifest, const std::string& path) {
  ensure_parent(path);
  manifest.save(path);
}

void report_warnings(const pw::PipelineResult& result) {
  for (const auto& w : result.warnings()) std::cerr << "warning: " << w << '\n';
}

void dump_intermediates(const std::string& dir, const pw::PipelineResult& r) {
  fs::create_directories(dir);
  const fs::path d(dir);
  pw::write_region_map((d / "regions.png").string(), r.seeds.ids());
  pw::write_maps((d / "selection").string(), r.selection);
  pw::write_maps((d / "weight").string(), r.candidates.weights);
  for (std::size_t j = 0; j < r.candidates.size(); ++j) {
    char name[32];
    std::snprintf(name, sizeof name, "candidate_%02zu.png", j);
    pw::write_image((d / name).string(), r.candidates.candidates[j]);
  }
  pw::write_image((d / "composite.png").string(), r.composite);
  pw::Mask holes = r.candidates.outside;
  for (auto& v : holes.data()) v = v ? 255 : 0;
  pw::write_gray8((d / "holes.png").string(), holes);
}

// --- subcommands -----------------------------------------------------------

struct SegmentArgs {
  ConfigOptions config;
  std::string image, out, manifest;
};

int run_segment(const SegmentArgs& a) {
  const auto t0 = Clock::now();
  const pw::RunConfig config = a.config.resolve();
  const pw::Image image = pw::read_image(a.image);
  const pw::SeedRegions seeds = pw::segment(config, image);
  ensure_parent(a.out);
  pw::write_region_map(a.out, seeds.ids());
  if (!a.manifest.empty()) {
    pw::Manifest m;
    m.set("run", "tool", pw::kToolName);
    m.set("run", "version", pw::kToolVersion);
    m.set("run", "command", "segment");
    config.describe(m);
    m.set("inputs", "image", a.image);
    m.set("inputs", "image.sha256", pw::sha256_file(a.image));
    m.set("metrics", "regions", std::to_string(seeds.count()));
    m.set("outputs", "regions", a.out);
    m.set("timing", "seconds", seconds_since(t0));
    save_manifest(m, a.manifest);
  }
  return 0;
}

struct SynthesizeArgs {
  ConfigOptions config;
  ViewInputs view;
  std::string out, manifest, dump_dir;
};

int run_synthesize(const SynthesizeArgs& a) {
  const auto t0 = Clock::now();
  const pw::RunConfig config = a.config.resolve();
  const pw::PipelineInputs in = a.view.load(config);
  const pw::PipelineResult result = pw::run_pipeline(config, in);
  report_warnings(result);
  ensure_parent(a.out);
  pw::write_image(a.out, result.synthesized);
  if (!a.dump_dir.empty()) dump_intermediates(a.dump_dir, result);
  if (result.mean_l1) std::cout << "mean_l1 " << pw::format_double(*result.mean_l1) << '\n';
  if (!a.manifest.empty()) {
    pw::Manifest m;
    pw::describe_run(m, config, result);
    m.set("run", "command", "synthesize");
    a.view.record(m);
    m.set("outputs", "image", a.out);
    m.set("timing", "seconds", seconds_since(t0));
    save_manifest(m, a.manifest);
  }
  return 0;
}

struct RefineArgs {
  ConfigOptions config;
  ViewInputs view;
  std::string out, trace, manifest;
};

int run_refine(const RefineArgs& a) {
  const auto t0 = Clock::now();
  const pw::RunConfig config = a.config.resolve();
  const pw::PipelineInputs in = a.view.load(config);
  const pw::PipelineResult result = pw::run_pipeline(config, in);
  report_warnings(result);

  std::vector<pw::PlaneEstimate> estimates;
  for (std::size_t j = 0; j < result.regions.size(); ++j) {
    if (!result.regions[j].estimate) {
      throw pw::Error(pw::Errc::DegeneratePlane,
                      "region " + std::to_string(j) + " has no plane to refine");
    }
    estimates.push_back(*result.regions[j].estimate);
  }
  const pw::Mask valid =
      in.target_valid ? *in.target_valid : pw::Mask(in.source.height(), in.source.width(), 1);
  const pw::SynthesisProblem problem = pw::make_problem(config, in, result, *in.target, valid);
  pw::RefineOptions options;
  options.steps = config.refine_steps;
  options.lr = config.refine_lr;
  const pw::RefineResult refined = pw::refine_planes(problem, pw::params_from_estimates(estimates), options);

  const auto H_invs = pw::inverse_homographies(problem, refined.best);
  const pw::CandidateSet cands = pw::build_candidates(in.source, result.selection, H_invs, config.epsilon,
                                                     in.source.height(), in.source.width());
  const pw::Image image = pw::fill_holes(pw::compose(cands), cands.outside);
  const double l1 = pw::loss_l1(image, *in.target, valid);

  ensure_parent(a.out);
  pw::write_image(a.out, image);
  if (!a.trace.empty()) {
    ensure_parent(a.trace);
    std::ofstream csv(a.trace);
    if (!csv) throw pw::Error(pw::Errc::Io, "cannot open " + a.trace);
    pw::write_loss_trace_csv(csv, refined.trace);
  }
  std::cout << "mean_l1 " << pw::format_double(*result.mean_l1) << " -> " << pw::format_double(l1) << '\n';
  if (!a.manifest.empty()) {
    pw::Manifest m;
    pw::describe_run(m, config, result);
    m.set("run", "command", "refine");
    a.view.record(m);
    m.set("metrics", "initial_loss", refined.trace.front().loss);
    m.set("metrics", "best_loss", refined.best_loss);
    m.set("metrics", "refined_mean_l1", l1);
    for (std::size_t j = 0; j < refined.best.regions.size(); ++j) {
      const auto& r = refined.best.regions[j];
      const std::string key = "region." + std::to_string(j);
      m.set("refined", key + ".depth", r.depth);
      m.set("refined", key + ".normal",
            pw::format_double(r.normal.x()) + " " + pw::format_double(r.normal.y()) + " " +
                pw::format_double(r.normal.z()));
    }
    m.set("outputs", "image", a.out);
    if (!a.trace.empty()) m.set("outputs", "trace", a.trace);
    m.set("timing", "seconds", seconds_since(t0));
    save_manifest(m, a.manifest);
  }
  return 0;
}

struct EvaluateArgs {
  std::string pred, target, valid, manifest;
};

int run_evaluate(const EvaluateArgs& a) {
  const pw::Image pred = pw::read_image(a.pred);
  const pw::Image target = pw::read_image(a.target);
  if (!pred.same_shape(target)) {
    throw pw::Error(pw::Errc::InvalidArgument, "prediction and target differ in size");
  }
  const pw::Mask valid = a.valid.empty() ? pw::Mask(pred.height(), pred.width(), 1)
                                         : ViewInputs::read_mask(a.valid, pred.height(), pred.width());
  const double l1 = pw::loss_l1(pred, target, valid);
  std::cout << "mean_l1 " << pw::format_double(l1) << '\n';
  if (!a.manifest.empty()) {
    pw::Manifest m;
    m.set("run", "tool", pw::kToolName);
    m.set("run", "version", pw::kToolVersion);
    m.set("run", "command", "evaluate");
    m.set("inputs", "pred", a.pred);
    m.set("inputs", "pred.sha256", pw::sha256_file(a.pred));
    m.set("inputs", "target", a.target);
    m.set("inputs", "target.sha256", pw::sha256_file(a.target));
    if (!a.valid.empty()) m.set("inputs", "valid.sha256", pw::sha256_file(a.valid));
    m.set("metrics", "mean_l1", l1);
    save_manifest(m, a.manifest);
  }
  return 0;
}

struct GenSceneArgs {
  std::string scene, out_dir;
  bool png_depth = false;
  double depth_scale = 1000.0;
};

int run_gen_scene(const GenSceneArgs& a) {
  const pw::PlanarScene scene = pw::load_scene(a.scene);
  const pw::ScenePair pair = pw::make_pair(scene, scene.source_pose, scene.target_pose);
  const fs::path d(a.out_dir);
  fs::create_directories(d);
  auto path = [&](const char* name) { return (d / name).string(); };

  pw::write_image(path("source.png"), pair.source.image);
  pw::write_image(path("target.png"), pair.target.image);
  if (a.png_depth) {
    pw::write_depth16(path("source_depth.png"), pair.source.depth, a.depth_scale);
  } else {
    pw::write_depth_text(path("source_depth.txt"), pair.source.depth);
  }
  pw::write_normals_text(path("source_normals.txt"), pair.source.normals);
  pw::write_intrinsics(path("intrinsics.txt"), scene.K);
  pw::write_pose_file(path("poses.txt"), {scene.source_pose.inverse(), scene.target_pose.inverse()});
  pw::write_pose_file(path("relative_pose.txt"), {pair.relative});

  pw::Mask covis = pw::covisibility(pair, scene.K);
  for (auto& v : covis.data()) v = v ? 255 : 0;
  pw::write_gray8(path("covisible.png"), covis);
  const pw::ViewRegions vr = pw::seed_regions_from_view(pair.source);
  pw::write_region_map(path("source_regions.png"), vr.regions.ids());

  pw::Manifest m;
  m.set("run", "tool", pw::kToolName);
  m.set("run", "version", pw::kToolVersion);
  m.set("run", "command", "gen-scene");
  m.set("inputs", "scene", a.scene);
  m.set("inputs", "scene.sha256", pw::sha256_file(a.scene));
  m.set("metrics", "planes", std::to_string(scene.planes.size()));
  m.set("metrics", "regions", std::to_string(vr.regions.count()));
  m.save(path("manifest.txt"));
  return 0;
}

int exit_code(const pw::Error& e) { return pw::is_numerical(e.code()) ? 2 : 1; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Plane-based novel view synthesis"};
  app.set_version_flag("--version", pw::kToolVersion);
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "worker threads (0 = hardware concurrency)")
      ->check(CLI::NonNegativeNumber);

  SegmentArgs seg;
  auto* seg_cmd = app.add_subcommand("segment", "SLIC + k-means seed regions");
  seg.config.attach(seg_cmd);
  seg_cmd->add_option("--image", seg.image, "input image")->required()->check(CLI::ExistingFile);
  seg_cmd->add_option("--out", seg.out, "region-id map (grayscale)")->required();
  seg_cmd->add_option("--manifest", seg.manifest, "manifest output");

  SynthesizeArgs syn;
  auto* syn_cmd = app.add_subcommand("synthesize", "render the target view");
  syn.config.attach(syn_cmd);
  syn.view.attach(syn_cmd, false);
  syn_cmd->add_option("--out", syn.out, "synthesized image")->required();
  syn_cmd->add_option("--manifest", syn.manifest, "manifest output");
  syn_cmd->add_option("--dump-dir", syn.dump_dir, "directory for regions, selection, weights, candidates");

  RefineArgs ref;
  auto* ref_cmd = app.add_subcommand("refine", "optimize plane parameters against the target");
  ref.config.attach(ref_cmd);
  ref.view.attach(ref_cmd, true);
  ref_cmd->add_option("--out", ref.out, "synthesized image after refinement")->required();
  ref_cmd->add_option("--trace", ref.trace, "loss-trace CSV");
  ref_cmd->add_option("--manifest", ref.manifest, "manifest output");

  EvaluateArgs ev;
  auto* ev_cmd = app.add_subcommand("evaluate", "mean l1 between two images");
  ev_cmd->add_option("--pred", ev.pred, "predicted image")->required()->check(CLI::ExistingFile);
  ev_cmd->add_option("--target", ev.target, "target image")->required()->check(CLI::ExistingFile);
  ev_cmd->add_option("--valid", ev.valid, "validity mask image")->check(CLI::ExistingFile);
  ev_cmd->add_option("--manifest", ev.manifest, "manifest output");

  GenSceneArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-scene", "render a planar scene file into a view pair");
  gen_cmd->add_option("--scene", gen.scene, "scene description")->required()->check(CLI::ExistingFile);
  gen_cmd->add_option("--out-dir", gen.out_dir, "output directory")->required();
  gen_cmd->add_flag("--png-depth", gen.png_depth, "write 16-bit PNG depth instead of text");
  gen_cmd->add_option("--depth-scale", gen.depth_scale, "raw units per scene unit")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (threads > 0) pw::set_worker_count(threads);
    if (seg_cmd->parsed()) return run_segment(seg);
    if (syn_cmd->parsed()) return run_synthesize(syn);
    if (ref_cmd->parsed()) return run_refine(ref);
    if (ev_cmd->parsed()) return run_evaluate(ev);
    if (gen_cmd->parsed()) return run_gen_scene(gen);
  } catch (const pw::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
