#include "planewarp/scenegen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "planewarp/parallel.hpp"
#include "planewarp/warp.hpp"

namespace planewarp {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double lattice_value(std::int64_t i, std::int64_t j, std::uint64_t seed, int channel) {
  std::uint64_t h = splitmix64(seed ^ 0x51ed270b27a4e1c3ULL);
  h = splitmix64(h ^ static_cast<std::uint64_t>(i));
  h = splitmix64(h ^ static_cast<std::uint64_t>(j));
  h = splitmix64(h ^ static_cast<std::uint64_t>(channel));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double quintic(double t) { return t * t * t * (t * (t * 6.0 - 15.0) + 10.0); }

double value_noise(double u, double v, std::uint64_t seed, int channel) {
  const double fu = std::floor(u);
  const double fv = std::floor(v);
  const auto i = static_cast<std::int64_t>(fu);
  const auto j = static_cast<std::int64_t>(fv);
  const double su = quintic(u - fu);
  const double sv = quintic(v - fv);
  const double a = lattice_value(i, j, seed, channel);
  const double b = lattice_value(i + 1, j, seed, channel);
  const double c = lattice_value(i, j + 1, seed, channel);
  const double d = lattice_value(i + 1, j + 1, seed, channel);
  return (a * (1.0 - su) + b * su) * (1.0 - sv) + (c * (1.0 - su) + d * su) * sv;
}

double texture_value(const TextureSpec& tex, double u, double v, int channel) {
  switch (tex.kind) {
    case TextureKind::Checker: {
      const auto cu = static_cast<std::int64_t>(std::floor(u * tex.frequency));
      const auto cv = static_cast<std::int64_t>(std::floor(v * tex.frequency));
      return ((cu + cv) % 2 == 0) ? 0.0 : 1.0;
    }
    case TextureKind::Noise: {
      const double f = tex.frequency;
      const double n = (2.0 * value_noise(u * f, v * f, tex.seed, channel) +
                        value_noise(2.0 * u * f, 2.0 * v * f, tex.seed + 1, channel)) /
                       3.0;
      return n;
    }
    case TextureKind::Gradient: {
      const double phase = u * tex.frequency + 0.37 * channel;
      return phase - std::floor(phase);
    }
  }
  return 0.0;
}

Pose from_camera_to_world(const Pose& c2w) { return c2w.inverse(); }

void write_pose_tokens(std::ostream& out, const Pose& p) {
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) out << ' ' << p.R(r, c);
    out << ' ' << p.t(r);
  }
}

TextureKind parse_kind(const std::string& s, int line) {
  if (s == "checker") return TextureKind::Checker;
  if (s == "noise") return TextureKind::Noise;
  if (s == "gradient") return TextureKind::Gradient;
  throw Error(Errc::ParseError, "line " + std::to_string(line) + ": unknown texture '" + s + "'");
}

std::string kind_name(TextureKind k) {
  switch (k) {
    case TextureKind::Checker: return "checker";
    case TextureKind::Noise: return "noise";
    case TextureKind::Gradient: return "gradient";
  }
  return "noise";
}

}  // namespace

Plane TexturedPlane::plane() const {
  Plane p;
  p.normal = normal.normalized();
  p.offset = -p.normal.dot(origin);
  return p;
}

Eigen::Vector3d TexturedPlane::u_axis() const {
  const Eigen::Vector3d n = normal.normalized();
  const Eigen::Vector3d a = axis_u - n * n.dot(axis_u);
  const double len = a.norm();
  if (!(len > 1e-12)) return Eigen::Vector3d::Zero();
  return a / len;
}

Image make_texture(const TexturedPlane& plane) {
  const TextureSpec& tex = plane.texture;
  const double tpu = tex.texels_per_unit;
  const int tw = static_cast<int>(std::ceil((plane.u_max - plane.u_min) * tpu)) + 1;
  const int th = static_cast<int>(std::ceil((plane.v_max - plane.v_min) * tpu)) + 1;
  Image out(th, tw, 3);
  for (int j = 0; j < th; ++j) {
    for (int i = 0; i < tw; ++i) {
      const double u = plane.u_min + i / tpu;
      const double v = plane.v_min + j / tpu;
      for (int c = 0; c < 3; ++c) {
        const double s = texture_value(tex, u, v, tex.kind == TextureKind::Checker ? 0 : c);
        out(j, i, c) = tex.color_a[c] + (tex.color_b[c] - tex.color_a[c]) * s;
      }
    }
  }
  return out;
}

std::vector<Plane> planes_in_camera(const PlanarScene& scene, const Pose& pose) {
  std::vector<Plane> out;
  for (const auto& p : scene.planes) out.push_back(p.plane().transformed(pose));
  return out;
}

RenderedView render(const PlanarScene& scene, const Pose& pose) {
  if (scene.planes.empty()) throw Error(Errc::DegenerateScene, "scene has no planes");
  if (!scene.K.valid() || scene.width <= 0 || scene.height <= 0) {
    throw Error(Errc::InvalidArgument, "scene camera is invalid");
  }
  const Eigen::Matrix3d Rt = pose.R.transpose();
  const Eigen::Vector3d center = -(Rt * pose.t);

  struct Prepared {
    Plane plane;
    Eigen::Vector3d normal_camera;
    Eigen::Vector3d axis_u, axis_v;
    Image texture;
  };
  std::vector<Prepared> planes;
  for (const auto& p : scene.planes) {
    if (p.u_axis().isZero()) throw Error(Errc::DegenerateScene, "texture axis parallel to the plane normal");
    Prepared prep{p.plane(), pose.R * p.normal.normalized(), p.u_axis(), p.axis_v(), make_texture(p)};
    if (std::abs(prep.plane.signed_distance(center)) < 1e-12) {
      throw Error(Errc::DegenerateScene, "camera center lies on a scene plane");
    }
    planes.push_back(std::move(prep));
  }

  const int h = scene.height;
  const int w = scene.width;
  RenderedView view{Image(h, w, 3), DepthMap(h, w), NormalMap(h, w, Eigen::Vector3d::Zero()),
                    Grid<int>(h, w, -1), pose};
  parallel_chunks(h, 8, [&](int, int begin, int end) {
    for (int y = begin; y < end; ++y) {
      for (int x = 0; x < w; ++x) {
        const Eigen::Vector3d ray_cam = scene.K.back_project(x, y);
        const Eigen::Vector3d ray = Rt * ray_cam;
        double best = std::numeric_limits<double>::infinity();
        int hit = -1;
        double hit_u = 0.0, hit_v = 0.0;
        for (std::size_t k = 0; k < planes.size(); ++k) {
          const Prepared& p = planes[k];
          const double denom = p.plane.normal.dot(ray);
          if (std::abs(denom) < 1e-15) continue;
          const double s = -p.plane.signed_distance(center) / denom;
          if (!(s > 0.0) || s >= best) continue;
          const Eigen::Vector3d local = center + s * ray - scene.planes[k].origin;
          const double u = local.dot(p.axis_u);
          const double v = local.dot(p.axis_v);
          const auto& tp = scene.planes[k];
          if (u < tp.u_min || u > tp.u_max || v < tp.v_min || v > tp.v_max) continue;
          best = s;
          hit = static_cast<int>(k);
          hit_u = u;
          hit_v = v;
        }
        double* px = view.image.pixel(y, x);
        if (hit < 0) {
          for (int c = 0; c < 3; ++c) px[c] = scene.background[c];
          continue;
        }
        const Prepared& p = planes[static_cast<std::size_t>(hit)];
        const auto& tp = scene.planes[static_cast<std::size_t>(hit)];
        const double tpu = tp.texture.texels_per_unit;
        const BilinearSample s =
            bilinear_sample(p.texture, (hit_u - tp.u_min) * tpu, (hit_v - tp.v_min) * tpu);
        for (int c = 0; c < 3; ++c) px[c] = s.value[static_cast<std::size_t>(c)];
        view.depth.depth(y, x) = best;  // ray_cam has unit z, so s is the camera depth
        view.depth.valid(y, x) = 1;
        view.normals(y, x) = p.normal_camera;
        view.region(y, x) = hit;
      }
    }
  });
  return view;
}

Pose relative_pose(const Pose& source, const Pose& target) {
  Pose rel;
  rel.R = target.R * source.R.transpose();
  rel.t = target.t - rel.R * source.t;
  return rel;
}

ScenePair make_pair(const PlanarScene& scene, const Pose& source_pose, const Pose& target_pose) {
  return {render(scene, source_pose), render(scene, target_pose),
          relative_pose(source_pose, target_pose)};
}

Mask covisibility(const ScenePair& pair, const Intrinsics& K) {
  const RenderedView& src = pair.source;
  const RenderedView& tgt = pair.target;
  const int h = tgt.region.height();
  const int w = tgt.region.width();
  const int sh = src.region.height();
  const int sw = src.region.width();
  const Pose back = pair.relative.inverse();
  Mask out(h, w, 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int plane = tgt.region(y, x);
      if (plane < 0) continue;
      const Eigen::Vector3d X_t = tgt.depth.depth(y, x) * K.back_project(x, y);
      const Eigen::Vector3d X_s = back.apply(X_t);
      if (!(X_s.z() > 0.0)) continue;
      const Eigen::Vector2d uv = K.project(X_s);
      if (!inside_bounds(sh, sw, uv.x(), uv.y())) continue;
      const int x0 = static_cast<int>(std::floor(uv.x()));
      const int y0 = static_cast<int>(std::floor(uv.y()));
      bool same = true;
      for (int dy = 0; dy <= 1 && same; ++dy) {
        for (int dx = 0; dx <= 1 && same; ++dx) {
          const int xx = std::min(x0 + dx, sw - 1);
          const int yy = std::min(y0 + dy, sh - 1);
          same = src.region(yy, xx) == plane;
        }
      }
      out(y, x) = same ? 1 : 0;
    }
  }
  return out;
}

ViewRegions seed_regions_from_view(const RenderedView& view) {
  std::map<int, int> remap;
  bool background = false;
  for (const int id : view.region.data()) {
    if (id < 0) {
      background = true;
    } else {
      remap.emplace(id, 0);
    }
  }
  ViewRegions out;
  int next = 0;
  for (auto& [plane, region] : remap) {
    region = next++;
    out.plane_of_region.push_back(plane);
  }
  if (background) out.plane_of_region.push_back(-1);
  Grid<int> ids(view.region.height(), view.region.width());
  auto src = view.region.data();
  auto dst = ids.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] < 0 ? next : remap.at(src[i]);
  out.regions = SeedRegions(std::move(ids), static_cast<int>(out.plane_of_region.size()));
  return out;
}

PlanarScene parse_scene(std::istream& in) {
  PlanarScene scene;
  bool have_camera = false;
  std::string line;
  int line_no = 0;
  auto fail = [&](const std::string& msg) -> Error {
    return Error(Errc::ParseError, "scene line " + std::to_string(line_no) + ": " + msg);
  };
  auto read_numbers = [&](std::istringstream& ss, int count) {
    std::vector<double> values;
    double v = 0.0;
    while (ss >> v) values.push_back(v);
    if (!ss.eof()) throw fail("non-numeric token");
    if (static_cast<int>(values.size()) != count) {
      throw fail("expected " + std::to_string(count) + " numbers");
    }
    return values;
  };
  auto read_pose = [&](std::istringstream& ss) {
    const auto v = read_numbers(ss, 12);
    Pose c2w;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) c2w.R(r, c) = v[static_cast<std::size_t>(4 * r + c)];
      c2w.t(r) = v[static_cast<std::size_t>(4 * r + 3)];
    }
    if (!c2w.is_rigid(1e-6)) throw fail("pose rotation is not orthonormal");
    return from_camera_to_world(c2w);
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    std::string key;
    if (!(ss >> key)) continue;
    if (key == "camera") {
      const auto v = read_numbers(ss, 6);
      scene.K = {v[0], v[1], v[2], v[3]};
      scene.width = static_cast<int>(v[4]);
      scene.height = static_cast<int>(v[5]);
      if (!scene.K.valid() || scene.width <= 0 || scene.height <= 0) throw fail("bad camera");
      have_camera = true;
    } else if (key == "background") {
      const auto v = read_numbers(ss, 3);
      scene.background = {v[0], v[1], v[2]};
    } else if (key == "plane") {
      std::vector<double> v(13);
      for (auto& x : v) {
        if (!(ss >> x)) throw fail("plane needs 13 numbers before the texture");
      }
      std::string kind;
      double freq = 0.0;
      std::uint64_t seed = 0;
      if (!(ss >> kind >> freq >> seed)) throw fail("plane texture needs kind, frequency, seed");
      std::string extra;
      if (ss >> extra) throw fail("trailing tokens");
      TexturedPlane p;
      p.origin = {v[0], v[1], v[2]};
      p.normal = Eigen::Vector3d(v[3], v[4], v[5]);
      if (p.normal.norm() < 1e-12) throw fail("zero plane normal");
      p.normal.normalize();
      Eigen::Vector3d axis(v[6], v[7], v[8]);
      axis -= p.normal * p.normal.dot(axis);
      if (axis.norm() < 1e-12) throw fail("texture axis parallel to the normal");
      p.axis_u = axis.normalized();
      p.u_min = v[9];
      p.u_max = v[10];
      p.v_min = v[11];
      p.v_max = v[12];
      if (!(p.u_max > p.u_min && p.v_max > p.v_min)) throw fail("empty plane extent");
      p.texture.kind = parse_kind(kind, line_no);
      p.texture.frequency = freq;
      p.texture.seed = seed;
      scene.planes.push_back(p);
    } else if (key == "source_pose") {
      scene.source_pose = read_pose(ss);
    } else if (key == "target_pose") {
      scene.target_pose = read_pose(ss);
    } else {
      throw fail("unknown directive '" + key + "'");
    }
  }
  if (!have_camera) throw Error(Errc::ParseError, "scene has no camera line");
  if (scene.planes.empty()) throw Error(Errc::ParseError, "scene has no planes");
  return scene;
}

PlanarScene load_scene(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open scene file " + path);
  return parse_scene(in);
}

void write_scene(std::ostream& out, const PlanarScene& scene) {
  const auto precision = out.precision(17);
  out << "camera " << scene.K.fx << ' ' << scene.K.fy << ' ' << scene.K.cx << ' ' << scene.K.cy
      << ' ' << scene.width << ' ' << scene.height << '\n';
  out << "background " << scene.background.x() << ' ' << scene.background.y() << ' '
      << scene.background.z() << '\n';
  for (const auto& p : scene.planes) {
    out << "plane " << p.origin.x() << ' ' << p.origin.y() << ' ' << p.origin.z() << ' '
        << p.normal.x() << ' ' << p.normal.y() << ' ' << p.normal.z() << ' ' << p.axis_u.x() << ' '
        << p.axis_u.y() << ' ' << p.axis_u.z() << ' ' << p.u_min << ' ' << p.u_max << ' '
        << p.v_min << ' ' << p.v_max << ' ' << kind_name(p.texture.kind) << ' '
        << p.texture.frequency << ' ' << p.texture.seed << '\n';
  }
  out << "source_pose";
  write_pose_tokens(out, scene.source_pose.inverse());
  out << "\ntarget_pose";
  write_pose_tokens(out, scene.target_pose.inverse());
  out << '\n';
  out.precision(precision);
}

}  // namespace planewarp
