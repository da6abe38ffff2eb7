#include "planewarp/io.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <openssl/evp.h>
#include <png.h>

namespace planewarp {
namespace {

std::string lower_extension(const std::string& path) {
  const auto dot = path.find_last_of('.');
  if (dot == std::string::npos) return {};
  std::string ext = path.substr(dot);
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::Io, "cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::Io, "write failed for " + path);
}

bool is_png(std::string_view bytes) {
  return bytes.size() >= 8 && png_sig_cmp(reinterpret_cast<png_const_bytep>(bytes.data()), 0, 8) == 0;
}

// Raw 8- or 16-bit samples with 1 or 3 channels.
struct RawRaster {
  int width = 0;
  int height = 0;
  int channels = 0;
  int max_value = 255;
  std::vector<std::uint16_t> samples;
};

// --- Netpbm (P5 / P6) -------------------------------------------------------

RawRaster read_pnm(std::string_view bytes, const std::string& path) {
  std::size_t pos = 0;
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto next_int = [&] {
    skip_space();
    int value = 0;
    const auto [ptr, ec] = std::from_chars(bytes.data() + pos, bytes.data() + bytes.size(), value);
    if (ec != std::errc()) throw Error(Errc::UnsupportedFormat, "bad PNM header in " + path);
    pos = static_cast<std::size_t>(ptr - bytes.data());
    return value;
  };
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
    throw Error(Errc::UnsupportedFormat, "not a binary PGM/PPM: " + path);
  }
  RawRaster raw;
  raw.channels = bytes[1] == '6' ? 3 : 1;
  pos = 2;
  raw.width = next_int();
  raw.height = next_int();
  raw.max_value = next_int();
  if (raw.width <= 0 || raw.height <= 0 || raw.max_value <= 0 || raw.max_value > 65535) {
    throw Error(Errc::UnsupportedFormat, "bad PNM dimensions in " + path);
  }
  ++pos;  // single whitespace before the raster
  const std::size_t count = static_cast<std::size_t>(raw.width) * raw.height * raw.channels;
  const std::size_t bytes_per = raw.max_value > 255 ? 2 : 1;
  if (bytes.size() < pos + count * bytes_per) {
    throw Error(Errc::UnsupportedFormat, "truncated PNM raster in " + path);
  }
  raw.samples.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + pos + i * bytes_per);
    raw.samples[i] = bytes_per == 2 ? static_cast<std::uint16_t>((p[0] << 8) | p[1]) : p[0];
  }
  return raw;
}

void write_pnm(const std::string& path, const RawRaster& raw) {
  std::string out = (raw.channels == 3 ? "P6\n" : "P5\n") + std::to_string(raw.width) + " " +
                    std::to_string(raw.height) + "\n" + std::to_string(raw.max_value) + "\n";
  const bool wide = raw.max_value > 255;
  for (const auto s : raw.samples) {
    if (wide) out.push_back(static_cast<char>(s >> 8));
    out.push_back(static_cast<char>(s & 0xff));
  }
  write_file(path, out);
}

// --- PNG via the libpng simplified API --------------------------------------

RawRaster read_png(const std::string& path, bool want_color) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str())) {
    throw Error(Errc::UnsupportedFormat, "cannot decode PNG " + path + ": " + img.message);
  }
  RawRaster raw;
  raw.width = static_cast<int>(img.width);
  raw.height = static_cast<int>(img.height);
  const bool sixteen = (img.format & PNG_FORMAT_FLAG_LINEAR) != 0;
  if (want_color) {
    raw.channels = 3;
    img.format = PNG_FORMAT_RGB;
  } else {
    if (img.format & PNG_FORMAT_FLAG_COLOR) {
      png_image_free(&img);
      throw Error(Errc::UnsupportedFormat, "expected a grayscale PNG: " + path);
    }
    raw.channels = 1;
    img.format = sixteen ? PNG_FORMAT_LINEAR_Y : PNG_FORMAT_GRAY;
  }
  const std::size_t count = static_cast<std::size_t>(raw.width) * raw.height * raw.channels;
  raw.samples.resize(count);
  bool ok = false;
  if (!want_color && sixteen) {
    raw.max_value = 65535;
    ok = png_image_finish_read(&img, nullptr, raw.samples.data(), 0, nullptr) != 0;
  } else {
    std::vector<png_byte> buffer(PNG_IMAGE_SIZE(img));
    ok = png_image_finish_read(&img, nullptr, buffer.data(), 0, nullptr) != 0;
    std::copy(buffer.begin(), buffer.end(), raw.samples.begin());
  }
  if (!ok) throw Error(Errc::UnsupportedFormat, "cannot decode PNG " + path + ": " + img.message);
  return raw;
}

void write_png(const std::string& path, const RawRaster& raw) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(raw.width);
  img.height = static_cast<png_uint_32>(raw.height);
  int ok = 0;
  if (raw.max_value > 255) {
    img.format = PNG_FORMAT_LINEAR_Y;
    ok = png_image_write_to_file(&img, path.c_str(), 0, raw.samples.data(), 0, nullptr);
  } else {
    img.format = raw.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    std::vector<png_byte> buffer(raw.samples.begin(), raw.samples.end());
    ok = png_image_write_to_file(&img, path.c_str(), 0, buffer.data(), 0, nullptr);
  }
  if (!ok) throw Error(Errc::Io, "cannot write PNG " + path + ": " + img.message);
}

RawRaster read_raster(const std::string& path, bool want_color) {
  const std::string bytes = read_file(path);
  if (is_png(bytes)) return read_png(path, want_color);
  if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '6')) {
    return read_pnm(bytes, path);
  }
  throw Error(Errc::UnsupportedFormat, "unrecognized image format: " + path);
}

void write_raster(const std::string& path, const RawRaster& raw) {
  const std::string ext = lower_extension(path);
  if (ext == ".png") {
    write_png(path, raw);
  } else if (ext == ".ppm" || ext == ".pgm" || ext == ".pnm") {
    write_pnm(path, raw);
  } else {
    throw Error(Errc::UnsupportedFormat, "unsupported output extension: " + path);
  }
}

double parse_double(std::string_view token, const char* what) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw Error(Errc::ParseError, std::string(what) + ": not a number '" + std::string(token) + "'");
  }
  return value;
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    const std::size_t start = i;
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i > start) tokens.push_back(s.substr(start, i - start));
  }
  return tokens;
}

// Tokens of a text raster after its "<MAGIC> h w" header.
std::vector<std::string_view> text_raster(std::string_view bytes, std::string_view magic,
                                          int& h, int& w, std::size_t per_pixel) {
  auto tokens = split_ws(bytes);
  if (tokens.size() < 3 || tokens[0] != magic) {
    throw Error(Errc::UnsupportedFormat, "missing " + std::string(magic) + " header");
  }
  h = static_cast<int>(parse_double(tokens[1], "raster height"));
  w = static_cast<int>(parse_double(tokens[2], "raster width"));
  if (h <= 0 || w <= 0) throw Error(Errc::ParseError, "bad raster dimensions");
  const std::size_t expected = static_cast<std::size_t>(h) * w * per_pixel;
  if (tokens.size() - 3 != expected) {
    throw Error(Errc::ParseError, "raster holds " + std::to_string(tokens.size() - 3) +
                                      " values, expected " + std::to_string(expected));
  }
  tokens.erase(tokens.begin(), tokens.begin() + 3);
  return tokens;
}

std::string format_real(double v) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

}  // namespace

std::uint8_t quantize8(double v) noexcept {
  const double c = std::clamp(v, 0.0, 1.0);
  return static_cast<std::uint8_t>(std::floor(c * 255.0 + 0.5));
}

Image read_image(const std::string& path) {
  const RawRaster raw = read_raster(path, true);
  Image image(raw.height, raw.width, 3);
  const double max_value = raw.max_value;
  for (int y = 0; y < raw.height; ++y) {
    for (int x = 0; x < raw.width; ++x) {
      for (int c = 0; c < 3; ++c) {
        const std::size_t src = (static_cast<std::size_t>(y) * raw.width + x) * raw.channels +
                                static_cast<std::size_t>(raw.channels == 3 ? c : 0);
        image(y, x, c) = raw.samples[src] / max_value;
      }
    }
  }
  return image;
}

void write_image(const std::string& path, const Image& image) {
  RawRaster raw;
  raw.width = image.width();
  raw.height = image.height();
  raw.channels = image.channels();
  raw.samples.reserve(image.data().size());
  for (const double v : image.data()) raw.samples.push_back(quantize8(v));
  if (raw.channels == 3 && lower_extension(path) == ".pgm") {
    throw Error(Errc::UnsupportedFormat, "PGM holds grayscale only: " + path);
  }
  write_raster(path, raw);
}

void write_gray8(const std::string& path, const Grid<std::uint8_t>& gray) {
  RawRaster raw{gray.width(), gray.height(), 1, 255, {}};
  raw.samples.assign(gray.data().begin(), gray.data().end());
  write_raster(path, raw);
}

void write_gray16(const std::string& path, const Grid<std::uint16_t>& gray) {
  RawRaster raw{gray.width(), gray.height(), 1, 65535, {}};
  raw.samples.assign(gray.data().begin(), gray.data().end());
  write_raster(path, raw);
}

Grid<std::uint16_t> read_gray16(const std::string& path) {
  const RawRaster raw = read_raster(path, false);
  if (raw.channels != 1) throw Error(Errc::UnsupportedFormat, "expected grayscale: " + path);
  Grid<std::uint16_t> out(raw.height, raw.width);
  std::copy(raw.samples.begin(), raw.samples.end(), out.data().begin());
  return out;
}

DepthMap load_depth(const std::string& path, double scale) {
  if (!(scale > 0.0)) throw Error(Errc::InvalidArgument, "depth scale must be positive");
  const std::string bytes = read_file(path);
  if (bytes.rfind("DEPTH", 0) == 0) {
    int h = 0, w = 0;
    const auto tokens = text_raster(bytes, "DEPTH", h, w, 1);
    DepthMap depth(h, w);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double v =
            parse_double(tokens[static_cast<std::size_t>(y) * w + x], "depth value");
        const bool ok = std::isfinite(v) && v > 0.0;
        depth.depth(y, x) = ok ? v : 0.0;
        depth.valid(y, x) = ok ? 1 : 0;
      }
    }
    return depth;
  }
  if (!is_png(bytes) && !(bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5')) {
    throw Error(Errc::UnsupportedFormat, "depth must be a 16-bit grayscale image or DEPTH text");
  }
  const Grid<std::uint16_t> raw = read_gray16(path);
  DepthMap depth(raw.height(), raw.width());
  for (int y = 0; y < raw.height(); ++y) {
    for (int x = 0; x < raw.width(); ++x) {
      const std::uint16_t r = raw(y, x);
      depth.depth(y, x) = r / scale;
      depth.valid(y, x) = r != 0 ? 1 : 0;
    }
  }
  return depth;
}

void write_depth_text(std::ostream& out, const DepthMap& depth) {
  out << "DEPTH " << depth.height() << ' ' << depth.width() << '\n';
  for (int y = 0; y < depth.height(); ++y) {
    for (int x = 0; x < depth.width(); ++x) {
      out << (x ? " " : "") << format_real(depth.valid(y, x) ? depth.depth(y, x) : 0.0);
    }
    out << '\n';
  }
}

void write_depth_text(const std::string& path, const DepthMap& depth) {
  std::ostringstream ss;
  write_depth_text(ss, depth);
  write_file(path, ss.str());
}

void write_depth16(const std::string& path, const DepthMap& depth, double scale) {
  if (!(scale > 0.0)) throw Error(Errc::InvalidArgument, "depth scale must be positive");
  Grid<std::uint16_t> raw(depth.height(), depth.width(), 0);
  for (int y = 0; y < depth.height(); ++y) {
    for (int x = 0; x < depth.width(); ++x) {
      if (!depth.valid(y, x)) continue;
      const double q = std::floor(depth.depth(y, x) * scale + 0.5);
      if (!(q >= 1.0 && q <= 65535.0)) {
        throw Error(Errc::InvalidArgument, "depth outside the 16-bit range at this scale");
      }
      raw(y, x) = static_cast<std::uint16_t>(q);
    }
  }
  write_gray16(path, raw);
}

NormalMap load_normals(const std::string& path) {
  const std::string bytes = read_file(path);
  if (bytes.rfind("NORMALS", 0) == 0) {
    int h = 0, w = 0;
    const auto tokens = text_raster(bytes, "NORMALS", h, w, 3);
    NormalMap normals(h, w);
    std::size_t k = 0;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        for (int c = 0; c < 3; ++c) normals(y, x)[c] = parse_double(tokens[k++], "normal value");
      }
    }
    return normals;
  }
  const Image rgb = read_image(path);
  NormalMap normals(rgb.height(), rgb.width());
  for (int y = 0; y < rgb.height(); ++y) {
    for (int x = 0; x < rgb.width(); ++x) {
      for (int c = 0; c < 3; ++c) normals(y, x)[c] = 2.0 * rgb(y, x, c) - 1.0;
    }
  }
  return normals;
}

void write_normals_text(const std::string& path, const NormalMap& normals) {
  std::ostringstream ss;
  ss << "NORMALS " << normals.height() << ' ' << normals.width() << '\n';
  for (int y = 0; y < normals.height(); ++y) {
    for (int x = 0; x < normals.width(); ++x) {
      const auto& n = normals(y, x);
      ss << format_real(n.x()) << ' ' << format_real(n.y()) << ' ' << format_real(n.z())
         << (x + 1 == normals.width() ? '\n' : ' ');
    }
  }
  write_file(path, ss.str());
}

Intrinsics load_intrinsics(const std::string& path) {
  const std::string bytes = read_file(path);
  const auto tokens = split_ws(bytes);
  if (tokens.size() != 4) throw Error(Errc::ParseError, "intrinsics need 'fx fy cx cy'");
  Intrinsics K{parse_double(tokens[0], "fx"), parse_double(tokens[1], "fy"),
               parse_double(tokens[2], "cx"), parse_double(tokens[3], "cy")};
  if (!K.valid()) throw Error(Errc::InvalidArgument, "focal lengths must be positive");
  return K;
}

void write_intrinsics(const std::string& path, const Intrinsics& K) {
  write_file(path, format_real(K.fx) + " " + format_real(K.fy) + " " + format_real(K.cx) + " " +
                       format_real(K.cy) + "\n");
}

Pose parse_pose_line(std::string_view line) {
  const auto tokens = split_ws(line);
  if (tokens.size() != 12) {
    throw Error(Errc::ParseError,
                "pose line has " + std::to_string(tokens.size()) + " tokens, expected 12");
  }
  Pose pose;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      pose.R(r, c) = parse_double(tokens[static_cast<std::size_t>(4 * r + c)], "pose");
    }
    pose.t(r) = parse_double(tokens[static_cast<std::size_t>(4 * r + 3)], "pose");
  }
  if (!pose.R.allFinite() || !pose.t.allFinite()) {
    throw Error(Errc::ParseError, "pose holds non-finite values");
  }
  if (!pose.is_rigid(1e-4)) {
    throw Error(Errc::BadRotation, "rotation is not orthonormal within 1e-4");
  }
  pose.R = nearest_rotation(pose.R);
  return pose;
}

std::vector<Pose> parse_pose_file(std::istream& in) {
  std::vector<Pose> poses;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (split_ws(line).empty()) continue;
    try {
      poses.push_back(parse_pose_line(line));
    } catch (const Error& e) {
      throw Error(e.code(), "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return poses;
}

std::vector<Pose> load_pose_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open pose file " + path);
  return parse_pose_file(in);
}

void write_pose_file(std::ostream& out, const std::vector<Pose>& poses) {
  for (const auto& p : poses) {
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) out << format_real(p.R(r, c)) << ' ';
      out << format_real(p.t(r)) << (r == 2 ? '\n' : ' ');
    }
  }
}

void write_pose_file(const std::string& path, const std::vector<Pose>& poses) {
  std::ostringstream ss;
  write_pose_file(ss, poses);
  write_file(path, ss.str());
}

Pose relative_from_camera_to_world(const Pose& source_c2w, const Pose& target_c2w) {
  // World-to-camera extrinsics are the inverses; then (R_t R_sᵀ, t_t - R_t R_sᵀ t_s).
  const Pose src = source_c2w.inverse();
  const Pose tgt = target_c2w.inverse();
  Pose rel;
  rel.R = tgt.R * src.R.transpose();
  rel.t = tgt.t - rel.R * src.t;
  return rel;
}

void write_region_map(const std::string& path, const Grid<int>& ids) {
  Grid<std::uint8_t> gray(ids.height(), ids.width());
  auto src = ids.data();
  auto dst = gray.data();
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (src[i] < 0 || src[i] > 255) {
      throw Error(Errc::InvalidArgument, "region ids must lie in [0, 255] for an 8-bit map");
    }
    dst[i] = static_cast<std::uint8_t>(src[i]);
  }
  write_gray8(path, gray);
}

void write_maps(const std::string& prefix, const std::vector<ScalarField>& maps,
                const std::string& extension) {
  for (std::size_t j = 0; j < maps.size(); ++j) {
    Grid<std::uint8_t> gray(maps[j].height(), maps[j].width());
    auto src = maps[j].data();
    auto dst = gray.data();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = quantize8(src[i]);
    std::ostringstream name;
    name << prefix << '_' << std::setw(2) << std::setfill('0') << j << extension;
    write_gray8(name.str(), gray);
  }
}

std::string sha256_bytes(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (!EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr)) {
    throw Error(Errc::Io, "SHA-256 failed");
  }
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return hex.str();
}

std::string sha256_file(const std::string& path) { return sha256_bytes(read_file(path)); }

}  // namespace planewarp
