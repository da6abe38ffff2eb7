#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "planewarp/geometry.hpp"
#include "planewarp/image.hpp"
#include "planewarp/selection.hpp"

namespace planewarp {

// Images on disk are 8-bit (PNG, PPM or PGM, chosen by extension). In memory
// they are reals in [0,1]; writing re-quantizes with round-half-up.

Image read_image(const std::string& path);
void write_image(const std::string& path, const Image& image);

/// round(v * 255) with halves rounded up, after clamping to [0,1].
std::uint8_t quantize8(double v) noexcept;

void write_gray8(const std::string& path, const Grid<std::uint8_t>& gray);
void write_gray16(const std::string& path, const Grid<std::uint16_t>& gray);
Grid<std::uint16_t> read_gray16(const std::string& path);

/// Depth from a 16-bit grayscale image (depth = raw / scale, raw 0 invalid)
/// or from a text raster "DEPTH h w" followed by h*w values (<= 0 invalid).
DepthMap load_depth(const std::string& path, double scale = 1000.0);
void write_depth_text(std::ostream& out, const DepthMap& depth);
void write_depth_text(const std::string& path, const DepthMap& depth);
void write_depth16(const std::string& path, const DepthMap& depth, double scale = 1000.0);

/// Normals from a text raster "NORMALS h w" followed by h*w*3 values, or from
/// an 8-bit RGB image encoding n = 2 * rgb - 1.
NormalMap load_normals(const std::string& path);
void write_normals_text(const std::string& path, const NormalMap& normals);

/// Single line "fx fy cx cy".
Intrinsics load_intrinsics(const std::string& path);
void write_intrinsics(const std::string& path, const Intrinsics& K);

/// One pose per non-empty line: 12 reals, row-major 3x4 [R|t]. Rotations
/// within 1e-4 of orthonormal are projected onto the nearest rotation.
Pose parse_pose_line(std::string_view line);
std::vector<Pose> parse_pose_file(std::istream& in);
std::vector<Pose> load_pose_file(const std::string& path);
void write_pose_file(std::ostream& out, const std::vector<Pose>& poses);
void write_pose_file(const std::string& path, const std::vector<Pose>& poses);

/// Relative motion between two camera-to-world poses, mapping source-camera
/// coordinates to target-camera coordinates.
Pose relative_from_camera_to_world(const Pose& source_c2w, const Pose& target_c2w);

/// Region-id map as an 8-bit grayscale image (requires m <= 256).
void write_region_map(const std::string& path, const Grid<int>& ids);

/// One grayscale image per map: prefix_00.png, prefix_01.png, ...
void write_maps(const std::string& prefix, const std::vector<ScalarField>& maps,
                const std::string& extension = ".png");

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::string& path);
std::string sha256_bytes(std::string_view bytes);

}  // namespace planewarp
