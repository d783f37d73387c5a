#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "trajex/clip.hpp"
#include "trajex/codec.hpp"
#include "trajex/extraction.hpp"
#include "trajex/geometry.hpp"

namespace trajex::io {

namespace fs = std::filesystem;

/// Whole file as bytes. Throws InputError when it cannot be opened.
std::string read_file(const fs::path &path);
void write_file(const fs::path &path, const std::string &bytes);

/// Parses JSON; syntax errors become ParseError with byte offset and line.
nlohmann::json parse_json(const std::string &text, const std::string &origin);
nlohmann::json read_json_file(const fs::path &path);

/// "EGDP", u32 width, u32 height, width·height little-endian f32 meters.
DepthImage read_depth(const fs::path &path);
void write_depth(const fs::path &path, const DepthImage &depth);

/// Binary PPM (P6), 8-bit.
ColorImage read_ppm(const fs::path &path);
void write_ppm(const fs::path &path, const ColorImage &image);

/// Binary PGM (P5), 8-bit; nonzero pixels belong to the object.
extraction::SegmentationMask read_pgm(const fs::path &path, const std::string &label = {});
void write_pgm(const fs::path &path, const extraction::SegmentationMask &mask);

/// "EGTR", u32 T, u32 P, T·P·3 f32 positions, T·P u8 visibility.
/// Timestamps are left at zero; load_clip fills them from the manifest.
extraction::TrackSet read_tracks(const fs::path &path);
void write_tracks(const fs::path &path, const extraction::TrackSet &tracks);

std::vector<extraction::DetectionBox> detections_from_json(const nlohmann::json &j);
nlohmann::json detections_to_json(const std::vector<extraction::DetectionBox> &boxes);

nlohmann::json intrinsics_to_json(const CameraIntrinsics &k);
CameraIntrinsics intrinsics_from_json(const nlohmann::json &j);

ClipManifest manifest_from_json(const nlohmann::json &j, const fs::path &base_dir);
nlohmann::json manifest_to_json(const ClipManifest &m);
ClipManifest read_manifest(const fs::path &path);

/// Reads every file a manifest names and validates the result.
ClipBundle load_clip(const ClipManifest &manifest);

nlohmann::json pose_to_json(const Pose &p);
Pose pose_from_json(const nlohmann::json &j);
nlohmann::json box_to_json(const OrientedBox3D &b);
OrientedBox3D box_from_json(const nlohmann::json &j);

nlohmann::json record_to_json(const TrajectoryRecord &r);
TrajectoryRecord record_from_json(const nlohmann::json &j);

/// One JSON object per line. Errors report the file, byte offset and line.
std::vector<nlohmann::json> read_jsonl(const fs::path &path);
std::vector<TrajectoryRecord> read_records(const fs::path &path);
/// Compact single-line dump followed by '\n'.
std::string jsonl_line(const nlohmann::json &j);

nlohmann::json bins_to_json(const codec::BinSpec &spec);
codec::BinSpec bins_from_json(const nlohmann::json &j);

}  // namespace trajex::io
