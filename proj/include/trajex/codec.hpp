#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "trajex/trajectory.hpp"

namespace trajex::codec {

inline constexpr int kNumBins = 256;
/// Longest trajectory kept by discretize; longer ones are cropped.
inline constexpr std::size_t kMaxPoses = 20;
inline constexpr std::array<const char *, 6> kDimNames = {"x", "y", "z", "roll", "pitch", "yaw"};

struct Bounds {
  double lo = 0.0;
  double hi = 1.0;
  double width() const { return hi - lo; }
};

/// Per-dimension quantization bounds for (x, y, z, rx, ry, rz).
struct BinSpec {
  std::array<Bounds, 6> dims;
  void validate() const;
};

using BinRow = std::array<int, 6>;

/// Vocabulary layout: trajectory tokens base_id .. base_id+255, stop token
/// base_id + 256.
struct TokenLayout {
  int base_id = 0;
  int stop_id() const { return base_id + kNumBins; }
};

struct TokenizedTrajectory {
  std::vector<BinRow> grid;
  std::vector<int> token_stream;  ///< 6N tokens followed by the stop token
  std::size_t clamp_count = 0;    ///< values that fell outside their bounds
};

/// floor((v - lo) / (hi - lo) · 256), clamped to [0, 255].
int bin_index(double v, const Bounds &b);
/// Center of a bin: lo + (bin + 0.5) · (hi - lo) / 256.
double bin_center(int bin, const Bounds &b);

/// Data-fit bounds: corpus min/max widened by `margin` of the span, spans
/// below 1e-3 widened to 1e-3, rotation dims clamped to [-π, π].
BinSpec fit_bins(std::span<const ObjectTrajectory> corpus, double margin = 0.05);

TokenizedTrajectory discretize(const ObjectTrajectory &trajectory, const BinSpec &bins,
                               TokenLayout layout = {});

/// Bin-center poses for every grid row. Throws InputError for bins outside [0, 255].
std::vector<Pose> undiscretize(std::span<const BinRow> grid, const BinSpec &bins);

std::vector<int> grid_to_stream(std::span<const BinRow> grid, TokenLayout layout = {});

struct DecodedStream {
  std::vector<BinRow> grid;
  std::vector<Pose> poses;
  bool incomplete_group = false;  ///< trailing partial group was dropped
  bool stopped = false;           ///< a stop token was seen
};

/// Reads 6-token groups until the stop token or the end of the stream.
/// Throws DecodeError for ids outside the reserved range.
DecodedStream decode_token_stream(std::span<const int> stream, const BinSpec &bins,
                                  TokenLayout layout = {});

}  // namespace trajex::codec
