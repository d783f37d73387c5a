#include "trajex/codec.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "trajex/error.hpp"

namespace trajex::codec {

namespace {
constexpr double kMinSpan = 1e-3;
}

void BinSpec::validate() const {
  for (std::size_t d = 0; d < dims.size(); ++d) {
    if (!std::isfinite(dims[d].lo) || !std::isfinite(dims[d].hi) || !(dims[d].lo < dims[d].hi))
      throw InputError(std::string("bin spec: dimension ") + kDimNames[d] +
                       " needs finite lo < hi");
  }
}

int bin_index(double v, const Bounds &b) {
  const double scaled = (v - b.lo) / (b.hi - b.lo) * kNumBins;
  if (!(scaled >= 0.0)) return 0;  // also catches NaN
  if (scaled >= kNumBins) return kNumBins - 1;
  return std::min(static_cast<int>(std::floor(scaled)), kNumBins - 1);
}

double bin_center(int bin, const Bounds &b) {
  return b.lo + (bin + 0.5) * (b.hi - b.lo) / kNumBins;
}

BinSpec fit_bins(std::span<const ObjectTrajectory> corpus, double margin) {
  if (!(margin >= 0.0)) throw InputError("fit_bins: margin must be >= 0");
  std::array<double, 6> lo, hi;
  lo.fill(std::numeric_limits<double>::infinity());
  hi.fill(-std::numeric_limits<double>::infinity());
  std::size_t count = 0;
  for (const auto &traj : corpus) {
    for (const auto &pose : traj.poses) {
      const auto v = pose.to_array();
      for (int d = 0; d < 6; ++d) {
        lo[d] = std::min(lo[d], v[d]);
        hi[d] = std::max(hi[d], v[d]);
      }
      ++count;
    }
  }
  if (count == 0) throw InputError("fit_bins: corpus has no poses");

  BinSpec spec;
  for (int d = 0; d < 6; ++d) {
    const double span = hi[d] - lo[d];
    double l = lo[d] - margin * span;
    double h = hi[d] + margin * span;
    if (h - l < kMinSpan) {
      const double mid = 0.5 * (lo[d] + hi[d]);
      l = mid - 0.5 * kMinSpan;
      h = mid + 0.5 * kMinSpan;
    }
    if (d >= 3) {
      l = std::max(l, -std::numbers::pi);
      h = std::min(h, std::numbers::pi);
      if (h - l < kMinSpan) {  // corpus entirely beyond ±π
        if (h >= std::numbers::pi) {
          l = std::min(l, std::numbers::pi - kMinSpan);
        } else {
          h = std::max(h, -std::numbers::pi + kMinSpan);
        }
      }
    }
    spec.dims[d] = {l, h};
  }
  spec.validate();
  return spec;
}

TokenizedTrajectory discretize(const ObjectTrajectory &trajectory, const BinSpec &bins,
                               TokenLayout layout) {
  bins.validate();
  TokenizedTrajectory out;
  const std::size_t n = std::min(trajectory.poses.size(), kMaxPoses);
  out.grid.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto v = trajectory.poses[k].to_array();
    BinRow row;
    for (int d = 0; d < 6; ++d) {
      if (v[d] < bins.dims[d].lo || v[d] > bins.dims[d].hi) ++out.clamp_count;
      row[d] = bin_index(v[d], bins.dims[d]);
    }
    out.grid.push_back(row);
  }
  out.token_stream = grid_to_stream(out.grid, layout);
  return out;
}

std::vector<Pose> undiscretize(std::span<const BinRow> grid, const BinSpec &bins) {
  bins.validate();
  std::vector<Pose> poses;
  poses.reserve(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    std::array<double, 6> v;
    for (int d = 0; d < 6; ++d) {
      const int b = grid[k][d];
      if (b < 0 || b >= kNumBins)
        throw InputError("undiscretize: bin " + std::to_string(b) + " outside [0, 255] at row " +
                         std::to_string(k));
      v[d] = bin_center(b, bins.dims[d]);
    }
    poses.push_back(Pose::from_array(v));
  }
  return poses;
}

std::vector<int> grid_to_stream(std::span<const BinRow> grid, TokenLayout layout) {
  std::vector<int> stream;
  stream.reserve(grid.size() * 6 + 1);
  for (const auto &row : grid)
    for (int b : row) stream.push_back(layout.base_id + b);
  stream.push_back(layout.stop_id());
  return stream;
}

DecodedStream decode_token_stream(std::span<const int> stream, const BinSpec &bins,
                                  TokenLayout layout) {
  DecodedStream out;
  BinRow row{};
  int filled = 0;
  for (std::size_t i = 0; i < stream.size(); ++i) {
    const int id = stream[i];
    if (id == layout.stop_id()) {
      out.stopped = true;
      break;
    }
    if (id < layout.base_id || id >= layout.stop_id())
      throw DecodeError("token id " + std::to_string(id) + " outside trajectory range", i);
    row[filled++] = id - layout.base_id;
    if (filled == 6) {
      out.grid.push_back(row);
      filled = 0;
    }
  }
  out.incomplete_group = filled != 0;
  out.poses = undiscretize(out.grid, bins);
  return out;
}

}  // namespace trajex::codec
