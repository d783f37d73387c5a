#include "trajex/clip.hpp"

#include <cmath>

#include "trajex/error.hpp"

namespace trajex {

namespace {

void check_frame_count(const ClipManifest &m, std::size_t n, const std::string &w) {
  if (n < 2) throw InputError(w + "needs at least two frames");
  const auto max_frames = std::size_t(std::floor((m.t_end - m.t_start) * m.fps + 1e-6)) + 1;
  if (n > max_frames)
    throw InputError(w + std::to_string(n) + " frames do not fit the time span at this fps");
}

}  // namespace

void ClipManifest::validate(bool with_paths) const {
  const std::string w = "clip " + clip_id + ": ";
  if (clip_id.empty()) throw InputError("manifest: empty clip_id");
  intrinsics.validate();
  if (!std::isfinite(t_start) || !std::isfinite(t_end) || !(t_start < t_end))
    throw InputError(w + "t_start must precede t_end");
  if (t_end - t_start > kMaxSpan + 1e-9)
    throw InputError(w + "clip spans " + std::to_string(t_end - t_start) + " s, limit is 4 s");
  if (!(fps > 0.0) || !std::isfinite(fps)) throw InputError(w + "fps must be > 0");
  if (!with_paths) return;
  const std::size_t n = paths.frames.size();
  check_frame_count(*this, n, w);
  if (paths.depths.size() != n)
    throw InputError(w + "frame and depth counts differ (" + std::to_string(n) + " vs " +
                     std::to_string(paths.depths.size()) + ")");
  if (paths.masks.empty()) throw InputError(w + "no candidate masks");
  if (paths.detections.empty() || paths.tracks.empty())
    throw InputError(w + "detections and tracks paths are required");
}

std::filesystem::path ClipManifest::resolve(const std::string &p) const {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base_dir / path;
}

void ClipBundle::validate() const {
  manifest.validate(false);
  const std::string w = "clip " + manifest.clip_id + ": ";
  check_frame_count(manifest, frames.size(), w);
  const auto &k = manifest.intrinsics;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto &f = frames[i];
    if (f.depth.width != k.width || f.depth.height != k.height || f.color.width != k.width ||
        f.color.height != k.height)
      throw InputError(w + "frame " + std::to_string(i) + " size does not match intrinsics");
  }
  for (std::size_t i = 0; i < masks.size(); ++i)
    if (masks[i].width != k.width || masks[i].height != k.height)
      throw InputError(w + "mask " + std::to_string(i) + " size does not match intrinsics");
  if (masks.empty()) throw InputError(w + "no candidate masks");
  tracks.validate();
  if (std::size_t(tracks.num_frames) != frames.size())
    throw InputError(w + "track frames (" + std::to_string(tracks.num_frames) +
                     ") differ from RGB-D frames (" + std::to_string(frames.size()) + ")");
}

}  // namespace trajex
