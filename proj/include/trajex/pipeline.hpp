#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "trajex/clip.hpp"
#include "trajex/config.hpp"

namespace trajex {

enum class ClipStatus { kAccepted, kRejected, kSkipped };

std::string_view to_string(ClipStatus status);

/// Result of running one clip through extraction and curation.
struct ClipOutcome {
  std::string clip_id;
  ClipStatus status = ClipStatus::kAccepted;
  std::optional<extraction::RejectReason> reason;
  std::string detail;
  std::optional<TrajectoryRecord> record;  ///< set when accepted
};

/// Mask selection, pairwise registration, chaining, lifting and curation.
/// Failures are reported in the outcome, not thrown. Frame preparation and
/// pair registration run on up to `jobs` threads; results do not depend on it.
ClipOutcome extract_clip(const ClipBundle &clip, const PipelineConfig &config);

/// Loads and extracts each manifest in order. I/O failures become
/// input-error rejections and the batch continues.
std::vector<ClipOutcome> extract_batch(std::span<const std::filesystem::path> manifests,
                                       const PipelineConfig &config);

}  // namespace trajex
