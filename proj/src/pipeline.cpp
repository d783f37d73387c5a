#include "trajex/pipeline.hpp"

#include <atomic>
#include <exception>
#include <functional>
#include <thread>

#include "trajex/error.hpp"
#include "trajex/io.hpp"

namespace trajex {

using extraction::RejectReason;

std::string_view to_string(ClipStatus status) {
  switch (status) {
    case ClipStatus::kAccepted: return "accepted";
    case ClipStatus::kRejected: return "rejected";
    case ClipStatus::kSkipped: return "skipped";
  }
  return "unknown";
}

namespace {

/// Runs fn(0..n-1) on up to `jobs` threads. Every index runs; the exception
/// of the lowest failing index is rethrown so failures do not depend on
/// scheduling.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)> &fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min<std::size_t>(std::max(jobs, 1), n);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto &t : pool) t.join();
  }
  for (const auto &e : errors)
    if (e) std::rethrow_exception(e);
}

ClipOutcome reject(const std::string &id, RejectReason reason, std::string detail) {
  ClipOutcome o;
  o.clip_id = id;
  o.status = ClipStatus::kRejected;
  o.reason = reason;
  o.detail = std::move(detail);
  return o;
}

}  // namespace

ClipOutcome extract_clip(const ClipBundle &clip, const PipelineConfig &config) {
  const auto &m = clip.manifest;
  const std::string &id = m.clip_id;
  try {
    config.validate();
    clip.validate();
  } catch (const InputError &e) {
    return reject(id, RejectReason::kInputError, e.what());
  }
  if (!m.rigid) {
    ClipOutcome o;
    o.clip_id = id;
    o.status = ClipStatus::kSkipped;
    o.reason = RejectReason::kNonRigid;
    o.detail = "clip is flagged non-rigid";
    return o;
  }

  extraction::MaskSelection selection;
  try {
    selection = extraction::select_object_mask(clip.masks, clip.detections,
                                               config.curation.min_detection_confidence);
  } catch (const LowConfidenceError &e) {
    return reject(id, RejectReason::kLowConfidence, e.what());
  }

  const auto &reg = config.registration;
  const std::size_t n_frames = clip.frames.size();
  std::vector<registration::PreparedFrame> prepared(n_frames);
  std::vector<registration::RegistrationResult> pairs(n_frames - 1);
  std::vector<PairProvenance> provenance(n_frames - 1);
  try {
    parallel_for(n_frames, config.jobs, [&](std::size_t k) {
      prepared[k] = registration::prepare_frame(clip.frames[k], m.intrinsics, reg, int(k));
    });
    parallel_for(n_frames - 1, config.jobs, [&](std::size_t k) {
      const std::uint64_t seed = registration::derive_seed(config.seed, k);
      pairs[k] = registration::register_prepared(prepared[k + 1], prepared[k], reg, seed, int(k));
      provenance[k] = {seed, pairs[k].fitness, pairs[k].inlier_rmse};
    });
  } catch (const registration::RegistrationError &e) {
    return reject(id, RejectReason::kRegistrationFailure, e.what());
  }
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    if (pairs[k].fitness < config.curation.min_registration_fitness ||
        pairs[k].inlier_rmse > config.curation.max_registration_rmse)
      return reject(id, RejectReason::kRegistrationFailure,
                    "pair " + std::to_string(k) + " fitness " + std::to_string(pairs[k].fitness) +
                        ", rmse " + std::to_string(pairs[k].inlier_rmse) +
                        " outside curation limits");
  }

  std::vector<RigidTransform> motions;
  for (const auto &p : pairs) motions.push_back(p.transform);
  const auto extrinsics = registration::chain_extrinsics(motions);

  ObjectTrajectory trajectory;
  try {
    const auto projected = extraction::project_tracks(clip.tracks, extrinsics);
    trajectory = extraction::assemble_trajectory(projected, m.action_description, m.object_name);
  } catch (const DegenerateGeometryError &e) {
    return reject(id, RejectReason::kDegenerateGeometry, e.what());
  } catch (const InputError &e) {
    return reject(id, RejectReason::kInputError, e.what());
  }

  const auto verdict = extraction::curate(trajectory, m.intrinsics);
  if (!verdict.accepted) return reject(id, *verdict.reason, verdict.detail);

  ClipOutcome o;
  o.clip_id = id;
  o.status = ClipStatus::kAccepted;
  TrajectoryRecord r;
  r.clip_id = id;
  r.trajectory = std::move(trajectory);
  r.intrinsics = m.intrinsics;
  r.provenance.seed = config.seed;
  r.provenance.pairs = std::move(provenance);
  r.provenance.mask_index = selection.index;
  r.provenance.detection_confidence = selection.confidence;
  o.record = std::move(r);
  return o;
}

std::vector<ClipOutcome> extract_batch(std::span<const std::filesystem::path> manifests,
                                       const PipelineConfig &config) {
  // Clips run in parallel; each clip then works single-threaded. Outcomes are
  // stored by manifest index, so output order never depends on scheduling.
  std::vector<ClipOutcome> out(manifests.size());
  PipelineConfig per_clip = config;
  if (manifests.size() > 1) per_clip.jobs = 1;
  parallel_for(manifests.size(), config.jobs, [&](std::size_t i) {
    ClipBundle clip;
    try {
      clip = io::load_clip(io::read_manifest(manifests[i]));
    } catch (const std::exception &e) {
      out[i] = reject(manifests[i].string(), RejectReason::kInputError, e.what());
      return;
    }
    out[i] = extract_clip(clip, per_clip);
  });
  return out;
}

}  // namespace trajex
