#include "trajex/extraction.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "trajex/error.hpp"

namespace trajex::extraction {

void TrackSet::validate() const {
  if (num_frames < 2) throw InputError("tracks: need at least 2 frames");
  if (num_points < 3) throw InputError("tracks: need at least 3 points");
  const std::size_t n = std::size_t(num_frames) * num_points;
  if (positions.size() != n || visibility.size() != n)
    throw InputError("tracks: buffer size does not match T x P");
  if (timestamps.size() != std::size_t(num_frames))
    throw InputError("tracks: timestamp count does not match T");
  for (int t = 1; t < num_frames; ++t)
    if (!(timestamps[t] > timestamps[t - 1]))
      throw InputError("tracks: timestamps must be strictly increasing");
}

double rect_iou(const PixelRect &a, const PixelRect &b) {
  const double iw = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double ih = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  const double inter = (iw > 0 && ih > 0) ? iw * ih : 0.0;
  const double area_a = (a.x_max - a.x_min) * (a.y_max - a.y_min);
  const double area_b = (b.x_max - b.x_min) * (b.y_max - b.y_min);
  const double uni = area_a + area_b - inter;
  return uni > 0 ? inter / uni : 0.0;
}

std::optional<PixelRect> tight_rect(const SegmentationMask &mask) {
  int u0 = mask.width, v0 = mask.height, u1 = -1, v1 = -1;
  for (int v = 0; v < mask.height; ++v) {
    for (int u = 0; u < mask.width; ++u) {
      if (!mask.at(u, v)) continue;
      u0 = std::min(u0, u);
      v0 = std::min(v0, v);
      u1 = std::max(u1, u);
      v1 = std::max(v1, v);
    }
  }
  if (u1 < 0) return std::nullopt;
  return PixelRect{double(u0), double(v0), double(u1 + 1), double(v1 + 1)};
}

MaskSelection select_object_mask(std::span<const SegmentationMask> candidates,
                                 std::span<const DetectionBox> detections,
                                 double min_confidence) {
  if (candidates.empty()) throw InputError("select_object_mask: no mask candidates");
  for (const auto &c : candidates)
    if (c.mask.size() != std::size_t(c.width) * c.height)
      throw InputError("select_object_mask: mask buffer has wrong length");

  const DetectionBox *best = nullptr;
  for (const bool frame0_only : {true, false}) {
    for (const auto &d : detections) {
      if (frame0_only && d.frame_index != 0) continue;
      if (!best || d.confidence > best->confidence) best = &d;
    }
    if (best) break;
  }
  if (!best || best->confidence < min_confidence)
    throw LowConfidenceError("detection confidence below threshold",
                             best ? best->confidence : 0.0);

  const PixelRect box{best->x_min, best->y_min, best->x_max, best->y_max};
  MaskSelection sel;
  sel.confidence = best->confidence;
  double best_iou = -1.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto rect = tight_rect(candidates[i]);
    const double iou = rect ? rect_iou(*rect, box) : 0.0;
    if (iou > best_iou) {
      best_iou = iou;
      sel.index = i;
      sel.iou = iou;
    }
  }
  return sel;
}

TrackSet project_tracks(const TrackSet &tracks, std::span<const RigidTransform> extrinsics) {
  if (extrinsics.size() != std::size_t(tracks.num_frames))
    throw InputError("project_tracks: extrinsics count " + std::to_string(extrinsics.size()) +
                     " does not match frame count " + std::to_string(tracks.num_frames));
  TrackSet out = tracks;
  for (int t = 0; t < tracks.num_frames; ++t)
    for (int p = 0; p < tracks.num_points; ++p) out.at(t, p) = extrinsics[t](tracks.at(t, p));
  return out;
}

Mat3 kabsch_rotation(std::span<const Vec3> cloud0, std::span<const Vec3> cloud_t,
                     std::span<const std::uint8_t> mutual_visibility) {
  if (cloud0.size() != cloud_t.size() || cloud0.size() != mutual_visibility.size())
    throw InputError("extract_rotation: point sets differ in length");

  Vec3 c0 = Vec3::Zero(), ct = Vec3::Zero();
  std::size_t n = 0;
  for (std::size_t i = 0; i < cloud0.size(); ++i) {
    if (!mutual_visibility[i]) continue;
    c0 += cloud0[i];
    ct += cloud_t[i];
    ++n;
  }
  if (n < 3) throw DegenerateGeometryError("extract_rotation: fewer than 3 visible points");
  c0 /= double(n);
  ct /= double(n);

  Mat3 h = Mat3::Zero();
  for (std::size_t i = 0; i < cloud0.size(); ++i) {
    if (!mutual_visibility[i]) continue;
    h += (cloud0[i] - c0) * (cloud_t[i] - ct).transpose();
  }

  Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 sigma = svd.singularValues();
  if (!(sigma(0) > 0.0) || sigma(1) <= 1e-10 * sigma(0))
    throw DegenerateGeometryError("extract_rotation: visible points are collinear");

  const Mat3 &u = svd.matrixU();
  Mat3 v = svd.matrixV();
  Mat3 r = v * u.transpose();
  if (r.determinant() < 0.0) {
    v.col(2) = -v.col(2);
    r = v * u.transpose();
  }
  return r;
}

RotationVector extract_rotation(std::span<const Vec3> cloud0, std::span<const Vec3> cloud_t,
                                std::span<const std::uint8_t> mutual_visibility) {
  return matrix_to_rotvec(kabsch_rotation(cloud0, cloud_t, mutual_visibility));
}

Vec3 extract_position(std::span<const Vec3> cloud_t, std::span<const std::uint8_t> visibility) {
  if (cloud_t.size() != visibility.size())
    throw InputError("extract_position: visibility length differs from points");
  Vec3 sum = Vec3::Zero();
  std::size_t n = 0;
  for (std::size_t i = 0; i < cloud_t.size(); ++i) {
    if (!visibility[i]) continue;
    sum += cloud_t[i];
    ++n;
  }
  if (n == 0) throw DegenerateGeometryError("extract_position: no visible points");
  return sum / double(n);
}

namespace {

struct BoxFit {
  Vec3 lo, hi;
  double volume;
};

BoxFit fit_along(std::span<const Vec3> points, const Mat3 &axes) {
  BoxFit f;
  f.lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  f.hi = -f.lo;
  for (const auto &p : points) {
    const Vec3 q = axes.transpose() * p;
    f.lo = f.lo.cwiseMin(q);
    f.hi = f.hi.cwiseMax(q);
  }
  f.volume = (f.hi - f.lo).cwiseMax(kMinBoxExtent).prod();
  return f;
}

// Rotating two box axes about the third; returns the best of the sampled
// angles, or the input when none is strictly smaller.
Mat3 sweep(std::span<const Vec3> points, const Mat3 &axes, double &volume, double half_range,
           double step) {
  Mat3 best = axes;
  for (int a = 0; a < 3; ++a) {
    const Mat3 base = best;
    const int steps = static_cast<int>(std::round(2.0 * half_range / step));
    for (int i = 0; i <= steps; ++i) {
      const double angle = -half_range + i * step;
      if (angle == 0.0) continue;
      const Mat3 cand = base * Eigen::AngleAxisd(angle, Vec3::Unit(a)).toRotationMatrix();
      const double vol = fit_along(points, cand).volume;
      if (vol < volume * (1.0 - 1e-12)) {
        volume = vol;
        best = cand;
      }
    }
  }
  return best;
}

}  // namespace

OrientedBox3D min_bounding_box(std::span<const Vec3> points) {
  if (points.empty()) throw InputError("min_bounding_box: no points");

  const Vec3 mean = centroid(points);
  Mat3 cov = Mat3::Zero();
  for (const auto &p : points) cov += (p - mean) * (p - mean).transpose();
  Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
  Mat3 axes;
  for (int i = 0; i < 3; ++i) axes.col(i) = es.eigenvectors().col(2 - i);  // descending
  if (axes.determinant() < 0.0) axes.col(2) = -axes.col(2);

  // PCA alone leaves the orientation arbitrary when the covariance is
  // (near-)isotropic, e.g. cube corners; refine by axis-wise rotation sweeps.
  double volume = fit_along(points, axes).volume;
  const double deg = std::numbers::pi / 180.0;
  for (int round = 0; round < 2; ++round) axes = sweep(points, axes, volume, 45.0 * deg, 1.0 * deg);
  for (int round = 0; round < 2; ++round) axes = sweep(points, axes, volume, 1.0 * deg, 0.05 * deg);

  const BoxFit fit = fit_along(points, axes);
  OrientedBox3D box;
  box.axes = axes;
  box.extents = (fit.hi - fit.lo).cwiseMax(kMinBoxExtent);
  box.center = axes * (0.5 * (fit.lo + fit.hi));
  return box;
}

RotationVector unwrap_rotation(const RotationVector &r, const RotationVector &previous) {
  const double angle = r.angle();
  if (angle < 1e-12) return r;
  const Vec3 axis = r.value / angle;
  RotationVector best = r;
  double best_d = (r.value - previous.value).norm();
  for (const double shift : {-2.0 * std::numbers::pi, 2.0 * std::numbers::pi}) {
    const Vec3 cand = r.value + shift * axis;
    const double d = (cand - previous.value).norm();
    if (d < best_d) {
      best_d = d;
      best = RotationVector(cand);
    }
  }
  return best;
}

ObjectTrajectory assemble_trajectory(const TrackSet &projected, std::string action,
                                     std::string object_name) {
  projected.validate();
  ObjectTrajectory traj;
  traj.action = std::move(action);
  traj.object_name = std::move(object_name);

  const auto frame0 = projected.frame(0);
  const auto vis0 = projected.frame_visibility(0);
  std::vector<std::uint8_t> mutual(projected.num_points);
  RotationVector previous;
  for (int k = 0; k < projected.num_frames; ++k) {
    const auto frame = projected.frame(k);
    const auto vis = projected.frame_visibility(k);
    Pose pose;
    try {
      pose.position = extract_position(frame, vis);
      if (k > 0) {
        for (int p = 0; p < projected.num_points; ++p) mutual[p] = vis0[p] && vis[p];
        pose.rotation = unwrap_rotation(extract_rotation(frame0, frame, mutual), previous);
      }
    } catch (const DegenerateGeometryError &e) {
      throw DegenerateGeometryError(std::string(e.what()) + " (frame " + std::to_string(k) + ")",
                                    k);
    }
    previous = pose.rotation;
    traj.poses.push_back(pose);
  }

  std::vector<Vec3> visible0;
  for (int p = 0; p < projected.num_points; ++p)
    if (vis0[p]) visible0.push_back(frame0[p]);
  traj.bbox0 = min_bounding_box(visible0);
  return traj;
}

std::string_view to_string(RejectReason reason) {
  switch (reason) {
    case RejectReason::kLowConfidence: return "low-confidence";
    case RejectReason::kRegistrationFailure: return "registration-failure";
    case RejectReason::kDegenerateGeometry: return "degenerate-geometry";
    case RejectReason::kOutOfFrame: return "out-of-frame";
    case RejectReason::kNonFinite: return "non-finite";
    case RejectReason::kNonRigid: return "non-rigid";
    case RejectReason::kInputError: return "input-error";
  }
  return "unknown";
}

std::optional<RejectReason> reject_reason_from_string(std::string_view s) {
  for (auto r : {RejectReason::kLowConfidence, RejectReason::kRegistrationFailure,
                 RejectReason::kDegenerateGeometry, RejectReason::kOutOfFrame,
                 RejectReason::kNonFinite, RejectReason::kNonRigid, RejectReason::kInputError})
    if (to_string(r) == s) return r;
  return std::nullopt;
}

CurationResult curate(const ObjectTrajectory &trajectory, const CameraIntrinsics &intrinsics) {
  CurationResult res;
  for (std::size_t k = 0; k < trajectory.poses.size(); ++k) {
    if (!trajectory.poses[k].finite()) {
      res.accepted = false;
      res.reason = RejectReason::kNonFinite;
      res.detail = "pose " + std::to_string(k) + " has non-finite values";
      return res;
    }
  }
  for (std::size_t k = 0; k < trajectory.poses.size(); ++k) {
    const Vec3 &p = trajectory.poses[k].position;
    if (p.z() <= 0.0 || !intrinsics.contains(intrinsics.project(p))) {
      res.accepted = false;
      res.reason = RejectReason::kOutOfFrame;
      res.detail = "pose " + std::to_string(k) + " centroid projects outside the image";
      return res;
    }
  }
  return res;
}

}  // namespace trajex::extraction
