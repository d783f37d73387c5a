#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "support.hpp"
#include "trajex/error.hpp"
#include "trajex/extraction.hpp"

namespace trajex::extraction {
namespace {

using namespace trajex::testing;

constexpr double kPi = std::numbers::pi;

SegmentationMask rect_mask(int w, int h, int u0, int v0, int u1, int v1) {
  SegmentationMask m{w, h, std::vector<std::uint8_t>(std::size_t(w) * h, 0), "obj"};
  for (int v = v0; v < v1; ++v)
    for (int u = u0; u < u1; ++u) m.mask[std::size_t(v) * w + u] = 255;
  return m;
}

std::vector<std::uint8_t> all_visible(std::size_t n) { return std::vector<std::uint8_t>(n, 1); }

std::vector<Vec3> moved(const std::vector<Vec3> &pts, const RigidTransform &t) {
  std::vector<Vec3> out;
  for (const auto &p : pts) out.push_back(t(p));
  return out;
}

double geodesic(const Mat3 &a, const Mat3 &b) { return matrix_to_rotvec(a.transpose() * b).angle(); }

TEST(RectIou, HandComputedOverlap) {
  EXPECT_DOUBLE_EQ(rect_iou({0, 0, 2, 2}, {1, 1, 3, 3}), 1.0 / 7.0);
  EXPECT_EQ(rect_iou({0, 0, 1, 1}, {2, 2, 3, 3}), 0.0);
  EXPECT_EQ(rect_iou({0, 0, 4, 4}, {0, 0, 4, 4}), 1.0);
}

TEST(TightRect, CoversSetPixels) {
  const auto r = tight_rect(rect_mask(10, 8, 2, 3, 5, 7));
  ASSERT_TRUE(r);
  EXPECT_EQ(r->x_min, 2);
  EXPECT_EQ(r->y_min, 3);
  EXPECT_EQ(r->x_max, 5);
  EXPECT_EQ(r->y_max, 7);
  EXPECT_FALSE(tight_rect(rect_mask(4, 4, 0, 0, 0, 0)));
}

TEST(SelectObjectMask, ExactMatchWins) {
  const std::vector<SegmentationMask> masks{rect_mask(20, 20, 0, 0, 5, 5),
                                            rect_mask(20, 20, 10, 10, 16, 14)};
  const std::vector<DetectionBox> dets{{10, 10, 16, 14, 0.8, 0}};
  const auto sel = select_object_mask(masks, dets);
  EXPECT_EQ(sel.index, 1u);
  EXPECT_DOUBLE_EQ(sel.iou, 1.0);
  EXPECT_DOUBLE_EQ(sel.confidence, 0.8);
}

TEST(SelectObjectMask, DisjointSoleCandidateIsSelected) {
  const std::vector<SegmentationMask> masks{rect_mask(20, 20, 0, 0, 2, 2)};
  const std::vector<DetectionBox> dets{{10, 10, 12, 12, 0.3, 0}};
  const auto sel = select_object_mask(masks, dets);
  EXPECT_EQ(sel.index, 0u);
  EXPECT_EQ(sel.iou, 0.0);
}

TEST(SelectObjectMask, UsesMostConfidentDetection) {
  const std::vector<SegmentationMask> masks{rect_mask(10, 10, 0, 0, 2, 2),
                                            rect_mask(10, 10, 1, 1, 3, 3)};
  // Overlaps: detection (0,0,2,2) favours mask 0; (1,1,3,3) favours mask 1.
  const std::vector<DetectionBox> dets{{0, 0, 2, 2, 0.5, 0}, {1, 1, 3, 3, 0.9, 0}};
  EXPECT_EQ(select_object_mask(masks, dets).index, 1u);
}

TEST(SelectObjectMask, LowConfidenceRejects) {
  const std::vector<SegmentationMask> masks{rect_mask(10, 10, 0, 0, 2, 2)};
  const std::vector<DetectionBox> dets{{0, 0, 2, 2, 0.29, 0}};
  EXPECT_THROW(select_object_mask(masks, dets), LowConfidenceError);
  EXPECT_THROW(select_object_mask(masks, {}), LowConfidenceError);
  EXPECT_EQ(kMinDetectionConfidence, 0.3);
}

TEST(SelectObjectMask, EmptyCandidatesIsInputError) {
  const std::vector<DetectionBox> dets{{0, 0, 2, 2, 0.9, 0}};
  EXPECT_THROW(select_object_mask({}, dets), InputError);
}

TrackSet make_tracks(int frames, const std::vector<Vec3> &pts) {
  TrackSet t(frames, int(pts.size()));
  for (int k = 0; k < frames; ++k) {
    t.timestamps[k] = 0.05 * k;
    for (std::size_t p = 0; p < pts.size(); ++p) t.at(k, int(p)) = pts[p];
  }
  return t;
}

TEST(ProjectTracks, IdentityLeavesTracksUnchanged) {
  Rng rng(1);
  const TrackSet t = make_tracks(4, random_points(rng, 10));
  const std::vector<RigidTransform> ext(4);
  const TrackSet out = project_tracks(t, ext);
  EXPECT_EQ(out.positions, t.positions);
  EXPECT_EQ(out.visibility, t.visibility);
}

TEST(ProjectTracks, WorldStaticPointStaysFixed) {
  // Camera moves (0, 0, -0.1) per frame, so a static point recedes by 0.1 per frame.
  const Vec3 world(0.1, -0.2, 1.0);
  TrackSet t(5, 3);
  std::vector<RigidTransform> ext(5);
  for (int k = 0; k < 5; ++k) {
    t.timestamps[k] = k;
    ext[k].translation = Vec3(0, 0, -0.1 * k);
    for (int p = 0; p < 3; ++p) t.at(k, p) = invert(ext[k])(world + Vec3(p, 0, 0));
  }
  const TrackSet out = project_tracks(t, ext);
  for (int k = 0; k < 5; ++k)
    for (int p = 0; p < 3; ++p) EXPECT_LT((out.at(k, p) - world - Vec3(p, 0, 0)).norm(), 1e-12);
}

TEST(ProjectTracks, RotatesSingleFrame) {
  TrackSet t = make_tracks(2, {{1, 0, 1}, {0, 1, 1}, {1, 1, 1}});
  std::vector<RigidTransform> ext(2);
  ext[1].rotation = rotvec_to_matrix(RotationVector(0, 0, kPi / 2));
  const TrackSet out = project_tracks(t, ext);
  EXPECT_LT((out.at(1, 0) - Vec3(0, 1, 1)).norm(), 1e-12);
  EXPECT_EQ(out.at(0, 0), Vec3(1, 0, 1));
}

TEST(ProjectTracks, LengthMismatchIsInputError) {
  const TrackSet t = make_tracks(3, {{1, 0, 1}, {0, 1, 1}, {1, 1, 1}});
  EXPECT_THROW(project_tracks(t, std::vector<RigidTransform>(2)), InputError);
}

TEST(ExtractRotation, IdenticalCloudsGiveZero) {
  Rng rng(2);
  const auto pts = random_points(rng, 50);
  EXPECT_LT(extract_rotation(pts, pts, all_visible(50)).angle(), 1e-12);
}

TEST(ExtractRotation, QuarterTurnWithTranslation) {
  Rng rng(3);
  const auto pts = random_points(rng, 50);
  RigidTransform t;
  t.rotation = rotvec_to_matrix(RotationVector(0, 0, kPi / 2));
  t.translation = Vec3(3.0, -7.0, 11.0);
  const RotationVector r = extract_rotation(pts, moved(pts, t), all_visible(50));
  EXPECT_LT((r.value - Vec3(0, 0, kPi / 2)).norm(), 1e-9);
}

TEST(ExtractRotation, NoisyRecovery) {
  Rng rng(4);
  int good = 0;
  for (int i = 0; i < 200; ++i) {
    const auto pts = random_points(rng, 500);
    const RigidTransform t = random_transform(rng);
    auto noisy = moved(pts, t);
    for (auto &p : noisy) p += gaussian_vec(rng, 0.001);
    const Mat3 r = rotvec_to_matrix(extract_rotation(pts, noisy, all_visible(500)));
    good += geodesic(r, t.rotation) < 0.01;
  }
  EXPECT_GE(good, 198);
}

TEST(ExtractRotation, TranslationInvariant) {
  Rng rng(5);
  for (int i = 0; i < 100; ++i) {
    const auto pts = random_points(rng, 40);
    auto target = moved(pts, random_transform(rng));
    for (auto &p : target) p += gaussian_vec(rng, 0.002);
    const Mat3 a = rotvec_to_matrix(extract_rotation(pts, target, all_visible(40)));
    const Vec3 shift = uniform_vec(rng, -0.5, 0.5);
    for (auto &p : target) p += shift;
    const Mat3 b = rotvec_to_matrix(extract_rotation(pts, target, all_visible(40)));
    EXPECT_LT(geodesic(a, b), 1e-12);
  }
}

TEST(ExtractRotation, AlwaysProperEvenForMirroredTargets) {
  Rng rng(6);
  for (int i = 0; i < 200; ++i) {
    const auto pts = random_points(rng, 30);
    std::vector<Vec3> mirrored;
    for (const auto &p : pts) mirrored.push_back(Vec3(-p.x(), p.y(), p.z()) + gaussian_vec(rng, 0.01));
    const Mat3 r = kabsch_rotation(pts, mirrored, all_visible(30));
    EXPECT_TRUE(is_rotation(r));
  }
}

TEST(ExtractRotation, ComposesAcrossSteps) {
  Rng rng(7);
  const auto p0 = random_points(rng, 60);
  std::vector<std::vector<Vec3>> frames{p0};
  for (int k = 0; k < 6; ++k) {
    RigidTransform step;
    step.rotation = rotvec_to_matrix(random_rotvec(rng, 0.4));
    step.translation = uniform_vec(rng, -0.1, 0.1);
    frames.push_back(moved(frames.back(), step));
  }
  Mat3 product = Mat3::Identity();
  for (std::size_t k = 1; k < frames.size(); ++k) {
    product = kabsch_rotation(frames[k - 1], frames[k], all_visible(60)) * product;
    const Mat3 direct = kabsch_rotation(frames[0], frames[k], all_visible(60));
    EXPECT_LT(geodesic(product, direct), 1e-6);
  }
}

TEST(ExtractRotation, UsesOnlyVisiblePoints) {
  Rng rng(8);
  const auto pts = random_points(rng, 20);
  RigidTransform t;
  t.rotation = rotvec_to_matrix(RotationVector(0.3, 0, 0));
  auto target = moved(pts, t);
  std::vector<std::uint8_t> vis = all_visible(20);
  for (int i = 0; i < 5; ++i) {
    target[i] = Vec3(100, 100, 100);
    vis[i] = 0;
  }
  EXPECT_LT((extract_rotation(pts, target, vis).value - Vec3(0.3, 0, 0)).norm(), 1e-9);
}

TEST(ExtractRotation, DegenerateInputs) {
  const std::vector<Vec3> two{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
  EXPECT_THROW(extract_rotation(two, two, std::vector<std::uint8_t>{1, 1, 0}), DegenerateGeometryError);
  EXPECT_THROW(extract_rotation(two, two, all_visible(3)), DegenerateGeometryError);
}

TEST(ExtractPosition, MeanOfVisiblePoints) {
  EXPECT_EQ(extract_position(std::vector<Vec3>{{1, 2, 3}}, all_visible(1)), Vec3(1, 2, 3));
  std::vector<Vec3> cube;
  for (int i = 0; i < 8; ++i) cube.emplace_back(i & 1, (i >> 1) & 1, (i >> 2) & 1);
  EXPECT_LT((extract_position(cube, all_visible(8)) - Vec3(0.5, 0.5, 0.5)).norm(), 1e-15);

  Rng rng(9);
  const auto pts = random_points(rng, 97, 3.0);
  std::vector<std::uint8_t> vis(97);
  Vec3 sum = Vec3::Zero();
  int n = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    vis[i] = rng() % 3 != 0;
    if (vis[i]) {
      sum += pts[i];
      ++n;
    }
  }
  EXPECT_LT((extract_position(pts, vis) - sum / n).norm(), 1e-12);
  EXPECT_THROW(extract_position(pts, std::vector<std::uint8_t>(97, 0)), DegenerateGeometryError);
}

std::vector<Vec3> cube_corners() {
  std::vector<Vec3> c;
  for (int i = 0; i < 8; ++i) c.emplace_back(i & 1, (i >> 1) & 1, (i >> 2) & 1);
  return c;
}

void expect_proper_axes(const OrientedBox3D &b) {
  EXPECT_LT(max_abs_diff(b.axes.transpose() * b.axes, Mat3::Identity()), 1e-9);
  EXPECT_NEAR(b.axes.determinant(), 1.0, 1e-9);
}

TEST(MinBoundingBox, UnitCube) {
  const auto b = min_bounding_box(cube_corners());
  EXPECT_LT((b.extents - Vec3(1, 1, 1)).norm(), 1e-9);
  EXPECT_NEAR(b.volume(), 1.0, 1e-9);
  EXPECT_LT((b.center - Vec3(0.5, 0.5, 0.5)).norm(), 1e-9);
  expect_proper_axes(b);
}

TEST(MinBoundingBox, RotatedCubeVolume) {
  RigidTransform t;
  t.rotation = rotvec_to_matrix(RotationVector(0, 0, kPi / 6));
  const auto b = min_bounding_box(moved(cube_corners(), t));
  EXPECT_NEAR(b.volume(), 1.0, 0.05);
  expect_proper_axes(b);
}

TEST(MinBoundingBox, RandomBoxesWithinFivePercent) {
  Rng rng(10);
  for (int i = 0; i < 50; ++i) {
    const Vec3 size = uniform_vec(rng, 0.05, 0.3);
    std::vector<Vec3> pts;
    for (int k = 0; k < 300; ++k) pts.push_back(uniform_vec(rng, -0.5, 0.5).cwiseProduct(size));
    for (int k = 0; k < 8; ++k)
      pts.push_back(Vec3(k & 1 ? 0.5 : -0.5, k & 2 ? 0.5 : -0.5, k & 4 ? 0.5 : -0.5).cwiseProduct(size));
    const auto b = min_bounding_box(moved(pts, random_transform(rng)));
    EXPECT_NEAR(b.volume() / size.prod(), 1.0, 0.05);
    expect_proper_axes(b);
  }
}

TEST(MinBoundingBox, CoplanarPointsAreFloored) {
  const std::vector<Vec3> pts{{0, 0, 1}, {0.2, 0, 1}, {0, 0.1, 1}, {0.2, 0.1, 1}};
  const auto b = min_bounding_box(pts);
  EXPECT_NEAR(b.extents.minCoeff(), kMinBoxExtent, 1e-12);
  EXPECT_NEAR(b.extents.maxCoeff(), 0.2, 1e-9);
  EXPECT_THROW(min_bounding_box(std::vector<Vec3>{}), InputError);
}

TEST(UnwrapRotation, PicksBranchClosestToPrevious) {
  const RotationVector prev(0, 0, kPi - 0.01);
  // Just past π the canonical vector flips to the opposite axis.
  const RotationVector r(0, 0, -(kPi - 0.02));
  const RotationVector u = unwrap_rotation(r, prev);
  EXPECT_NEAR(u.value.z(), kPi + 0.02, 1e-12);
  EXPECT_EQ(unwrap_rotation(RotationVector(0.1, 0, 0), RotationVector()).value, Vec3(0.1, 0, 0));
}

TEST(AssembleTrajectory, StaticObject) {
  Rng rng(11);
  const TrackSet t = make_tracks(5, random_points(rng, 30));
  const auto traj = assemble_trajectory(t, "hold", "cup");
  ASSERT_EQ(traj.poses.size(), 5u);
  for (const auto &p : traj.poses) {
    EXPECT_EQ(p.position, traj.poses[0].position);
    EXPECT_LT(p.rotation.angle(), 1e-12);
  }
  EXPECT_EQ(traj.poses[0].rotation.value, Vec3::Zero());
  EXPECT_EQ(traj.action, "hold");
  EXPECT_EQ(traj.object_name, "cup");
}

TEST(AssembleTrajectory, RecoversExactRigidMotion) {
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const auto body = random_points(rng, 40, 0.05);
    const Vec3 start = uniform_vec(rng, -0.3, 0.3) + Vec3(0, 0, 1);
    TrackSet t(8, 40);
    std::vector<Pose> truth;
    RotationVector prev;
    for (int k = 0; k < 8; ++k) {
      t.timestamps[k] = 0.05 * k;
      // Rotation about the body centroid grows steadily; position drifts.
      const RotationVector r = k == 0 ? RotationVector() : RotationVector(Vec3(0.2, 1.0, -0.3).normalized() * 0.35 * k);
      const Vec3 pos = start + Vec3(0.01 * k, -0.02 * k, 0.015 * k);
      const Mat3 rm = rotvec_to_matrix(r);
      const Vec3 c = centroid(body);
      for (int p = 0; p < 40; ++p) t.at(k, p) = pos + rm * (body[p] - c);
      truth.push_back({pos, r});
    }
    const auto traj = assemble_trajectory(t, "", "");
    for (int k = 0; k < 8; ++k) {
      EXPECT_LT((traj.poses[k].position - truth[k].position).norm(), 1e-6);
      EXPECT_LT((traj.poses[k].rotation.value - truth[k].rotation.value).norm(), 1e-6) << "frame " << k;
    }
  }
}

TEST(AssembleTrajectory, AllOccludedFrameIsDegenerate) {
  Rng rng(13);
  TrackSet t = make_tracks(4, random_points(rng, 10));
  for (int p = 0; p < 10; ++p) t.visibility[2 * 10 + p] = 0;
  try {
    assemble_trajectory(t, "", "");
    FAIL() << "expected DegenerateGeometryError";
  } catch (const DegenerateGeometryError &e) {
    EXPECT_EQ(e.frame_index(), 2);
  }
}

TEST(TrackSet, Validation) {
  TrackSet t(2, 3);
  t.timestamps = {0.0, 0.0};
  EXPECT_THROW(t.validate(), InputError);
  EXPECT_THROW(TrackSet(1, 3).validate(), InputError);
  EXPECT_THROW(TrackSet(2, 2).validate(), InputError);
}

const CameraIntrinsics kK{100, 100, 50, 40, 100, 80};

ObjectTrajectory traj_of(const std::vector<Vec3> &positions) {
  ObjectTrajectory t;
  for (const auto &p : positions) t.poses.push_back({p, {}});
  return t;
}

TEST(Curate, InsideFrustumAccepted) {
  const auto r = curate(traj_of({{0, 0, 1}, {0.1, 0.1, 1.2}}), kK);
  EXPECT_TRUE(r.accepted);
  EXPECT_FALSE(r.reason);
}

TEST(Curate, BehindCameraRejected) {
  const auto r = curate(traj_of({{0, 0, 1}, {0, 0, -0.1}}), kK);
  EXPECT_FALSE(r.accepted);
  EXPECT_EQ(r.reason, RejectReason::kOutOfFrame);
  EXPECT_EQ(to_string(*r.reason), "out-of-frame");
}

TEST(Curate, ProjectionPastRightEdgeRejected) {
  // Pixel (width + 5, height / 2) at depth 1.
  const Vec3 p((kK.width + 5 - kK.cx) / kK.fx, (kK.height / 2.0 - kK.cy) / kK.fy, 1.0);
  EXPECT_EQ(curate(traj_of({{0, 0, 1}, p}), kK).reason, RejectReason::kOutOfFrame);
}

TEST(Curate, NonFiniteRejected) {
  auto t = traj_of({{0, 0, 1}, {0, 0, 1}});
  t.poses[1].rotation.value.x() = std::numeric_limits<double>::quiet_NaN();
  EXPECT_EQ(curate(t, kK).reason, RejectReason::kNonFinite);
}

TEST(Curate, AcceptImpliesReprojectionInside) {
  Rng rng(14);
  int accepted = 0;
  for (int i = 0; i < 2000; ++i) {
    std::vector<Vec3> pos;
    for (int k = 0; k < 5; ++k) pos.push_back(uniform_vec(rng, -1, 1) + Vec3(0, 0, 0.8));
    if (!curate(traj_of(pos), kK).accepted) continue;
    ++accepted;
    for (const auto &p : pos) {
      ASSERT_GT(p.z(), 0.0);
      const double u = kK.fx * p.x() / p.z() + kK.cx, v = kK.fy * p.y() / p.z() + kK.cy;
      ASSERT_TRUE(u >= 0 && u < kK.width && v >= 0 && v < kK.height);
    }
  }
  EXPECT_GT(accepted, 0);
}

TEST(RejectReason, StringsRoundTrip) {
  for (auto r : {RejectReason::kLowConfidence, RejectReason::kRegistrationFailure,
                 RejectReason::kDegenerateGeometry, RejectReason::kOutOfFrame,
                 RejectReason::kNonFinite, RejectReason::kNonRigid, RejectReason::kInputError})
    EXPECT_EQ(reject_reason_from_string(to_string(r)), r);
  EXPECT_FALSE(reject_reason_from_string("bogus"));
}

}  // namespace
}  // namespace trajex::extraction
