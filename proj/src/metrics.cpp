#include "trajex/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "trajex/error.hpp"

namespace trajex::metrics {

std::vector<Pose> normalize_length(std::span<const Pose> predicted, std::size_t reference_len) {
  if (predicted.empty()) throw InputError("normalize_length: empty prediction");
  std::vector<Pose> out(predicted.begin(),
                        predicted.begin() + std::min(predicted.size(), reference_len));
  while (out.size() < reference_len) out.push_back(predicted.back());
  return out;
}

namespace {

void check_lengths(const TrajectoryPair &pair) {
  if (pair.reference.empty()) throw InputError("metrics: empty reference trajectory");
  if (pair.predicted.size() != pair.reference.size())
    throw InputError("metrics: predicted and reference lengths differ");
}

Vec2 normalized_pixel(const Vec3 &p, const CameraIntrinsics &k) {
  if (!(p.z() > 0.0)) throw InputError("metrics: cannot project point with z <= 0");
  const Vec2 px = k.project(p);
  return {px.x() / k.width, px.y() / k.height};
}

double step_error(const TrajectoryPair &pair, std::size_t i, Space space) {
  const Vec3 &a = pair.predicted[i].position;
  const Vec3 &b = pair.reference[i].position;
  if (space == Space::k3D) return (a - b).norm();
  if (!pair.intrinsics) throw InputError("metrics: 2D metrics need intrinsics");
  return (normalized_pixel(a, *pair.intrinsics) - normalized_pixel(b, *pair.intrinsics)).norm();
}

}  // namespace

double ade(const TrajectoryPair &pair, Space space) {
  check_lengths(pair);
  double sum = 0.0;
  for (std::size_t i = 0; i < pair.reference.size(); ++i) sum += step_error(pair, i, space);
  return sum / double(pair.reference.size());
}

double fde(const TrajectoryPair &pair, Space space) {
  check_lengths(pair);
  return step_error(pair, pair.reference.size() - 1, space);
}

double geodesic_distance(const RotationVector &predicted, const RotationVector &reference) {
  const Mat3 r = rotvec_to_matrix(predicted);
  const Mat3 r_ref = rotvec_to_matrix(reference);
  const Mat3 rel = r_ref.transpose() * r;
  const double c = std::clamp((rel.trace() - 1.0) / 2.0, -1.0, 1.0);
  if (std::abs(c) < 0.9) return std::acos(c);
  // arccos loses half the digits near ±1; sin θ from the antisymmetric part
  // gives the same angle to full precision there.
  const double s =
      0.5 * Vec3(rel(2, 1) - rel(1, 2), rel(0, 2) - rel(2, 0), rel(1, 0) - rel(0, 1)).norm();
  return std::atan2(s, c);
}

double mean_geodesic_distance(std::span<const Pose> predicted, std::span<const Pose> reference) {
  if (reference.empty() || predicted.size() != reference.size())
    throw InputError("metrics: predicted and reference lengths differ");
  double sum = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i)
    sum += geodesic_distance(predicted[i].rotation, reference[i].rotation);
  return sum / double(reference.size());
}

PairMetrics evaluate_pair(const TrajectoryPair &pair) {
  if (pair.reference.empty()) throw InputError("metrics: empty reference trajectory");
  TrajectoryPair norm{normalize_length(pair.predicted, pair.reference.size()), pair.reference,
                      pair.intrinsics};
  PairMetrics m;
  m.ade3d = ade(norm, Space::k3D);
  m.fde3d = fde(norm, Space::k3D);
  m.gd = mean_geodesic_distance(norm.predicted, norm.reference);
  if (norm.intrinsics) {
    try {
      m.ade2d = ade(norm, Space::k2D);
      m.fde2d = fde(norm, Space::k2D);
    } catch (const InputError &) {
      m.ade2d.reset();
      m.fde2d.reset();
    }
  }
  return m;
}

namespace {

void finish_means(Report &r) {
  const double n = double(r.per_pair.size());
  if (r.per_pair.empty()) return;
  double a2 = 0.0, f2 = 0.0;
  for (const auto &m : r.per_pair) {
    r.mean.ade3d += m.ade3d / n;
    r.mean.fde3d += m.fde3d / n;
    r.mean.gd += m.gd / n;
    if (m.ade2d && m.fde2d) {
      a2 += *m.ade2d;
      f2 += *m.fde2d;
      ++r.count_2d;
    }
  }
  if (r.count_2d) {
    r.mean.ade2d = a2 / double(r.count_2d);
    r.mean.fde2d = f2 / double(r.count_2d);
  }
}

}  // namespace

Report evaluate_batch(std::span<const TrajectoryPair> pairs) {
  if (pairs.empty()) throw InputError("evaluate_batch: no pairs");
  Report r;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    r.ids.push_back(std::to_string(i));
    r.per_pair.push_back(evaluate_pair(pairs[i]));
  }
  finish_means(r);
  return r;
}

Report evaluate_best_of(std::span<const SampledInstance> instances) {
  if (instances.empty()) throw InputError("evaluate_batch: no instances");
  Report r;
  for (const auto &inst : instances) {
    if (inst.samples.empty()) throw InputError("evaluate_batch: instance " + inst.id + " has no samples");
    PairMetrics best;
    for (std::size_t k = 0; k < inst.samples.size(); ++k) {
      PairMetrics m = evaluate_pair({inst.samples[k], inst.reference, inst.intrinsics});
      m.chosen_sample = k;
      if (k == 0 || m.ade3d < best.ade3d) best = m;
    }
    r.ids.push_back(inst.id);
    r.per_pair.push_back(best);
  }
  finish_means(r);
  return r;
}

std::string format_table(const Report &report) {
  std::ostringstream os;
  char line[160];
  auto opt = [](const std::optional<double> &v) {
    char buf[32];
    if (v)
      std::snprintf(buf, sizeof buf, "%10.4f", *v);
    else
      std::snprintf(buf, sizeof buf, "%10s", "n/a");
    return std::string(buf);
  };
  std::snprintf(line, sizeof line, "%-24s %10s %10s %10s %10s %10s\n", "id", "ADE3D", "FDE3D",
                "ADE2D", "FDE2D", "GD");
  os << line;
  auto row = [&](const std::string &id, const PairMetrics &m) {
    std::snprintf(line, sizeof line, "%-24s %10.4f %10.4f %s %s %10.4f\n", id.c_str(), m.ade3d,
                  m.fde3d, opt(m.ade2d).c_str(), opt(m.fde2d).c_str(), m.gd);
    os << line;
  };
  for (std::size_t i = 0; i < report.per_pair.size(); ++i) row(report.ids[i], report.per_pair[i]);
  row("mean", report.mean);
  return os.str();
}

}  // namespace trajex::metrics
