#include "micl/metrics.hpp"

#include "micl/text_util.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include <nlohmann/json.hpp>

using nlohmann::json;

namespace micl {

namespace {

void check_same_shape(const MotionSample& a, const MotionSample& b,
                      const SkeletonSpec& skeleton) {
  if (a.observed.frame_count() != b.observed.frame_count() ||
      a.future.frame_count() != b.future.frame_count())
    throw DataError("sample shape mismatch: frame counts differ");
  auto check_seq = [&](const MotionSequence& s) {
    for (const auto& f : s.frames) check_pose_matches(f, skeleton);
  };
  check_seq(a.observed);
  check_seq(a.future);
  check_seq(b.observed);
  check_seq(b.future);
}

// Accumulates squared differences over the given joints of every frame pair.
struct Sq {
  double sum = 0.0;
  std::size_t dims = 0;
  void add(const Pose& a, const Pose& b, const std::vector<int>& joints) {
    for (int j : joints) {
      for (int d = 0; d < 3; ++d) {
        double diff = a.coords[j][d] - b.coords[j][d];
        sum += diff * diff;
      }
      dims += 3;
    }
  }
  double l2(bool normalize) const {
    double v = std::sqrt(sum);
    if (normalize && dims > 0) v /= std::sqrt(static_cast<double>(dims));
    return v;
  }
};

}  // namespace

SampleDistance sample_distance(const MotionSample& a, const MotionSample& b,
                               const SkeletonSpec& skeleton,
                               const DistanceOptions& opts) {
  check_same_shape(a, b, skeleton);

  std::vector<int> all_joints(skeleton.joint_count());
  for (int i = 0; i < skeleton.joint_count(); ++i) all_joints[i] = i;

  Sq global;
  std::array<Sq, 5> parts;
  auto accumulate = [&](const MotionSequence& sa, const MotionSequence& sb) {
    for (int f = 0; f < sa.frame_count(); ++f) {
      global.add(sa.frames[f], sb.frames[f], all_joints);
      for (std::size_t p = 0; p < parts.size(); ++p)
        parts[p].add(sa.frames[f], sb.frames[f], skeleton.parts[p]);
    }
  };
  accumulate(a.observed, b.observed);
  if (!opts.observed_only) accumulate(a.future, b.future);

  SampleDistance d;
  d.global = global.l2(opts.normalize_by_dims);
  double sum = d.global;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    double v = parts[p].l2(opts.normalize_by_dims);
    d.per_part[std::string(SkeletonSpec::kPartNames[p])] = v;
    sum += v;
  }
  d.combined = sum / 6.0;
  return d;
}

int horizon_to_frame(double horizon_ms, double fps) {
  return static_cast<int>(std::floor(horizon_ms * fps / 1000.0 + 0.5));
}

double mpjpe_at(const MotionSequence& pred, const MotionSequence& gt,
                double horizon_ms) {
  if (pred.frame_count() != gt.frame_count())
    throw DataError("mpjpe: frame counts differ");
  if (pred.fps != gt.fps) throw DataError("mpjpe: fps differs");
  if (pred.frame_count() == 0) throw DataError("mpjpe: empty sequences");

  int k = horizon_to_frame(horizon_ms, gt.fps);
  if (k < 1 || k > gt.frame_count())
    throw DataError("horizon " + std::to_string(horizon_ms) +
                    "ms maps to frame " + std::to_string(k) +
                    ", outside sequence of " + std::to_string(gt.frame_count()) +
                    " frames");

  const Pose& p = pred.frames[k - 1];
  const Pose& g = gt.frames[k - 1];
  if (p.coords.size() != g.coords.size())
    throw DataError("mpjpe: joint counts differ");
  if (p.coords.empty()) throw DataError("mpjpe: empty pose");

  double sum = 0.0;
  for (std::size_t j = 0; j < p.coords.size(); ++j) {
    double sq = 0.0;
    for (int d = 0; d < 3; ++d) {
      double diff = p.coords[j][d] - g.coords[j][d];
      sq += diff * diff;
    }
    sum += std::sqrt(sq);
  }
  return sum / static_cast<double>(p.coords.size());
}

MpjpeReport mpjpe_table(const MotionSequence& pred, const MotionSequence& gt,
                        const std::vector<int>& horizons_ms) {
  if (horizons_ms.empty()) throw DataError("mpjpe_table: empty horizon list");
  MpjpeReport report;
  double sum = 0.0;
  for (int h : horizons_ms) {
    double e = mpjpe_at(pred, gt, static_cast<double>(h));
    report.per_horizon[h] = e;
    sum += e;
  }
  report.average = sum / static_cast<double>(horizons_ms.size());
  return report;
}

std::string MpjpeReport::to_csv() const {
  std::string out = "horizon_ms,error_mm\n";
  for (const auto& [h, e] : per_horizon) {
    out += std::to_string(h);
    out += ',';
    out += format_double(e);
    out += '\n';
  }
  out += "avg,";
  out += format_double(average);
  out += '\n';
  return out;
}

std::string MpjpeReport::to_json() const {
  json j;
  json ph = json::object();
  for (const auto& [h, e] : per_horizon) ph[std::to_string(h)] = e;
  j["per_horizon_ms"] = ph;
  j["average"] = average;
  return j.dump(2);
}

}  // namespace micl
