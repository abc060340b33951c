#pragma once

#include <map>
#include <string>
#include <vector>

#include "micl/motion_data.hpp"

namespace micl {

struct DistanceOptions {
  bool observed_only = false;    // restrict to the observed sequence
  bool normalize_by_dims = false;  // divide each L2 term by sqrt(#coords)
};

/// Six-term distance between two motion samples: one global L2 over the full
/// coordinate vector plus one L2 per body part, combined as their mean.
struct SampleDistance {
  double global = 0.0;
  std::map<std::string, double> per_part;
  double combined = 0.0;
};

SampleDistance sample_distance(const MotionSample& a, const MotionSample& b,
                               const SkeletonSpec& skeleton,
                               const DistanceOptions& opts = {});

/// Maps a horizon in milliseconds to a 1-based frame index, rounding half up.
int horizon_to_frame(double horizon_ms, double fps);

/// Mean per-joint position error (mm) at the frame matching horizon_ms.
double mpjpe_at(const MotionSequence& pred, const MotionSequence& gt,
                double horizon_ms);

struct MpjpeReport {
  std::map<int, double> per_horizon;  // horizon ms -> mean error mm
  double average = 0.0;

  std::string to_csv() const;
  std::string to_json() const;
};

MpjpeReport mpjpe_table(const MotionSequence& pred, const MotionSequence& gt,
                        const std::vector<int>& horizons_ms);

}  // namespace micl
