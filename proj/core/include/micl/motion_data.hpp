#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace micl {

using Vec3 = std::array<double, 3>;

// Thrown by the loaders and shape checks in this module.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Skeleton definition: joint names, parent links, the five-part body
/// partition and the central-to-peripheral traversal order. Loaded from a
/// JSON file; immutable after construction.
struct SkeletonSpec {
  static constexpr std::array<std::string_view, 5> kPartNames = {
      "left_arm", "right_arm", "left_leg", "right_leg", "trunk"};

  std::vector<std::string> joints;           // canonical joint order
  std::vector<int> parent;                   // index into joints, -1 for root
  std::array<std::vector<int>, 5> parts;     // joint indices, kPartNames order
  std::vector<int> traversal;                // central-to-peripheral order
  int root = -1;

  int joint_count() const { return static_cast<int>(joints.size()); }
  const std::string& joint_name(int i) const { return joints.at(i); }
  std::optional<int> find_joint(std::string_view name) const;

  // Validates tree structure, part partition and traversal order; throws
  // DataError on violation. Called by load_skeleton, public so that specs
  // assembled in code get the same checks.
  void validate() const;

 private:
  mutable std::unordered_map<std::string, int> index_cache_;
};

struct Pose {
  std::vector<Vec3> coords;  // indexed by SkeletonSpec joint order, millimeters
};

struct MotionSequence {
  std::vector<Pose> frames;
  double fps = 25.0;

  int frame_count() const { return static_cast<int>(frames.size()); }
};

/// One (observed, future) pair; the unit of the base set, support set and
/// test set alike.
struct MotionSample {
  std::string id;
  std::string action;
  MotionSequence observed;
  MotionSequence future;
};

enum class CollectionRole { base_training_set, support_set, test_set };

struct SampleCollection {
  std::vector<MotionSample> samples;
  CollectionRole role = CollectionRole::base_training_set;

  std::size_t size() const { return samples.size(); }
};

/// Loads and validates a skeleton JSON file:
///   {"joints":[...], "parent":{...}, "parts":{...5 keys...}, "traversal":[...]}
SkeletonSpec load_skeleton(const std::string& path);

/// Loads samples from a JSON-lines file (or a directory of .jsonl files,
/// visited in sorted name order). Each record must carry at least
/// l_frames + j_frames frames; the first l_frames become the observed
/// sequence, the next j_frames the future one, trailing frames are ignored.
/// The returned collection is sorted by id; duplicate ids are an error.
SampleCollection load_samples(const std::string& path,
                              const SkeletonSpec& skeleton, int l_frames,
                              int j_frames,
                              CollectionRole role = CollectionRole::base_training_set);

/// Pose flattened to (joint name, coords) pairs in traversal order.
std::vector<std::pair<std::string, Vec3>> kinematic_order(
    const Pose& pose, const SkeletonSpec& skeleton);

void check_pose_matches(const Pose& pose, const SkeletonSpec& skeleton);

}  // namespace micl
