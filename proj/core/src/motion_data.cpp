#include "micl/motion_data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace micl {

std::optional<int> SkeletonSpec::find_joint(std::string_view name) const {
  if (index_cache_.empty()) {
    for (int i = 0; i < joint_count(); ++i) index_cache_[joints[i]] = i;
  }
  auto it = index_cache_.find(std::string(name));
  if (it == index_cache_.end()) return std::nullopt;
  return it->second;
}

void SkeletonSpec::validate() const {
  const int n = joint_count();
  if (n == 0) throw DataError("skeleton has no joints");
  if (static_cast<int>(parent.size()) != n)
    throw DataError("parent list size does not match joint count");

  {
    std::set<std::string> seen(joints.begin(), joints.end());
    if (static_cast<int>(seen.size()) != n)
      throw DataError("duplicate joint names");
  }

  int roots = 0;
  for (int i = 0; i < n; ++i) {
    if (parent[i] == -1) {
      ++roots;
      continue;
    }
    if (parent[i] < 0 || parent[i] >= n)
      throw DataError("parent index out of range for joint " + joints[i]);
  }
  if (roots != 1) throw DataError("skeleton must have exactly one root");

  // Walking up from each joint must reach the root in < n steps.
  for (int i = 0; i < n; ++i) {
    int cur = i, steps = 0;
    while (parent[cur] != -1) {
      cur = parent[cur];
      if (++steps > n) throw DataError("cyclic parent links");
    }
  }

  std::vector<int> part_of(n, -1);
  for (std::size_t p = 0; p < parts.size(); ++p) {
    for (int j : parts[p]) {
      if (j < 0 || j >= n) throw DataError("part joint index out of range");
      if (part_of[j] != -1)
        throw DataError("part partition not disjoint: joint " + joints[j] +
                        " appears in more than one part");
      part_of[j] = static_cast<int>(p);
    }
  }
  for (int i = 0; i < n; ++i) {
    if (part_of[i] == -1)
      throw DataError("part partition does not cover joint " + joints[i]);
  }

  if (static_cast<int>(traversal.size()) != n)
    throw DataError("traversal must list every joint exactly once");
  std::vector<int> pos(n, -1);
  for (int k = 0; k < n; ++k) {
    int j = traversal[k];
    if (j < 0 || j >= n) throw DataError("traversal index out of range");
    if (pos[j] != -1) throw DataError("traversal lists a joint twice");
    pos[j] = k;
  }
  for (int i = 0; i < n; ++i) {
    if (parent[i] == -1) continue;
    if (pos[parent[i]] >= pos[i])
      throw DataError("traversal violates parent-before-child at joint " +
                      joints[i]);
  }
}

namespace {

json parse_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("malformed JSON in " + path + ": " + e.what());
  }
  return j;
}

}  // namespace

SkeletonSpec load_skeleton(const std::string& path) {
  json j = parse_json_file(path);
  if (!j.is_object() || !j.contains("joints") || !j.contains("parent") ||
      !j.contains("parts") || !j.contains("traversal"))
    throw DataError("skeleton file missing required keys: " + path);

  SkeletonSpec spec;
  try {
    spec.joints = j.at("joints").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw DataError(std::string("bad joints list: ") + e.what());
  }
  std::unordered_map<std::string, int> index;
  for (int i = 0; i < spec.joint_count(); ++i) index[spec.joints[i]] = i;

  auto joint_index = [&](const std::string& name) {
    auto it = index.find(name);
    if (it == index.end()) throw DataError("unknown joint name: " + name);
    return it->second;
  };

  spec.parent.assign(spec.joint_count(), -1);
  const json& parent = j.at("parent");
  if (!parent.is_object()) throw DataError("parent must be an object");
  for (auto it = parent.begin(); it != parent.end(); ++it) {
    int child = joint_index(it.key());
    if (it.value().is_null()) {
      spec.parent[child] = -1;
    } else {
      int par = joint_index(it.value().get<std::string>());
      if (par == child) throw DataError("cyclic parent links");
      spec.parent[child] = par;
    }
  }
  // Joints absent from the parent map count as roots; validate() enforces
  // that exactly one exists.
  for (int i = 0; i < spec.joint_count(); ++i)
    if (spec.parent[i] == -1) spec.root = i;

  const json& parts = j.at("parts");
  if (!parts.is_object()) throw DataError("parts must be an object");
  for (std::size_t p = 0; p < SkeletonSpec::kPartNames.size(); ++p) {
    std::string key(SkeletonSpec::kPartNames[p]);
    if (!parts.contains(key))
      throw DataError("parts must contain key " + key);
    for (const auto& name : parts.at(key))
      spec.parts[p].push_back(joint_index(name.get<std::string>()));
  }
  if (parts.size() != SkeletonSpec::kPartNames.size())
    throw DataError("parts must contain exactly the five body-part keys");

  for (const auto& name : j.at("traversal"))
    spec.traversal.push_back(joint_index(name.get<std::string>()));

  spec.validate();
  return spec;
}

namespace {

MotionSample parse_sample_record(const json& rec, const SkeletonSpec& skeleton,
                                 int l_frames, int j_frames) {
  MotionSample sample;
  try {
    sample.id = rec.at("id").get<std::string>();
    sample.action = rec.at("action").get<std::string>();
  } catch (const json::exception& e) {
    throw DataError(std::string("sample record missing id/action: ") + e.what());
  }
  double fps = rec.value("fps", 25.0);
  if (!(fps > 0)) throw DataError("fps must be positive in sample " + sample.id);

  const json& frames = rec.at("frames");
  if (!frames.is_array())
    throw DataError("frames must be an array in sample " + sample.id);
  if (static_cast<int>(frames.size()) < l_frames + j_frames)
    throw DataError("too few frames in sample " + sample.id + ": have " +
                    std::to_string(frames.size()) + ", need " +
                    std::to_string(l_frames + j_frames));

  auto parse_pose = [&](const json& f) {
    Pose pose;
    if (!f.is_array() || static_cast<int>(f.size()) != skeleton.joint_count())
      throw DataError("frame joint count mismatch in sample " + sample.id);
    pose.coords.reserve(f.size());
    for (const auto& c : f) {
      if (!c.is_array() || c.size() != 3)
        throw DataError("joint coordinate must be [x,y,z] in sample " + sample.id);
      Vec3 v{c[0].get<double>(), c[1].get<double>(), c[2].get<double>()};
      for (double x : v)
        if (!std::isfinite(x))
          throw DataError("non-finite coordinate in sample " + sample.id);
      pose.coords.push_back(v);
    }
    return pose;
  };

  sample.observed.fps = fps;
  sample.future.fps = fps;
  for (int k = 0; k < l_frames; ++k)
    sample.observed.frames.push_back(parse_pose(frames[k]));
  for (int k = 0; k < j_frames; ++k)
    sample.future.frames.push_back(parse_pose(frames[l_frames + k]));
  return sample;
}

void load_samples_file(const std::string& path, const SkeletonSpec& skeleton,
                       int l_frames, int j_frames,
                       std::vector<MotionSample>& out) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError("malformed JSON at " + path + ":" +
                      std::to_string(lineno) + ": " + e.what());
    }
    out.push_back(parse_sample_record(rec, skeleton, l_frames, j_frames));
  }
}

}  // namespace

SampleCollection load_samples(const std::string& path,
                              const SkeletonSpec& skeleton, int l_frames,
                              int j_frames, CollectionRole role) {
  if (l_frames < 1 || j_frames < 1)
    throw DataError("l_frames and j_frames must be >= 1");

  SampleCollection coll;
  coll.role = role;

  if (fs::is_directory(path)) {
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(path)) {
      if (entry.is_regular_file() && entry.path().extension() == ".jsonl")
        files.push_back(entry.path().string());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files)
      load_samples_file(f, skeleton, l_frames, j_frames, coll.samples);
  } else {
    load_samples_file(path, skeleton, l_frames, j_frames, coll.samples);
  }

  std::sort(coll.samples.begin(), coll.samples.end(),
            [](const MotionSample& a, const MotionSample& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < coll.samples.size(); ++i) {
    if (coll.samples[i].id == coll.samples[i - 1].id)
      throw DataError("duplicate id: " + coll.samples[i].id);
  }

  double fps = coll.samples.empty() ? 0.0 : coll.samples.front().observed.fps;
  for (const auto& s : coll.samples) {
    if (s.observed.fps != fps || s.future.fps != fps)
      throw DataError("samples disagree on fps (sample " + s.id + ")");
  }
  return coll;
}

void check_pose_matches(const Pose& pose, const SkeletonSpec& skeleton) {
  if (static_cast<int>(pose.coords.size()) != skeleton.joint_count())
    throw DataError("pose joint count does not match skeleton");
}

std::vector<std::pair<std::string, Vec3>> kinematic_order(
    const Pose& pose, const SkeletonSpec& skeleton) {
  check_pose_matches(pose, skeleton);
  std::vector<std::pair<std::string, Vec3>> out;
  out.reserve(pose.coords.size());
  for (int j : skeleton.traversal)
    out.emplace_back(skeleton.joints[j], pose.coords[j]);
  return out;
}

}  // namespace micl
