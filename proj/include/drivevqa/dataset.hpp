#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "drivevqa/geometry.hpp"

namespace drivevqa {

struct Annotation {
  std::string token;
  std::string category;                  // dotted taxonomy, e.g. vehicle.car
  std::optional<std::string> attribute;  // e.g. vehicle.stopped
  Box3D box;                             // global frame

  bool operator==(const Annotation&) const = default;
};

struct CameraView {
  std::filesystem::path image_path;
  CameraCalib calib;

  bool operator==(const CameraView&) const = default;
};

struct Keyframe {
  std::string sample_token;
  std::int64_t timestamp_us = 0;
  EgoPose ego_pose;
  std::array<CameraView, 6> cameras;  // indexed by camera_index()
  std::vector<Annotation> annotations;

  const CameraView& view(Camera c) const { return cameras[camera_index(c)]; }
  bool operator==(const Keyframe&) const = default;
};

// One scene's keyframes, linked and validated. Immutable once loaded.
struct SceneBundle {
  std::string scene_token;
  std::string name;
  std::vector<Keyframe> keyframes;

  std::optional<std::size_t> frame_of_sample(std::string_view sample_token) const;
  bool operator==(const SceneBundle&) const = default;
};

// Token-addressable view over a directory of nuScenes-style tables. Tables are
// indexed on construction; scenes are linked on first request and cached.
class Dataset {
 public:
  explicit Dataset(std::filesystem::path root);
  ~Dataset();
  Dataset(const Dataset&) = delete;
  Dataset& operator=(const Dataset&) = delete;

  std::shared_ptr<const SceneBundle> scene(std::string_view scene_token) const;
  std::vector<std::string> scene_tokens() const;
  const std::filesystem::path& root() const { return root_; }

 private:
  struct Tables;

  SceneBundle link_scene(std::string_view scene_token) const;

  std::filesystem::path root_;
  std::unique_ptr<Tables> tables_;
  mutable std::mutex mu_;
  mutable std::map<std::string, std::shared_ptr<const SceneBundle>, std::less<>> cache_;
};

SceneBundle load_scene_bundle(const std::filesystem::path& root, std::string_view scene_token);

// Writes `scenes` as table files under `dir` such that Dataset(dir) yields the
// same bundles (image paths are stored relative to `dir`).
void write_scene_tables(std::span<const SceneBundle> scenes, const std::filesystem::path& dir);

struct ObjectRef {
  std::string ref_id;
  Camera camera = Camera::Front;
  double x = 0.0;
  double y = 0.0;

  bool operator==(const ObjectRef&) const = default;
};

// Candidate `<...>` tokens that looked like refs but failed validation.
struct RejectedRef {
  std::string raw;
  std::string reason;
  bool bad_camera = false;
};

struct RefScan {
  std::vector<ObjectRef> refs;
  std::vector<RejectedRef> rejected;
  std::vector<std::string> warnings;  // includes clamping notices
};

RefScan scan_object_refs(std::string_view text);

// Extracts every `<id,CAMERA,x,y>` token in textual order. Malformed
// candidates are skipped and logged; out-of-image coordinates are clamped.
std::vector<ObjectRef> parse_object_refs(std::string_view text);

std::string render_object_ref(const ObjectRef& ref);

struct QuestionRecord {
  std::string id;
  std::string text;
  std::string category;  // raw tag from the file, may be empty
  std::string scene_token;
  std::optional<std::size_t> frame_index;
  std::string sample_token;  // alternative keyframe key, resolved against the scene
  std::vector<ObjectRef> object_refs;
  std::map<Camera, std::filesystem::path> images;
};

// Parses the question file. Relative image paths resolve against the file's
// directory. Throws MalformedQuestionFile (with line/column for syntax errors).
std::vector<QuestionRecord> load_questions(const std::filesystem::path& file);

// Fills frame_index from sample_token when needed and checks it is in range.
std::size_t resolve_frame_index(QuestionRecord& question, const SceneBundle& scene);

}  // namespace drivevqa
