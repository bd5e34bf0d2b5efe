#include "drivevqa/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <unordered_map>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "drivevqa/error.hpp"

namespace drivevqa {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kQuatNormTolerance = 1e-6;

json read_json_file(const fs::path& file, Errc on_error) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(on_error, fmt::format("cannot open {}", file.string()));
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(on_error, fmt::format("{}: {}", file.string(), e.what()));
  }
}

const json& field(const json& rec, std::string_view table, std::string_view name) {
  auto it = rec.find(name);
  if (it == rec.end()) {
    throw Error(Errc::MalformedTable,
                fmt::format("{}: record {} lacks field '{}'", table,
                            rec.value("token", std::string("?")), name));
  }
  return *it;
}

std::string str_field(const json& rec, std::string_view table, std::string_view name) {
  const json& v = field(rec, table, name);
  if (!v.is_string()) {
    throw Error(Errc::MalformedTable, fmt::format("{}: field '{}' is not a string", table, name));
  }
  return v.get<std::string>();
}

Vec3 vec3_field(const json& rec, std::string_view table, std::string_view name) {
  const json& v = field(rec, table, name);
  if (!v.is_array() || v.size() != 3) {
    throw Error(Errc::MalformedTable, fmt::format("{}: field '{}' must hold 3 numbers", table, name));
  }
  return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
}

Quaternion quat_field(const json& rec, std::string_view table, std::string_view name) {
  const json& v = field(rec, table, name);
  if (!v.is_array() || v.size() != 4) {
    throw Error(Errc::MalformedTable, fmt::format("{}: field '{}' must hold 4 numbers", table, name));
  }
  Quaternion q{v[0].get<double>(), v[1].get<double>(), v[2].get<double>(), v[3].get<double>()};
  if (std::abs(q.norm() - 1.0) > kQuatNormTolerance) {
    throw Error(Errc::MalformedTable,
                fmt::format("{}: record {} has non-unit rotation (norm {})", table,
                            rec.value("token", std::string("?")), q.norm()));
  }
  return q;
}

using Index = std::unordered_map<std::string, json>;

Index index_table(const fs::path& root, std::string_view name, bool required) {
  const fs::path file = root / fmt::format("{}.json", name);
  Index index;
  if (!fs::exists(file)) {
    if (required) throw Error(Errc::MalformedTable, fmt::format("missing table {}", file.string()));
    return index;
  }
  json arr = read_json_file(file, Errc::MalformedTable);
  if (!arr.is_array()) throw Error(Errc::MalformedTable, fmt::format("{} is not an array", file.string()));
  for (auto& rec : arr) {
    std::string token = str_field(rec, name, "token");
    index.emplace(std::move(token), std::move(rec));
  }
  return index;
}

const json& lookup(const Index& index, std::string_view table, const std::string& token,
                   std::string_view from) {
  auto it = index.find(token);
  if (it == index.end()) {
    throw Error(Errc::MalformedTable,
                fmt::format("{} references unknown {} token '{}'", from, table, token));
  }
  return it->second;
}

std::string channel_from_filename(const std::string& filename) {
  // samples/CAM_FRONT/xxx.jpg -> CAM_FRONT
  const fs::path p(filename);
  return p.parent_path().filename().string();
}

}  // namespace

struct Dataset::Tables {
  Index scene, sample, sample_data, ego_pose, calibrated_sensor, sensor, sample_annotation,
      instance, category, attribute;
  std::unordered_map<std::string, std::vector<const json*>> data_by_sample;
  std::unordered_map<std::string, std::vector<const json*>> anns_by_sample;
  std::vector<std::string> scene_order;
};

Dataset::Dataset(fs::path root) : root_(std::move(root)), tables_(std::make_unique<Tables>()) {
  if (!fs::is_directory(root_)) {
    throw Error(Errc::MalformedTable, fmt::format("dataset root {} is not a directory", root_.string()));
  }
  auto& t = *tables_;
  t.scene = index_table(root_, "scene", true);
  t.sample = index_table(root_, "sample", true);
  t.sample_data = index_table(root_, "sample_data", true);
  t.ego_pose = index_table(root_, "ego_pose", true);
  t.calibrated_sensor = index_table(root_, "calibrated_sensor", true);
  t.sample_annotation = index_table(root_, "sample_annotation", true);
  t.category = index_table(root_, "category", true);
  t.attribute = index_table(root_, "attribute", true);
  t.sensor = index_table(root_, "sensor", false);
  t.instance = index_table(root_, "instance", false);

  // Preserve file order for annotations: re-read order is not kept by the
  // hash index, so sort by the original position recorded below.
  const json ann_arr = read_json_file(root_ / "sample_annotation.json", Errc::MalformedTable);
  for (const auto& rec : ann_arr) {
    const std::string token = rec.at("token").get<std::string>();
    const json& stored = t.sample_annotation.at(token);
    t.anns_by_sample[str_field(stored, "sample_annotation", "sample_token")].push_back(&stored);
  }
  for (const auto& [token, rec] : t.sample_data) {
    t.data_by_sample[str_field(rec, "sample_data", "sample_token")].push_back(&rec);
  }
  const json scene_arr = read_json_file(root_ / "scene.json", Errc::MalformedTable);
  for (const auto& rec : scene_arr) t.scene_order.push_back(rec.at("token").get<std::string>());
}

Dataset::~Dataset() = default;

std::vector<std::string> Dataset::scene_tokens() const { return tables_->scene_order; }

std::shared_ptr<const SceneBundle> Dataset::scene(std::string_view scene_token) const {
  {
    std::lock_guard lock(mu_);
    if (auto it = cache_.find(scene_token); it != cache_.end()) return it->second;
  }
  auto bundle = std::make_shared<const SceneBundle>(link_scene(scene_token));
  std::lock_guard lock(mu_);
  return cache_.emplace(std::string(scene_token), std::move(bundle)).first->second;
}

SceneBundle Dataset::link_scene(std::string_view scene_token) const {
  const auto& t = *tables_;
  auto scene_it = t.scene.find(std::string(scene_token));
  if (scene_it == t.scene.end()) {
    throw Error(Errc::UnknownToken, fmt::format("no scene with token '{}'", scene_token));
  }
  const json& scene_rec = scene_it->second;

  SceneBundle bundle;
  bundle.scene_token = std::string(scene_token);
  bundle.name = scene_rec.value("name", std::string());

  std::string sample_token = str_field(scene_rec, "scene", "first_sample_token");
  std::set<std::string> seen;
  while (!sample_token.empty()) {
    if (!seen.insert(sample_token).second) {
      throw Error(Errc::MalformedTable, fmt::format("sample chain of scene {} loops", scene_token));
    }
    const json& sample = lookup(t.sample, "sample", sample_token, "scene");
    if (str_field(sample, "sample", "scene_token") != scene_token) {
      throw Error(Errc::MalformedTable,
                  fmt::format("sample {} does not belong to scene {}", sample_token, scene_token));
    }

    Keyframe kf;
    kf.sample_token = sample_token;
    kf.timestamp_us = field(sample, "sample", "timestamp").get<std::int64_t>();
    if (!bundle.keyframes.empty() && kf.timestamp_us <= bundle.keyframes.back().timestamp_us) {
      throw Error(Errc::NonMonotonicTimestamps,
                  fmt::format("scene {}: sample {} at {} does not follow {}", scene_token,
                              sample_token, kf.timestamp_us, bundle.keyframes.back().timestamp_us));
    }

    std::array<bool, 6> have{};
    std::string front_pose_token;
    auto data_it = t.data_by_sample.find(sample_token);
    if (data_it != t.data_by_sample.end()) {
      for (const json* sd : data_it->second) {
        if (!sd->value("is_key_frame", true)) continue;
        const std::string calib_token = str_field(*sd, "sample_data", "calibrated_sensor_token");
        const json& calib = lookup(t.calibrated_sensor, "calibrated_sensor", calib_token, "sample_data");
        const std::string filename = str_field(*sd, "sample_data", "filename");
        std::string channel;
        if (!t.sensor.empty() && calib.contains("sensor_token")) {
          const json& sensor = lookup(t.sensor, "sensor", str_field(calib, "calibrated_sensor", "sensor_token"),
                                      "calibrated_sensor");
          channel = str_field(sensor, "sensor", "channel");
        } else {
          channel = channel_from_filename(filename);
        }
        auto cam = parse_camera(channel);
        if (!cam) continue;  // lidar / radar
        const std::size_t idx = camera_index(*cam);
        if (have[idx]) {
          throw Error(Errc::MalformedTable,
                      fmt::format("sample {} has two {} entries", sample_token, channel));
        }
        have[idx] = true;

        CameraView& view = kf.cameras[idx];
        view.image_path = root_ / filename;
        view.calib.camera = *cam;
        view.calib.translation = vec3_field(calib, "calibrated_sensor", "translation");
        view.calib.rotation = quat_field(calib, "calibrated_sensor", "rotation");
        const json& k = field(calib, "calibrated_sensor", "camera_intrinsic");
        if (!k.is_array() || k.size() != 3) {
          throw Error(Errc::MalformedTable,
                      fmt::format("calibrated_sensor {}: camera_intrinsic must be 3x3", calib_token));
        }
        for (int r = 0; r < 3; ++r) {
          if (!k[r].is_array() || k[r].size() != 3) {
            throw Error(Errc::MalformedTable,
                        fmt::format("calibrated_sensor {}: camera_intrinsic must be 3x3", calib_token));
          }
          for (int c = 0; c < 3; ++c) view.calib.intrinsics(r, c) = k[r][c].get<double>();
        }
        if (view.calib.intrinsics(2, 2) != 1.0) {
          throw Error(Errc::MalformedTable,
                      fmt::format("calibrated_sensor {}: intrinsics[2][2] must be 1", calib_token));
        }
        if (*cam == Camera::Front) front_pose_token = str_field(*sd, "sample_data", "ego_pose_token");
      }
    }
    for (Camera c : kCameraOrder) {
      if (!have[camera_index(c)]) {
        throw Error(Errc::MalformedTable,
                    fmt::format("sample {} lacks a {} keyframe image", sample_token, camera_name(c)));
      }
    }

    const json& pose = lookup(t.ego_pose, "ego_pose", front_pose_token, "sample_data");
    kf.ego_pose.timestamp_us = field(pose, "ego_pose", "timestamp").get<std::int64_t>();
    kf.ego_pose.translation = vec3_field(pose, "ego_pose", "translation");
    kf.ego_pose.rotation = quat_field(pose, "ego_pose", "rotation");

    if (auto ann_it = t.anns_by_sample.find(sample_token); ann_it != t.anns_by_sample.end()) {
      for (const json* rec : ann_it->second) {
        Annotation ann;
        ann.token = str_field(*rec, "sample_annotation", "token");
        if (rec->contains("category_name")) {
          ann.category = str_field(*rec, "sample_annotation", "category_name");
        } else {
          const json& inst = lookup(t.instance, "instance",
                                    str_field(*rec, "sample_annotation", "instance_token"),
                                    "sample_annotation");
          const json& cat = lookup(t.category, "category",
                                   str_field(inst, "instance", "category_token"), "instance");
          ann.category = str_field(cat, "category", "name");
        }
        if (ann.category.empty()) {
          throw Error(Errc::MalformedTable, fmt::format("annotation {} has empty category", ann.token));
        }
        if (auto attrs = rec->find("attribute_tokens"); attrs != rec->end() && !attrs->empty()) {
          const json& attr = lookup(t.attribute, "attribute", (*attrs)[0].get<std::string>(),
                                    "sample_annotation");
          ann.attribute = str_field(attr, "attribute", "name");
        }
        ann.box.center = vec3_field(*rec, "sample_annotation", "translation");
        ann.box.size = vec3_field(*rec, "sample_annotation", "size");
        ann.box.rotation = quat_field(*rec, "sample_annotation", "rotation");
        if ((ann.box.size.array() <= 0.0).any()) {
          throw Error(Errc::MalformedTable, fmt::format("annotation {} has non-positive size", ann.token));
        }
        kf.annotations.push_back(std::move(ann));
      }
    }

    sample_token = sample.value("next", std::string());
    bundle.keyframes.push_back(std::move(kf));
  }
  return bundle;
}

std::optional<std::size_t> SceneBundle::frame_of_sample(std::string_view sample_token) const {
  for (std::size_t i = 0; i < keyframes.size(); ++i) {
    if (keyframes[i].sample_token == sample_token) return i;
  }
  return std::nullopt;
}

SceneBundle load_scene_bundle(const fs::path& root, std::string_view scene_token) {
  Dataset ds(root);
  return *ds.scene(scene_token);
}

namespace {

json to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }
json to_json(const Quaternion& q) { return json::array({q.w, q.x, q.y, q.z}); }

void write_table(const fs::path& dir, std::string_view name, const json& arr) {
  std::ofstream out(dir / fmt::format("{}.json", name), std::ios::binary);
  if (!out) throw Error(Errc::Io, fmt::format("cannot write table {} under {}", name, dir.string()));
  out << arr.dump(1) << '\n';
}

}  // namespace

void write_scene_tables(std::span<const SceneBundle> scenes, const fs::path& dir) {
  fs::create_directories(dir);
  json scene = json::array(), sample = json::array(), sample_data = json::array(),
       ego_pose = json::array(), calibrated_sensor = json::array(), sensor = json::array(),
       sample_annotation = json::array(), instance = json::array(), category = json::array(),
       attribute = json::array();

  for (Camera c : kCameraOrder) {
    sensor.push_back({{"token", fmt::format("sensor-{}", camera_name(c))},
                      {"channel", camera_name(c)},
                      {"modality", "camera"}});
  }
  std::map<std::string, std::string> category_tokens, attribute_tokens;
  auto category_token = [&](const std::string& name) {
    auto [it, inserted] = category_tokens.emplace(name, fmt::format("category-{}", name));
    if (inserted) category.push_back({{"token", it->second}, {"name", name}, {"description", ""}});
    return it->second;
  };
  auto attribute_token = [&](const std::string& name) {
    auto [it, inserted] = attribute_tokens.emplace(name, fmt::format("attribute-{}", name));
    if (inserted) attribute.push_back({{"token", it->second}, {"name", name}, {"description", ""}});
    return it->second;
  };

  for (const SceneBundle& s : scenes) {
    const std::size_t n = s.keyframes.size();
    scene.push_back({{"token", s.scene_token},
                     {"name", s.name},
                     {"nbr_samples", n},
                     {"first_sample_token", n ? s.keyframes.front().sample_token : ""},
                     {"last_sample_token", n ? s.keyframes.back().sample_token : ""}});
    for (std::size_t i = 0; i < n; ++i) {
      const Keyframe& kf = s.keyframes[i];
      sample.push_back({{"token", kf.sample_token},
                        {"timestamp", kf.timestamp_us},
                        {"scene_token", s.scene_token},
                        {"prev", i > 0 ? s.keyframes[i - 1].sample_token : ""},
                        {"next", i + 1 < n ? s.keyframes[i + 1].sample_token : ""}});
      const std::string pose_token = fmt::format("{}-ego", kf.sample_token);
      ego_pose.push_back({{"token", pose_token},
                          {"timestamp", kf.ego_pose.timestamp_us},
                          {"translation", to_json(kf.ego_pose.translation)},
                          {"rotation", to_json(kf.ego_pose.rotation)}});
      for (Camera c : kCameraOrder) {
        const CameraView& view = kf.view(c);
        const std::string calib_token = fmt::format("{}-{}-calib", kf.sample_token, camera_name(c));
        json k = json::array();
        for (int r = 0; r < 3; ++r) {
          k.push_back({view.calib.intrinsics(r, 0), view.calib.intrinsics(r, 1), view.calib.intrinsics(r, 2)});
        }
        calibrated_sensor.push_back({{"token", calib_token},
                                     {"sensor_token", fmt::format("sensor-{}", camera_name(c))},
                                     {"translation", to_json(view.calib.translation)},
                                     {"rotation", to_json(view.calib.rotation)},
                                     {"camera_intrinsic", k}});
        sample_data.push_back({{"token", fmt::format("{}-{}", kf.sample_token, camera_name(c))},
                               {"sample_token", kf.sample_token},
                               {"ego_pose_token", pose_token},
                               {"calibrated_sensor_token", calib_token},
                               {"filename", view.image_path.lexically_relative(dir).generic_string()},
                               {"timestamp", kf.timestamp_us},
                               {"is_key_frame", true}});
      }
      for (const Annotation& a : kf.annotations) {
        const std::string inst_token = fmt::format("{}-instance", a.token);
        instance.push_back({{"token", inst_token}, {"category_token", category_token(a.category)}});
        json attrs = json::array();
        if (a.attribute) attrs.push_back(attribute_token(*a.attribute));
        sample_annotation.push_back({{"token", a.token},
                                     {"sample_token", kf.sample_token},
                                     {"instance_token", inst_token},
                                     {"attribute_tokens", attrs},
                                     {"translation", to_json(a.box.center)},
                                     {"size", to_json(a.box.size)},
                                     {"rotation", to_json(a.box.rotation)}});
      }
    }
  }

  write_table(dir, "scene", scene);
  write_table(dir, "sample", sample);
  write_table(dir, "sample_data", sample_data);
  write_table(dir, "ego_pose", ego_pose);
  write_table(dir, "calibrated_sensor", calibrated_sensor);
  write_table(dir, "sensor", sensor);
  write_table(dir, "sample_annotation", sample_annotation);
  write_table(dir, "instance", instance);
  write_table(dir, "category", category);
  write_table(dir, "attribute", attribute);
}

// ---------------------------------------------------------------------------
// Object references embedded in question text.

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::optional<double> parse_number(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(value)) return std::nullopt;
  return value;
}

bool valid_ref_id(std::string_view id) {
  return !id.empty() && std::all_of(id.begin(), id.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
  });
}

}  // namespace

RefScan scan_object_refs(std::string_view text) {
  RefScan scan;
  std::size_t pos = 0;
  while ((pos = text.find('<', pos)) != std::string_view::npos) {
    const std::size_t close = text.find_first_of("<>", pos + 1);
    if (close == std::string_view::npos) break;
    if (text[close] == '<') {
      pos = close;
      continue;
    }
    const std::string_view body = text.substr(pos + 1, close - pos - 1);
    const std::string raw(text.substr(pos, close - pos + 1));
    pos = close + 1;

    std::vector<std::string_view> parts;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= body.size(); ++i) {
      if (i == body.size() || body[i] == ',') {
        parts.push_back(trim(body.substr(start, i - start)));
        start = i + 1;
      }
    }
    if (parts.size() != 4) continue;  // not shaped like a ref, e.g. <image>

    if (!valid_ref_id(parts[0])) {
      scan.rejected.push_back({raw, "invalid id", false});
      continue;
    }
    // Coordinates first: "<c,CAM,x,y>" is the benchmark's placeholder, not a ref.
    auto x = parse_number(parts[2]);
    auto y = parse_number(parts[3]);
    if (!x || !y) {
      scan.rejected.push_back({raw, "non-numeric coordinate", false});
      continue;
    }
    auto cam = parse_camera(parts[1]);
    if (!cam) {
      scan.rejected.push_back({raw, fmt::format("unknown camera '{}'", parts[1]), true});
      continue;
    }
    ObjectRef ref{std::string(parts[0]), *cam, *x, *y};
    const double cx = std::clamp(ref.x, 0.0, static_cast<double>(kImageWidth));
    const double cy = std::clamp(ref.y, 0.0, static_cast<double>(kImageHeight));
    if (cx != ref.x || cy != ref.y) {
      scan.warnings.push_back(fmt::format("clamped {} to ({}, {})", raw, cx, cy));
      ref.x = cx;
      ref.y = cy;
    }
    scan.refs.push_back(std::move(ref));
  }
  for (const auto& r : scan.rejected) scan.warnings.push_back(fmt::format("skipped {}: {}", r.raw, r.reason));
  return scan;
}

std::vector<ObjectRef> parse_object_refs(std::string_view text) {
  RefScan scan = scan_object_refs(text);
  for (const auto& w : scan.warnings) spdlog::warn("object ref: {}", w);
  return std::move(scan.refs);
}

namespace {

std::string format_coord(double v) {
  std::string s = fmt::format("{}", v);
  if (s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

}  // namespace

std::string render_object_ref(const ObjectRef& ref) {
  return fmt::format("<{},{},{},{}>", ref.ref_id, camera_name(ref.camera), format_coord(ref.x),
                     format_coord(ref.y));
}

// ---------------------------------------------------------------------------
// Question file.

namespace {

std::pair<std::size_t, std::size_t> line_col(const std::string& text, std::size_t offset) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace

std::vector<QuestionRecord> load_questions(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(Errc::MalformedQuestionFile, fmt::format("cannot open {}", file.string()));
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    auto [line, col] = line_col(text, e.byte > 0 ? e.byte - 1 : 0);
    throw Error(Errc::MalformedQuestionFile,
                fmt::format("{}:{}:{} (offset {}): {}", file.string(), line, col, e.byte, e.what()));
  }
  if (!doc.is_array()) {
    throw Error(Errc::MalformedQuestionFile, fmt::format("{}: top level must be an array", file.string()));
  }

  const fs::path base = file.parent_path();
  std::vector<QuestionRecord> out;
  out.reserve(doc.size());
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const json& e = doc[i];
    auto fail = [&](const std::string& why) {
      return Error(Errc::MalformedQuestionFile, fmt::format("{}: entry {}: {}", file.string(), i, why));
    };
    if (!e.is_object()) throw fail("not an object");
    auto get_str = [&](const char* key, bool required) -> std::string {
      auto it = e.find(key);
      if (it == e.end()) {
        if (required) throw fail(fmt::format("missing '{}'", key));
        return {};
      }
      if (it->is_number_integer()) return std::to_string(it->get<long long>());
      if (!it->is_string()) throw fail(fmt::format("'{}' must be a string", key));
      return it->get<std::string>();
    };

    QuestionRecord q;
    q.id = get_str("id", true);
    q.text = get_str("question", true);
    q.category = get_str("category", false);
    q.scene_token = get_str("scene_token", true);
    q.sample_token = get_str("sample_token", false);
    if (auto it = e.find("frame_index"); it != e.end() && !it->is_null()) {
      if (!it->is_number_integer() || it->get<long long>() < 0) throw fail("'frame_index' must be a non-negative integer");
      q.frame_index = it->get<std::size_t>();
    }
    if (!q.frame_index && q.sample_token.empty()) throw fail("needs 'frame_index' or 'sample_token'");

    RefScan scan = scan_object_refs(q.text);
    for (const auto& r : scan.rejected) {
      if (r.bad_camera) throw fail(fmt::format("object ref {}: {}", r.raw, r.reason));
    }
    for (const auto& w : scan.warnings) spdlog::warn("question {}: {}", q.id, w);
    q.object_refs = std::move(scan.refs);

    if (auto it = e.find("images"); it != e.end() && !it->is_null()) {
      if (!it->is_object()) throw fail("'images' must be an object");
      for (const auto& [name, path] : it->items()) {
        auto cam = parse_camera(name);
        if (!cam) throw fail(fmt::format("unknown camera '{}' in images", name));
        if (!path.is_string()) throw fail("image paths must be strings");
        fs::path p(path.get<std::string>());
        q.images[*cam] = p.is_absolute() ? p : base / p;
      }
    }
    out.push_back(std::move(q));
  }
  return out;
}

std::size_t resolve_frame_index(QuestionRecord& question, const SceneBundle& scene) {
  if (!question.frame_index) {
    auto idx = scene.frame_of_sample(question.sample_token);
    if (!idx) {
      throw Error(Errc::MalformedQuestionFile,
                  fmt::format("question {}: sample {} is not a keyframe of scene {}", question.id,
                              question.sample_token, scene.scene_token));
    }
    question.frame_index = *idx;
  }
  if (*question.frame_index >= scene.keyframes.size()) {
    throw Error(Errc::MalformedQuestionFile,
                fmt::format("question {}: frame_index {} outside scene {} ({} keyframes)", question.id,
                            *question.frame_index, scene.scene_token, scene.keyframes.size()));
  }
  return *question.frame_index;
}

}  // namespace drivevqa
