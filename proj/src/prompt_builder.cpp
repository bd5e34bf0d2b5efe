#include "drivevqa/prompt_builder.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "drivevqa/digest.hpp"
#include "drivevqa/error.hpp"

namespace drivevqa {

using nlohmann::json;

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::string normalize_tag(std::string_view tag) {
  std::string out;
  for (char c : tag) {
    const auto uc = static_cast<unsigned char>(c);
    if (std::isspace(uc) || c == '-' || c == '.') {
      if (!out.empty() && out.back() != '_') out += '_';
    } else {
      out += static_cast<char>(std::tolower(uc));
    }
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out;
}

bool contains_any(std::string_view text, std::initializer_list<std::string_view> needles) {
  return std::any_of(needles.begin(), needles.end(),
                     [&](std::string_view n) { return text.find(n) != std::string_view::npos; });
}

std::string read_text(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(Errc::Io, fmt::format("cannot read asset {}", file.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string_view to_string(Category c) {
  switch (c) {
    case Category::PerceptionMcq: return "perception_mcq";
    case Category::PerceptionObj: return "perception_obj";
    case Category::PerceptionScene: return "perception_scene";
    case Category::Prediction: return "prediction";
    case Category::PlanningScene: return "planning_scene";
    case Category::PlanningObj: return "planning_obj";
    case Category::CorruptionMcq: return "corruption_mcq";
  }
  return "perception_mcq";
}

std::optional<Category> parse_category(std::string_view name) {
  const std::string n = normalize_tag(name);
  for (Category c : kAllCategories) {
    if (n == to_string(c)) return c;
  }
  return std::nullopt;
}

Family family_of(Category c) {
  switch (c) {
    case Category::PerceptionMcq:
    case Category::PerceptionObj:
    case Category::PerceptionScene: return Family::Perception;
    case Category::Prediction: return Family::Prediction;
    case Category::PlanningScene:
    case Category::PlanningObj: return Family::Planning;
    case Category::CorruptionMcq: return Family::Corruption;
  }
  return Family::Perception;
}

bool is_mcq(Category c) { return c == Category::PerceptionMcq || c == Category::CorruptionMcq; }

bool has_mcq_options(std::string_view text) {
  auto has_option = [&](char letter) {
    for (std::size_t i = text.find(letter); i != std::string_view::npos; i = text.find(letter, i + 1)) {
      const bool starts = i == 0 || std::isspace(static_cast<unsigned char>(text[i - 1])) || text[i - 1] == '(';
      const bool marked = i + 1 < text.size() && (text[i + 1] == '.' || text[i + 1] == ')');
      if (starts && marked) return true;
    }
    return false;
  };
  return has_option('A') && has_option('B');
}

Category route_category(const QuestionRecord& q) {
  const std::string tag = normalize_tag(q.category);
  const bool has_refs = !q.object_refs.empty();
  const bool mcq = has_mcq_options(q.text);

  if (auto exact = parse_category(tag)) return *exact;
  if (tag == "perception") {
    if (mcq) return Category::PerceptionMcq;
    return has_refs ? Category::PerceptionObj : Category::PerceptionScene;
  }
  if (tag == "prediction") return Category::Prediction;
  if (tag == "planning") return has_refs ? Category::PlanningObj : Category::PlanningScene;
  if (tag == "corruption" || tag == "robustness") return Category::CorruptionMcq;
  if (!tag.empty()) spdlog::warn("question {}: unknown category tag '{}', using keyword rules", q.id, q.category);

  const std::string text = lower(q.text);
  if (text.empty()) throw Error(Errc::UnroutableQuestion, fmt::format("question {} has no tag and no text", q.id));
  if (mcq) {
    return contains_any(text, {"corrupt", "degrad", "noise", "blur", "weather condition of the image"})
               ? Category::CorruptionMcq
               : Category::PerceptionMcq;
  }
  if (contains_any(text, {"what will", "predict", "going to", "will the", "will it", "future"})) {
    return Category::Prediction;
  }
  if (contains_any(text, {"what should", "should the ego", "action", "safe to", "what to do"})) {
    return has_refs ? Category::PlanningObj : Category::PlanningScene;
  }
  if (contains_any(text, {"what are", "what is", "identify", "describe", "how many", "is there", "are there",
                          "status of", "visible"})) {
    return has_refs ? Category::PerceptionObj : Category::PerceptionScene;
  }
  throw Error(Errc::UnroutableQuestion, fmt::format("question {}: no tag and no routing rule fired", q.id));
}

// ---------------------------------------------------------------------------

std::vector<Exemplar> parse_exemplars(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(Errc::InvalidArgument, fmt::format("exemplar file: {}", e.what()));
  }
  if (!doc.is_array()) throw Error(Errc::InvalidArgument, "exemplar file must hold an array");
  std::vector<Exemplar> out;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const json& e = doc[i];
    if (!e.is_object() || !e.contains("category") || !e.contains("question") || !e.contains("answer") ||
        !e["category"].is_string() || !e["question"].is_string() || !e["answer"].is_string()) {
      throw Error(Errc::InvalidArgument, fmt::format("exemplar {}: needs string category, question, answer", i));
    }
    auto cat = parse_category(e["category"].get<std::string>());
    if (!cat) throw Error(Errc::InvalidArgument, fmt::format("exemplar {}: unknown category", i));
    Exemplar ex{*cat, e["question"].get<std::string>(), e["answer"].get<std::string>()};
    const auto obs = ex.answer.find("Observations:");
    const auto rea = ex.answer.find("Reasoning:");
    const auto ans = ex.answer.rfind("Answer:");
    if (obs == std::string::npos || rea == std::string::npos || ans == std::string::npos || !(obs < rea && rea < ans)) {
      throw Error(Errc::InvalidArgument,
                  fmt::format("exemplar {}: answer must contain Observations, Reasoning and Answer in order", i));
    }
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<Exemplar> load_exemplars(const std::filesystem::path& file) { return parse_exemplars(read_text(file)); }

std::vector<Exemplar> select_exemplars(Category cat, std::span<const Exemplar> pool, std::size_t k) {
  std::vector<Exemplar> out;
  if (k == 0) return out;
  for (const Exemplar& e : pool) {
    if (e.category != cat) continue;
    out.push_back(e);
    if (out.size() == k) break;
  }
  if (out.size() < k) {
    spdlog::warn("only {} of {} requested exemplars available for {}", out.size(), k, to_string(cat));
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string PromptAssets::version() const {
  std::string acc;
  for (const auto& [name, hash] : hashes) acc += fmt::format("{} {}\n", hash, name);
  return sha256_hex(acc);
}

PromptAssets load_assets(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw Error(Errc::Io, fmt::format("asset directory {} not found", dir.string()));
  }
  PromptAssets a;
  a.dir = dir;
  auto take = [&](const std::string& rel) {
    std::string text = read_text(dir / rel);
    a.hashes[rel] = sha256_hex(text);
    while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
    return text;
  };
  a.system_prompt = take("system_prompt.txt");
  a.domain_knowledge = take("domain_knowledge.txt");
  a.phase1_system_prompt = take("phase1_system_prompt.txt");
  a.phase1_cot = take("category/phase1_cot.txt");
  a.vp_text = take("vp_text.txt");
  a.dgo_text = take("dgo_text.txt");
  for (Category c : kAllCategories) a.instructions[c] = take(fmt::format("category/{}.txt", to_string(c)));
  a.vp_task[Family::Perception] = take("vp_task/perception.txt");
  a.vp_task[Family::Prediction] = take("vp_task/prediction.txt");
  a.vp_task[Family::Planning] = take("vp_task/planning.txt");
  a.vp_task[Family::Corruption] = a.vp_task[Family::Perception];
  const std::string ex = read_text(dir / "exemplars.json");
  a.hashes["exemplars.json"] = sha256_hex(ex);
  a.exemplars = parse_exemplars(ex);
  return a;
}

// ---------------------------------------------------------------------------

namespace {

struct FlagName {
  std::string_view name;
  bool FeatureFlags::*member;
};

constexpr std::array<FlagName, 6> kFlagNames = {{
    {"boxes3d", &FeatureFlags::boxes3d},
    {"zoom", &FeatureFlags::zoom},
    {"vp_text", &FeatureFlags::vp_text},
    {"vp_visual", &FeatureFlags::vp_visual},
    {"dgo_text", &FeatureFlags::dgo_text},
    {"dgo_visual", &FeatureFlags::dgo_visual},
}};

}  // namespace

FeatureFlags parse_flags(std::string_view list) {
  FeatureFlags f;
  std::size_t pos = 0;
  while (pos <= list.size()) {
    const std::size_t comma = std::min(list.find(',', pos), list.size());
    std::string item = normalize_tag(list.substr(pos, comma - pos));
    pos = comma + 1;
    if (item.empty() || item == "none") continue;
    if (item == "all") {
      for (const auto& fn : kFlagNames) f.*fn.member = true;
      continue;
    }
    auto it = std::find_if(kFlagNames.begin(), kFlagNames.end(), [&](const FlagName& fn) { return fn.name == item; });
    if (it == kFlagNames.end()) throw Error(Errc::InvalidArgument, fmt::format("unknown feature flag '{}'", item));
    f.*it->member = true;
  }
  return f;
}

std::string render_flags(const FeatureFlags& flags) {
  std::string out;
  for (const auto& fn : kFlagNames) {
    if (!(flags.*fn.member)) continue;
    if (!out.empty()) out += ',';
    out += fn.name;
  }
  return out.empty() ? "none" : out;
}

namespace {

json config_to_json(const RunConfig& c) {
  json flags = json::object();
  for (const auto& fn : kFlagNames) flags[std::string(fn.name)] = c.flags.*fn.member;
  return json{
      {"phase", c.phase == Phase::Phase1 ? "phase1" : "phase2"},
      {"history_frames", c.history_frames},
      {"shots", c.shots},
      {"n_samples", c.n_samples},
      {"flags", flags},
      {"tolerance_px", c.tolerance_px},
      {"thresholds", {{"accel_mps2", c.thresholds.accel_mps2}, {"yaw_rate_dps", c.thresholds.yaw_rate_dps}}},
      {"sampling", {{"temperature", c.temperature}, {"top_p", c.top_p}, {"max_tokens", c.max_tokens}}},
      {"max_prompt_tokens", c.max_prompt_tokens},
      {"chars_per_token", c.chars_per_token},
      {"zoom_scale", c.zoom_scale},
      {"vp_gate", c.vp_gate},
      {"dgo_mode", std::string(to_string(c.dgo_mode))},
  };
}

void reject_unknown(const json& obj, std::initializer_list<std::string_view> keys, std::string_view where) {
  for (const auto& [k, _] : obj.items()) {
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
      throw Error(Errc::InvalidArgument, fmt::format("config: unknown key '{}{}'", where, k));
    }
  }
}

std::size_t get_count(const json& v, std::string_view key) {
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw Error(Errc::InvalidArgument, fmt::format("config: '{}' must be a non-negative integer", key));
  }
  return v.get<std::size_t>();
}

double get_number(const json& v, std::string_view key) {
  if (!v.is_number()) throw Error(Errc::InvalidArgument, fmt::format("config: '{}' must be a number", key));
  return v.get<double>();
}

}  // namespace

std::string serialize_config(const RunConfig& cfg) { return config_to_json(cfg).dump(2) + "\n"; }

RunConfig parse_config(std::string_view json_text, const RunConfig& base) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(Errc::InvalidArgument, fmt::format("config: {}", e.what()));
  }
  if (!doc.is_object()) throw Error(Errc::InvalidArgument, "config must be a JSON object");
  reject_unknown(doc,
                 {"phase", "history_frames", "shots", "n_samples", "flags", "tolerance_px", "thresholds", "sampling",
                  "max_prompt_tokens", "chars_per_token", "zoom_scale", "vp_gate", "dgo_mode"},
                 "");
  RunConfig c = base;
  if (doc.contains("phase")) {
    const json& p = doc["phase"];
    const std::string s = p.is_string() ? p.get<std::string>() : p.is_number_integer() ? std::to_string(p.get<int>()) : "";
    if (s == "phase1" || s == "1") {
      c.phase = Phase::Phase1;
    } else if (s == "phase2" || s == "2") {
      c.phase = Phase::Phase2;
    } else {
      throw Error(Errc::InvalidArgument, "config: phase must be phase1 or phase2");
    }
  }
  if (doc.contains("history_frames")) c.history_frames = get_count(doc["history_frames"], "history_frames");
  if (doc.contains("shots")) c.shots = get_count(doc["shots"], "shots");
  if (doc.contains("n_samples")) c.n_samples = get_count(doc["n_samples"], "n_samples");
  if (doc.contains("flags")) {
    const json& f = doc["flags"];
    if (f.is_string()) {
      c.flags = parse_flags(f.get<std::string>());
    } else if (f.is_object()) {
      for (const auto& [k, v] : f.items()) {
        auto it = std::find_if(kFlagNames.begin(), kFlagNames.end(), [&](const FlagName& fn) { return fn.name == k; });
        if (it == kFlagNames.end() || !v.is_boolean()) {
          throw Error(Errc::InvalidArgument, fmt::format("config: bad flag entry '{}'", k));
        }
        c.flags.*it->member = v.get<bool>();
      }
    } else {
      throw Error(Errc::InvalidArgument, "config: flags must be an object or a comma list");
    }
  }
  if (doc.contains("tolerance_px")) c.tolerance_px = get_number(doc["tolerance_px"], "tolerance_px");
  if (doc.contains("thresholds")) {
    const json& t = doc["thresholds"];
    if (!t.is_object()) throw Error(Errc::InvalidArgument, "config: thresholds must be an object");
    reject_unknown(t, {"accel_mps2", "yaw_rate_dps"}, "thresholds.");
    if (t.contains("accel_mps2")) c.thresholds.accel_mps2 = get_number(t["accel_mps2"], "accel_mps2");
    if (t.contains("yaw_rate_dps")) c.thresholds.yaw_rate_dps = get_number(t["yaw_rate_dps"], "yaw_rate_dps");
  }
  if (doc.contains("sampling")) {
    const json& s = doc["sampling"];
    if (!s.is_object()) throw Error(Errc::InvalidArgument, "config: sampling must be an object");
    reject_unknown(s, {"temperature", "top_p", "max_tokens"}, "sampling.");
    if (s.contains("temperature")) c.temperature = get_number(s["temperature"], "temperature");
    if (s.contains("top_p")) c.top_p = get_number(s["top_p"], "top_p");
    if (s.contains("max_tokens")) c.max_tokens = static_cast<int>(get_count(s["max_tokens"], "max_tokens"));
  }
  if (doc.contains("max_prompt_tokens")) c.max_prompt_tokens = get_count(doc["max_prompt_tokens"], "max_prompt_tokens");
  if (doc.contains("chars_per_token")) c.chars_per_token = get_number(doc["chars_per_token"], "chars_per_token");
  if (doc.contains("zoom_scale")) c.zoom_scale = get_number(doc["zoom_scale"], "zoom_scale");
  if (doc.contains("vp_gate")) c.vp_gate = get_number(doc["vp_gate"], "vp_gate");
  if (doc.contains("dgo_mode")) {
    const json& m = doc["dgo_mode"];
    auto mode = m.is_string() ? parse_orientation_mode(m.get<std::string>()) : std::nullopt;
    if (!mode) throw Error(Errc::InvalidArgument, "config: dgo_mode must be panel, overlay or map_only");
    c.dgo_mode = *mode;
  }
  if (!(c.chars_per_token > 0.0)) throw Error(Errc::InvalidArgument, "config: chars_per_token must be positive");
  if (!(c.zoom_scale >= 1.0)) throw Error(Errc::InvalidArgument, "config: zoom_scale must be >= 1");
  if (!(c.tolerance_px > 0.0)) throw Error(Errc::InvalidArgument, "config: tolerance_px must be positive");
  return c;
}

// ---------------------------------------------------------------------------

std::string_view to_string(Role r) { return r == Role::System ? "system" : "user"; }

std::string_view to_string(SegmentKind k) {
  switch (k) {
    case SegmentKind::System: return "system";
    case SegmentKind::Domain: return "domain";
    case SegmentKind::Instruction: return "instruction";
    case SegmentKind::VpText: return "vp_text";
    case SegmentKind::DgoText: return "dgo_text";
    case SegmentKind::Exemplar: return "exemplar";
    case SegmentKind::Context: return "context";
    case SegmentKind::Ego: return "ego";
    case SegmentKind::Question: return "question";
  }
  return "question";
}

std::size_t estimate_tokens(std::span<const Segment> segments, double chars_per_token) {
  std::size_t chars = 0;
  for (const Segment& s : segments) chars += s.text.size();
  return static_cast<std::size_t>(std::ceil(static_cast<double>(chars) / chars_per_token));
}

PromptBundle assemble_prompt(const QuestionRecord& q, Category cat, std::string_view context_text,
                             std::string_view ego_text, const PromptImages& images,
                             std::span<const Exemplar> exemplars, const RunConfig& cfg, const PromptAssets& assets) {
  PromptBundle b;
  b.question_id = q.id;
  b.category = cat;
  b.sampling = {cfg.temperature, cfg.top_p, cfg.max_tokens, cfg.n_samples};

  const bool phase1 = cfg.phase == Phase::Phase1;
  std::vector<Segment> head;
  head.push_back({Role::System, SegmentKind::System, phase1 ? assets.phase1_system_prompt : assets.system_prompt});
  head.push_back({Role::System, SegmentKind::Domain, assets.domain_knowledge});
  head.push_back({Role::System, SegmentKind::Instruction, phase1 ? assets.phase1_cot : assets.instructions.at(cat)});
  if (cfg.flags.vp_text) {
    head.push_back({Role::System, SegmentKind::VpText, assets.vp_text + "\n\n" + assets.vp_task.at(family_of(cat))});
  }
  if (cfg.flags.dgo_text) head.push_back({Role::System, SegmentKind::DgoText, assets.dgo_text});

  std::vector<Segment> tail;
  if (!phase1) {
    if (!context_text.empty()) tail.push_back({Role::User, SegmentKind::Context, std::string(context_text)});
    if (!ego_text.empty()) tail.push_back({Role::User, SegmentKind::Ego, std::string(ego_text)});
  }
  tail.push_back({Role::User, SegmentKind::Question, q.text});

  std::vector<Segment> shots;
  for (const Exemplar& e : exemplars) {
    shots.push_back({Role::User, SegmentKind::Exemplar,
                     fmt::format("Example question:\n{}\n\nExample answer:\n{}", e.question, e.answer)});
  }

  auto total = [&] {
    return estimate_tokens(head, cfg.chars_per_token) + estimate_tokens(shots, cfg.chars_per_token) +
           estimate_tokens(tail, cfg.chars_per_token);
  };
  while (total() > cfg.max_prompt_tokens && !shots.empty()) {
    shots.pop_back();
    ++b.dropped_exemplars;
  }
  if (total() > cfg.max_prompt_tokens) {
    throw Error(Errc::TokenBudgetExceeded, fmt::format("question {}: ~{} tokens exceeds the budget of {}", q.id,
                                                       total(), cfg.max_prompt_tokens));
  }
  if (b.dropped_exemplars > 0) {
    spdlog::warn("question {}: dropped {} exemplars to fit the token budget", q.id, b.dropped_exemplars);
  }

  b.segments = std::move(head);
  b.segments.insert(b.segments.end(), shots.begin(), shots.end());
  b.segments.insert(b.segments.end(), tail.begin(), tail.end());

  for (const auto* group : {&images.history, &images.current, &images.crops}) {
    for (const ImageRef& img : *group) {
      if (!std::filesystem::is_regular_file(img.path)) {
        throw Error(Errc::MissingImage, fmt::format("question {}: image {} ({}) not found", q.id, img.label,
                                                    img.path.string()));
      }
      b.images.push_back(img);
    }
  }
  return b;
}

std::string display_path(const std::filesystem::path& p, const PathPrefixes& prefixes) {
  const std::filesystem::path norm = p.lexically_normal();
  for (const auto& [name, root] : prefixes) {
    const std::filesystem::path rel = norm.lexically_relative(root.lexically_normal());
    if (!rel.empty() && *rel.begin() != "..") return name + ":" + rel.generic_string();
  }
  return norm.generic_string();
}

std::string serialize_bundle(const PromptBundle& b, const PathPrefixes& prefixes) {
  json segs = json::array();
  for (const Segment& s : b.segments) {
    segs.push_back({{"role", to_string(s.role)}, {"kind", to_string(s.kind)}, {"text", s.text}});
  }
  json imgs = json::array();
  for (const ImageRef& i : b.images) imgs.push_back({{"label", i.label}, {"path", display_path(i.path, prefixes)}});
  const json doc{
      {"question_id", b.question_id},
      {"category", to_string(b.category)},
      {"segments", segs},
      {"images", imgs},
      {"sampling",
       {{"temperature", b.sampling.temperature},
        {"top_p", b.sampling.top_p},
        {"max_tokens", b.sampling.max_tokens},
        {"n_samples", b.sampling.n_samples}}},
      {"dropped_exemplars", b.dropped_exemplars},
  };
  return doc.dump(2) + "\n";
}

}  // namespace drivevqa
