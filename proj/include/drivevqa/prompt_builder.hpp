#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "drivevqa/dataset.hpp"
#include "drivevqa/ego_kinematics.hpp"
#include "drivevqa/visual_prompting.hpp"

namespace drivevqa {

enum class Category {
  PerceptionMcq,
  PerceptionObj,
  PerceptionScene,
  Prediction,
  PlanningScene,
  PlanningObj,
  CorruptionMcq,
};

// Report column order.
inline constexpr std::array<Category, 7> kAllCategories = {
    Category::PerceptionMcq, Category::PerceptionObj, Category::PerceptionScene, Category::Prediction,
    Category::PlanningScene, Category::PlanningObj,   Category::CorruptionMcq,
};

enum class Family { Perception, Prediction, Planning, Corruption };

std::string_view to_string(Category c);
std::optional<Category> parse_category(std::string_view name);
Family family_of(Category c);
bool is_mcq(Category c);

// Explicit tag wins; family tags are refined by option markers and object
// refs; untagged questions fall back to keyword rules.
Category route_category(const QuestionRecord& q);

// True when the text carries "A." / "A)" style options including at least B.
bool has_mcq_options(std::string_view text);

// ---------------------------------------------------------------------------
// Exemplars

struct Exemplar {
  Category category = Category::PerceptionMcq;
  std::string question;
  std::string answer;  // Observations / Reasoning / Answer sections

  bool operator==(const Exemplar&) const = default;
};

std::vector<Exemplar> parse_exemplars(std::string_view json_text);
std::vector<Exemplar> load_exemplars(const std::filesystem::path& file);

// First k pool entries of `cat`, pool order preserved. Warns on shortfall.
std::vector<Exemplar> select_exemplars(Category cat, std::span<const Exemplar> pool, std::size_t k);

// ---------------------------------------------------------------------------
// Assets

struct PromptAssets {
  std::filesystem::path dir;
  std::string system_prompt;
  std::string domain_knowledge;
  std::string phase1_system_prompt;
  std::string phase1_cot;
  std::string vp_text;
  std::string dgo_text;
  std::map<Category, std::string> instructions;
  std::map<Family, std::string> vp_task;  // corruption shares the perception line
  std::vector<Exemplar> exemplars;
  std::map<std::string, std::string> hashes;  // asset-relative path -> sha256

  // Digest over `hashes`; changes whenever any asset byte changes.
  std::string version() const;
};

PromptAssets load_assets(const std::filesystem::path& dir);

// ---------------------------------------------------------------------------
// Run configuration

enum class Phase { Phase1, Phase2 };

struct FeatureFlags {
  bool boxes3d = false;
  bool zoom = false;
  bool vp_text = false;
  bool vp_visual = false;
  bool dgo_text = false;
  bool dgo_visual = false;

  bool operator==(const FeatureFlags&) const = default;
};

// Comma-separated names, or "all" / "none". Throws InvalidArgument on an
// unknown name.
FeatureFlags parse_flags(std::string_view list);
std::string render_flags(const FeatureFlags& flags);

struct RunConfig {
  Phase phase = Phase::Phase2;
  std::size_t history_frames = 5;
  std::size_t shots = 10;
  std::size_t n_samples = 5;
  FeatureFlags flags;
  double tolerance_px = kDefaultMatchTolerancePx;
  KinematicsThresholds thresholds;
  double temperature = 0.7;
  double top_p = 0.9;
  int max_tokens = 1024;
  std::size_t max_prompt_tokens = 32768;
  double chars_per_token = 4.0;
  double zoom_scale = kDefaultZoomScale;
  double vp_gate = kVpConfidenceGate;
  OrientationMode dgo_mode = OrientationMode::Panel;

  bool operator==(const RunConfig&) const = default;
};

// Canonical JSON (sorted keys, two-space indent, trailing newline).
std::string serialize_config(const RunConfig& cfg);
// Missing keys keep their defaults; unknown keys and bad values throw
// InvalidArgument.
RunConfig parse_config(std::string_view json_text, const RunConfig& base = {});

// ---------------------------------------------------------------------------
// Bundles

enum class Role { System, User };
enum class SegmentKind { System, Domain, Instruction, VpText, DgoText, Exemplar, Context, Ego, Question };

std::string_view to_string(Role r);
std::string_view to_string(SegmentKind k);

struct Segment {
  Role role = Role::User;
  SegmentKind kind = SegmentKind::Question;
  std::string text;

  bool operator==(const Segment&) const = default;
};

struct ImageRef {
  std::string label;  // "history-2:CAM_FRONT", "CAM_BACK", "zoom:c1"
  std::filesystem::path path;

  bool operator==(const ImageRef&) const = default;
};

struct PromptImages {
  std::vector<ImageRef> history;  // oldest first
  std::vector<ImageRef> current;  // fixed camera order
  std::vector<ImageRef> crops;
};

struct Sampling {
  double temperature = 0.7;
  double top_p = 0.9;
  int max_tokens = 1024;
  std::size_t n_samples = 5;

  bool operator==(const Sampling&) const = default;
};

struct PromptBundle {
  std::string question_id;
  Category category = Category::PerceptionMcq;
  std::vector<Segment> segments;
  std::vector<ImageRef> images;
  Sampling sampling;
  std::size_t dropped_exemplars = 0;
};

std::size_t estimate_tokens(std::span<const Segment> segments, double chars_per_token);

// Throws MissingImage for unreadable attachments and TokenBudgetExceeded when
// the prompt is still too long after dropping every exemplar.
PromptBundle assemble_prompt(const QuestionRecord& q, Category cat, std::string_view context_text,
                             std::string_view ego_text, const PromptImages& images,
                             std::span<const Exemplar> exemplars, const RunConfig& cfg, const PromptAssets& assets);

// Named roots used to make image paths machine-independent, e.g.
// {"dataset", root} turns root/samples/x.png into "dataset:samples/x.png".
using PathPrefixes = std::vector<std::pair<std::string, std::filesystem::path>>;

std::string display_path(const std::filesystem::path& p, const PathPrefixes& prefixes);

// Canonical JSON; byte-identical for identical bundles.
std::string serialize_bundle(const PromptBundle& bundle, const PathPrefixes& prefixes = {});

}  // namespace drivevqa
