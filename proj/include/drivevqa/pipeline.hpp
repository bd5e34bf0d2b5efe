#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "drivevqa/anchor_context.hpp"
#include "drivevqa/dataset.hpp"
#include "drivevqa/ego_kinematics.hpp"
#include "drivevqa/ensembler.hpp"
#include "drivevqa/evaluator.hpp"
#include "drivevqa/prompt_builder.hpp"
#include "drivevqa/vlm_gateway.hpp"

namespace drivevqa {

struct PipelinePaths {
  std::filesystem::path dataset_root;
  std::filesystem::path assets;
  std::filesystem::path questions;
  std::filesystem::path gold;            // optional
  std::filesystem::path mock_responses;  // optional
  std::filesystem::path out = "runs";

  bool operator==(const PipelinePaths&) const = default;
};

struct PipelineConfig {
  RunConfig run;
  EndpointConfig endpoint;
  PipelinePaths paths;
  bool mock = false;

  bool operator==(const PipelineConfig&) const = default;
};

// {"run": {...}, "endpoint": {...}, "paths": {...}, "mock": bool}. Relative
// paths resolve against `base_dir`.
PipelineConfig parse_pipeline_config(std::string_view json_text, const std::filesystem::path& base_dir,
                                     const PipelineConfig& base = {});
PipelineConfig load_pipeline_config(const std::filesystem::path& file, const PipelineConfig& base = {});
std::string serialize_pipeline_config(const PipelineConfig& cfg);

// ---------------------------------------------------------------------------

struct QuestionContext {
  std::shared_ptr<const SceneBundle> scene;
  std::size_t frame = 0;
  std::vector<AnchorEntry> anchors;
  std::vector<AnchorMatch> matches;
  std::string context_text;
  std::optional<EgoState> ego;
  std::string ego_text;    // empty when the history is too short
  std::string ego_notice;  // why ego_text is empty
};

// Resolves the keyframe, builds anchors and the context block, and estimates
// ego status. Insufficient pose history leaves the ego fields empty unless
// `require_ego` is set, in which case it throws.
QuestionContext build_context(const Dataset& dataset, QuestionRecord& q, const RunConfig& cfg,
                              bool require_ego = false);

// Original or question-supplied image for a camera at the question's frame.
std::filesystem::path current_image(const QuestionRecord& q, const QuestionContext& ctx, Camera cam);

struct PreparedImages {
  PromptImages images;
  std::vector<std::string> notices;  // e.g. VP below the confidence gate
};

// Applies the enabled visual prompts, writing derived images under
// `image_dir`, and lists attachments in bundle order.
PreparedImages prepare_images(const QuestionRecord& q, const QuestionContext& ctx, const RunConfig& cfg,
                              const std::filesystem::path& image_dir);

PathPrefixes standard_prefixes(const PipelineConfig& cfg, const std::filesystem::path& run_dir);

// ---------------------------------------------------------------------------
// Commands

struct ContextOutput {
  std::string text;                  // context block plus the ego line
  std::vector<std::string> notices;  // for stderr
};

ContextOutput cmd_context(const std::filesystem::path& dataset_root, const std::string& scene_token,
                          std::size_t frame_index, const std::string& refs_text, bool require_poses,
                          const RunConfig& cfg = {});

enum class AnnotateKind { Boxes3d, Zoom, Vp, Dgo };

struct AnnotateOutput {
  std::vector<std::filesystem::path> files;
  std::vector<std::string> notices;
};

AnnotateOutput cmd_annotate(const PipelineConfig& cfg, const std::string& question_id,
                            const std::vector<AnnotateKind>& kinds, const std::filesystem::path& out_dir);

struct AskOutput {
  PromptBundle bundle;
  std::string bundle_json;
  std::vector<ModelSample> samples;
  std::optional<VoteResult> vote;
  std::vector<std::string> notices;
};

// One question end to end without persistence; `dry_run` stops after assembly.
AskOutput cmd_ask(const PipelineConfig& cfg, const std::string& question_id, const std::filesystem::path& work_dir,
                  bool dry_run, Backend* backend = nullptr);

struct QuestionFailure {
  std::string question_id;
  Errc code = Errc::InvalidArgument;
  std::string message;
};

struct RunOutcome {
  std::string run_id;
  std::filesystem::path run_dir;
  std::size_t questions = 0;
  std::size_t requests_issued = 0;
  std::size_t requests_skipped = 0;
  std::vector<QuestionFailure> failures;
  std::optional<ScoreReport> report;
  int exit_code = 0;
};

// Route, assemble, dispatch, vote, persist and score. Re-running the same
// configuration reuses the run directory and only requests missing samples.
// `backend` overrides the configured one (tests).
RunOutcome cmd_run(const PipelineConfig& cfg, Backend* backend = nullptr);

// Scores a predictions file and writes report.txt / report.csv into out_dir.
ScoreReport cmd_score(const std::filesystem::path& predictions, const std::filesystem::path& gold,
                      const ReportLabels& labels, const std::filesystem::path& out_dir);

// Exit-code contract shared by the CLI and the run summary.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitEndpoint = 3;

int exit_code_for(Errc code);

}  // namespace drivevqa
