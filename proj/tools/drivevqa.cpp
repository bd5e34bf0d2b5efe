// Command-line entry point: ingest-check, context, annotate, ask, run, score, report.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "drivevqa/pipeline.hpp"

namespace fs = std::filesystem;
using namespace drivevqa;

#ifndef DRIVEVQA_DEFAULT_ASSETS
#define DRIVEVQA_DEFAULT_ASSETS "assets"
#endif

namespace {

struct Overrides {
  std::string config;
  std::string dataset_root;
  std::string assets;
  std::string questions;
  std::string gold;
  std::string mock_responses;
  std::string out;
  bool mock = false;
  std::optional<int> phase;
  std::optional<std::size_t> history;
  std::optional<std::size_t> shots;
  std::optional<std::size_t> samples;
  std::optional<std::string> flags;
  bool verbose = false;
};

// defaults <- config file <- flags <- environment
PipelineConfig merged_config(const Overrides& o) {
  PipelineConfig cfg;
  cfg.paths.assets = DRIVEVQA_DEFAULT_ASSETS;
  if (!o.config.empty()) cfg = load_pipeline_config(o.config, cfg);

  auto abs = [](const std::string& s) { return fs::absolute(s).lexically_normal(); };
  if (!o.dataset_root.empty()) cfg.paths.dataset_root = abs(o.dataset_root);
  if (!o.assets.empty()) cfg.paths.assets = abs(o.assets);
  if (!o.questions.empty()) cfg.paths.questions = abs(o.questions);
  if (!o.gold.empty()) cfg.paths.gold = abs(o.gold);
  if (!o.mock_responses.empty()) cfg.paths.mock_responses = abs(o.mock_responses);
  if (!o.out.empty()) cfg.paths.out = abs(o.out);
  if (o.mock) cfg.mock = true;

  nlohmann::json run = nlohmann::json::object();
  if (o.phase) run["phase"] = *o.phase;
  if (o.history) run["history_frames"] = *o.history;
  if (o.shots) run["shots"] = *o.shots;
  if (o.samples) run["n_samples"] = *o.samples;
  if (o.flags) run["flags"] = *o.flags;
  if (!run.empty()) cfg.run = parse_config(run.dump(), cfg.run);

  cfg.endpoint = with_env_overrides(cfg.endpoint);
  validate(cfg.endpoint);
  return cfg;
}

void require(const fs::path& p, const char* what) {
  if (p.empty()) throw Error(Errc::InvalidArgument, fmt::format("{} is not configured", what));
}

std::vector<AnnotateKind> parse_kinds(const std::string& list) {
  std::vector<AnnotateKind> kinds;
  std::stringstream ss(list);
  std::string k;
  while (std::getline(ss, k, ',')) {
    if (k == "boxes3d") kinds.push_back(AnnotateKind::Boxes3d);
    else if (k == "zoom") kinds.push_back(AnnotateKind::Zoom);
    else if (k == "vp") kinds.push_back(AnnotateKind::Vp);
    else if (k == "dgo") kinds.push_back(AnnotateKind::Dgo);
    else if (!k.empty()) throw Error(Errc::InvalidArgument, fmt::format("unknown annotation kind '{}'", k));
  }
  if (kinds.empty()) throw Error(Errc::InvalidArgument, "no annotation kinds given");
  return kinds;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(Errc::Io, fmt::format("cannot read {}", p.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int ingest_check(const PipelineConfig& cfg) {
  require(cfg.paths.dataset_root, "dataset root");
  const Dataset ds(cfg.paths.dataset_root);
  std::size_t frames = 0;
  for (const std::string& token : ds.scene_tokens()) {
    const auto scene = ds.scene(token);
    frames += scene->keyframes.size();
    std::size_t anns = 0;
    for (const Keyframe& kf : scene->keyframes) anns += kf.annotations.size();
    fmt::print("scene {} ({}): {} keyframes, {} annotations\n", token, scene->name, scene->keyframes.size(), anns);
  }
  if (!cfg.paths.questions.empty()) {
    std::vector<QuestionRecord> qs = load_questions(cfg.paths.questions);
    for (QuestionRecord& q : qs) {
      resolve_frame_index(q, *ds.scene(q.scene_token));
      fmt::print("question {}: {}\n", q.id, to_string(route_category(q)));
    }
    fmt::print("{} questions ok\n", qs.size());
  }
  fmt::print("{} scenes, {} keyframes ok\n", ds.scene_tokens().size(), frames);
  return kExitOk;
}

void print_notices(const std::vector<std::string>& notices) {
  for (const auto& n : notices) std::cerr << "notice: " << n << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  auto logger = spdlog::stderr_color_mt("drivevqa");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);

  CLI::App app{"Driving VQA prompting pipeline"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  Overrides o;
  app.add_option("--config", o.config, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--dataset-root", o.dataset_root, "directory of dataset tables");
  app.add_option("--assets", o.assets, "prompt asset directory");
  app.add_option("--questions", o.questions, "question file");
  app.add_option("--gold", o.gold, "gold answers");
  app.add_option("--mock-responses", o.mock_responses, "scripted mock completions");
  app.add_option("--out", o.out, "output directory");
  app.add_flag("--mock", o.mock, "use the offline mock backend");
  app.add_option("--phase", o.phase, "prompting phase")->check(CLI::IsMember({1, 2}));
  app.add_option("--history", o.history, "history frames");
  app.add_option("--shots", o.shots, "exemplars per prompt");
  app.add_option("--samples", o.samples, "completions per question");
  app.add_option("--flags", o.flags, "visual/text prompt flags, e.g. boxes3d,zoom,vp_visual or all");
  app.add_flag("-v,--verbose", o.verbose, "info-level logging");

  auto* ingest = app.add_subcommand("ingest-check", "load and validate the dataset and question file");

  std::string scene;
  std::size_t frame = 0;
  std::string refs;
  bool poses = false;
  auto* context = app.add_subcommand("context", "print the scene context and ego status for a keyframe");
  context->add_option("--scene", scene, "scene token")->required();
  context->add_option("--frame", frame, "keyframe index")->required();
  context->add_option("--refs", refs, "text holding <id,CAMERA,x,y> references");
  context->add_flag("--poses", poses, "fail when the ego status cannot be estimated");

  std::string question;
  std::string kinds = "boxes3d,zoom,vp,dgo";
  std::string dgo_mode;
  auto* annotate = app.add_subcommand("annotate", "write visual prompt images for a question");
  annotate->add_option("--question", question, "question id")->required();
  annotate->add_option("--kinds", kinds, "boxes3d,zoom,vp,dgo");
  annotate->add_option("--dgo-mode", dgo_mode, "panel, overlay or map_only");

  bool dry_run = false;
  auto* ask = app.add_subcommand("ask", "run a single question");
  ask->add_option("--question", question, "question id")->required();
  ask->add_flag("--dry-run", dry_run, "print the assembled prompt bundle and stop");

  auto* run = app.add_subcommand("run", "answer every question, vote, and score");

  std::string predictions;
  auto* score = app.add_subcommand("score", "score a predictions file against gold answers");
  score->add_option("--predictions", predictions, "predictions.jsonl")->required()->check(CLI::ExistingFile);

  std::string run_dir;
  bool csv = false;
  auto* report = app.add_subcommand("report", "print the report of a finished run");
  report->add_option("run_dir", run_dir, "run directory")->required();
  report->add_flag("--csv", csv, "print the CSV form");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }
  if (o.verbose) spdlog::set_level(spdlog::level::info);

  try {
    const PipelineConfig cfg = merged_config(o);

    if (*ingest) return ingest_check(cfg);

    if (*context) {
      require(cfg.paths.dataset_root, "dataset root");
      const ContextOutput out = cmd_context(cfg.paths.dataset_root, scene, frame, refs, poses, cfg.run);
      print_notices(out.notices);
      std::cout << out.text;
      return kExitOk;
    }

    if (*annotate) {
      require(cfg.paths.dataset_root, "dataset root");
      require(cfg.paths.questions, "question file");
      PipelineConfig c = cfg;
      if (!dgo_mode.empty()) {
        auto m = parse_orientation_mode(dgo_mode);
        if (!m) throw Error(Errc::InvalidArgument, fmt::format("unknown dgo mode '{}'", dgo_mode));
        c.run.dgo_mode = *m;
      }
      const AnnotateOutput out = cmd_annotate(c, question, parse_kinds(kinds), c.paths.out / "annotate");
      print_notices(out.notices);
      for (const auto& f : out.files) std::cout << f.string() << "\n";
      return kExitOk;
    }

    if (*ask) {
      require(cfg.paths.dataset_root, "dataset root");
      require(cfg.paths.questions, "question file");
      const AskOutput out = cmd_ask(cfg, question, cfg.paths.out / "ask", dry_run);
      print_notices(out.notices);
      if (dry_run) {
        std::cout << out.bundle_json;
        return kExitOk;
      }
      for (const ModelSample& s : out.samples) {
        fmt::print("--- sample {} ---\n{}\n", s.sample_index, s.text);
      }
      if (out.vote) {
        fmt::print("=== answer ({} of {} agree) ===\n{}\n", out.vote->counts.at(out.vote->winner.key()),
                   out.vote->n_samples, render_answer(out.vote->winner));
      }
      return kExitOk;
    }

    if (*run) {
      require(cfg.paths.dataset_root, "dataset root");
      require(cfg.paths.questions, "question file");
      const RunOutcome r = cmd_run(cfg);
      fmt::print("run {}: {} questions, {} requests issued, {} reused, {} failed\n", r.run_id, r.questions,
                 r.requests_issued, r.requests_skipped, r.failures.size());
      fmt::print("{}\n", r.run_dir.string());
      if (r.report) std::cout << read_file(r.run_dir / "report.txt");
      return r.exit_code;
    }

    if (*score) {
      require(cfg.paths.gold, "gold file");
      const ReportLabels labels = labels_for(cfg.run, fs::path(predictions).parent_path().filename().string());
      const ScoreReport rep = cmd_score(predictions, cfg.paths.gold, labels, o.out.empty() ? fs::path{} : cfg.paths.out);
      std::cout << render_report_text(rep, labels);
      return kExitOk;
    }

    if (*report) {
      const fs::path f = fs::path(run_dir) / (csv ? "report.csv" : "report.txt");
      if (!fs::exists(f)) throw Error(Errc::Io, fmt::format("{} has no report (was a gold file configured?)", run_dir));
      std::cout << read_file(f);
      return kExitOk;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
