#include "drivevqa/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "drivevqa/digest.hpp"
#include "drivevqa/error.hpp"
#include "drivevqa/image.hpp"
#include "drivevqa/visual_prompting.hpp"

namespace drivevqa {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path resolve(const fs::path& base, const fs::path& p) {
  if (p.empty()) return p;
  return (p.is_absolute() ? p : base / p).lexically_normal();
}

std::string slurp(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(Errc::Io, fmt::format("cannot read {}", file.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& file, std::string_view text) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::Io, fmt::format("cannot write {}", file.string()));
  out << text;
}

std::string safe_name(std::string_view s) {
  std::string out;
  for (char c : s) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.') ? c : '_';
  return out.empty() ? "_" : out;
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json endpoint_json(const EndpointConfig& e) {
  return {{"base_url", e.base_url},
          {"model", e.model_name},
          {"timeout_s", e.timeout_s},
          {"max_retries", e.max_retries},
          {"max_concurrency", e.max_concurrency},
          {"requests_per_minute", e.requests_per_minute},
          {"max_payload_bytes", e.max_payload_bytes},
          {"backoff_initial_s", e.backoff_initial_s},
          {"backoff_max_s", e.backoff_max_s}};
}

json config_json(const PipelineConfig& c) {
  return {{"run", json::parse(serialize_config(c.run))},
          {"endpoint", endpoint_json(c.endpoint)},
          {"paths",
           {{"dataset_root", c.paths.dataset_root.generic_string()},
            {"assets", c.paths.assets.generic_string()},
            {"questions", c.paths.questions.generic_string()},
            {"gold", c.paths.gold.generic_string()},
            {"mock_responses", c.paths.mock_responses.generic_string()},
            {"out", c.paths.out.generic_string()}}},
          {"mock", c.mock}};
}

// Everything that determines the outputs, minus machine-specific paths.
std::string config_hash(const PipelineConfig& c) {
  const json j{{"run", json::parse(serialize_config(c.run))}, {"endpoint", endpoint_json(c.endpoint)}, {"mock", c.mock}};
  return sha256_hex(j.dump());
}

std::string dataset_hash(const fs::path& root) {
  std::vector<fs::path> tables;
  for (const auto& e : fs::directory_iterator(root)) {
    if (e.is_regular_file() && e.path().extension() == ".json") tables.push_back(e.path());
  }
  std::sort(tables.begin(), tables.end());
  std::string acc;
  for (const auto& t : tables) acc += fmt::format("{} {}\n", sha256_file(t), t.filename().string());
  return sha256_hex(acc);
}

void draw_all_boxes(Image& img, const Keyframe& kf, Camera cam) {
  const CameraCalib& calib = kf.view(cam).calib;
  const BoxStyle style;
  for (const Annotation& ann : kf.annotations) {
    const auto corners = project_box(ann.box, kf.ego_pose, calib);
    for (const Segment2& s : visible_box_edges(corners, img.width(), img.height())) {
      draw_line(img, s, style.color, style.thickness);
    }
  }
}

QuestionRecord find_question(const fs::path& file, const std::string& id) {
  for (QuestionRecord& q : load_questions(file)) {
    if (q.id == id) return std::move(q);
  }
  throw Error(Errc::UnknownToken, fmt::format("question '{}' not in {}", id, file.string()));
}

std::unique_ptr<Backend> make_backend(const PipelineConfig& cfg) {
  if (cfg.mock) {
    if (cfg.paths.mock_responses.empty()) return std::make_unique<MockBackend>();
    return MockBackend::from_file(cfg.paths.mock_responses);
  }
  return std::make_unique<HttpBackend>(cfg.endpoint);
}

struct Assembled {
  PromptBundle bundle;
  std::vector<std::string> notices;
};

Assembled assemble_for(const PipelineConfig& cfg, const Dataset& ds, const PromptAssets& assets, QuestionRecord& q,
                       const fs::path& image_dir) {
  const Category cat = route_category(q);
  const QuestionContext ctx = build_context(ds, q, cfg.run);
  PreparedImages prepared = prepare_images(q, ctx, cfg.run, image_dir);
  if (cfg.run.phase == Phase::Phase2 && ctx.ego_text.empty()) {
    prepared.notices.push_back(fmt::format("ego status omitted: {}", ctx.ego_notice));
  }
  const auto shots = select_exemplars(cat, assets.exemplars, cfg.run.shots);
  Assembled a;
  a.bundle = assemble_prompt(q, cat, ctx.context_text, ctx.ego_text, prepared.images, shots, cfg.run, assets);
  a.notices = std::move(prepared.notices);
  return a;
}

std::optional<CanonicalAnswer> try_extract(const ModelSample& s, Category cat) {
  try {
    return extract_answer(s.text, cat);
  } catch (const Error& e) {
    spdlog::warn("question {} sample {}: {}", s.question_id, s.sample_index, e.what());
    return std::nullopt;
  }
}

}  // namespace

// ---------------------------------------------------------------------------

PipelineConfig parse_pipeline_config(std::string_view json_text, const fs::path& base_dir,
                                     const PipelineConfig& base) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(Errc::InvalidArgument, fmt::format("config: {}", e.what()));
  }
  if (!doc.is_object()) throw Error(Errc::InvalidArgument, "config must be a JSON object");
  PipelineConfig c = base;
  for (const auto& [key, v] : doc.items()) {
    if (key == "run") {
      c.run = parse_config(v.dump(), c.run);
    } else if (key == "endpoint") {
      if (!v.is_object()) throw Error(Errc::InvalidArgument, "config: endpoint must be an object");
      EndpointConfig& e = c.endpoint;
      try {
        for (const auto& [k, x] : v.items()) {
          if (k == "base_url") e.base_url = x.get<std::string>();
          else if (k == "model") e.model_name = x.get<std::string>();
          else if (k == "timeout_s") e.timeout_s = x.get<double>();
          else if (k == "max_retries") e.max_retries = x.get<int>();
          else if (k == "max_concurrency") e.max_concurrency = x.get<std::size_t>();
          else if (k == "requests_per_minute") e.requests_per_minute = x.get<double>();
          else if (k == "max_payload_bytes") e.max_payload_bytes = x.get<std::size_t>();
          else if (k == "backoff_initial_s") e.backoff_initial_s = x.get<double>();
          else if (k == "backoff_max_s") e.backoff_max_s = x.get<double>();
          else throw Error(Errc::InvalidArgument, fmt::format("config: unknown key 'endpoint.{}'", k));
        }
      } catch (const json::exception& ex) {
        throw Error(Errc::InvalidArgument, fmt::format("config: endpoint: {}", ex.what()));
      }
      validate(e);
    } else if (key == "paths") {
      if (!v.is_object()) throw Error(Errc::InvalidArgument, "config: paths must be an object");
      for (const auto& [k, x] : v.items()) {
        if (!x.is_string()) throw Error(Errc::InvalidArgument, fmt::format("config: paths.{} must be a string", k));
        const fs::path p = resolve(base_dir, x.get<std::string>());
        if (k == "dataset_root") c.paths.dataset_root = p;
        else if (k == "assets") c.paths.assets = p;
        else if (k == "questions") c.paths.questions = p;
        else if (k == "gold") c.paths.gold = p;
        else if (k == "mock_responses") c.paths.mock_responses = p;
        else if (k == "out") c.paths.out = p;
        else throw Error(Errc::InvalidArgument, fmt::format("config: unknown key 'paths.{}'", k));
      }
    } else if (key == "mock") {
      if (!v.is_boolean()) throw Error(Errc::InvalidArgument, "config: mock must be a boolean");
      c.mock = v.get<bool>();
    } else {
      throw Error(Errc::InvalidArgument, fmt::format("config: unknown key '{}'", key));
    }
  }
  return c;
}

PipelineConfig load_pipeline_config(const fs::path& file, const PipelineConfig& base) {
  return parse_pipeline_config(slurp(file), fs::absolute(file).parent_path(), base);
}

std::string serialize_pipeline_config(const PipelineConfig& cfg) { return config_json(cfg).dump(2) + "\n"; }

// ---------------------------------------------------------------------------

QuestionContext build_context(const Dataset& dataset, QuestionRecord& q, const RunConfig& cfg, bool require_ego) {
  QuestionContext ctx;
  ctx.scene = dataset.scene(q.scene_token);
  ctx.frame = resolve_frame_index(q, *ctx.scene);
  ctx.anchors = build_anchors(*ctx.scene, ctx.frame);
  ctx.matches = match_anchors(q.object_refs, ctx.anchors, cfg.tolerance_px);
  ctx.context_text = render_context_block(ctx.matches, ctx.anchors);

  const auto poses = pose_history(*ctx.scene, ctx.frame, std::max<std::size_t>(cfg.history_frames, 1));
  try {
    ctx.ego = estimate_state(poses, cfg.thresholds);
    ctx.ego_text = serialize_ego_state(*ctx.ego);
  } catch (const Error& e) {
    if (require_ego || (e.code() != Errc::InsufficientHistory && e.code() != Errc::ZeroDt)) throw;
    ctx.ego_notice = e.what();
  }
  return ctx;
}

fs::path current_image(const QuestionRecord& q, const QuestionContext& ctx, Camera cam) {
  if (auto it = q.images.find(cam); it != q.images.end()) return it->second;
  return ctx.scene->keyframes[ctx.frame].view(cam).image_path;
}

PreparedImages prepare_images(const QuestionRecord& q, const QuestionContext& ctx, const RunConfig& cfg,
                              const fs::path& image_dir) {
  PreparedImages out;
  const Keyframe& kf = ctx.scene->keyframes[ctx.frame];

  for (std::size_t k = std::min(cfg.history_frames, ctx.frame); k >= 1; --k) {
    out.images.history.push_back({fmt::format("history-{}:CAM_FRONT", k),
                                  ctx.scene->keyframes[ctx.frame - k].view(Camera::Front).image_path});
  }

  const FeatureFlags& f = cfg.flags;
  for (Camera cam : kCameraOrder) {
    const fs::path src = current_image(q, ctx, cam);
    const bool front = cam == Camera::Front;
    if (!(f.boxes3d || (front && (f.vp_visual || f.dgo_visual)))) {
      out.images.current.push_back({std::string(camera_name(cam)), src});
      continue;
    }
    const Image raw = read_png(src);
    Image img = raw;
    if (f.boxes3d) draw_all_boxes(img, kf, cam);
    if (front && f.vp_visual) {
      const VanishingPoint vp = estimate_vp(raw);
      if (auto overlaid = gated_vp_overlay(img, vp, cfg.vp_gate)) {
        img = std::move(*overlaid);
      } else {
        out.notices.push_back(
            fmt::format("VP confidence {:.2f} below gate {:.2f}; no VP overlay", vp.confidence, cfg.vp_gate));
      }
    }
    if (front && f.dgo_visual) {
      try {
        img = render_orientation_map(img, dgo_histogram(raw), cfg.dgo_mode);
      } catch (const Error& e) {
        if (e.code() != Errc::DegenerateImage) throw;
        out.notices.push_back(fmt::format("no orientation map: {}", e.what()));
      }
    }
    const fs::path dst = image_dir / fmt::format("{}.png", camera_name(cam));
    write_png(dst, img);
    out.images.current.push_back({std::string(camera_name(cam)), dst});
  }

  if (f.zoom) {
    std::map<Camera, Image> cache;
    for (std::size_t i = 0; i < ctx.matches.size(); ++i) {
      const AnchorMatch& m = ctx.matches[i];
      if (!m.matched || !m.anchor) continue;
      auto it = cache.find(m.anchor->camera);
      if (it == cache.end()) it = cache.emplace(m.anchor->camera, read_png(current_image(q, ctx, m.anchor->camera))).first;
      const ZoomResult z = zoom_crop(it->second, *m.anchor, cfg.zoom_scale);
      const fs::path dst = image_dir / fmt::format("zoom_{}_{}.png", i, safe_name(m.ref.ref_id));
      write_png(dst, z.crop);
      out.images.crops.push_back({fmt::format("zoom:{}:{}", m.ref.ref_id, camera_name(m.anchor->camera)), dst});
    }
  }
  return out;
}

PathPrefixes standard_prefixes(const PipelineConfig& cfg, const fs::path& run_dir) {
  PathPrefixes p;
  p.emplace_back("run", run_dir);
  if (!cfg.paths.dataset_root.empty()) p.emplace_back("dataset", cfg.paths.dataset_root);
  if (!cfg.paths.questions.empty()) p.emplace_back("questions", cfg.paths.questions.parent_path());
  return p;
}

// ---------------------------------------------------------------------------

ContextOutput cmd_context(const fs::path& dataset_root, const std::string& scene_token, std::size_t frame_index,
                          const std::string& refs_text, bool require_poses, const RunConfig& cfg) {
  const Dataset ds(dataset_root);
  QuestionRecord q;
  q.id = "context";
  q.scene_token = scene_token;
  q.frame_index = frame_index;
  q.object_refs = parse_object_refs(refs_text);
  const QuestionContext ctx = build_context(ds, q, cfg, require_poses);
  ContextOutput out;
  out.text = ctx.context_text;
  if (!ctx.ego_text.empty()) {
    out.text += ctx.ego_text + "\n";
  } else {
    out.notices.push_back(fmt::format("ego status omitted: {}", ctx.ego_notice));
  }
  return out;
}

AnnotateOutput cmd_annotate(const PipelineConfig& cfg, const std::string& question_id,
                            const std::vector<AnnotateKind>& kinds, const fs::path& out_dir) {
  const Dataset ds(cfg.paths.dataset_root);
  QuestionRecord q = find_question(cfg.paths.questions, question_id);
  const QuestionContext ctx = build_context(ds, q, cfg.run);
  const Keyframe& kf = ctx.scene->keyframes[ctx.frame];
  const fs::path dir = out_dir / safe_name(q.id);
  AnnotateOutput out;

  for (AnnotateKind kind : kinds) {
    switch (kind) {
      case AnnotateKind::Boxes3d:
        for (Camera cam : kCameraOrder) {
          Image img = read_png(current_image(q, ctx, cam));
          draw_all_boxes(img, kf, cam);
          const fs::path dst = dir / fmt::format("boxes3d_{}.png", camera_name(cam));
          write_png(dst, img);
          out.files.push_back(dst);
        }
        break;
      case AnnotateKind::Zoom: {
        bool any = false;
        for (std::size_t i = 0; i < ctx.matches.size(); ++i) {
          const AnchorMatch& m = ctx.matches[i];
          if (!m.matched || !m.anchor) continue;
          const ZoomResult z = zoom_crop(read_png(current_image(q, ctx, m.anchor->camera)), *m.anchor, cfg.run.zoom_scale);
          const fs::path dst = dir / fmt::format("zoom_{}_{}.png", i, safe_name(m.ref.ref_id));
          write_png(dst, z.crop);
          out.files.push_back(dst);
          any = true;
        }
        if (!any) out.notices.push_back("zoom: no referenced object matched an anchor");
        break;
      }
      case AnnotateKind::Vp: {
        const Image img = read_png(current_image(q, ctx, Camera::Front));
        const VanishingPoint vp = estimate_vp(img);
        if (auto overlaid = gated_vp_overlay(img, vp, cfg.run.vp_gate)) {
          const fs::path dst = dir / "vp_CAM_FRONT.png";
          write_png(dst, *overlaid);
          out.files.push_back(dst);
        } else {
          out.notices.push_back(fmt::format("vp: confidence {:.2f} below gate {:.2f}; nothing written", vp.confidence,
                                            cfg.run.vp_gate));
        }
        break;
      }
      case AnnotateKind::Dgo: {
        const Image img = read_png(current_image(q, ctx, Camera::Front));
        try {
          const Image map = render_orientation_map(img, dgo_histogram(img), cfg.run.dgo_mode);
          const fs::path dst = dir / fmt::format("dgo_{}_CAM_FRONT.png", to_string(cfg.run.dgo_mode));
          write_png(dst, map);
          out.files.push_back(dst);
        } catch (const Error& e) {
          if (e.code() != Errc::DegenerateImage) throw;
          out.notices.push_back(fmt::format("dgo: {}", e.what()));
        }
        break;
      }
    }
  }
  return out;
}

AskOutput cmd_ask(const PipelineConfig& cfg, const std::string& question_id, const fs::path& work_dir, bool dry_run,
                  Backend* backend) {
  const Dataset ds(cfg.paths.dataset_root);
  const PromptAssets assets = load_assets(cfg.paths.assets);
  QuestionRecord q = find_question(cfg.paths.questions, question_id);
  Assembled a = assemble_for(cfg, ds, assets, q, work_dir / "images" / safe_name(q.id));

  AskOutput out;
  out.bundle = std::move(a.bundle);
  out.notices = std::move(a.notices);
  out.bundle_json = serialize_bundle(out.bundle, standard_prefixes(cfg, work_dir));
  if (dry_run) return out;

  std::unique_ptr<Backend> owned;
  if (backend == nullptr) {
    owned = make_backend(cfg);
    backend = owned.get();
  }
  std::vector<SampleAnswer> answers;
  for (std::size_t i = 0; i < out.bundle.sampling.n_samples; ++i) {
    out.samples.push_back(backend->complete(out.bundle, i));
    answers.push_back({i, try_extract(out.samples.back(), out.bundle.category)});
  }
  if (!answers.empty()) out.vote = vote(answers);
  return out;
}

RunOutcome cmd_run(const PipelineConfig& cfg, Backend* backend) {
  const std::string started = utc_now();
  const PromptAssets assets = load_assets(cfg.paths.assets);
  const Dataset ds(cfg.paths.dataset_root);
  std::vector<QuestionRecord> questions = load_questions(cfg.paths.questions);

  json inputs{{"questions", sha256_file(cfg.paths.questions)}, {"dataset", dataset_hash(cfg.paths.dataset_root)}};
  inputs["gold"] = cfg.paths.gold.empty() ? json(nullptr) : json(sha256_file(cfg.paths.gold));
  inputs["mock_responses"] =
      cfg.paths.mock_responses.empty() ? json(nullptr) : json(sha256_file(cfg.paths.mock_responses));
  const std::string cfg_hash = config_hash(cfg);

  RunOutcome outcome;
  outcome.run_id = sha256_hex(fmt::format("{}\n{}\n{}", cfg_hash, assets.version(), inputs.dump())).substr(0, 12);
  outcome.run_dir = cfg.paths.out / outcome.run_id;
  outcome.questions = questions.size();
  const fs::path& run_dir = outcome.run_dir;
  fs::create_directories(run_dir);
  const std::string snapshot = serialize_pipeline_config(cfg);
  write_file(run_dir / "config.json", snapshot);
  const PathPrefixes prefixes = standard_prefixes(cfg, run_dir);

  std::vector<PromptBundle> bundles;
  for (QuestionRecord& q : questions) {
    try {
      Assembled a = assemble_for(cfg, ds, assets, q, run_dir / "images" / safe_name(q.id));
      for (const auto& n : a.notices) spdlog::info("question {}: {}", q.id, n);
      write_file(run_dir / "bundles" / (safe_name(q.id) + ".json"), serialize_bundle(a.bundle, prefixes));
      bundles.push_back(std::move(a.bundle));
    } catch (const Error& e) {
      spdlog::error("question {}: {}", q.id, e.what());
      outcome.failures.push_back({q.id, e.code(), e.what()});
    }
  }

  std::unique_ptr<Backend> owned;
  if (backend == nullptr) {
    owned = make_backend(cfg);
    backend = owned.get();
  }
  SampleStore store(run_dir / "samples.jsonl");
  RateLimiter limiter(cfg.mock ? 0.0 : cfg.endpoint.requests_per_minute);
  const DispatchReport dr = dispatch(bundles, *backend, store, cfg.endpoint.max_concurrency, &limiter);
  outcome.requests_issued = dr.requested;
  outcome.requests_skipped = dr.skipped;
  for (const auto& f : dr.failures) {
    spdlog::error("question {} sample {}: {}", f.question_id, f.sample_index, f.message);
  }

  std::string predictions;
  std::vector<Prediction> preds;
  for (const PromptBundle& b : bundles) {
    std::vector<SampleAnswer> answers;
    for (const ModelSample& s : store.for_question(b.question_id)) {
      if (s.sample_index < b.sampling.n_samples) answers.push_back({s.sample_index, try_extract(s, b.category)});
    }
    // Samples that never arrived still count against agreement.
    for (std::size_t i = answers.size(); i < b.sampling.n_samples; ++i) answers.push_back({i, std::nullopt});
    try {
      const VoteResult v = vote(answers);
      const auto q = std::find_if(questions.begin(), questions.end(),
                                  [&](const QuestionRecord& r) { return r.id == b.question_id; });
      Prediction p{b.question_id, b.category, v.winner, v.agreement, v.chosen_sample_index, q->text};
      predictions += prediction_to_json_line(p) + "\n";
      preds.push_back(std::move(p));
    } catch (const Error& e) {
      const auto sample_failure = std::find_if(dr.failures.begin(), dr.failures.end(),
                                               [&](const DispatchFailure& f) { return f.question_id == b.question_id; });
      const Errc code = sample_failure != dr.failures.end() ? sample_failure->code : e.code();
      spdlog::error("question {}: {}", b.question_id, e.what());
      outcome.failures.push_back({b.question_id, code, e.what()});
    }
  }
  write_file(run_dir / "predictions.jsonl", predictions);

  if (!cfg.paths.gold.empty()) {
    const auto gold = load_gold(cfg.paths.gold);
    const auto scores = score_predictions(preds, gold, token_f1_judge());
    outcome.report = aggregate(scores);
    const ReportLabels labels = labels_for(cfg.run, outcome.run_id);
    write_file(run_dir / "report.txt", render_report_text(*outcome.report, labels));
    write_file(run_dir / "report.csv", render_report_csv(*outcome.report, labels));
  }

  std::sort(outcome.failures.begin(), outcome.failures.end(),
            [](const QuestionFailure& a, const QuestionFailure& b) { return a.question_id < b.question_id; });
  json failures = json::array();
  for (const auto& f : outcome.failures) {
    failures.push_back({{"question_id", f.question_id}, {"code", to_string(f.code)}, {"message", f.message}});
  }
  json asset_hashes(assets.hashes);
  const json manifest{
      {"run_id", outcome.run_id},
      {"config", json::parse(snapshot)},
      {"hashes", {{"config", cfg_hash}, {"assets", asset_hashes}, {"assets_version", assets.version()}, {"inputs", inputs}}},
      {"counts",
       {{"questions", questions.size()},
        {"bundles", bundles.size()},
        {"samples", store.size()},
        {"requests_issued", dr.requested},
        {"requests_skipped", dr.skipped},
        {"request_failures", dr.failures.size()},
        {"failures", outcome.failures.size()}}},
      {"failures", failures},
      {"started_at", started},
      {"finished_at", utc_now()},
  };
  write_file(run_dir / "manifest.json", manifest.dump(2) + "\n");

  if (outcome.failures.size() * 10 > questions.size()) {
    const bool endpoint = std::any_of(outcome.failures.begin(), outcome.failures.end(),
                                      [](const QuestionFailure& f) { return exit_code_for(f.code) == kExitEndpoint; });
    outcome.exit_code = endpoint ? kExitEndpoint : kExitData;
  }
  return outcome;
}

ScoreReport cmd_score(const fs::path& predictions, const fs::path& gold, const ReportLabels& labels,
                      const fs::path& out_dir) {
  const auto preds = load_predictions(predictions);
  const auto g = load_gold(gold);
  const ScoreReport report = aggregate(score_predictions(preds, g, token_f1_judge()));
  if (!out_dir.empty()) {
    write_file(out_dir / "report.txt", render_report_text(report, labels));
    write_file(out_dir / "report.csv", render_report_csv(report, labels));
  }
  return report;
}

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::EndpointUnavailable:
    case Errc::BadRequest:
    case Errc::OversizedPayload: return kExitEndpoint;
    case Errc::InvalidArgument: return kExitUsage;
    default: return kExitData;
  }
}

}  // namespace drivevqa
