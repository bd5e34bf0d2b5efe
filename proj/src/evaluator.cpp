#include "drivevqa/evaluator.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "drivevqa/error.hpp"

namespace drivevqa {

using nlohmann::json;

namespace {

std::string slurp(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(Errc::Io, fmt::format("cannot read {}", file.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> tokens(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{normalize_free_text(text)};
  for (std::string t; in >> t;) out.push_back(t);
  return out;
}

}  // namespace

std::vector<GoldAnswer> parse_gold(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(Errc::InvalidArgument, fmt::format("gold file: {}", e.what()));
  }
  if (!doc.is_array()) throw Error(Errc::InvalidArgument, "gold file must hold an array");
  std::vector<GoldAnswer> out;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const json& e = doc[i];
    if (!e.is_object() || !e.contains("question_id") || !e.contains("answer") || !e["answer"].is_string()) {
      throw Error(Errc::InvalidArgument, fmt::format("gold entry {}: needs question_id and answer", i));
    }
    GoldAnswer g;
    g.question_id = e["question_id"].get<std::string>();
    const std::string answer = e["answer"].get<std::string>();
    const std::string kind = e.value("kind", "free_text");
    if (kind == "mcq" || kind == "mcq_letter") {
      try {
        const CanonicalAnswer a = extract_answer("Answer: " + answer, Category::PerceptionMcq);
        g.kind = AnswerKind::McqLetter;
        g.letter = a.letter;
        g.option_text = a.option_text;
      } catch (const Error&) {
        throw Error(Errc::InvalidArgument, fmt::format("gold entry {}: no option letter in '{}'", i, answer));
      }
    } else if (kind == "free_text" || kind == "open") {
      g.kind = AnswerKind::FreeText;
      g.reference = answer;
    } else {
      throw Error(Errc::InvalidArgument, fmt::format("gold entry {}: unknown kind '{}'", i, kind));
    }
    out.push_back(std::move(g));
  }
  return out;
}

std::vector<GoldAnswer> load_gold(const std::filesystem::path& file) { return parse_gold(slurp(file)); }

std::string prediction_to_json_line(const Prediction& p) {
  json winner{{"kind", to_string(p.winner.kind)}, {"text", p.winner.normalized_text}};
  if (p.winner.kind == AnswerKind::McqLetter) {
    winner["letter"] = std::string(1, p.winner.letter);
    winner["option_text"] = p.winner.option_text;
  }
  json j{{"question_id", p.question_id},
         {"category", to_string(p.category)},
         {"winner", winner},
         {"agreement", p.agreement},
         {"chosen_sample_index", p.chosen_sample_index}};
  if (!p.question.empty()) j["question"] = p.question;
  return j.dump();
}

Prediction prediction_from_json_line(std::string_view line) {
  try {
    const json j = json::parse(line);
    Prediction p;
    p.question_id = j.at("question_id").get<std::string>();
    auto cat = parse_category(j.at("category").get<std::string>());
    if (!cat) throw Error(Errc::InvalidArgument, fmt::format("prediction {}: unknown category", p.question_id));
    p.category = *cat;
    const json& w = j.at("winner");
    if (w.at("kind").get<std::string>() == "mcq") {
      p.winner.kind = AnswerKind::McqLetter;
      const std::string letter = w.at("letter").get<std::string>();
      if (letter.size() != 1) throw Error(Errc::InvalidArgument, "prediction letter must be one character");
      p.winner.letter = letter[0];
      p.winner.option_text = w.value("option_text", "");
    } else {
      p.winner.kind = AnswerKind::FreeText;
    }
    p.winner.normalized_text = w.value("text", "");
    p.agreement = j.value("agreement", 0.0);
    p.chosen_sample_index = j.value("chosen_sample_index", std::size_t{0});
    p.question = j.value("question", "");
    return p;
  } catch (const json::exception& e) {
    throw Error(Errc::InvalidArgument, fmt::format("bad prediction record: {}", e.what()));
  }
}

std::vector<Prediction> load_predictions(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(Errc::Io, fmt::format("cannot read {}", file.string()));
  std::vector<Prediction> out;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) out.push_back(prediction_from_json_line(line));
  }
  return out;
}

double score_mcq(const CanonicalAnswer& pred, const GoldAnswer& gold) {
  if (pred.kind != AnswerKind::McqLetter || gold.kind != AnswerKind::McqLetter) {
    throw Error(Errc::KindMismatch, fmt::format("question {}: MCQ scoring needs MCQ prediction and gold",
                                                gold.question_id));
  }
  if (pred.letter != gold.letter) return 0.0;
  if (!pred.option_text.empty() && !gold.option_text.empty() &&
      normalize_free_text(pred.option_text) != normalize_free_text(gold.option_text)) {
    spdlog::warn("question {}: letter {} matches but option text '{}' differs from '{}'", gold.question_id,
                 gold.letter, pred.option_text, gold.option_text);
  }
  return 100.0;
}

double token_f1(std::string_view prediction, std::string_view reference) {
  const auto p = tokens(prediction);
  const auto r = tokens(reference);
  if (p.empty() && r.empty()) return 100.0;
  if (p.empty() || r.empty()) return 0.0;
  std::unordered_map<std::string, int> ref_counts;
  for (const auto& t : r) ++ref_counts[t];
  std::size_t common = 0;
  for (const auto& t : p) {
    if (auto it = ref_counts.find(t); it != ref_counts.end() && it->second > 0) {
      --it->second;
      ++common;
    }
  }
  if (common == 0) return 0.0;
  const double precision = static_cast<double>(common) / static_cast<double>(p.size());
  const double recall = static_cast<double>(common) / static_cast<double>(r.size());
  return 100.0 * 2.0 * precision * recall / (precision + recall);
}

Judge token_f1_judge() {
  return [](std::string_view, std::string_view prediction, std::string_view reference) {
    return token_f1(prediction, reference);
  };
}

double score_open(const CanonicalAnswer& pred, const GoldAnswer& gold, std::string_view question,
                  const Judge& judge) {
  if (pred.kind != AnswerKind::FreeText || gold.kind != AnswerKind::FreeText) {
    throw Error(Errc::KindMismatch, fmt::format("question {}: open scoring needs free-text prediction and gold",
                                                gold.question_id));
  }
  const double s = judge(question, pred.normalized_text, gold.reference);
  if (!(s >= 0.0 && s <= 100.0)) {
    throw Error(Errc::JudgeFailure, fmt::format("question {}: judge returned {}", gold.question_id, s));
  }
  return s;
}

std::vector<QuestionScore> score_predictions(std::span<const Prediction> predictions,
                                             std::span<const GoldAnswer> gold, const Judge& judge) {
  std::map<std::string, const GoldAnswer*> by_id;
  for (const GoldAnswer& g : gold) by_id[g.question_id] = &g;
  std::map<std::string, const Prediction*> predicted;
  for (const Prediction& p : predictions) predicted[p.question_id] = &p;

  std::vector<QuestionScore> out;
  for (const auto& [qid, p] : predicted) {
    QuestionScore s{qid, p->category, std::nullopt, ""};
    auto g = by_id.find(qid);
    if (g == by_id.end()) {
      spdlog::warn("question {}: no gold answer, skipped", qid);
      continue;
    }
    try {
      s.score = p->winner.kind == AnswerKind::McqLetter && g->second->kind == AnswerKind::McqLetter
                    ? score_mcq(p->winner, *g->second)
                    : score_open(p->winner, *g->second, p->question, judge);
    } catch (const Error& e) {
      if (e.code() != Errc::JudgeFailure && e.code() != Errc::KindMismatch) throw;
      spdlog::warn("question {}: unscored ({})", qid, e.what());
      s.note = std::string(to_string(e.code()));
    }
    out.push_back(std::move(s));
  }
  return out;
}

ScoreReport aggregate(std::span<const QuestionScore> scores) {
  ScoreReport r;
  std::map<Category, double> sums;
  for (Category c : kAllCategories) r.per_category[c] = {};
  double total = 0.0;
  for (const QuestionScore& s : scores) {
    CategoryScore& cs = r.per_category[s.category];
    if (!s.score) {
      ++cs.unscored;
      ++r.n_unscored;
      continue;
    }
    ++cs.n;
    ++r.n_scored;
    sums[s.category] += *s.score;
    total += *s.score;
  }
  for (auto& [c, cs] : r.per_category) {
    if (cs.n > 0) cs.mean = sums[c] / static_cast<double>(cs.n);
  }
  if (r.n_scored > 0) r.overall = total / static_cast<double>(r.n_scored);
  return r;
}

ReportLabels labels_for(const RunConfig& cfg, std::string run_name) {
  const bool phase2 = cfg.phase == Phase::Phase2;
  const FeatureFlags& f = cfg.flags;
  return {std::move(run_name), f.boxes3d || f.zoom || f.vp_visual || f.dgo_visual, phase2, phase2, phase2};
}

namespace {

constexpr std::string_view kDash = "—";

std::string_view column_name(Category c) {
  switch (c) {
    case Category::PerceptionMcq: return "Percep.-MCQ";
    case Category::PerceptionObj: return "Percep.-Obj";
    case Category::PerceptionScene: return "Percep.-Scene";
    case Category::Prediction: return "Prediction";
    case Category::PlanningScene: return "Plan.-Scene";
    case Category::PlanningObj: return "Plan.-Obj";
    case Category::CorruptionMcq: return "Corruption";
  }
  return "";
}

std::string cell(const std::optional<double>& v) { return v ? fmt::format("{:.2f}", *v) : std::string(kDash); }

// Display width; the dash is the only multi-byte glyph we emit.
std::size_t width(std::string_view s) {
  std::size_t w = 0;
  for (unsigned char c : s) {
    if ((c & 0xC0) != 0x80) ++w;
  }
  return w;
}

std::string pad(std::string_view s, std::size_t w) {
  return std::string(s) + std::string(w > width(s) ? w - width(s) : 0, ' ');
}

std::string_view yes_no(bool b) { return b ? "Yes" : "No"; }

}  // namespace

std::string render_report_text(const ScoreReport& report, const ReportLabels& labels) {
  std::vector<std::string> head = {"Visual Prompt", "Object Meta", "Ego Status", "Task-specific Prompt"};
  std::vector<std::string> row = {std::string(yes_no(labels.visual_prompt)), std::string(yes_no(labels.object_meta)),
                                  std::string(yes_no(labels.ego_status)), std::string(yes_no(labels.task_specific))};
  std::vector<std::string> counts = {"", "", "", "n"};
  for (Category c : kAllCategories) {
    const CategoryScore& cs = report.per_category.at(c);
    head.emplace_back(column_name(c));
    row.push_back(cell(cs.mean));
    counts.push_back(cs.unscored > 0 ? fmt::format("{}(+{})", cs.n, cs.unscored) : std::to_string(cs.n));
  }
  head.emplace_back("Overall");
  row.push_back(cell(report.overall));
  counts.push_back(std::to_string(report.n_scored));

  std::string out;
  if (!labels.run.empty()) out += fmt::format("Run: {}\n", labels.run);
  for (const auto* line : {&head, &row, &counts}) {
    std::string text;
    for (std::size_t i = 0; i < head.size(); ++i) {
      if (i > 0) text += " | ";
      text += pad((*line)[i], std::max(width(head[i]), width(row[i])));
    }
    while (!text.empty() && text.back() == ' ') text.pop_back();
    out += text + '\n';
  }
  if (report.n_unscored > 0) out += fmt::format("Unscored questions: {}\n", report.n_unscored);
  return out;
}

std::string render_report_csv(const ScoreReport& report, const ReportLabels& labels) {
  std::string out = "run,visual_prompt,object_meta,ego_status,task_specific,category,n,unscored,score\n";
  const std::string prefix = fmt::format("{},{},{},{},{}", labels.run, yes_no(labels.visual_prompt),
                                         yes_no(labels.object_meta), yes_no(labels.ego_status),
                                         yes_no(labels.task_specific));
  for (Category c : kAllCategories) {
    const CategoryScore& cs = report.per_category.at(c);
    out += fmt::format("{},{},{},{},{}\n", prefix, to_string(c), cs.n, cs.unscored,
                       cs.mean ? fmt::format("{:.6f}", *cs.mean) : "");
  }
  out += fmt::format("{},overall,{},{},{}\n", prefix, report.n_scored, report.n_unscored,
                     report.overall ? fmt::format("{:.6f}", *report.overall) : "");
  return out;
}

}  // namespace drivevqa
