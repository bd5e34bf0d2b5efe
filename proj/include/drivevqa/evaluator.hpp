#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "drivevqa/ensembler.hpp"
#include "drivevqa/prompt_builder.hpp"

namespace drivevqa {

struct GoldAnswer {
  std::string question_id;
  AnswerKind kind = AnswerKind::FreeText;
  char letter = 0;
  std::string option_text;
  std::string reference;  // free text, as written
};

// Array of {question_id, answer, kind}; kind is "mcq" or "free_text".
std::vector<GoldAnswer> parse_gold(std::string_view json_text);
std::vector<GoldAnswer> load_gold(const std::filesystem::path& file);

// One line of the predictions file.
struct Prediction {
  std::string question_id;
  Category category = Category::PerceptionMcq;
  CanonicalAnswer winner;
  double agreement = 0.0;
  std::size_t chosen_sample_index = 0;
  std::string question;  // kept for external judges
};

std::string prediction_to_json_line(const Prediction& p);
Prediction prediction_from_json_line(std::string_view line);
std::vector<Prediction> load_predictions(const std::filesystem::path& file);

// Letters only: "A" and "A. Turn left" both score 100 against gold A.
double score_mcq(const CanonicalAnswer& pred, const GoldAnswer& gold);

// (question, prediction, reference) -> [0, 100]. Throw Error(JudgeFailure)
// when the grader cannot answer.
using Judge = std::function<double(std::string_view, std::string_view, std::string_view)>;

// 100 x multiset token F1 of the normalized texts.
double token_f1(std::string_view prediction, std::string_view reference);
Judge token_f1_judge();

double score_open(const CanonicalAnswer& pred, const GoldAnswer& gold, std::string_view question,
                  const Judge& judge);

struct QuestionScore {
  std::string question_id;
  Category category = Category::PerceptionMcq;
  std::optional<double> score;  // nullopt = unscored
  std::string note;
};

// Scores every prediction that has a gold entry (others are skipped with a
// warning). Judge failures and kind mismatches come back unscored.
std::vector<QuestionScore> score_predictions(std::span<const Prediction> predictions,
                                             std::span<const GoldAnswer> gold, const Judge& judge);

struct CategoryScore {
  std::size_t n = 0;         // scored questions
  std::size_t unscored = 0;
  std::optional<double> mean;
};

struct ScoreReport {
  std::map<Category, CategoryScore> per_category;  // all seven present
  std::optional<double> overall;                   // question-weighted
  std::size_t n_scored = 0;
  std::size_t n_unscored = 0;
};

ScoreReport aggregate(std::span<const QuestionScore> scores);

struct ReportLabels {
  std::string run;
  bool visual_prompt = false;
  bool object_meta = false;
  bool ego_status = false;
  bool task_specific = false;
};

ReportLabels labels_for(const RunConfig& cfg, std::string run_name);

std::string render_report_text(const ScoreReport& report, const ReportLabels& labels);
std::string render_report_csv(const ScoreReport& report, const ReportLabels& labels);

}  // namespace drivevqa
