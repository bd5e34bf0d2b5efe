#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "drivevqa/prompt_builder.hpp"

namespace drivevqa {

enum class AnswerKind { McqLetter, FreeText };

std::string_view to_string(AnswerKind k);

struct CanonicalAnswer {
  AnswerKind kind = AnswerKind::FreeText;
  char letter = 0;          // 'A'..'E' for MCQ
  std::string option_text;  // MCQ, may be empty
  std::string normalized_text;
  bool fallback = false;  // no "Answer:" section; the whole completion was scanned

  // Tally key: the letter for MCQ, the normalized text otherwise.
  std::string key() const;
};

// Lowercase, ASCII punctuation removed, whitespace collapsed and trimmed.
std::string normalize_free_text(std::string_view text);

// Reads the last "Answer:" section. Throws UnparseableCompletion when an MCQ
// completion has no option letter anywhere (or free text normalizes to "").
CanonicalAnswer extract_answer(std::string_view text, Category cat);

// "Answer: C. Turn left" / "Answer: the pedestrian is crossing"
std::string render_answer(const CanonicalAnswer& a);

struct SampleAnswer {
  std::size_t sample_index = 0;
  std::optional<CanonicalAnswer> answer;  // nullopt = unparseable
};

struct VoteResult {
  CanonicalAnswer winner;  // as extracted from chosen_sample_index
  std::map<std::string, std::size_t> counts;
  double agreement = 0.0;  // winner tally / all samples, unparseable included
  std::size_t chosen_sample_index = 0;
  std::size_t n_samples = 0;
};

// Majority vote; ties go to the answer seen at the lowest sample index.
// Throws NoValidSamples when nothing parsed.
VoteResult vote(std::span<const SampleAnswer> samples);

}  // namespace drivevqa
