#include "drivevqa/ensembler.hpp"

#include <algorithm>
#include <cctype>

#include <fmt/format.h>

#include "drivevqa/error.hpp"

namespace drivevqa {

std::string_view to_string(AnswerKind k) { return k == AnswerKind::McqLetter ? "mcq" : "free_text"; }

std::string CanonicalAnswer::key() const {
  return kind == AnswerKind::McqLetter ? std::string(1, letter) : normalized_text;
}

std::string normalize_free_text(std::string_view text) {
  std::string out;
  bool space = false;
  for (char c : text) {
    const auto uc = static_cast<unsigned char>(c);
    if (c == '\'') continue;
    if (std::isspace(uc) || std::ispunct(uc)) {
      space = !out.empty();
      continue;
    }
    if (space) out += ' ';
    space = false;
    out += static_cast<char>(std::tolower(uc));
  }
  return out;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Position just past the last case-insensitive "answer:" or npos.
std::size_t answer_section(std::string_view text) {
  constexpr std::string_view kTag = "answer:";
  if (text.size() < kTag.size()) return std::string_view::npos;
  for (std::size_t i = text.size() - kTag.size() + 1; i-- > 0;) {
    bool hit = true;
    for (std::size_t k = 0; k < kTag.size() && hit; ++k) {
      hit = std::tolower(static_cast<unsigned char>(text[i + k])) == kTag[k];
    }
    if (hit) return i + kTag.size();
  }
  return std::string_view::npos;
}

struct LetterHit {
  char letter;
  std::size_t end;  // index after the letter and its marker
};

std::optional<LetterHit> find_letter(std::string_view s) {
  auto standalone_start = [&](std::size_t i) {
    return i == 0 || !std::isalnum(static_cast<unsigned char>(s[i - 1]));
  };
  // "C." "C)" "C:" or a letter closing the section.
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] < 'A' || s[i] > 'E' || !standalone_start(i)) continue;
    if (i + 1 == s.size()) return LetterHit{s[i], i + 1};
    if (s[i + 1] == '.' || s[i + 1] == ')' || s[i + 1] == ':') {
      // "E.g." is not an option.
      if (i + 2 < s.size() && std::isalpha(static_cast<unsigned char>(s[i + 2]))) continue;
      return LetterHit{s[i], i + 2};
    }
  }
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] < 'A' || s[i] > 'E' || !standalone_start(i)) continue;
    if (i + 1 < s.size() && std::isspace(static_cast<unsigned char>(s[i + 1]))) return LetterHit{s[i], i + 1};
  }
  return std::nullopt;
}

}  // namespace

CanonicalAnswer extract_answer(std::string_view text, Category cat) {
  CanonicalAnswer a;
  std::string_view section;
  if (const std::size_t at = answer_section(text); at != std::string_view::npos) {
    section = text.substr(at);
  } else {
    section = text;
    a.fallback = true;
  }
  // Markdown emphasis around the answer is common and never meaningful.
  std::string cleaned;
  for (char c : section) {
    if (c != '*' && c != '`') cleaned += c;
  }
  const std::string_view body = trim(cleaned);

  if (is_mcq(cat)) {
    a.kind = AnswerKind::McqLetter;
    auto hit = find_letter(body);
    if (!hit && !a.fallback) {
      // Letter given outside the Answer section; no option text to recover.
      hit = find_letter(text);
      if (hit) {
        a.letter = hit->letter;
        a.fallback = true;
        return a;
      }
    }
    if (!hit) throw Error(Errc::UnparseableCompletion, "no option letter in completion");
    a.letter = hit->letter;
    std::string_view rest = body.substr(hit->end);
    rest = rest.substr(0, rest.find('\n'));
    rest = trim(rest);
    while (!rest.empty() && rest.back() == '.') rest.remove_suffix(1);
    a.option_text = std::string(trim(rest));
    a.normalized_text = normalize_free_text(a.option_text);
    return a;
  }

  a.kind = AnswerKind::FreeText;
  a.normalized_text = normalize_free_text(body);
  if (a.normalized_text.empty()) throw Error(Errc::UnparseableCompletion, "empty answer");
  return a;
}

std::string render_answer(const CanonicalAnswer& a) {
  if (a.kind == AnswerKind::McqLetter) {
    return a.option_text.empty() ? fmt::format("Answer: {}.", a.letter)
                                 : fmt::format("Answer: {}. {}", a.letter, a.option_text);
  }
  return "Answer: " + a.normalized_text;
}

VoteResult vote(std::span<const SampleAnswer> samples) {
  struct Tally {
    std::size_t count = 0;
    std::size_t first_index = 0;
    const CanonicalAnswer* first = nullptr;
  };
  std::map<std::string, Tally> tallies;
  for (const SampleAnswer& s : samples) {
    if (!s.answer) continue;
    Tally& t = tallies[s.answer->key()];
    if (t.count == 0 || s.sample_index < t.first_index) {
      t.first_index = s.sample_index;
      t.first = &*s.answer;
    }
    ++t.count;
  }
  if (tallies.empty()) throw Error(Errc::NoValidSamples, fmt::format("none of {} samples parsed", samples.size()));

  const Tally* best = nullptr;
  VoteResult r;
  for (const auto& [key, t] : tallies) {
    r.counts[key] = t.count;
    if (best == nullptr || t.count > best->count || (t.count == best->count && t.first_index < best->first_index)) {
      best = &t;
    }
  }
  r.winner = *best->first;
  r.chosen_sample_index = best->first_index;
  r.n_samples = samples.size();
  r.agreement = static_cast<double>(best->count) / static_cast<double>(samples.size());
  return r;
}

}  // namespace drivevqa
