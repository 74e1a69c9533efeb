#include "tot/thought_engine.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

namespace tot {
namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::string_view trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string_view last_nonempty_line(std::string_view text) {
  size_t end = text.size();
  while (true) {
    const size_t nl = text.rfind('\n', end == 0 ? std::string_view::npos : end - 1);
    const size_t begin = nl == std::string_view::npos ? 0 : nl + 1;
    std::string_view line = trim(text.substr(begin, end - begin));
    if (!line.empty()) return line;
    if (begin == 0) return {};
    end = nl;
  }
}

bool word_at(const std::string& haystack, const std::string& word, size_t pos) {
  const auto is_word = [](unsigned char c) { return std::isalpha(c) != 0; };
  if (pos > 0 && is_word(haystack[pos - 1])) return false;
  const size_t after = pos + word.size();
  if (after < haystack.size() && is_word(haystack[after])) return false;
  return true;
}

int count_word(const std::string& haystack, const std::string& word) {
  int count = 0;
  size_t pos = 0;
  while ((pos = haystack.find(word, pos)) != std::string::npos) {
    if (word_at(haystack, word, pos)) ++count;
    pos += word.size();
  }
  return count;
}

} // namespace

int VoteTally::winner() const {
  if (counts.empty()) return 0;
  int best = 0;
  for (int i = 1; i < static_cast<int>(counts.size()); ++i) {
    if (counts[i] > counts[best]) best = i;
  }
  return best;
}

CompletionResponse CallContext::call(Backend& backend, const CompletionRequest& request) {
  CompletionResponse response = backend.complete(request);
  if (static_cast<int>(response.texts.size()) != request.n) {
    throw BackendError(backend.id() + ": returned " + std::to_string(response.texts.size()) +
                       " texts for n=" + std::to_string(request.n));
  }
  if (ledger) ledger->add(response, backend.spec());
  return response;
}

CompletionResponse CallContext::call_gen(const CompletionRequest& request) {
  return call(*gen, request);
}

CompletionResponse CallContext::call_eval(const CompletionRequest& request) {
  return call(*eval, request);
}

std::vector<Thought> generate_thoughts(const ThoughtSource& source, const State& state, int k,
                                       double temperature, CallContext& ctx) {
  if (k < 1) throw std::invalid_argument("generate_thoughts: k must be >= 1");
  const GenStrategy strategy = source.strategy(state);
  if (strategy.kind == GenKind::Refine && state.thoughts.empty()) {
    throw std::invalid_argument("generate_thoughts: refine needs a previous attempt in the state");
  }

  CompletionRequest request;
  request.prompt = source.prompt(state, k);
  request.temperature = temperature;
  request.n = strategy.kind == GenKind::Sample ? k : 1;

  const CompletionResponse response = ctx.call_gen(request);

  std::vector<std::string> candidates;
  if (strategy.kind == GenKind::Sample) {
    for (const std::string& text : response.texts) {
      auto parsed = source.parse(state, text, k);
      candidates.insert(candidates.end(), parsed.begin(), parsed.end());
    }
  } else {
    candidates = source.parse(state, response.texts.front(), k);
  }

  std::vector<Thought> thoughts;
  int index = 0;
  for (std::string& text : candidates) {
    if (trim(text).empty()) continue; // whitespace-only candidates are dropped
    if (static_cast<int>(thoughts.size()) >= k) break;
    Thought t;
    t.text = std::move(text);
    t.step_index = state.depth() + 1;
    t.strategy = strategy.kind;
    t.candidate_index = index++;
    thoughts.push_back(std::move(t));
  }
  return thoughts;
}

std::optional<ValueLabel> parse_value_label(std::string_view response) {
  const std::string_view line_view = last_nonempty_line(response);
  if (line_view.empty()) return std::nullopt;
  const std::string line = lower(line_view);

  // "impossible" contains no other label, but "sure" appears inside "unsure":
  // match on word boundaries and require exactly one distinct label kind.
  const int n_sure = count_word(line, "sure");
  const int n_likely = count_word(line, "likely");
  const int n_maybe = count_word(line, "maybe");
  const int n_impossible = count_word(line, "impossible");

  int kinds = 0;
  ValueLabelKind label = ValueLabelKind::Maybe;
  if (n_sure > 0) {
    ++kinds;
    label = ValueLabelKind::Sure;
  }
  if (n_likely + n_maybe > 0) {
    ++kinds;
    label = ValueLabelKind::Maybe;
  }
  if (n_impossible > 0) {
    ++kinds;
    label = ValueLabelKind::Impossible;
  }
  if (kinds != 1) return std::nullopt;
  return ValueLabel{label, std::string(response)};
}

std::optional<int> parse_vote(std::string_view response, int n_choices) {
  if (n_choices < 1) throw std::invalid_argument("parse_vote: n_choices must be >= 1");
  const std::string haystack = lower(response);
  const std::string needle = "best choice is";
  size_t pos = std::string::npos;
  size_t search = 0;
  while (true) {
    const size_t found = haystack.find(needle, search);
    if (found == std::string::npos) break;
    pos = found;
    search = found + needle.size();
  }
  if (pos == std::string::npos) return std::nullopt;

  size_t i = pos + needle.size();
  while (i < haystack.size() &&
         !std::isdigit(static_cast<unsigned char>(haystack[i]))) {
    if (haystack[i] == '\n') return std::nullopt; // number must follow on the same line
    ++i;
  }
  if (i == haystack.size()) return std::nullopt;
  int value = 0;
  while (i < haystack.size() && std::isdigit(static_cast<unsigned char>(haystack[i]))) {
    value = value * 10 + (haystack[i] - '0');
    if (value > 1000000) return std::nullopt;
    ++i;
  }
  if (value < 1 || value > n_choices) return std::nullopt;
  return value;
}

double label_value(ValueLabelKind label) {
  switch (label) {
    case ValueLabelKind::Sure: return 20.0;
    case ValueLabelKind::Maybe: return 1.0;
    case ValueLabelKind::Impossible: return 0.001;
  }
  return 0.0;
}

std::vector<Score> evaluate_value(std::span<const State> states, int m,
                                  const ValuePromptFn& value_prompt, double temperature,
                                  CallContext& ctx) {
  if (m < 1) throw std::invalid_argument("evaluate_value: m must be >= 1");
  std::vector<Score> scores;
  scores.reserve(states.size());
  for (const State& state : states) {
    CompletionRequest request;
    request.prompt = value_prompt(state);
    request.n = m;
    request.temperature = temperature;
    const CompletionResponse response = ctx.call_eval(request);

    Score score;
    Json labels = Json::array();
    for (const std::string& text : response.texts) {
      if (auto label = parse_value_label(text)) {
        score.value += label_value(label->label);
        ++score.samples_used;
        labels.push_back(label->label == ValueLabelKind::Sure        ? "sure"
                         : label->label == ValueLabelKind::Impossible ? "impossible"
                                                                      : "maybe");
      } else {
        ++score.parse_failures;
        labels.push_back(nullptr);
      }
    }
    score.detail = Json{{"labels", labels}};
    scores.push_back(std::move(score));
  }
  return scores;
}

VoteResult evaluate_vote(std::span<const State> states, int m, const VotePromptFn& vote_prompt,
                         double temperature, CallContext& ctx) {
  if (states.empty()) throw std::invalid_argument("evaluate_vote: no states");
  if (m < 1) throw std::invalid_argument("evaluate_vote: m must be >= 1");

  CompletionRequest request;
  request.prompt = vote_prompt(states);
  request.n = m;
  request.temperature = temperature;
  const CompletionResponse response = ctx.call_eval(request);

  VoteResult out;
  out.tally.counts.assign(states.size(), 0);
  Json ballots = Json::array();
  for (const std::string& text : response.texts) {
    if (auto choice = parse_vote(text, static_cast<int>(states.size()))) {
      ++out.tally.counts[*choice - 1];
      ballots.push_back(*choice);
    } else {
      ++out.tally.discarded;
      ballots.push_back(nullptr);
    }
  }

  out.scores.reserve(states.size());
  for (size_t i = 0; i < states.size(); ++i) {
    Score score;
    score.value = out.tally.counts[i];
    score.samples_used = m - out.tally.discarded;
    score.parse_failures = out.tally.discarded;
    score.detail = Json{{"votes", out.tally.counts[i]}, {"ballots", ballots}};
    out.scores.push_back(std::move(score));
  }
  return out;
}

} // namespace tot
