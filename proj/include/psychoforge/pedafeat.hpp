#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "psychoforge/common.hpp"
#include "psychoforge/corpus.hpp"
#include "psychoforge/textfeat.hpp"

namespace psychoforge::pedafeat {

// ---------------------------------------------------------------------------
// Provider contract
// ---------------------------------------------------------------------------

class ProviderError : public std::runtime_error {
 public:
  explicit ProviderError(const std::string& msg) : std::runtime_error(msg) {}
};

struct GenerationSettings {
  std::string model_tag = "mock-1";
  double temperature = 0.0;
  int run_index = 0;
};

class LlmProvider {
 public:
  virtual ~LlmProvider() = default;
  // Must be safe to call from multiple threads.
  virtual std::string complete(const std::string& prompt,
                               const GenerationSettings& settings) = 0;
};

// ---------------------------------------------------------------------------
// Feature registry
// ---------------------------------------------------------------------------

enum class LlmFeature {
  AvgSteps,
  NumMisconceptions,
  BloomLevel,
  NestingDepth,
  AbstractConcreteRatio,
  UnitsCheck,
  InfoGap,
  RealWorldContext,
  DistractorPlausibility,
  HasAbstractSymbols,
  KnowledgeDimension,
  ComplexNumberType,
  ProblemArchetype,
};

struct TemplateInfo {
  LlmFeature feature;
  const char* name;
  int default_runs;
  bool needs_correct_option;
  double min_value;  // range enforcement for parsed numerics
  double max_value;  // max < min means unbounded above
};

inline const std::vector<TemplateInfo>& all_templates() {
  static const std::vector<TemplateInfo> t{
      {LlmFeature::AvgSteps, "avg_steps", 3, false, 1, -1},
      {LlmFeature::NumMisconceptions, "num_misconceptions", 3, false, 0, 50},
      {LlmFeature::BloomLevel, "bloom_level", 1, false, 1, 6},
      {LlmFeature::NestingDepth, "nesting_depth", 3, false, 0, 20},
      {LlmFeature::AbstractConcreteRatio, "abstract_concrete_ratio", 1, false, 0, 10000},
      {LlmFeature::UnitsCheck, "units_check", 1, false, 0, 1},
      {LlmFeature::InfoGap, "info_gap", 3, false, 1, 4},
      {LlmFeature::RealWorldContext, "real_world_context", 1, false, 0, 1},
      {LlmFeature::DistractorPlausibility, "distractor_plausibility", 3, true, 1, 5},
      {LlmFeature::HasAbstractSymbols, "has_abstract_symbols", 1, false, 0, 1},
      {LlmFeature::KnowledgeDimension, "knowledge_dimension", 1, false, 0, 2},
      {LlmFeature::ComplexNumberType, "complex_number_type", 1, false, 1, 5},
      {LlmFeature::ProblemArchetype, "problem_archetype", 1, false, 0, 7},
  };
  return t;
}

inline const TemplateInfo& template_info(LlmFeature f) {
  for (const TemplateInfo& t : all_templates())
    if (t.feature == f) return t;
  throw std::logic_error("unknown LlmFeature");
}

inline LlmFeature feature_from_name(const std::string& name) {
  for (const TemplateInfo& t : all_templates())
    if (name == t.name) return t.feature;
  throw ValidationError("unknown LLM feature name: '" + name + "'");
}

inline const std::vector<std::string>& knowledge_dimension_names() {
  static const std::vector<std::string> n{"Factual", "Conceptual", "Procedural"};
  return n;
}

inline const std::vector<std::string>& problem_archetype_names() {
  static const std::vector<std::string> n{
      "Word Problem - Calculation",
      "Equation Solving",
      "Geometric Reasoning/Proof",
      "Data Interpretation",
      "Conceptual Definition/Understanding",
      "Formula Application",
      "Pattern Recognition",
      "Other",
  };
  return n;
}

inline const std::vector<std::string>& bloom_level_names() {
  static const std::vector<std::string> n{"Remember", "Understand", "Apply",
                                          "Analyze",  "Evaluate",   "Create"};
  return n;
}

inline const std::vector<std::string>& number_type_names() {
  static const std::vector<std::string> n{"Natural", "Integer", "Rational",
                                          "Irrational", "Complex"};
  return n;
}

// ---------------------------------------------------------------------------
// Prompt rendering
// ---------------------------------------------------------------------------

namespace detail {

inline std::string question_block(const corpus::QuestionRecord& q) {
  std::string out = "Problem statement:\n" + q.statement + "\n\nAnswer options:\n";
  for (const std::string& opt : q.options) out += "- " + opt + "\n";
  return out;
}

}  // namespace detail

inline std::string render_prompt(LlmFeature feature, const corpus::QuestionRecord& q) {
  const TemplateInfo& info = template_info(feature);
  if (info.needs_correct_option) {
    if (q.correct_index < 0 ||
        static_cast<std::size_t>(q.correct_index) >= q.options.size())
      throw ValidationError("render_prompt: question '" + q.question_id +
                            "' has invalid correct_index for template '" +
                            std::string(info.name) + "'");
  }
  std::string block = detail::question_block(q);
  switch (feature) {
    case LlmFeature::AvgSteps:
      return "You are a mathematics tutor. Solve the following problem the way you "
             "would explain it to a student, one pedagogically atomic step at a "
             "time (each step a single operation or decision).\n\n" +
             block +
             "\nFirst reason inside a <thinking> ... </thinking> block. After the "
             "closing tag, write the solution steps, one per line, each line "
             "formatted exactly as 'Step k: <action>' using \"Step\" as the key.";
    case LlmFeature::NumMisconceptions:
      return "List the distinct student misconceptions that could plausibly lead "
             "to a wrong answer on this problem, considering each answer "
             "option.\n\n" +
             block +
             "\nRespond with a JSON object {\"misconceptions\": [\"...\", ...]} "
             "or a numbered list (one misconception per line).";
    case LlmFeature::BloomLevel:
      return "Classify the cognitive demand of this problem on Bloom's taxonomy:\n"
             "1 = Remember: recall facts and basic concepts.\n"
             "2 = Understand: explain ideas or concepts.\n"
             "3 = Apply: use information in a new situation.\n"
             "4 = Analyze: draw connections among ideas.\n"
             "5 = Evaluate: justify a stand or decision.\n"
             "6 = Create: produce new or original work.\n\n" +
             block +
             "\nRespond with a JSON object {\"bloom_level\": <1-6>} or the level "
             "name.";
    case LlmFeature::NestingDepth:
      return "Determine the maximum expression nesting depth needed to solve this "
             "problem: the deepest level of nested parentheses, brackets, or "
             "implied sub-expressions. A flat expression like 2 + 3 has depth 0; "
             "(2 + 3) * 4 has depth 1; ((2 + 3) * 4) - 1 has depth 2.\n\n" +
             block +
             "\nRespond with a JSON object {\"nesting_depth\": <integer>} or "
             "'Depth: <integer>'.";
    case LlmFeature::AbstractConcreteRatio:
      return "Count the symbols in the problem statement: concrete numeric values "
             "versus abstract placeholders (variables, unknowns).\n\n" +
             block +
             "\nRespond with a JSON object {\"concrete_count\": <integer>, "
             "\"abstract_count\": <integer>} or two lines 'Concrete: <n>' and "
             "'Abstract: <n>'.";
    case LlmFeature::UnitsCheck:
      return "Does solving this problem require tracking measurement units "
             "(lengths, weights, times, currency)?\n\n" +
             block +
             "\nRespond with a JSON object {\"units_check\": true|false} or a "
             "single word YES or NO.";
    case LlmFeature::InfoGap:
      return "Rate the information gap between this question and its answer: how "
             "much knowledge beyond the statement a student must supply.\n"
             "1 = None: the answer can be derived directly from the statement.\n"
             "2 = Low: one known fact or routine transformation must be "
             "supplied.\n"
             "3 = Medium: several facts or a non-obvious method must be "
             "supplied.\n"
             "4 = High: substantial outside knowledge or insight is required.\n\n" +
             block +
             "\nRespond with a JSON object {\"info_gap\": <1-4>} or 'Rating: "
             "<1-4>'.";
    case LlmFeature::RealWorldContext:
      return "Decide whether this problem is framed in a real-world scenario "
             "(people, objects, everyday situations) or purely abstractly "
             "(bare numbers and symbols).\n\n" +
             block +
             "\nAnswer with exactly one token: REALWORLD or ABSTRACT.";
    case LlmFeature::DistractorPlausibility: {
      std::string correct = q.options[static_cast<std::size_t>(q.correct_index)];
      return "Rate how plausible each incorrect option is as a student's wrong "
             "answer, on this scale:\n"
             "1 = Very Unlikely: the option is nonsensical for this problem.\n"
             "2 = Unlikely: only a careless student would pick it.\n"
             "3 = Possible: it follows from a minor slip.\n"
             "4 = Likely: it follows from a common error or misconception.\n"
             "5 = Very Likely: it is the natural wrong answer.\n\n" +
             block + "\nThe correct answer is '" + correct +
             "'. Rate every other option.\nRespond with a JSON object "
             "{\"ratings\": [<1-5>, ...]} in option order (correct option "
             "skipped), or one line per option formatted 'Option <text>: "
             "<1-5>'.";
    }
    case LlmFeature::HasAbstractSymbols:
      return "Does the problem statement use abstract symbols (variables such as "
             "x or n, or placeholder marks) rather than only concrete "
             "numbers?\n\n" +
             block +
             "\nRespond with a JSON object {\"has_abstract_symbols\": true|false} "
             "or a single word YES or NO.";
    case LlmFeature::KnowledgeDimension:
      return "Classify the knowledge dimension this problem assesses:\n"
             "- Factual: terminology and discrete facts.\n"
             "- Conceptual: relationships among concepts, classifications, "
             "principles.\n"
             "- Procedural: methods, algorithms, techniques.\n\n" +
             block +
             "\nRespond with a JSON object {\"knowledge_dimension\": "
             "\"Factual|Conceptual|Procedural\"} or the single word.";
    case LlmFeature::ComplexNumberType:
      return "Identify the most complex number type a student must handle while "
             "solving, on this hierarchy:\n"
             "1 = Natural numbers.\n"
             "2 = Integers (including negatives).\n"
             "3 = Rational numbers (fractions, decimals).\n"
             "4 = Irrational or general real numbers.\n"
             "5 = Complex or imaginary numbers.\n\n" +
             block +
             "\nRespond with a JSON object {\"complex_number_type\": <1-5>} or "
             "'Type: <1-5>'.";
    case LlmFeature::ProblemArchetype:
      return "Classify this problem into exactly one archetype:\n"
             "- Word Problem - Calculation\n"
             "- Equation Solving\n"
             "- Geometric Reasoning/Proof\n"
             "- Data Interpretation\n"
             "- Conceptual Definition/Understanding\n"
             "- Formula Application\n"
             "- Pattern Recognition\n"
             "- Other\n\n" +
             block +
             "\nRespond with a JSON object {\"problem_archetype\": \"<class>\"} "
             "or the class name alone.";
  }
  throw std::logic_error("unhandled LlmFeature in render_prompt");
}

// ---------------------------------------------------------------------------
// Response parsing
// ---------------------------------------------------------------------------

struct ParsedRun {
  bool ok = false;
  double value = 0.0;               // numeric features, categorical code
  std::vector<double> values;       // plausibility ratings
  std::string label;                // categorical canonical name
  std::string error;
};

namespace detail {

inline std::string_view after_thinking(std::string_view text) {
  constexpr std::string_view tag = "</thinking>";
  std::size_t pos = text.find(tag);
  if (pos == std::string_view::npos) return text;
  return text.substr(pos + tag.size());
}

inline std::optional<nlohmann::json> find_json(std::string_view text) {
  std::size_t lo = text.find('{');
  std::size_t hi = text.rfind('}');
  if (lo == std::string_view::npos || hi == std::string_view::npos || hi < lo)
    return std::nullopt;
  nlohmann::json j = nlohmann::json::parse(text.substr(lo, hi - lo + 1), nullptr,
                                           /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  return j;
}

inline std::optional<double> json_number(const nlohmann::json& j,
                                         std::initializer_list<const char*> keys) {
  for (const char* k : keys) {
    if (!j.contains(k)) continue;
    const nlohmann::json& v = j.at(k);
    if (v.is_number()) return v.get<double>();
    if (v.is_boolean()) return v.get<bool>() ? 1.0 : 0.0;
    if (v.is_string()) {
      char* end = nullptr;
      std::string s = trim(v.get<std::string>());
      double d = std::strtod(s.c_str(), &end);
      if (end == s.c_str() + s.size() && !s.empty()) return d;
    }
  }
  return std::nullopt;
}

inline std::optional<std::string> json_string(const nlohmann::json& j,
                                              std::initializer_list<const char*> keys) {
  for (const char* k : keys)
    if (j.contains(k) && j.at(k).is_string()) return j.at(k).get<std::string>();
  return std::nullopt;
}

// Standalone integer tokens: digit runs not adjacent to letters, '.', or more
// digits. Returns the last one inside [lo, hi].
inline std::optional<long long> last_int_in_range(std::string_view text, long long lo,
                                                  long long hi) {
  std::optional<long long> found;
  std::size_t i = 0;
  auto is_digit = [](char c) { return c >= '0' && c <= '9'; };
  auto is_word = [&](char c) {
    return is_digit(c) || c == '.' || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
  };
  while (i < text.size()) {
    if (!is_digit(text[i])) {
      ++i;
      continue;
    }
    std::size_t start = i;
    while (i < text.size() && is_digit(text[i])) ++i;
    bool left_ok = start == 0 || !is_word(text[start - 1]);
    bool right_ok = i == text.size() || !is_word(text[i]);
    if (left_ok && right_ok) {
      long long v = std::strtoll(std::string(text.substr(start, i - start)).c_str(),
                                 nullptr, 10);
      if (v >= lo && v <= hi) found = v;
    }
  }
  return found;
}

inline bool boundary_ok(std::string_view text, std::size_t pos, std::size_t len) {
  auto alnum = [](char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
  };
  bool left = pos == 0 || !alnum(text[pos - 1]);
  bool right = pos + len >= text.size() || !alnum(text[pos + len]);
  return left && right;
}

// Last boundary-respecting case-insensitive occurrence among names; on equal
// positions the longer name wins. Returns index into names.
inline std::optional<std::size_t> last_name_match(std::string_view text,
                                                  const std::vector<std::string>& names) {
  std::string low = lower_ascii(text);
  std::optional<std::size_t> best;
  std::size_t best_pos = 0, best_len = 0;
  for (std::size_t ni = 0; ni < names.size(); ++ni) {
    std::string needle = lower_ascii(names[ni]);
    std::size_t from = 0;
    while (true) {
      std::size_t pos = low.find(needle, from);
      if (pos == std::string::npos) break;
      if (boundary_ok(low, pos, needle.size())) {
        if (!best || pos > best_pos || (pos == best_pos && needle.size() > best_len)) {
          best = ni;
          best_pos = pos;
          best_len = needle.size();
        }
      }
      from = pos + 1;
    }
  }
  return best;
}

inline std::optional<int> parse_binary_text(std::string_view text) {
  std::string low = lower_ascii(text);
  auto last_pos = [&](std::initializer_list<const char*> words) {
    std::size_t best = std::string::npos;
    for (const char* w : words) {
      std::string_view needle(w);
      std::size_t from = 0;
      while (true) {
        std::size_t p = low.find(needle.data(), from, needle.size());
        if (p == std::string::npos) break;
        if (boundary_ok(low, p, needle.size()) &&
            (best == std::string::npos || p > best))
          best = p;
        from = p + 1;
      }
    }
    return best;
  };
  std::size_t ypos = last_pos({"yes", "true"});
  std::size_t npos_ = last_pos({"no", "false"});
  if (ypos == std::string::npos && npos_ == std::string::npos) {
    std::optional<long long> bit = last_int_in_range(text, 0, 1);
    if (bit) return static_cast<int>(*bit);
    return std::nullopt;
  }
  if (npos_ == std::string::npos) return 1;
  if (ypos == std::string::npos) return 0;
  return ypos > npos_ ? 1 : 0;
}

inline ParsedRun fail(const std::string& why) {
  ParsedRun r;
  r.error = why;
  return r;
}

inline ParsedRun ok_value(double v) {
  ParsedRun r;
  r.ok = true;
  r.value = v;
  return r;
}

}  // namespace detail

// Counts lines formatted 'Step <k>:' after the first closing thinking tag
// (whole text when the tag is absent).
inline int parse_step_list(const std::string& response_text) {
  std::string_view body = detail::after_thinking(response_text);
  int count = 0;
  for (const std::string& rawline : split(body, '\n')) {
    std::string_view line = rawline;
    std::size_t i = 0;
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    if (line.substr(i, 4) != "Step") continue;
    i += 4;
    std::size_t ws = i;
    while (i < line.size() && line[i] == ' ') ++i;
    if (i == ws) continue;
    std::size_t digits = i;
    while (i < line.size() && line[i] >= '0' && line[i] <= '9') ++i;
    if (i == digits) continue;
    while (i < line.size() && line[i] == ' ') ++i;
    if (i < line.size() && line[i] == ':') ++count;
  }
  return count;
}

inline ParsedRun parse_response(LlmFeature feature, const std::string& text,
                                std::size_t n_distractors = 0) {
  using namespace detail;
  const TemplateInfo& info = template_info(feature);
  std::string_view body = after_thinking(text);
  std::optional<nlohmann::json> j = find_json(body);
  auto in_range = [&](double v) {
    if (v < info.min_value) return false;
    if (info.max_value >= info.min_value && v > info.max_value) return false;
    return true;
  };

  switch (feature) {
    case LlmFeature::AvgSteps: {
      int n = parse_step_list(text);
      if (n < 1) return fail("no step lines found");
      return ok_value(n);
    }
    case LlmFeature::NumMisconceptions: {
      if (j) {
        if (j->contains("misconceptions") && (*j)["misconceptions"].is_array())
          return ok_value(static_cast<double>((*j)["misconceptions"].size()));
        std::optional<double> v = json_number(*j, {"num_misconceptions", "count"});
        if (v && in_range(*v)) return ok_value(*v);
        if (v) return fail("misconception count out of range");
      }
      int count = 0;
      for (const std::string& rawline : split(body, '\n')) {
        std::string line = trim(rawline);
        std::size_t i = 0;
        while (i < line.size() && line[i] >= '0' && line[i] <= '9') ++i;
        if (i > 0 && i < line.size() && (line[i] == '.' || line[i] == ')')) ++count;
      }
      if (count == 0) return fail("no misconception list found");
      if (!in_range(count)) return fail("misconception count out of range");
      return ok_value(count);
    }
    case LlmFeature::BloomLevel: {
      if (j) {
        std::optional<double> v = json_number(*j, {"bloom_level", "level"});
        if (v) {
          if (!in_range(*v)) return fail("bloom level out of range");
          return ok_value(*v);
        }
        std::optional<std::string> s = json_string(*j, {"bloom_level", "level"});
        if (s) {
          std::optional<std::size_t> m = last_name_match(*s, bloom_level_names());
          if (m) return ok_value(static_cast<double>(*m + 1));
        }
      }
      std::optional<std::size_t> name = last_name_match(body, bloom_level_names());
      std::optional<long long> num = last_int_in_range(body, 1, 6);
      if (name && !num) return ok_value(static_cast<double>(*name + 1));
      if (num) return ok_value(static_cast<double>(*num));
      return fail("no bloom level found");
    }
    case LlmFeature::NestingDepth: {
      if (j) {
        std::optional<double> v = json_number(*j, {"nesting_depth", "depth"});
        if (v) {
          if (!in_range(*v)) return fail("nesting depth out of range");
          return ok_value(std::floor(*v));
        }
      }
      std::optional<long long> num = last_int_in_range(body, 0, 20);
      if (!num) return fail("no nesting depth found");
      return ok_value(static_cast<double>(*num));
    }
    case LlmFeature::AbstractConcreteRatio: {
      std::optional<double> concrete, abstract_v;
      if (j) {
        concrete = json_number(*j, {"concrete_count", "concrete"});
        abstract_v = json_number(*j, {"abstract_count", "abstract"});
      }
      if (!concrete || !abstract_v) {
        std::string low = lower_ascii(body);
        auto grab = [&](const char* key) -> std::optional<double> {
          std::size_t pos = low.find(key);
          if (pos == std::string::npos) return std::nullopt;
          std::size_t i = pos;
          while (i < low.size() && !(low[i] >= '0' && low[i] <= '9')) ++i;
          if (i >= low.size()) return std::nullopt;
          std::size_t start = i;
          while (i < low.size() && low[i] >= '0' && low[i] <= '9') ++i;
          return static_cast<double>(
              std::strtoll(low.substr(start, i - start).c_str(), nullptr, 10));
        };
        if (!concrete) concrete = grab("concrete");
        if (!abstract_v) abstract_v = grab("abstract");
      }
      if (!concrete || !abstract_v) return fail("counts not found");
      if (*concrete < 0 || *abstract_v < 0 || !in_range(*concrete) ||
          !in_range(*abstract_v))
        return fail("counts out of range");
      double ratio;
      if (*concrete == 0.0)
        ratio = *abstract_v > 0.0 ? *abstract_v : 0.0;
      else
        ratio = *abstract_v / *concrete;
      return ok_value(ratio);
    }
    case LlmFeature::UnitsCheck:
    case LlmFeature::HasAbstractSymbols: {
      if (j) {
        std::optional<double> v = json_number(
            *j, {"units_check", "has_abstract_symbols", "answer", "result", "value"});
        if (v) {
          if (*v != 0.0 && *v != 1.0) return fail("binary value out of range");
          return ok_value(*v);
        }
      }
      std::optional<int> bit = parse_binary_text(body);
      if (!bit) return fail("no yes/no answer found");
      return ok_value(*bit);
    }
    case LlmFeature::InfoGap: {
      if (j) {
        std::optional<double> v = json_number(*j, {"info_gap", "rating", "score"});
        if (v) {
          if (!in_range(*v)) return fail("info gap out of range");
          return ok_value(*v);
        }
      }
      std::optional<long long> num = last_int_in_range(body, 1, 4);
      if (!num) return fail("no rating found");
      return ok_value(static_cast<double>(*num));
    }
    case LlmFeature::RealWorldContext: {
      static const std::vector<std::string> tokens{"REALWORLD", "ABSTRACT"};
      if (j) {
        std::optional<std::string> s =
            json_string(*j, {"real_world_context", "context", "answer"});
        if (s) {
          std::optional<std::size_t> m = last_name_match(*s, tokens);
          if (m) return ok_value(*m == 0 ? 1.0 : 0.0);
        }
      }
      std::optional<std::size_t> m = last_name_match(body, tokens);
      if (!m) return fail("no REALWORLD/ABSTRACT token found");
      return ok_value(*m == 0 ? 1.0 : 0.0);
    }
    case LlmFeature::DistractorPlausibility: {
      std::vector<double> ratings;
      if (j && j->contains("ratings") && (*j)["ratings"].is_array()) {
        for (const nlohmann::json& v : (*j)["ratings"]) {
          if (!v.is_number()) return fail("non-numeric rating");
          ratings.push_back(v.get<double>());
        }
      } else {
        for (const std::string& rawline : split(body, '\n')) {
          if (rawline.find(':') == std::string::npos) continue;
          std::string_view tail =
              std::string_view(rawline).substr(rawline.rfind(':') + 1);
          std::optional<long long> v = last_int_in_range(tail, 1, 5);
          if (v) ratings.push_back(static_cast<double>(*v));
        }
      }
      if (ratings.empty()) return fail("no ratings found");
      for (double r : ratings)
        if (!in_range(r)) return fail("rating out of range");
      if (n_distractors > 0 && ratings.size() > n_distractors)
        ratings.resize(n_distractors);
      ParsedRun r;
      r.ok = true;
      r.values = ratings;
      return r;
    }
    case LlmFeature::KnowledgeDimension: {
      if (j) {
        std::optional<std::string> s =
            json_string(*j, {"knowledge_dimension", "classification"});
        if (s) {
          std::optional<std::size_t> m = last_name_match(*s, knowledge_dimension_names());
          if (m) {
            ParsedRun r = ok_value(static_cast<double>(*m));
            r.label = knowledge_dimension_names()[*m];
            return r;
          }
        }
      }
      std::optional<std::size_t> m = last_name_match(body, knowledge_dimension_names());
      if (!m) return fail("no knowledge dimension found");
      ParsedRun r = ok_value(static_cast<double>(*m));
      r.label = knowledge_dimension_names()[*m];
      return r;
    }
    case LlmFeature::ComplexNumberType: {
      if (j) {
        std::optional<double> v = json_number(*j, {"complex_number_type", "type"});
        if (v) {
          if (!in_range(*v)) return fail("number type out of range");
          return ok_value(*v);
        }
      }
      std::optional<long long> num = last_int_in_range(body, 1, 5);
      if (num) return ok_value(static_cast<double>(*num));
      std::optional<std::size_t> m = last_name_match(body, number_type_names());
      if (m) return ok_value(static_cast<double>(*m + 1));
      return fail("no number type found");
    }
    case LlmFeature::ProblemArchetype: {
      if (j) {
        std::optional<std::string> s =
            json_string(*j, {"problem_archetype", "archetype", "class"});
        if (s) {
          std::optional<std::size_t> m = last_name_match(*s, problem_archetype_names());
          if (m) {
            ParsedRun r = ok_value(static_cast<double>(*m));
            r.label = problem_archetype_names()[*m];
            return r;
          }
        }
      }
      std::optional<std::size_t> m = last_name_match(body, problem_archetype_names());
      if (!m) return fail("no archetype found");
      ParsedRun r = ok_value(static_cast<double>(*m));
      r.label = problem_archetype_names()[*m];
      return r;
    }
  }
  return detail::fail("unhandled feature");
}

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

struct AggregatedValue {
  bool missing = true;
  double value = 0.0;   // mean/mode numeric, categorical code
  double value2 = 0.0;  // plausibility: mean-of-means (value = mean-of-maxes)
  std::string label;    // categorical name
  int n_success = 0;
  int n_runs = 0;
  std::string error;
};

namespace detail {

inline bool is_mean_aggregated(LlmFeature f) {
  switch (f) {
    case LlmFeature::AvgSteps:
    case LlmFeature::NumMisconceptions:
    case LlmFeature::InfoGap:
    case LlmFeature::AbstractConcreteRatio:
      return true;
    default:
      return false;
  }
}

inline double mode_first_seen(const std::vector<double>& vals) {
  double best = vals[0];
  std::size_t best_count = 0;
  for (std::size_t i = 0; i < vals.size(); ++i) {
    bool seen_before = false;
    for (std::size_t k = 0; k < i; ++k)
      if (vals[k] == vals[i]) seen_before = true;
    if (seen_before) continue;
    std::size_t count = 0;
    for (double v : vals)
      if (v == vals[i]) ++count;
    if (count > best_count) {
      best = vals[i];
      best_count = count;
    }
  }
  return best;
}

}  // namespace detail

inline AggregatedValue aggregate_runs(LlmFeature feature,
                                      const std::vector<ParsedRun>& runs) {
  AggregatedValue out;
  out.n_runs = static_cast<int>(runs.size());
  std::vector<const ParsedRun*> good;
  for (const ParsedRun& r : runs)
    if (r.ok) good.push_back(&r);
  out.n_success = static_cast<int>(good.size());
  if (good.empty()) {
    out.missing = true;
    out.error = runs.empty() ? "no runs" : runs.back().error;
    return out;
  }
  out.missing = false;

  if (feature == LlmFeature::DistractorPlausibility) {
    double max_sum = 0.0, mean_sum = 0.0;
    for (const ParsedRun* r : good) {
      double mx = r->values[0], sum = 0.0;
      for (double v : r->values) {
        mx = std::max(mx, v);
        sum += v;
      }
      max_sum += mx;
      mean_sum += sum / static_cast<double>(r->values.size());
    }
    out.value = max_sum / static_cast<double>(good.size());
    out.value2 = mean_sum / static_cast<double>(good.size());
    return out;
  }

  std::vector<double> vals;
  for (const ParsedRun* r : good) vals.push_back(r->value);
  if (detail::is_mean_aggregated(feature)) {
    double s = 0.0;
    for (double v : vals) s += v;
    out.value = s / static_cast<double>(vals.size());
  } else {
    out.value = detail::mode_first_seen(vals);
    for (const ParsedRun* r : good) {
      if (r->value == out.value) {
        out.label = r->label;
        break;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Run records and cache
// ---------------------------------------------------------------------------

struct LlmRunRecord {
  std::string question_id;
  std::string feature_name;
  int run_index = 0;
  std::string model_tag;
  std::string timestamp;
  std::string raw_response;
  bool parse_ok = false;
  std::string parsed_repr;
};

inline nlohmann::json run_record_to_json(const LlmRunRecord& r) {
  nlohmann::json j;
  j["question_id"] = r.question_id;
  j["feature"] = r.feature_name;
  j["run_index"] = r.run_index;
  j["model_tag"] = r.model_tag;
  j["timestamp"] = r.timestamp;
  j["raw_response"] = r.raw_response;
  j["parse_ok"] = r.parse_ok;
  j["parsed_repr"] = r.parsed_repr;
  return j;
}

inline LlmRunRecord run_record_from_json(const nlohmann::json& j) {
  LlmRunRecord r;
  r.question_id = j.at("question_id").get<std::string>();
  r.feature_name = j.at("feature").get<std::string>();
  r.run_index = j.at("run_index").get<int>();
  r.model_tag = j.at("model_tag").get<std::string>();
  r.timestamp = j.at("timestamp").get<std::string>();
  r.raw_response = j.at("raw_response").get<std::string>();
  r.parse_ok = j.at("parse_ok").get<bool>();
  r.parsed_repr = j.at("parsed_repr").get<std::string>();
  return r;
}

// JSONL-backed run cache keyed by (question, feature, model, run). Append-only;
// loads are tolerant of a missing file, strict about malformed lines.
class RunCache {
 public:
  RunCache() = default;
  explicit RunCache(std::filesystem::path file) : file_(std::move(file)) {
    if (file_.empty() || !std::filesystem::exists(file_)) return;
    std::vector<std::string> lines = read_lines(file_);
    for (std::size_t ln = 0; ln < lines.size(); ++ln) {
      if (trim(lines[ln]).empty()) continue;
      nlohmann::json j = nlohmann::json::parse(lines[ln], nullptr, false);
      if (j.is_discarded())
        throw ValidationError(file_.string() + ":" + std::to_string(ln + 1) +
                              ": malformed cache line");
      LlmRunRecord r = run_record_from_json(j);
      entries_[key_of(r)] = r;
    }
  }

  std::optional<LlmRunRecord> lookup(const std::string& qid, const std::string& feature,
                                     const std::string& model, int run) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = entries_.find(qid + "\x1f" + feature + "\x1f" + model + "\x1f" +
                            std::to_string(run));
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  void insert(const LlmRunRecord& r) {
    std::lock_guard<std::mutex> lock(mu_);
    std::string key = key_of(r);
    if (entries_.count(key)) return;
    entries_[key] = r;
    if (!file_.empty()) {
      if (file_.has_parent_path()) std::filesystem::create_directories(file_.parent_path());
      std::ofstream out(file_, std::ios::app | std::ios::binary);
      out << run_record_to_json(r).dump() << '\n';
    }
  }

  std::size_t size() const {
    std::lock_guard<std::mutex> lock(mu_);
    return entries_.size();
  }

 private:
  static std::string key_of(const LlmRunRecord& r) {
    return r.question_id + "\x1f" + r.feature_name + "\x1f" + r.model_tag + "\x1f" +
           std::to_string(r.run_index);
  }

  std::filesystem::path file_;
  mutable std::mutex mu_;
  std::map<std::string, LlmRunRecord> entries_;
};

// ---------------------------------------------------------------------------
// Extraction
// ---------------------------------------------------------------------------

struct ExtractOptions {
  GenerationSettings settings;
  std::map<std::string, int> run_overrides;  // feature name -> run count
  int max_in_flight = 4;
  RunCache* cache = nullptr;
  // Fixed default keeps artifacts byte-stable; callers may inject a clock.
  std::function<std::string()> timestamp = [] {
    return std::string("1970-01-01T00:00:00Z");
  };
};

struct ExtractResult {
  AggregatedValue value;
  std::vector<LlmRunRecord> records;
};

inline int runs_for(const TemplateInfo& info, const ExtractOptions& opts) {
  auto it = opts.run_overrides.find(info.name);
  int n = it == opts.run_overrides.end() ? info.default_runs : it->second;
  if (n < 1) throw ValidationError(std::string("run count for '") + info.name +
                                   "' must be >= 1");
  return n;
}

inline ExtractResult extract_feature(LlmProvider& provider, LlmFeature feature,
                                     const corpus::QuestionRecord& q, int n_runs,
                                     const ExtractOptions& opts = {}) {
  if (n_runs < 1) throw ValidationError("extract_feature: n_runs must be >= 1");
  const TemplateInfo& info = template_info(feature);
  std::string prompt = render_prompt(feature, q);
  std::size_t n_distractors = q.options.size() - 1;

  ExtractResult out;
  std::vector<ParsedRun> parses;
  for (int run = 0; run < n_runs; ++run) {
    LlmRunRecord rec;
    rec.question_id = q.question_id;
    rec.feature_name = info.name;
    rec.run_index = run;
    rec.model_tag = opts.settings.model_tag;
    rec.timestamp = opts.timestamp();

    std::optional<LlmRunRecord> cached;
    if (opts.cache)
      cached = opts.cache->lookup(q.question_id, info.name, rec.model_tag, run);
    ParsedRun parsed;
    if (cached) {
      rec = *cached;
      parsed = parse_response(feature, rec.raw_response, n_distractors);
    } else {
      GenerationSettings settings = opts.settings;
      settings.run_index = run;
      bool provider_returned = false;
      try {
        rec.raw_response = provider.complete(prompt, settings);
        provider_returned = true;
        parsed = parse_response(feature, rec.raw_response, n_distractors);
      } catch (const std::exception& e) {
        parsed.ok = false;
        parsed.error = std::string("provider failure: ") + e.what();
        rec.raw_response = "";
      }
      rec.parse_ok = parsed.ok;
      rec.parsed_repr = parsed.ok ? fmt_g(parsed.value) : parsed.error;
      if (parsed.ok && !parsed.values.empty()) {
        rec.parsed_repr = "[";
        for (std::size_t i = 0; i < parsed.values.size(); ++i) {
          if (i) rec.parsed_repr += ",";
          rec.parsed_repr += fmt_g(parsed.values[i]);
        }
        rec.parsed_repr += "]";
      }
      // Parse failures of a real response are cacheable (reparse is
      // deterministic); transport failures are not, so a rerun can retry.
      if (opts.cache && provider_returned) opts.cache->insert(rec);
    }
    parses.push_back(std::move(parsed));
    out.records.push_back(std::move(rec));
  }
  out.value = aggregate_runs(feature, parses);
  return out;
}

// ---------------------------------------------------------------------------
// Bundles
// ---------------------------------------------------------------------------

struct LlmFeatureBundle {
  std::map<std::string, AggregatedValue> by_feature;  // feature name -> value

  const AggregatedValue* find(const std::string& feature_name) const {
    auto it = by_feature.find(feature_name);
    return it == by_feature.end() ? nullptr : &it->second;
  }
};

// Every (feature x run) task may run concurrently up to max_in_flight;
// aggregation is keyed by run_index so completion order cannot matter.
inline std::pair<LlmFeatureBundle, std::vector<LlmRunRecord>> extract_bundle(
    LlmProvider& provider, const corpus::QuestionRecord& q,
    const ExtractOptions& opts = {}) {
  LlmFeatureBundle bundle;
  std::vector<LlmRunRecord> records;
  if (opts.max_in_flight > 1) {
    std::counting_semaphore<256> gate(opts.max_in_flight);
    std::vector<std::future<ExtractResult>> futures;
    for (const TemplateInfo& info : all_templates()) {
      int n_runs = runs_for(info, opts);
      futures.push_back(std::async(std::launch::async, [&, n_runs, f = info.feature] {
        gate.acquire();
        try {
          ExtractResult r = extract_feature(provider, f, q, n_runs, opts);
          gate.release();
          return r;
        } catch (...) {
          gate.release();
          throw;
        }
      }));
    }
    for (std::size_t i = 0; i < futures.size(); ++i) {
      ExtractResult r = futures[i].get();
      bundle.by_feature[all_templates()[i].name] = r.value;
      for (LlmRunRecord& rec : r.records) records.push_back(std::move(rec));
    }
  } else {
    for (const TemplateInfo& info : all_templates()) {
      ExtractResult r =
          extract_feature(provider, info.feature, q, runs_for(info, opts), opts);
      bundle.by_feature[info.name] = r.value;
      for (LlmRunRecord& rec : r.records) records.push_back(std::move(rec));
    }
  }
  return {std::move(bundle), std::move(records)};
}

// One-hot segments: knowledge dimension (3), number type (5), archetype (8).
// Missing categorical -> all-zero segment.
inline std::vector<double> one_hot_encode(const LlmFeatureBundle& bundle) {
  std::vector<double> out(3 + 5 + 8, 0.0);
  const AggregatedValue* kd = bundle.find("knowledge_dimension");
  if (kd && !kd->missing) {
    int c = static_cast<int>(kd->value);
    if (c >= 0 && c < 3) out[static_cast<std::size_t>(c)] = 1.0;
  }
  const AggregatedValue* nt = bundle.find("complex_number_type");
  if (nt && !nt->missing) {
    int c = static_cast<int>(nt->value);
    if (c >= 1 && c <= 5) out[static_cast<std::size_t>(3 + c - 1)] = 1.0;
  }
  const AggregatedValue* ar = bundle.find("problem_archetype");
  if (ar && !ar->missing) {
    int c = static_cast<int>(ar->value);
    if (c >= 0 && c < 8) out[static_cast<std::size_t>(8 + c)] = 1.0;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Aggregate file (JSONL keyed by question and feature)
// ---------------------------------------------------------------------------

class AggregateTable {
 public:
  void put(const std::string& qid, const std::string& feature,
           const AggregatedValue& v) {
    table_[qid].by_feature[feature] = v;
  }

  const LlmFeatureBundle* find(const std::string& qid) const {
    auto it = table_.find(qid);
    return it == table_.end() ? nullptr : &it->second;
  }

  std::size_t size() const { return table_.size(); }

  void save(const std::filesystem::path& path) const {
    std::string out;
    for (const auto& [qid, bundle] : table_) {
      for (const auto& [feature, v] : bundle.by_feature) {
        nlohmann::json j;
        j["question_id"] = qid;
        j["feature"] = feature;
        j["missing"] = v.missing;
        j["n_success"] = v.n_success;
        j["n_runs"] = v.n_runs;
        if (v.missing) {
          j["error"] = v.error;
        } else {
          j["value"] = v.value;
          if (feature == "distractor_plausibility") j["value2"] = v.value2;
          if (!v.label.empty()) j["label"] = v.label;
        }
        out += j.dump();
        out += '\n';
      }
    }
    write_text_file(path, out);
  }

  static AggregateTable load(const std::filesystem::path& path) {
    AggregateTable t;
    std::vector<std::string> lines = read_lines(path);
    for (std::size_t ln = 0; ln < lines.size(); ++ln) {
      if (trim(lines[ln]).empty()) continue;
      nlohmann::json j = nlohmann::json::parse(lines[ln], nullptr, false);
      if (j.is_discarded())
        throw ValidationError(path.string() + ":" + std::to_string(ln + 1) +
                              ": malformed aggregate line");
      AggregatedValue v;
      v.missing = j.at("missing").get<bool>();
      v.n_success = j.at("n_success").get<int>();
      v.n_runs = j.at("n_runs").get<int>();
      if (!v.missing) {
        v.value = j.at("value").get<double>();
        if (j.contains("value2")) v.value2 = j.at("value2").get<double>();
        if (j.contains("label")) v.label = j.at("label").get<std::string>();
      } else if (j.contains("error")) {
        v.error = j.at("error").get<std::string>();
      }
      t.put(j.at("question_id").get<std::string>(), j.at("feature").get<std::string>(),
            v);
    }
    return t;
  }

  const std::map<std::string, LlmFeatureBundle>& entries() const { return table_; }

 private:
  std::map<std::string, LlmFeatureBundle> table_;
};

// ---------------------------------------------------------------------------
// Providers
// ---------------------------------------------------------------------------

// Retries transport failures with exponential backoff, then rethrows; the
// extraction loop turns the final failure into a failed run.
class RetryingProvider : public LlmProvider {
 public:
  RetryingProvider(std::shared_ptr<LlmProvider> inner, int attempts = 3,
                   int backoff_base_ms = 250)
      : inner_(std::move(inner)), attempts_(attempts), backoff_base_ms_(backoff_base_ms) {
    if (attempts_ < 1) throw ValidationError("retry attempts must be >= 1");
  }

  std::string complete(const std::string& prompt,
                       const GenerationSettings& settings) override {
    int delay = backoff_base_ms_;
    for (int attempt = 1;; ++attempt) {
      try {
        return inner_->complete(prompt, settings);
      } catch (const std::exception&) {
        if (attempt >= attempts_) throw;
        if (delay > 0)
          std::this_thread::sleep_for(std::chrono::milliseconds(delay));
        delay *= 2;
      }
    }
  }

 private:
  std::shared_ptr<LlmProvider> inner_;
  int attempts_;
  int backoff_base_ms_;
};

namespace detail {

inline std::string extract_prompt_statement(const std::string& prompt) {
  constexpr std::string_view head = "Problem statement:\n";
  constexpr std::string_view tail = "\n\nAnswer options:\n";
  std::size_t b = prompt.find(head);
  if (b == std::string::npos) return prompt;
  b += head.size();
  std::size_t e = prompt.find(tail, b);
  if (e == std::string::npos) return prompt.substr(b);
  return prompt.substr(b, e - b);
}

inline std::vector<std::string> extract_prompt_options(const std::string& prompt) {
  constexpr std::string_view tail = "\n\nAnswer options:\n";
  std::size_t b = prompt.find(tail);
  std::vector<std::string> out;
  if (b == std::string::npos) return out;
  std::string_view rest = std::string_view(prompt).substr(b + tail.size());
  for (const std::string& line : split(rest, '\n')) {
    if (line.rfind("- ", 0) == 0) out.push_back(line.substr(2));
    else if (!trim(line).empty()) break;
  }
  return out;
}

inline int count_statement_math_symbols(const std::string& s) {
  int n = 0;
  std::size_t i = 0;
  while (i < s.size())
    if (is_math_symbol_cp(next_codepoint(s, i))) ++n;
  return n;
}

inline bool statement_has_variable(const std::string& s) {
  return textfeat::has_abstract_symbols_heuristic(s);
}

}  // namespace detail

// Deterministic stand-in: every response is a pure function of (seed, prompt
// bytes, run_index). Values that should correlate with question difficulty are
// read off the statement text inside the prompt; the rest are hash-spread
// across their legal ranges. Alternates JSON and free-text shapes so both
// parser paths stay exercised.
class MockLlmProvider : public LlmProvider {
 public:
  explicit MockLlmProvider(std::uint64_t seed) : seed_(seed) {}

  std::string complete(const std::string& prompt,
                       const GenerationSettings& settings) override {
    std::uint64_t h = splitmix64(seed_ ^ fnv1a64(prompt) ^
                                 (0x9e3779b97f4a7c15ull *
                                  static_cast<std::uint64_t>(settings.run_index + 1)));
    bool json_mode = (h >> 1) & 1;
    std::string statement = detail::extract_prompt_statement(prompt);
    std::vector<std::string> options = detail::extract_prompt_options(prompt);

    auto has = [&](std::string_view marker) {
      return prompt.find(marker) != std::string::npos;
    };
    const std::string think = "<thinking>\nWorking through the problem.\n</thinking>\n";

    if (has("formatted exactly as 'Step k:")) {
      int msym = detail::count_statement_math_symbols(statement);
      int steps = std::clamp(1 + msym / 2 + static_cast<int>((h >> 2) % 2), 1, 12);
      std::string out = think;
      for (int k = 1; k <= steps; ++k)
        out += "Step " + std::to_string(k) + ": carry out operation " +
               std::to_string(k) + ".\n";
      return out;
    }
    if (has("misconceptions")) {
      int digits = 0;
      for (char c : statement)
        if (c >= '0' && c <= '9') ++digits;
      int m = std::clamp(1 + digits / 4 + static_cast<int>((h >> 3) % 2), 1, 8);
      if (json_mode) {
        nlohmann::json j;
        std::vector<std::string> list;
        for (int k = 0; k < m; ++k)
          list.push_back("confuses operation order variant " + std::to_string(k + 1));
        j["misconceptions"] = list;
        return think + j.dump();
      }
      std::string out = think + "Likely misconceptions:\n";
      for (int k = 1; k <= m; ++k)
        out += std::to_string(k) + ". mixes up step " + std::to_string(k) + "\n";
      return out;
    }
    if (has("Bloom's taxonomy")) {
      int level = 1 + static_cast<int>((h >> 4) % 6);
      if (json_mode) return think + "{\"bloom_level\": " + std::to_string(level) + "}";
      return think + "This is best described as " +
             bloom_level_names()[static_cast<std::size_t>(level - 1)] + ".";
    }
    if (has("nesting depth")) {
      int depth = 0;
      for (char c : statement)
        if (c == '(') ++depth;
      depth = std::clamp(depth, 0, 6);
      if (json_mode) return think + "{\"nesting_depth\": " + std::to_string(depth) + "}";
      return think + "Depth: " + std::to_string(depth);
    }
    if (has("concrete_count")) {
      int concrete = 0;
      for (char c : statement)
        if (c >= '0' && c <= '9') ++concrete;
      int abstract_n = detail::statement_has_variable(statement) ? 1 : 0;
      if (json_mode)
        return think + "{\"concrete_count\": " + std::to_string(concrete) +
               ", \"abstract_count\": " + std::to_string(abstract_n) + "}";
      return think + "Concrete: " + std::to_string(concrete) + "\nAbstract: " +
             std::to_string(abstract_n);
    }
    if (has("measurement units")) {
      static const std::vector<std::string> units{"meter", "kg", "liter", "hour",
                                                  "cm",    "km", "dollar"};
      bool yes = false;
      for (const std::string& u : units)
        if (contains_ci(statement, u)) yes = true;
      if (json_mode) return think + std::string("{\"units_check\": ") +
                            (yes ? "true" : "false") + "}";
      return think + (yes ? "YES" : "NO");
    }
    if (has("information gap")) {
      int gap = 1 + static_cast<int>((h >> 5) % 4);
      if (json_mode) return think + "{\"info_gap\": " + std::to_string(gap) + "}";
      return think + "Rating: " + std::to_string(gap);
    }
    if (has("REALWORLD or ABSTRACT")) {
      static const std::vector<std::string> ctx{"apple", "ticket", "train", "garden",
                                                "price", "student", "shelf", "coin"};
      bool real = false;
      for (const std::string& w : ctx)
        if (contains_ci(statement, w)) real = true;
      if (json_mode)
        return think + std::string("{\"real_world_context\": \"") +
               (real ? "REALWORLD" : "ABSTRACT") + "\"}";
      return think + (real ? "REALWORLD" : "ABSTRACT");
    }
    if (has("The correct answer is '")) {
      constexpr std::string_view marker = "The correct answer is '";
      std::size_t b = prompt.find(marker) + marker.size();
      std::size_t e = prompt.find("'. Rate every other option.", b);
      std::string correct = prompt.substr(b, e - b);
      std::vector<std::string> distractors;
      bool skipped = false;
      for (const std::string& opt : options) {
        if (!skipped && opt == correct) {
          skipped = true;
          continue;
        }
        distractors.push_back(opt);
      }
      std::vector<double> ratings;
      for (const std::string& d : distractors) {
        std::uint64_t rh = splitmix64(h ^ fnv1a64(d));
        ratings.push_back(1.0 + static_cast<double>(rh % 5));
      }
      if (json_mode) {
        nlohmann::json j;
        j["ratings"] = ratings;
        return think + j.dump();
      }
      std::string out = think;
      for (std::size_t i = 0; i < distractors.size(); ++i)
        out += "Option " + distractors[i] + ": " + fmt_g(ratings[i]) + "\n";
      return out;
    }
    if (has("abstract symbols")) {
      bool yes = detail::statement_has_variable(statement);
      if (json_mode)
        return think + std::string("{\"has_abstract_symbols\": ") +
               (yes ? "true" : "false") + "}";
      return think + (yes ? "YES" : "NO");
    }
    if (has("knowledge dimension")) {
      const std::string& name = knowledge_dimension_names()[(h >> 6) % 3];
      if (json_mode) return think + "{\"knowledge_dimension\": \"" + name + "\"}";
      return think + "This assesses " + name + " knowledge.";
    }
    if (has("most complex number type")) {
      int type = 1 + static_cast<int>((h >> 7) % 5);
      if (json_mode)
        return think + "{\"complex_number_type\": " + std::to_string(type) + "}";
      return think + "Type: " + std::to_string(type);
    }
    if (has("archetype")) {
      const std::string& name = problem_archetype_names()[(h >> 8) % 8];
      if (json_mode) return think + "{\"problem_archetype\": \"" + name + "\"}";
      return think + name;
    }
    throw ProviderError("mock provider: unrecognized prompt");
  }

 private:
  std::uint64_t seed_;
};

}  // namespace psychoforge::pedafeat
