#pragma once

#include <cctype>
#include <cstdint>
#include <string>
#include <vector>

#include "psychoforge/common.hpp"
#include "psychoforge/corpus.hpp"
#include "psychoforge/stats.hpp"
#include "psychoforge/textfeat.hpp"

namespace psychoforge::synth {

struct SyntheticConfig {
  int n_students = 250;
  int n_questions = 400;
  double density = 0.4;  // observed share of the student x question grid
  std::uint64_t seed = 0;
};

struct SyntheticData {
  std::vector<corpus::QuestionRecord> questions;
  std::vector<corpus::ResponseRecord> responses;
  std::vector<std::string> student_ids;
  std::vector<double> true_theta;  // parallel to student_ids
  std::vector<double> true_beta;   // parallel to questions
};

namespace detail {

inline const std::vector<std::string>& filler_words() {
  static const std::vector<std::string> w{
      "the",   "total",  "sum",    "how",   "many",  "find",     "value",
      "number", "group",  "each",   "more",  "less",  "then",     "first",
      "second", "after",  "before", "equal", "parts", "together", "remaining",
      "twice",  "half",   "added"};
  return w;
}

inline const std::vector<std::string>& context_words() {
  static const std::vector<std::string> w{"apple", "ticket", "train",  "garden",
                                          "price", "student", "shelf", "coin"};
  return w;
}

inline const std::vector<std::string>& unit_words() {
  static const std::vector<std::string> w{"meter", "kg", "liter", "hour",
                                          "cm",    "km", "dollar"};
  return w;
}

inline std::string build_expression(Rng& rng) {
  auto operand = [&] { return std::to_string(2 + rng.index(98)); };
  static const char* ops[3] = {"+", "-", "*"};
  std::string expr = operand();
  std::size_t n_ops = rng.index(6);
  for (std::size_t k = 0; k < n_ops; ++k) {
    const char* op = ops[rng.index(3)];
    if (rng.bernoulli(0.3))
      expr = "(" + expr + " " + op + " " + operand() + ")";
    else
      expr += std::string(" ") + op + " " + operand();
  }
  return expr;
}

inline std::string build_statement(Rng& rng, bool abstract_form) {
  std::vector<std::string> words;
  std::size_t n_filler = 2 + rng.index(24);
  for (std::size_t k = 0; k < n_filler; ++k)
    words.push_back(filler_words()[rng.index(filler_words().size())]);
  if (rng.bernoulli(0.5))
    words.push_back(context_words()[rng.index(context_words().size())]);
  if (rng.bernoulli(0.3)) words.push_back(unit_words()[rng.index(unit_words().size())]);
  rng.shuffle(words);
  std::string sentence;
  for (std::size_t k = 0; k < words.size(); ++k) {
    if (k) sentence += " ";
    sentence += words[k];
  }
  if (!sentence.empty())
    sentence[0] =
        static_cast<char>(std::toupper(static_cast<unsigned char>(sentence[0])));
  std::string expr = build_expression(rng);
  if (abstract_form)
    return sentence + ". Solve for x: " + expr + " = x + " +
           std::to_string(1 + rng.index(9)) + ".";
  return sentence + ". Compute " + expr + ".";
}

inline std::vector<std::string> build_options(Rng& rng) {
  std::vector<long long> nums;
  long long base = 2 + static_cast<long long>(rng.index(199));
  nums.push_back(base);
  while (nums.size() < 4) {
    long long delta = 1 + static_cast<long long>(rng.index(9));
    long long cand = rng.bernoulli(0.5) ? base + delta : base - delta;
    if (rng.bernoulli(0.15)) cand = base * 2 + delta;
    bool dup = false;
    for (long long v : nums)
      if (v == cand) dup = true;
    if (!dup) nums.push_back(cand);
  }
  std::vector<std::string> opts;
  for (long long v : nums) opts.push_back(std::to_string(v));
  if (rng.bernoulli(0.1)) opts.back() = "None of the above";
  return opts;
}

inline double z_or_zero(double v, double m, double sd) {
  return sd > 0.0 ? (v - m) / sd : 0.0;
}

}  // namespace detail

// Questions whose true difficulty is a fixed linear combination of observable
// text statistics (word count, math symbols, digits, abstract form), so a
// feature-based model has signal to recover. Every student and question is
// guaranteed at least one observed response.
inline SyntheticData generate_synthetic_corpus(const SyntheticConfig& config) {
  if (config.n_students < 2) throw ValidationError("synthetic: n_students must be >= 2");
  if (config.n_questions < 2)
    throw ValidationError("synthetic: n_questions must be >= 2");
  if (!(config.density > 0.0) || config.density > 1.0)
    throw ValidationError("synthetic: density must be in (0, 1]");

  SyntheticData data;
  std::size_t n_s = static_cast<std::size_t>(config.n_students);
  std::size_t n_q = static_cast<std::size_t>(config.n_questions);

  Rng qrng(derive_seed(config.seed, "synth-questions"));
  std::vector<double> abstract_flags;
  for (std::size_t i = 0; i < n_q; ++i) {
    corpus::QuestionRecord q;
    q.question_id = corpus::padded_id("q", i + 1, n_q);
    bool abstract_form = qrng.bernoulli(0.4);
    abstract_flags.push_back(abstract_form ? 1.0 : 0.0);
    q.statement = detail::build_statement(qrng, abstract_form);
    q.options = detail::build_options(qrng);
    q.correct_index = static_cast<int>(qrng.index(4));
    q.has_image = qrng.bernoulli(0.05);
    corpus::validate_question(q, q.question_id);
    data.questions.push_back(std::move(q));
  }

  std::vector<double> wc(n_q), ms(n_q), dc(n_q);
  for (std::size_t i = 0; i < n_q; ++i) {
    textfeat::QuestionFeatures f = textfeat::question_features(data.questions[i]);
    wc[i] = f.word_count;
    ms[i] = f.math_symbol_count;
    dc[i] = f.digit_count;
  }
  double wc_m = stats::mean(wc), wc_s = stats::stddev(wc);
  double ms_m = stats::mean(ms), ms_s = stats::stddev(ms);
  double dc_m = stats::mean(dc), dc_s = stats::stddev(dc);
  double ab_m = stats::mean(abstract_flags);
  data.true_beta.resize(n_q);
  for (std::size_t i = 0; i < n_q; ++i) {
    data.true_beta[i] = 0.55 * detail::z_or_zero(wc[i], wc_m, wc_s) +
                        0.75 * detail::z_or_zero(ms[i], ms_m, ms_s) +
                        0.45 * detail::z_or_zero(dc[i], dc_m, dc_s) +
                        0.65 * (abstract_flags[i] - ab_m);
  }

  Rng trng(derive_seed(config.seed, "synth-theta"));
  data.true_theta.resize(n_s);
  data.student_ids.resize(n_s);
  for (std::size_t j = 0; j < n_s; ++j) {
    data.student_ids[j] = corpus::padded_id("s", j + 1, n_s);
    data.true_theta[j] = trng.normal(0.0, 1.0);
  }

  // Outcomes are drawn for every pair in fixed order so the mask cannot shift
  // the outcome stream.
  Rng crng(derive_seed(config.seed, "synth-cells"));
  Rng mrng(derive_seed(config.seed, "synth-mask"));
  std::vector<std::vector<std::int8_t>> outcome(n_s, std::vector<std::int8_t>(n_q));
  std::vector<std::vector<bool>> observed(n_s, std::vector<bool>(n_q, false));
  for (std::size_t j = 0; j < n_s; ++j) {
    for (std::size_t i = 0; i < n_q; ++i) {
      double p = sigmoid(data.true_theta[j] - data.true_beta[i]);
      outcome[j][i] = crng.bernoulli(p) ? 1 : 0;
      observed[j][i] = mrng.bernoulli(config.density);
    }
  }

  Rng frng(derive_seed(config.seed, "synth-fill"));
  std::vector<std::size_t> col_counts(n_q, 0);
  for (std::size_t j = 0; j < n_s; ++j) {
    bool any = false;
    for (std::size_t i = 0; i < n_q; ++i)
      if (observed[j][i]) {
        any = true;
        ++col_counts[i];
      }
    if (!any) {
      std::size_t i = frng.index(n_q);
      observed[j][i] = true;
      ++col_counts[i];
    }
  }
  for (std::size_t i = 0; i < n_q; ++i) {
    if (col_counts[i] == 0) {
      std::size_t j = frng.index(n_s);
      observed[j][i] = true;
    }
  }

  for (std::size_t j = 0; j < n_s; ++j)
    for (std::size_t i = 0; i < n_q; ++i)
      if (observed[j][i])
        data.responses.push_back(
            {data.student_ids[j], data.questions[i].question_id,
             static_cast<int>(outcome[j][i])});
  return data;
}

}  // namespace psychoforge::synth
