#pragma once

#include <set>
#include <string>
#include <vector>

#include "psychoforge/common.hpp"
#include "psychoforge/corpus.hpp"
#include "psychoforge/stats.hpp"

namespace psychoforge::textfeat {

struct QuestionFeatures {
  double word_count = 0;
  double char_count = 0;
  double avg_word_length = 0;
  double digit_count = 0;
  double special_char_count = 0;
  double math_symbol_count = 0;
  double latex_expression_count = 0;
  double has_abstract_symbols = 0;
  double has_image = 0;
};

struct OptionFeatures {
  double avg_option_length = 0;
  double avg_option_word_count = 0;
  double option_length_variance = 0;
  double jaccard_similarity_std = 0;
  double has_noneall_option = 0;
  double has_length_outlier_option = 0;
  double extreme_wording_option_count = 0;
};

struct TextfeatOptions {
  std::vector<std::string> noneall_phrases{"none of the above", "all of the above"};
  std::vector<std::string> extreme_tokens{"always", "never", "only", "all", "none"};
};

// Maximal non-whitespace runs, whitespace per is_space_cp.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  std::string cur;
  while (i < text.size()) {
    std::size_t start = i;
    char32_t cp = next_codepoint(text, i);
    if (is_space_cp(cp)) {
      if (!cur.empty()) {
        out.push_back(cur);
        cur.clear();
      }
    } else {
      cur.append(text.substr(start, i - start));
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

// Balanced $...$ / \( ... \) spans plus top-level \command{...} outside spans.
// \$ escapes; unbalanced delimiters are skipped, never counted.
inline int count_latex_expressions(std::string_view s) {
  int count = 0;
  std::size_t i = 0, n = s.size();
  auto is_alpha = [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
  };
  while (i < n) {
    char c = s[i];
    if (c == '$') {
      std::size_t j = s.find('$', i + 1);
      if (j != std::string_view::npos) {
        ++count;
        i = j + 1;
      } else {
        ++i;
      }
    } else if (c == '\\' && i + 1 < n) {
      if (s[i + 1] == '(') {
        std::size_t j = s.find("\\)", i + 2);
        if (j != std::string_view::npos) {
          ++count;
          i = j + 2;
        } else {
          i += 2;
        }
      } else if (is_alpha(s[i + 1])) {
        std::size_t k = i + 1;
        while (k < n && is_alpha(s[k])) ++k;
        if (k < n && s[k] == '{') {
          int depth = 1;
          std::size_t m = k + 1;
          while (m < n && depth > 0) {
            if (s[m] == '{') ++depth;
            else if (s[m] == '}') --depth;
            ++m;
          }
          if (depth == 0) {
            ++count;
            i = m;
          } else {
            i = k + 1;
          }
        } else {
          i = k;
        }
      } else {
        i += 2;
      }
    } else {
      ++i;
    }
  }
  return count;
}

namespace detail {

inline std::vector<char32_t> strip_edges(const std::vector<char32_t>& cps) {
  std::size_t b = 0, e = cps.size();
  while (b < e && !is_alnum_cp(cps[b])) ++b;
  while (e > b && !is_alnum_cp(cps[e - 1])) --e;
  return std::vector<char32_t>(cps.begin() + static_cast<std::ptrdiff_t>(b),
                               cps.begin() + static_cast<std::ptrdiff_t>(e));
}

inline std::string strip_edges_lower(const std::string& token) {
  std::vector<char32_t> cps = codepoints(token);
  std::vector<char32_t> core = strip_edges(cps);
  std::string out;
  for (char32_t c : core) {
    if (c < 0x80) {
      char ch = static_cast<char>(c);
      if (ch >= 'A' && ch <= 'Z') ch = static_cast<char>(ch - 'A' + 'a');
      out += ch;
    } else {
      out += '?';  // non-ASCII never matches the ASCII keyword lists
    }
  }
  return out;
}

}  // namespace detail

// Heuristic variant: a standalone single Latin letter token (after stripping
// edge punctuation) or a bare '?' placeholder. The LLM variant lives in
// pedafeat; configuration chooses which one feeds the network.
inline bool has_abstract_symbols_heuristic(std::string_view statement) {
  for (const std::string& tok : tokenize(statement)) {
    if (tok == "?") return true;
    std::vector<char32_t> core = detail::strip_edges(codepoints(tok));
    if (core.size() == 1 && ((core[0] >= U'A' && core[0] <= U'Z') ||
                             (core[0] >= U'a' && core[0] <= U'z')))
      return true;
  }
  return false;
}

inline QuestionFeatures question_features(const corpus::QuestionRecord& q) {
  QuestionFeatures f;
  std::vector<std::string> words = tokenize(q.statement);
  f.word_count = static_cast<double>(words.size());
  std::size_t word_cp_sum = 0;
  for (const std::string& w : words) word_cp_sum += codepoint_count(w);
  f.avg_word_length =
      words.empty() ? 0.0
                    : static_cast<double>(word_cp_sum) / static_cast<double>(words.size());
  std::size_t chars = 0, digits = 0, specials = 0, maths = 0;
  std::size_t i = 0;
  while (i < q.statement.size()) {
    char32_t cp = next_codepoint(q.statement, i);
    ++chars;
    if (is_space_cp(cp)) continue;
    if (is_digit_cp(cp)) ++digits;
    else if (is_math_symbol_cp(cp)) ++maths;
    else if (!is_letter_cp(cp)) ++specials;
  }
  f.char_count = static_cast<double>(chars);
  f.digit_count = static_cast<double>(digits);
  f.special_char_count = static_cast<double>(specials);
  f.math_symbol_count = static_cast<double>(maths);
  f.latex_expression_count = static_cast<double>(count_latex_expressions(q.statement));
  f.has_abstract_symbols = has_abstract_symbols_heuristic(q.statement) ? 1.0 : 0.0;
  f.has_image = q.has_image ? 1.0 : 0.0;
  return f;
}

inline OptionFeatures option_features(const corpus::QuestionRecord& q,
                                      const TextfeatOptions& opts = {}) {
  if (q.options.size() < 2)
    throw ValidationError("option_features: question '" + q.question_id +
                          "' has fewer than 2 options");
  OptionFeatures f;
  std::size_t n = q.options.size();

  std::vector<double> lengths, word_counts;
  std::vector<std::set<std::string>> token_sets;
  for (const std::string& opt : q.options) {
    lengths.push_back(static_cast<double>(codepoint_count(opt)));
    std::vector<std::string> toks = tokenize(opt);
    word_counts.push_back(static_cast<double>(toks.size()));
    std::set<std::string> ts;
    for (const std::string& t : toks) ts.insert(lower_ascii(t));
    token_sets.push_back(std::move(ts));
  }

  f.avg_option_length = stats::mean(lengths);
  f.avg_option_word_count = stats::mean(word_counts);
  f.option_length_variance = stats::variance(lengths);

  std::vector<double> jaccards;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      const std::set<std::string>&sa = token_sets[a], &sb = token_sets[b];
      if (sa.empty() && sb.empty()) {
        jaccards.push_back(1.0);
        continue;
      }
      std::size_t inter = 0;
      for (const std::string& t : sa)
        if (sb.count(t)) ++inter;
      std::size_t uni = sa.size() + sb.size() - inter;
      jaccards.push_back(static_cast<double>(inter) / static_cast<double>(uni));
    }
  }
  f.jaccard_similarity_std = stats::stddev(jaccards);

  for (const std::string& opt : q.options) {
    for (const std::string& phrase : opts.noneall_phrases) {
      if (contains_ci(opt, phrase)) {
        f.has_noneall_option = 1.0;
        break;
      }
    }
    if (f.has_noneall_option > 0) break;
  }

  double mean_len = stats::mean(lengths);
  double sd_len = stats::stddev(lengths);
  if (sd_len > 0) {
    for (double len : lengths) {
      if (std::abs(len - mean_len) > 2.0 * sd_len) {
        f.has_length_outlier_option = 1.0;
        break;
      }
    }
  }

  int extreme_options = 0;
  for (const std::string& opt : q.options) {
    bool hit = false;
    for (const std::string& tok : tokenize(opt)) {
      std::string core = detail::strip_edges_lower(tok);
      for (const std::string& kw : opts.extreme_tokens) {
        if (core == kw) {
          hit = true;
          break;
        }
      }
      if (hit) break;
    }
    if (hit) ++extreme_options;
  }
  f.extreme_wording_option_count = extreme_options;

  return f;
}

}  // namespace psychoforge::textfeat
