#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "psychoforge/common.hpp"
#include "psychoforge/corpus.hpp"
#include "psychoforge/embed.hpp"
#include "psychoforge/pedafeat.hpp"
#include "psychoforge/textfeat.hpp"

namespace psychoforge::features {

enum class FeatureGroup { Question, Option, Semantic, Llm, OneHot };

struct FeatureColumn {
  std::string name;
  FeatureGroup group;
  bool operator==(const FeatureColumn&) const = default;
};

struct FeatureLayout {
  std::vector<FeatureColumn> columns;

  static FeatureLayout canonical() {
    using G = FeatureGroup;
    FeatureLayout l;
    l.columns = {
        {"word_count", G::Question},
        {"char_count", G::Question},
        {"avg_word_length", G::Question},
        {"digit_count", G::Question},
        {"special_char_count", G::Question},
        {"math_symbol_count", G::Question},
        {"latex_expression_count", G::Question},
        {"has_abstract_symbols", G::Question},
        {"has_image", G::Question},
        {"avg_option_length", G::Option},
        {"avg_option_word_count", G::Option},
        {"option_length_variance", G::Option},
        {"jaccard_similarity_std", G::Option},
        {"has_noneall_option", G::Option},
        {"has_length_outlier_option", G::Option},
        {"extreme_wording_option_count", G::Option},
        {"cos_sim_mean", G::Semantic},
        {"mean_distractor_pairwise_distance", G::Semantic},
        {"avg_steps", G::Llm},
        {"bloom_level", G::Llm},
        {"num_misconceptions", G::Llm},
        {"nesting_depth", G::Llm},
        {"abstract_concrete_ratio", G::Llm},
        {"units_check", G::Llm},
        {"info_gap", G::Llm},
        {"real_world_context", G::Llm},
        {"plausibility_max", G::Llm},
        {"plausibility_mean", G::Llm},
        {"kd_factual", G::OneHot},
        {"kd_conceptual", G::OneHot},
        {"kd_procedural", G::OneHot},
        {"numtype_natural", G::OneHot},
        {"numtype_integer", G::OneHot},
        {"numtype_rational", G::OneHot},
        {"numtype_irrational", G::OneHot},
        {"numtype_complex", G::OneHot},
        {"arch_word_problem", G::OneHot},
        {"arch_equation_solving", G::OneHot},
        {"arch_geometric", G::OneHot},
        {"arch_data_interpretation", G::OneHot},
        {"arch_conceptual_definition", G::OneHot},
        {"arch_formula_application", G::OneHot},
        {"arch_pattern_recognition", G::OneHot},
        {"arch_other", G::OneHot},
    };
    return l;
  }

  // Ablation masking. The option group carries the semantic metrics with it;
  // the LLM group carries the one-hot encodings.
  static FeatureLayout masked(bool keep_question, bool keep_option, bool keep_llm) {
    FeatureLayout full = canonical();
    FeatureLayout out;
    for (const FeatureColumn& c : full.columns) {
      bool keep = false;
      switch (c.group) {
        case FeatureGroup::Question:
          keep = keep_question;
          break;
        case FeatureGroup::Option:
        case FeatureGroup::Semantic:
          keep = keep_option;
          break;
        case FeatureGroup::Llm:
        case FeatureGroup::OneHot:
          keep = keep_llm;
          break;
      }
      if (keep) out.columns.push_back(c);
    }
    return out;
  }

  std::size_t size() const { return columns.size(); }

  std::optional<std::size_t> index_of(std::string_view name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i].name == name) return i;
    return std::nullopt;
  }

  bool operator==(const FeatureLayout&) const = default;
};

struct FeatureTable {
  FeatureLayout layout;
  std::vector<std::string> question_ids;
  std::vector<std::vector<double>> rows;  // NaN marks a missing value

  std::size_t width() const { return layout.size(); }

  std::optional<std::size_t> row_of(const std::string& qid) const {
    auto it = index_.find(qid);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  void rebuild_index() {
    index_.clear();
    for (std::size_t i = 0; i < question_ids.size(); ++i) index_[question_ids[i]] = i;
  }

 private:
  std::map<std::string, std::size_t> index_;
};

struct AssembleOptions {
  std::string abstract_source = "llm";  // "llm" | "textfeat"
  textfeat::TextfeatOptions textfeat_options;
};

namespace detail {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline double llm_value(const pedafeat::LlmFeatureBundle* bundle, const char* name) {
  if (!bundle) return kMissing;
  const pedafeat::AggregatedValue* v = bundle->find(name);
  if (!v || v->missing) return kMissing;
  return v->value;
}

}  // namespace detail

inline FeatureTable assemble_features(const std::vector<corpus::QuestionRecord>& questions,
                                      const embed::EmbeddingSet* embeddings,
                                      const pedafeat::AggregateTable* llm,
                                      const AssembleOptions& opts = {},
                                      const FeatureLayout& layout = FeatureLayout::canonical()) {
  if (opts.abstract_source != "llm" && opts.abstract_source != "textfeat")
    throw ValidationError("abstract_source must be 'llm' or 'textfeat', got '" +
                          opts.abstract_source + "'");
  FeatureTable table;
  table.layout = layout;
  const FeatureLayout canon = FeatureLayout::canonical();
  for (const corpus::QuestionRecord& q : questions) {
    textfeat::QuestionFeatures qf = textfeat::question_features(q);
    textfeat::OptionFeatures of = textfeat::option_features(q, opts.textfeat_options);

    double cos_sim = detail::kMissing;
    double pair_dist = detail::kMissing;
    if (embeddings) {
      const std::vector<double>* correct = embeddings->find(
          embed::option_key(q.question_id, static_cast<std::size_t>(q.correct_index)));
      std::vector<std::vector<double>> distractors;
      bool all_present = correct != nullptr;
      for (std::size_t k = 0; k < q.options.size(); ++k) {
        if (static_cast<int>(k) == q.correct_index) continue;
        const std::vector<double>* v =
            embeddings->find(embed::option_key(q.question_id, k));
        if (!v) {
          all_present = false;
          break;
        }
        distractors.push_back(*v);
      }
      if (all_present && !distractors.empty()) {
        embed::SemanticOptionMetrics m =
            embed::semantic_option_metrics(*correct, distractors);
        cos_sim = m.cos_sim_mean_correct_vs_distractors;
        pair_dist = m.mean_distractor_pairwise_distance;
      }
    }

    const pedafeat::LlmFeatureBundle* bundle = llm ? llm->find(q.question_id) : nullptr;
    double abstract_value = opts.abstract_source == "llm"
                                ? detail::llm_value(bundle, "has_abstract_symbols")
                                : qf.has_abstract_symbols;
    std::vector<double> one_hot(16, 0.0);
    if (bundle) one_hot = pedafeat::one_hot_encode(*bundle);

    double plaus_max = detail::kMissing;
    double plaus_mean = detail::kMissing;
    if (bundle) {
      const pedafeat::AggregatedValue* pl = bundle->find("distractor_plausibility");
      if (pl && !pl->missing) {
        plaus_max = pl->value;
        plaus_mean = pl->value2;
      }
    }

    std::vector<double> row;
    row.reserve(layout.size());
    for (const FeatureColumn& col : layout.columns) {
      double v = detail::kMissing;
      const std::string& n = col.name;
      if (n == "word_count") v = qf.word_count;
      else if (n == "char_count") v = qf.char_count;
      else if (n == "avg_word_length") v = qf.avg_word_length;
      else if (n == "digit_count") v = qf.digit_count;
      else if (n == "special_char_count") v = qf.special_char_count;
      else if (n == "math_symbol_count") v = qf.math_symbol_count;
      else if (n == "latex_expression_count") v = qf.latex_expression_count;
      else if (n == "has_abstract_symbols") v = abstract_value;
      else if (n == "has_image") v = qf.has_image;
      else if (n == "avg_option_length") v = of.avg_option_length;
      else if (n == "avg_option_word_count") v = of.avg_option_word_count;
      else if (n == "option_length_variance") v = of.option_length_variance;
      else if (n == "jaccard_similarity_std") v = of.jaccard_similarity_std;
      else if (n == "has_noneall_option") v = of.has_noneall_option;
      else if (n == "has_length_outlier_option") v = of.has_length_outlier_option;
      else if (n == "extreme_wording_option_count") v = of.extreme_wording_option_count;
      else if (n == "cos_sim_mean") v = cos_sim;
      else if (n == "mean_distractor_pairwise_distance") v = pair_dist;
      else if (n == "avg_steps") v = detail::llm_value(bundle, "avg_steps");
      else if (n == "bloom_level") v = detail::llm_value(bundle, "bloom_level");
      else if (n == "num_misconceptions") v = detail::llm_value(bundle, "num_misconceptions");
      else if (n == "nesting_depth") v = detail::llm_value(bundle, "nesting_depth");
      else if (n == "abstract_concrete_ratio")
        v = detail::llm_value(bundle, "abstract_concrete_ratio");
      else if (n == "units_check") v = detail::llm_value(bundle, "units_check");
      else if (n == "info_gap") v = detail::llm_value(bundle, "info_gap");
      else if (n == "real_world_context")
        v = detail::llm_value(bundle, "real_world_context");
      else if (n == "plausibility_max") v = plaus_max;
      else if (n == "plausibility_mean") v = plaus_mean;
      else {
        std::optional<std::size_t> full_idx = canon.index_of(n);
        if (!full_idx || *full_idx < 28)
          throw ValidationError("unknown feature column '" + n + "'");
        v = one_hot[*full_idx - 28];
      }
      row.push_back(v);
    }
    table.question_ids.push_back(q.question_id);
    table.rows.push_back(std::move(row));
  }
  table.rebuild_index();
  return table;
}

// ---------------------------------------------------------------------------
// CSV persistence (empty cell = missing)
// ---------------------------------------------------------------------------

inline void save_feature_csv(const FeatureTable& table, const std::filesystem::path& path) {
  std::string out = "question_id";
  for (const FeatureColumn& c : table.layout.columns) out += "," + c.name;
  out += "\n";
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    out += csv_escape(table.question_ids[r]);
    for (double v : table.rows[r]) {
      out += ",";
      if (!std::isnan(v)) out += fmt_g(v);
    }
    out += "\n";
  }
  write_text_file(path, out);
}

inline FeatureTable load_feature_csv(const std::filesystem::path& path) {
  std::vector<std::string> lines = read_lines(path);
  if (lines.empty()) throw ValidationError(path.string() + ": empty feature file");
  std::vector<std::string> header = parse_csv_line(lines[0]);
  if (header.empty() || header[0] != "question_id")
    throw ValidationError(path.string() + ": first column must be question_id");
  FeatureLayout canonical = FeatureLayout::canonical();
  FeatureTable table;
  for (std::size_t c = 1; c < header.size(); ++c) {
    std::optional<std::size_t> idx = canonical.index_of(header[c]);
    if (!idx)
      throw ValidationError(path.string() + ": unknown feature column '" + header[c] +
                            "'");
    table.layout.columns.push_back(canonical.columns[*idx]);
  }
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    if (lines[ln].empty()) continue;
    std::vector<std::string> cells = parse_csv_line(lines[ln]);
    if (cells.size() != header.size())
      throw ValidationError(path.string() + ":" + std::to_string(ln + 1) +
                            ": expected " + std::to_string(header.size()) +
                            " cells, got " + std::to_string(cells.size()));
    table.question_ids.push_back(cells[0]);
    std::vector<double> row;
    for (std::size_t c = 1; c < cells.size(); ++c) {
      if (cells[c].empty())
        row.push_back(detail::kMissing);
      else
        row.push_back(parse_double(cells[c], path.string() + ":" + std::to_string(ln + 1)));
    }
    table.rows.push_back(std::move(row));
  }
  table.rebuild_index();
  return table;
}

// ---------------------------------------------------------------------------
// Standardization (train statistics only; one-hot columns pass through)
// ---------------------------------------------------------------------------

struct Standardizer {
  std::vector<double> mean;
  std::vector<double> stddev;

  static Standardizer fit(const FeatureTable& table,
                          const std::vector<std::string>& train_ids) {
    Standardizer s;
    std::size_t w = table.width();
    s.mean.assign(w, 0.0);
    s.stddev.assign(w, 1.0);
    std::vector<std::size_t> rows;
    for (const std::string& id : train_ids) {
      std::optional<std::size_t> r = table.row_of(id);
      if (!r)
        throw ValidationError("standardizer: train id '" + id +
                              "' not present in feature table");
      rows.push_back(*r);
    }
    for (std::size_t c = 0; c < w; ++c) {
      if (table.layout.columns[c].group == FeatureGroup::OneHot) continue;
      double sum = 0.0;
      std::size_t n = 0;
      for (std::size_t r : rows) {
        double v = table.rows[r][c];
        if (std::isnan(v)) continue;
        sum += v;
        ++n;
      }
      if (n == 0) continue;
      double m = sum / static_cast<double>(n);
      double sq = 0.0;
      for (std::size_t r : rows) {
        double v = table.rows[r][c];
        if (std::isnan(v)) continue;
        sq += (v - m) * (v - m);
      }
      double sd = std::sqrt(sq / static_cast<double>(n));
      s.mean[c] = m;
      s.stddev[c] = sd > 0.0 ? sd : 1.0;
    }
    return s;
  }

  std::vector<double> apply(const std::vector<double>& row) const {
    if (row.size() != mean.size())
      throw ValidationError("standardizer: row width " + std::to_string(row.size()) +
                            " does not match fitted width " +
                            std::to_string(mean.size()));
    std::vector<double> out(row.size());
    for (std::size_t c = 0; c < row.size(); ++c) {
      double v = row[c];
      out[c] = std::isnan(v) ? 0.0 : (v - mean[c]) / stddev[c];
    }
    return out;
  }
};

}  // namespace psychoforge::features
