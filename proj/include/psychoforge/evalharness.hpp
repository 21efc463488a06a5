#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "psychoforge/common.hpp"
#include "psychoforge/features.hpp"
#include "psychoforge/irt.hpp"
#include "psychoforge/neuralnet.hpp"
#include "psychoforge/stats.hpp"

namespace psychoforge::evalharness {

// ---------------------------------------------------------------------------
// Correctness-prediction metrics
// ---------------------------------------------------------------------------

struct ClassificationMetrics {
  std::size_t n = 0;
  double accuracy = 0.0;
  std::optional<double> auc;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

inline ClassificationMetrics classification_metrics(const std::vector<double>& probs,
                                                    const std::vector<int>& labels) {
  if (probs.size() != labels.size())
    throw ValidationError("classification metrics: length mismatch");
  if (probs.empty()) throw ValidationError("classification metrics: empty input");
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1)
      throw ValidationError("classification metrics: labels must be 0 or 1");
    int pred = nn::binarize(probs[i]);
    if (pred == 1 && labels[i] == 1) ++tp;
    else if (pred == 1 && labels[i] == 0) ++fp;
    else if (pred == 0 && labels[i] == 0) ++tn;
    else ++fn;
  }
  ClassificationMetrics m;
  m.n = probs.size();
  m.accuracy = static_cast<double>(tp + tn) / static_cast<double>(m.n);
  m.auc = stats::auc(labels, probs);
  m.precision = tp + fp == 0 ? 0.0
                             : static_cast<double>(tp) / static_cast<double>(tp + fp);
  m.recall = tp + fn == 0 ? 0.0
                          : static_cast<double>(tp) / static_cast<double>(tp + fn);
  m.f1 = m.precision + m.recall == 0.0
             ? 0.0
             : 2.0 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

// ---------------------------------------------------------------------------
// Difficulty-agreement metrics
// ---------------------------------------------------------------------------

struct AgreementMetrics {
  std::optional<double> pearson;
  std::optional<double> spearman;
  double rmse = 0.0;
};

inline AgreementMetrics agreement_metrics(const std::vector<double>& estimated,
                                          const std::vector<double>& reference) {
  if (estimated.size() != reference.size())
    throw ValidationError("agreement metrics: length mismatch");
  if (estimated.empty()) throw ValidationError("agreement metrics: empty input");
  AgreementMetrics m;
  m.pearson = stats::pearson(estimated, reference);
  m.spearman = stats::spearman(estimated, reference);
  m.rmse = stats::rmse(estimated, reference);
  return m;
}

// ---------------------------------------------------------------------------
// Efficiency curve: difficulty estimation quality from student subsamples
// ---------------------------------------------------------------------------

struct EfficiencyConfig {
  std::vector<double> fractions = {0.01, 0.02, 0.05, 0.10, 0.15, 0.20, 0.25, 0.30,
                                   0.40, 0.50, 0.60, 0.70, 0.80, 0.90, 1.00};
  int repetitions = 5;
  std::uint64_t seed = 0;
  irt::FitConfig fit;
};

struct EfficiencyPoint {
  double fraction = 0.0;
  std::size_t n_students = 0;
  double mean_answers = 0.0;  // observations used, averaged over repetitions
  std::vector<double> rmses;  // one per repetition
  double mean_rmse = 0.0;
};

struct EfficiencyCurve {
  std::vector<EfficiencyPoint> points;
  double model_rmse = 0.0;
  double equivalent_fraction = 1.0;
  long long equivalent_answers = 0;
  std::size_t total_answers = 0;
};

inline EfficiencyCurve efficiency_curve(std::size_t n_students, std::size_t n_questions,
                                        const std::vector<irt::Observation>& obs,
                                        const std::vector<double>& reference_beta,
                                        const std::vector<double>& model_beta,
                                        const EfficiencyConfig& cfg = {}) {
  if (reference_beta.size() != n_questions || model_beta.size() != n_questions)
    throw ValidationError("efficiency curve: beta length mismatch");
  if (cfg.fractions.empty() || cfg.repetitions < 1)
    throw ValidationError("efficiency curve: need fractions and repetitions");
  for (double f : cfg.fractions)
    if (f <= 0.0 || f > 1.0)
      throw ValidationError("efficiency curve: fractions must lie in (0, 1]");
  if (!std::is_sorted(cfg.fractions.begin(), cfg.fractions.end()))
    throw ValidationError("efficiency curve: fractions must be ascending");

  std::vector<std::vector<irt::Observation>> by_student(n_students);
  for (const irt::Observation& o : obs) {
    if (o.student >= n_students || o.question >= n_questions)
      throw ValidationError("efficiency curve: observation index out of range");
    by_student[o.student].push_back(o);
  }

  EfficiencyCurve curve;
  curve.total_answers = obs.size();
  curve.model_rmse = stats::rmse(model_beta, reference_beta);

  for (std::size_t fi = 0; fi < cfg.fractions.size(); ++fi) {
    double f = cfg.fractions[fi];
    EfficiencyPoint point;
    point.fraction = f;
    std::size_t k = static_cast<std::size_t>(std::clamp<long long>(
        std::llround(f * static_cast<double>(n_students)), 1,
        static_cast<long long>(n_students)));
    point.n_students = k;
    double answer_sum = 0.0;
    for (int rep = 0; rep < cfg.repetitions; ++rep) {
      Rng rng(derive_seed(cfg.seed, "efficiency-" + std::to_string(fi) + "-" +
                                        std::to_string(rep)));
      std::vector<std::size_t> chosen = rng.sample_indices(n_students, k);
      std::vector<irt::Observation> sub;
      for (std::size_t pos = 0; pos < chosen.size(); ++pos)
        for (const irt::Observation& o : by_student[chosen[pos]])
          sub.push_back({pos, o.question, o.correct});
      answer_sum += static_cast<double>(sub.size());
      if (sub.empty()) {
        point.rmses.push_back(stats::rmse(std::vector<double>(n_questions, 0.0),
                                          reference_beta));
        continue;
      }
      irt::FitResult fit = irt::fit_1pl(k, n_questions, sub, cfg.fit);
      point.rmses.push_back(stats::rmse(fit.beta, reference_beta));
    }
    point.mean_answers = answer_sum / static_cast<double>(cfg.repetitions);
    point.mean_rmse = stats::mean(point.rmses);
    curve.points.push_back(point);
  }

  // smallest sampled fraction whose mean RMSE is at or below the model's,
  // refined by linear interpolation from the previous grid point
  curve.equivalent_fraction = cfg.fractions.back();
  bool found = false;
  for (std::size_t fi = 0; fi < curve.points.size(); ++fi) {
    if (curve.points[fi].mean_rmse <= curve.model_rmse) {
      if (fi == 0) {
        curve.equivalent_fraction = curve.points[0].fraction;
      } else {
        double r0 = curve.points[fi - 1].mean_rmse;
        double r1 = curve.points[fi].mean_rmse;
        double f0 = curve.points[fi - 1].fraction;
        double f1 = curve.points[fi].fraction;
        double t = r0 <= r1 ? 1.0 : (r0 - curve.model_rmse) / (r0 - r1);
        curve.equivalent_fraction = f0 + (f1 - f0) * std::clamp(t, 0.0, 1.0);
      }
      found = true;
      break;
    }
  }
  if (!found) curve.equivalent_fraction = cfg.fractions.back();
  curve.equivalent_answers = std::llround(
      curve.equivalent_fraction * static_cast<double>(curve.total_answers));
  return curve;
}

// ---------------------------------------------------------------------------
// Feature-group ablation
// ---------------------------------------------------------------------------

struct AblationPreset {
  std::string name;
  bool keep_question = false;
  bool keep_option = false;
  bool keep_llm = false;
};

inline std::vector<AblationPreset> ablation_presets() {
  return {
      {"embeddings_only", false, false, false},
      {"embeddings_question", true, false, false},
      {"embeddings_question_option", true, true, false},
      {"full", true, true, true},
  };
}

struct AblationConfig {
  nn::TrainConfig train;
  irt::FitConfig fit;
};

struct AblationInputs {
  std::vector<std::string> student_ids;
  std::vector<std::string> question_ids;
  features::FeatureTable table;                  // canonical layout
  std::vector<std::vector<double>> text_embeds;  // one row per question
  std::vector<irt::Observation> train;
  std::vector<irt::Observation> val;
  std::vector<irt::Observation> test;
  std::vector<double> reference_beta;
};

struct AblationOutcome {
  std::string name;
  std::size_t n_feature_columns = 0;
  ClassificationMetrics test_metrics;
  AgreementMetrics beta_agreement;
  std::vector<double> beta;
};

namespace detail {

inline std::vector<nn::TrainSample> to_samples(const std::vector<irt::Observation>& obs) {
  std::vector<nn::TrainSample> out;
  out.reserve(obs.size());
  for (const irt::Observation& o : obs)
    out.push_back({o.student, o.question, static_cast<double>(o.correct)});
  return out;
}

inline std::vector<std::string> train_question_ids(
    const std::vector<irt::Observation>& train,
    const std::vector<std::string>& question_ids) {
  std::set<std::size_t> seen;
  for (const irt::Observation& o : train) seen.insert(o.question);
  std::vector<std::string> out;
  for (std::size_t idx : seen) out.push_back(question_ids[idx]);
  return out;
}

}  // namespace detail

// Trains one network on the given feature columns, predicts the full matrix,
// binarizes it, refits difficulty, and evaluates against the reference.
inline AblationOutcome run_pipeline_variant(
    const AblationInputs& in, const AblationConfig& cfg,
    const features::FeatureLayout& layout, const std::string& name,
    std::uint64_t seed) {
  AblationOutcome outcome;
  outcome.name = name;
  outcome.n_feature_columns = layout.size();

  nn::DataSet data;
  data.student_ids = in.student_ids;
  data.question_ids = in.question_ids;
  data.text_embeds = in.text_embeds;
  data.train = detail::to_samples(in.train);
  data.val = detail::to_samples(in.val);

  if (layout.size() > 0) {
    features::FeatureTable sub;
    sub.layout = layout;
    sub.question_ids = in.table.question_ids;
    std::vector<std::size_t> cols;
    for (const features::FeatureColumn& c : layout.columns) {
      std::optional<std::size_t> idx = in.table.layout.index_of(c.name);
      if (!idx)
        throw ValidationError("ablation: base table lacks column '" + c.name + "'");
      cols.push_back(*idx);
    }
    for (const std::vector<double>& row : in.table.rows) {
      std::vector<double> r;
      r.reserve(cols.size());
      for (std::size_t c : cols) r.push_back(row[c]);
      sub.rows.push_back(std::move(r));
    }
    sub.rebuild_index();
    features::Standardizer std_fit = features::Standardizer::fit(
        sub, detail::train_question_ids(in.train, in.question_ids));
    for (const std::vector<double>& row : sub.rows)
      data.features.push_back(std_fit.apply(row));
  }

  nn::TrainConfig tcfg = cfg.train;
  tcfg.seed = seed;
  nn::TrainResult trained = nn::train(data, tcfg);

  std::vector<std::vector<double>> probs = nn::predict_matrix(
      trained.params, data.features, data.text_embeds, in.question_ids.size());
  std::vector<std::vector<std::int8_t>> bin = nn::binarize_matrix(probs);
  irt::FitResult fit = irt::fit_1pl(in.student_ids.size(), in.question_ids.size(),
                                    irt::observations_from_matrix(bin), cfg.fit);
  outcome.beta = fit.beta;
  outcome.beta_agreement = agreement_metrics(fit.beta, in.reference_beta);

  std::vector<double> test_probs;
  std::vector<int> test_labels;
  for (const irt::Observation& o : in.test) {
    test_probs.push_back(probs[o.student][o.question]);
    test_labels.push_back(o.correct);
  }
  if (!test_probs.empty())
    outcome.test_metrics = classification_metrics(test_probs, test_labels);
  return outcome;
}

inline std::vector<AblationOutcome> run_ablation(const AblationInputs& in,
                                                 const AblationConfig& cfg) {
  if (in.table.question_ids != in.question_ids)
    throw ValidationError("ablation: feature table must align with question ids");
  if (in.text_embeds.size() != in.question_ids.size())
    throw ValidationError("ablation: text embeddings must align with question ids");
  if (in.reference_beta.size() != in.question_ids.size())
    throw ValidationError("ablation: reference beta must align with question ids");
  std::vector<AblationOutcome> out;
  for (const AblationPreset& preset : ablation_presets()) {
    features::FeatureLayout layout = features::FeatureLayout::masked(
        preset.keep_question, preset.keep_option, preset.keep_llm);
    out.push_back(run_pipeline_variant(in, cfg, layout, preset.name,
                                       derive_seed(cfg.train.seed,
                                                   "ablation-" + preset.name)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON views
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const ClassificationMetrics& m) {
  nlohmann::json j;
  j["n"] = m.n;
  j["accuracy"] = m.accuracy;
  if (m.auc) j["auc"] = *m.auc;
  else j["auc"] = nullptr;
  j["precision"] = m.precision;
  j["recall"] = m.recall;
  j["f1"] = m.f1;
  return j;
}

inline nlohmann::json to_json(const AgreementMetrics& m) {
  nlohmann::json j;
  if (m.pearson) j["pearson"] = *m.pearson;
  else j["pearson"] = nullptr;
  if (m.spearman) j["spearman"] = *m.spearman;
  else j["spearman"] = nullptr;
  j["rmse"] = m.rmse;
  return j;
}

inline nlohmann::json to_json(const EfficiencyCurve& curve) {
  nlohmann::json j;
  j["model_rmse"] = curve.model_rmse;
  j["equivalent_fraction"] = curve.equivalent_fraction;
  j["equivalent_answers"] = curve.equivalent_answers;
  j["total_answers"] = curve.total_answers;
  j["points"] = nlohmann::json::array();
  for (const EfficiencyPoint& p : curve.points) {
    nlohmann::json pj;
    pj["fraction"] = p.fraction;
    pj["n_students"] = p.n_students;
    pj["mean_answers"] = p.mean_answers;
    pj["mean_rmse"] = p.mean_rmse;
    pj["rmses"] = p.rmses;
    j["points"].push_back(pj);
  }
  return j;
}

inline nlohmann::json to_json(const AblationOutcome& o) {
  nlohmann::json j;
  j["name"] = o.name;
  j["n_feature_columns"] = o.n_feature_columns;
  j["test"] = to_json(o.test_metrics);
  j["difficulty"] = to_json(o.beta_agreement);
  return j;
}

}  // namespace psychoforge::evalharness
