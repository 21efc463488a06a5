#include "psychoforge/evalharness.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "psychoforge/common.hpp"
#include "psychoforge/features.hpp"
#include "psychoforge/irt.hpp"
#include "psychoforge/stats.hpp"

using namespace psychoforge;

namespace {

double auc_brute_force(const std::vector<int>& labels, const std::vector<double>& scores) {
  double wins = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < labels.size(); ++j) {
      if (labels[j] != 0) continue;
      ++pairs;
      if (scores[i] > scores[j]) wins += 1.0;
      else if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  return wins / static_cast<double>(pairs);
}

std::vector<irt::Observation> simulate_full(const std::vector<double>& theta,
                                            const std::vector<double>& beta,
                                            std::uint64_t seed) {
  Rng rng(seed);
  std::vector<irt::Observation> obs;
  for (std::size_t j = 0; j < theta.size(); ++j)
    for (std::size_t i = 0; i < beta.size(); ++i)
      obs.push_back({j, i, rng.bernoulli(irt::p_correct(theta[j], beta[i]))});
  return obs;
}

}  // namespace

TEST(Classification, AucGolden) {
  std::vector<int> labels{1, 0, 1, 0};
  std::vector<double> scores{0.9, 0.8, 0.7, 0.1};
  evalharness::ClassificationMetrics m =
      evalharness::classification_metrics(scores, labels);
  ASSERT_TRUE(m.auc.has_value());
  EXPECT_NEAR(*m.auc, 0.75, 1e-9);
}

TEST(Classification, AllHalfProbabilities) {
  std::vector<double> probs(10, 0.5);
  std::vector<int> labels{1, 1, 1, 1, 0, 0, 0, 0, 0, 0};
  evalharness::ClassificationMetrics m =
      evalharness::classification_metrics(probs, labels);
  ASSERT_TRUE(m.auc.has_value());
  EXPECT_NEAR(*m.auc, 0.5, 1e-9);
  EXPECT_NEAR(m.accuracy, 0.4, 1e-12);  // 0.5 binarizes to 1
  EXPECT_NEAR(m.precision, 0.4, 1e-12);
  EXPECT_NEAR(m.recall, 1.0, 1e-12);
}

TEST(Classification, ConfusionCountsAndF1) {
  // tp=3 fp=2 fn=3 tn=2: precision 0.6, recall 0.5
  std::vector<double> probs{0.9, 0.9, 0.9, 0.9, 0.9, 0.1, 0.1, 0.1, 0.1, 0.1};
  std::vector<int> labels{1, 1, 1, 0, 0, 1, 1, 1, 0, 0};
  evalharness::ClassificationMetrics m =
      evalharness::classification_metrics(probs, labels);
  EXPECT_NEAR(m.precision, 0.6, 1e-12);
  EXPECT_NEAR(m.recall, 0.5, 1e-12);
  EXPECT_NEAR(m.f1, 2.0 * 0.6 * 0.5 / 1.1, 1e-9);
  EXPECT_NEAR(m.accuracy, 0.5, 1e-12);
}

TEST(Classification, DegenerateCasesAndValidation) {
  std::vector<double> probs{0.9, 0.8};
  std::vector<int> ones{1, 1};
  evalharness::ClassificationMetrics m = evalharness::classification_metrics(probs, ones);
  EXPECT_FALSE(m.auc.has_value());
  EXPECT_NEAR(m.recall, 1.0, 1e-12);

  std::vector<double> low{0.1, 0.2};
  evalharness::ClassificationMetrics z = evalharness::classification_metrics(low, ones);
  EXPECT_EQ(z.precision, 0.0);  // no positive predictions
  EXPECT_EQ(z.recall, 0.0);
  EXPECT_EQ(z.f1, 0.0);

  EXPECT_THROW(evalharness::classification_metrics({0.5}, {1, 0}), ValidationError);
  EXPECT_THROW(evalharness::classification_metrics({}, {}), ValidationError);
  EXPECT_THROW(evalharness::classification_metrics({0.5}, {2}), ValidationError);
}

TEST(Classification, AucMatchesBruteForceWithTies) {
  Rng rng(71);
  std::vector<double> scores;
  std::vector<int> labels;
  for (int i = 0; i < 200; ++i) {
    scores.push_back(std::round(rng.uniform() * 10.0) / 10.0);  // heavy ties
    labels.push_back(rng.bernoulli(0.4));
  }
  evalharness::ClassificationMetrics m =
      evalharness::classification_metrics(scores, labels);
  ASSERT_TRUE(m.auc.has_value());
  EXPECT_NEAR(*m.auc, auc_brute_force(labels, scores), 1e-12);
}

TEST(Classification, F1BetweenMinAndMax) {
  Rng rng(73);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> probs;
    std::vector<int> labels;
    for (int i = 0; i < 40; ++i) {
      probs.push_back(rng.uniform());
      labels.push_back(rng.bernoulli(0.5));
    }
    evalharness::ClassificationMetrics m =
        evalharness::classification_metrics(probs, labels);
    if (m.precision > 0.0 && m.recall > 0.0) {
      EXPECT_GE(m.f1, std::min(m.precision, m.recall) - 1e-12);
      EXPECT_LE(m.f1, std::max(m.precision, m.recall) + 1e-12);
    }
  }
}

TEST(Agreement, SpearmanGolden) {
  std::vector<double> est{1.0, 2.0, 3.0};
  std::vector<double> ref{3.0, 1.0, 2.0};
  evalharness::AgreementMetrics m = evalharness::agreement_metrics(est, ref);
  ASSERT_TRUE(m.spearman.has_value());
  EXPECT_NEAR(*m.spearman, -0.5, 1e-9);
}

TEST(Agreement, SpearmanInvariantUnderMonotoneTransform) {
  Rng rng(79);
  std::vector<double> x, y, ex;
  for (int i = 0; i < 60; ++i) {
    x.push_back(rng.normal(0.0, 1.0));
    y.push_back(rng.normal(0.0, 1.0));
  }
  for (double v : x) ex.push_back(std::exp(v));
  evalharness::AgreementMetrics a = evalharness::agreement_metrics(x, y);
  evalharness::AgreementMetrics b = evalharness::agreement_metrics(ex, y);
  ASSERT_TRUE(a.spearman.has_value());
  ASSERT_TRUE(b.spearman.has_value());
  EXPECT_NEAR(*a.spearman, *b.spearman, 1e-12);
}

TEST(Agreement, ZeroVarianceYieldsNullCorrelationsButRmse) {
  std::vector<double> flat(5, 2.0);
  std::vector<double> ref{1.0, 2.0, 3.0, 4.0, 5.0};
  evalharness::AgreementMetrics m = evalharness::agreement_metrics(flat, ref);
  EXPECT_FALSE(m.pearson.has_value());
  EXPECT_FALSE(m.spearman.has_value());
  EXPECT_NEAR(m.rmse, std::sqrt((1.0 + 0.0 + 1.0 + 4.0 + 9.0) / 5.0), 1e-12);
  EXPECT_THROW(evalharness::agreement_metrics({}, {}), ValidationError);
  EXPECT_THROW(evalharness::agreement_metrics({1.0}, {1.0, 2.0}), ValidationError);
}

TEST(Efficiency, PerfectModelNeedsEverything) {
  Rng rng(83);
  std::vector<double> theta(50), beta(30);
  for (double& t : theta) t = rng.normal(0.0, 1.0);
  for (double& b : beta) b = rng.normal(0.0, 1.0);
  std::vector<irt::Observation> obs = simulate_full(theta, beta, 83);
  irt::FitResult reference = irt::fit_1pl(50, 30, obs);

  evalharness::EfficiencyConfig cfg;
  cfg.fractions = {0.1, 0.5, 1.0};
  cfg.repetitions = 3;
  cfg.seed = 83;
  evalharness::EfficiencyCurve curve = evalharness::efficiency_curve(
      50, 30, obs, reference.beta, reference.beta, cfg);
  EXPECT_NEAR(curve.model_rmse, 0.0, 1e-12);
  EXPECT_NEAR(curve.equivalent_fraction, 1.0, 1e-9);
  EXPECT_EQ(curve.equivalent_answers,
            std::llround(curve.equivalent_fraction *
                         static_cast<double>(curve.total_answers)));
  EXPECT_EQ(curve.total_answers, obs.size());
}

TEST(Efficiency, RmseDecreasesWithFraction) {
  Rng rng(89);
  std::vector<double> theta(60), beta(40);
  for (double& t : theta) t = rng.normal(0.0, 1.0);
  for (double& b : beta) b = rng.normal(0.0, 1.0);
  std::vector<irt::Observation> obs = simulate_full(theta, beta, 89);
  irt::FitResult reference = irt::fit_1pl(60, 40, obs);

  evalharness::EfficiencyConfig cfg;
  cfg.fractions = {0.1, 0.5, 1.0};
  cfg.repetitions = 3;
  cfg.seed = 89;
  std::vector<double> noisy = reference.beta;
  for (double& b : noisy) b += rng.normal(0.0, 0.3);
  evalharness::EfficiencyCurve curve =
      evalharness::efficiency_curve(60, 40, obs, reference.beta, noisy, cfg);
  ASSERT_EQ(curve.points.size(), 3u);
  EXPECT_GT(curve.points[0].mean_rmse, curve.points[1].mean_rmse);
  EXPECT_GT(curve.points[1].mean_rmse, curve.points[2].mean_rmse);
  EXPECT_NEAR(curve.points[2].mean_rmse, 0.0, 1e-9);
  EXPECT_GT(curve.equivalent_fraction, cfg.fractions.front() - 1e-12);
  EXPECT_LE(curve.equivalent_fraction, 1.0);
}

TEST(Efficiency, DeterministicAndMostlyMonotone) {
  Rng rng(97);
  std::vector<double> theta(60), beta(40);
  for (double& t : theta) t = rng.normal(0.0, 1.0);
  for (double& b : beta) b = rng.normal(0.0, 1.0);
  std::vector<irt::Observation> obs = simulate_full(theta, beta, 97);
  irt::FitResult reference = irt::fit_1pl(60, 40, obs);

  evalharness::EfficiencyConfig cfg;
  cfg.repetitions = 3;
  cfg.seed = 97;
  std::vector<double> noisy = reference.beta;
  for (double& b : noisy) b += rng.normal(0.0, 0.2);
  evalharness::EfficiencyCurve a =
      evalharness::efficiency_curve(60, 40, obs, reference.beta, noisy, cfg);
  evalharness::EfficiencyCurve b2 =
      evalharness::efficiency_curve(60, 40, obs, reference.beta, noisy, cfg);
  ASSERT_EQ(a.points.size(), 15u);
  for (std::size_t i = 0; i < a.points.size(); ++i)
    EXPECT_EQ(a.points[i].rmses, b2.points[i].rmses);

  int violations = 0;
  for (std::size_t i = 0; i + 1 < a.points.size(); ++i)
    if (a.points[i + 1].mean_rmse > a.points[i].mean_rmse + 1e-9) ++violations;
  EXPECT_LE(violations, 1);
}

TEST(Efficiency, ValidatesInput) {
  std::vector<irt::Observation> obs{{0, 0, 1}};
  std::vector<double> beta{0.0};
  evalharness::EfficiencyConfig cfg;
  cfg.fractions = {0.5, 0.2};
  EXPECT_THROW(evalharness::efficiency_curve(1, 1, obs, beta, beta, cfg),
               ValidationError);
  cfg.fractions = {0.0, 0.5};
  EXPECT_THROW(evalharness::efficiency_curve(1, 1, obs, beta, beta, cfg),
               ValidationError);
  cfg.fractions = {0.5};
  cfg.repetitions = 0;
  EXPECT_THROW(evalharness::efficiency_curve(1, 1, obs, beta, beta, cfg),
               ValidationError);
  EXPECT_THROW(
      evalharness::efficiency_curve(1, 1, obs, {0.0, 1.0}, {0.0, 1.0}, {}),
      ValidationError);
}

TEST(Ablation, PresetsAreFixed) {
  std::vector<evalharness::AblationPreset> presets = evalharness::ablation_presets();
  ASSERT_EQ(presets.size(), 4u);
  EXPECT_EQ(presets[0].name, "embeddings_only");
  EXPECT_EQ(presets[1].name, "embeddings_question");
  EXPECT_EQ(presets[2].name, "embeddings_question_option");
  EXPECT_EQ(presets[3].name, "full");
  EXPECT_EQ(features::FeatureLayout::masked(presets[0].keep_question,
                                            presets[0].keep_option,
                                            presets[0].keep_llm)
                .size(),
            0u);
  EXPECT_EQ(features::FeatureLayout::masked(presets[1].keep_question,
                                            presets[1].keep_option,
                                            presets[1].keep_llm)
                .size(),
            9u);
  EXPECT_EQ(features::FeatureLayout::masked(presets[2].keep_question,
                                            presets[2].keep_option,
                                            presets[2].keep_llm)
                .size(),
            18u);
  EXPECT_EQ(features::FeatureLayout::masked(presets[3].keep_question,
                                            presets[3].keep_option,
                                            presets[3].keep_llm)
                .size(),
            44u);
}

namespace {

struct AblationFixture {
  evalharness::AblationInputs inputs;
  evalharness::AblationConfig config;
};

// question features carry the difficulty signal; text embeddings are noise
AblationFixture build_ablation_fixture() {
  Rng rng(101);
  const std::size_t n_s = 60, n_q = 48;
  AblationFixture fx;
  for (std::size_t j = 0; j < n_s; ++j)
    fx.inputs.student_ids.push_back("s" + std::to_string(j));
  for (std::size_t i = 0; i < n_q; ++i)
    fx.inputs.question_ids.push_back("q" + std::to_string(i));

  features::FeatureLayout canon = features::FeatureLayout::canonical();
  fx.inputs.table.layout = canon;
  fx.inputs.table.question_ids = fx.inputs.question_ids;
  std::vector<double> beta(n_q);
  std::size_t wc = *canon.index_of("word_count");
  for (std::size_t i = 0; i < n_q; ++i) {
    std::vector<double> row(canon.size(), 0.0);
    double signal = rng.normal(0.0, 1.0);
    beta[i] = 1.6 * signal;
    row[wc] = signal;
    for (std::size_t c = 0; c < canon.size(); ++c)
      if (c != wc && canon.columns[c].group != features::FeatureGroup::OneHot)
        row[c] = rng.normal(0.0, 0.5);
    fx.inputs.table.rows.push_back(row);
  }
  fx.inputs.table.rebuild_index();

  for (std::size_t i = 0; i < n_q; ++i) {
    std::vector<double> e(4);
    for (double& v : e) v = rng.uniform(-1.0, 1.0);
    fx.inputs.text_embeds.push_back(e);
  }

  std::vector<double> theta(n_s);
  for (double& t : theta) t = rng.normal(0.0, 1.0);
  std::vector<irt::Observation> all;
  for (std::size_t j = 0; j < n_s; ++j)
    for (std::size_t i = 0; i < n_q; ++i)
      if (rng.uniform() < 0.6)
        all.push_back({j, i, rng.bernoulli(irt::p_correct(theta[j], beta[i]))});
  Rng split_rng(202);
  split_rng.shuffle(all);
  std::size_t n_train = all.size() * 70 / 100;
  std::size_t n_val = all.size() * 15 / 100;
  fx.inputs.train.assign(all.begin(), all.begin() + n_train);
  fx.inputs.val.assign(all.begin() + n_train, all.begin() + n_train + n_val);
  fx.inputs.test.assign(all.begin() + n_train + n_val, all.end());

  irt::FitResult reference = irt::fit_1pl(n_s, n_q, all);
  fx.inputs.reference_beta = reference.beta;

  fx.config.train.epochs = 30;
  fx.config.train.patience = 30;
  fx.config.train.batch_size = 64;
  fx.config.train.learning_rate = 2e-3;
  fx.config.train.hidden1 = 24;
  fx.config.train.hidden2 = 12;
  fx.config.train.seed = 303;
  return fx;
}

}  // namespace

TEST(Ablation, DeterministicRunsWithFeatureOrdering) {
  AblationFixture fx = build_ablation_fixture();
  std::vector<evalharness::AblationOutcome> a =
      evalharness::run_ablation(fx.inputs, fx.config);
  std::vector<evalharness::AblationOutcome> b =
      evalharness::run_ablation(fx.inputs, fx.config);
  ASSERT_EQ(a.size(), 4u);
  ASSERT_EQ(b.size(), 4u);
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_EQ(a[k].name, b[k].name);
    EXPECT_EQ(a[k].beta, b[k].beta);
    EXPECT_EQ(a[k].test_metrics.accuracy, b[k].test_metrics.accuracy);
  }
  EXPECT_EQ(a[0].n_feature_columns, 0u);
  EXPECT_EQ(a[3].n_feature_columns, 44u);

  ASSERT_TRUE(a[3].beta_agreement.pearson.has_value());
  double full_pearson = *a[3].beta_agreement.pearson;
  EXPECT_GT(full_pearson, 0.5);
  if (a[0].beta_agreement.pearson.has_value())
    EXPECT_GT(full_pearson, *a[0].beta_agreement.pearson);
  for (const evalharness::AblationOutcome& o : a)
    for (double b2 : o.beta) EXPECT_TRUE(std::isfinite(b2));
}

TEST(Ablation, ValidatesAlignment) {
  AblationFixture fx = build_ablation_fixture();
  evalharness::AblationInputs bad = fx.inputs;
  bad.reference_beta.pop_back();
  EXPECT_THROW(evalharness::run_ablation(bad, fx.config), ValidationError);
  evalharness::AblationInputs bad2 = fx.inputs;
  bad2.text_embeds.pop_back();
  EXPECT_THROW(evalharness::run_ablation(bad2, fx.config), ValidationError);
}

TEST(JsonViews, SerializeCleanly) {
  evalharness::ClassificationMetrics cm;
  cm.n = 10;
  cm.accuracy = 0.8;
  cm.auc = std::nullopt;
  nlohmann::json cj = evalharness::to_json(cm);
  EXPECT_TRUE(cj["auc"].is_null());
  EXPECT_DOUBLE_EQ(cj["accuracy"].get<double>(), 0.8);

  evalharness::AgreementMetrics am;
  am.pearson = 0.9;
  am.rmse = 0.1;
  nlohmann::json aj = evalharness::to_json(am);
  EXPECT_DOUBLE_EQ(aj["pearson"].get<double>(), 0.9);
  EXPECT_TRUE(aj["spearman"].is_null());

  evalharness::EfficiencyCurve curve;
  curve.model_rmse = 0.2;
  curve.equivalent_fraction = 0.35;
  curve.equivalent_answers = 700;
  curve.total_answers = 2000;
  evalharness::EfficiencyPoint p;
  p.fraction = 0.1;
  p.rmses = {0.5, 0.4};
  p.mean_rmse = 0.45;
  curve.points.push_back(p);
  nlohmann::json ej = evalharness::to_json(curve);
  EXPECT_EQ(ej["points"].size(), 1u);
  EXPECT_DOUBLE_EQ(ej["points"][0]["mean_rmse"].get<double>(), 0.45);
  EXPECT_EQ(ej["equivalent_answers"].get<long long>(), 700);
}
