#include "psychoforge/irt.hpp"

#include <gtest/gtest.h>

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <vector>

#include "psychoforge/common.hpp"
#include "psychoforge/stats.hpp"

using namespace psychoforge;

namespace {

std::vector<irt::Observation> simulate(std::size_t n_students, std::size_t n_questions,
                                       const std::vector<double>& theta,
                                       const std::vector<double>& beta, double density,
                                       std::uint64_t seed) {
  Rng rng(seed);
  std::vector<irt::Observation> obs;
  for (std::size_t j = 0; j < n_students; ++j)
    for (std::size_t i = 0; i < n_questions; ++i) {
      int y = rng.bernoulli(irt::p_correct(theta[j], beta[i]));
      if (density >= 1.0 || rng.uniform() < density) obs.push_back({j, i, y});
    }
  return obs;
}

std::filesystem::path temp_path(const char* stem) {
  return std::filesystem::temp_directory_path() /
         (std::string(stem) + "-" + std::to_string(::getpid()));
}

}  // namespace

TEST(Model, PCorrectGoldens) {
  EXPECT_DOUBLE_EQ(irt::p_correct(0.0, 0.0), 0.5);
  EXPECT_NEAR(irt::p_correct(std::log(3.0), 0.0), 0.75, 1e-12);
  EXPECT_NEAR(irt::p_correct(0.0, std::log(3.0)), 0.25, 1e-12);
  double tiny = irt::p_correct(-25.0, 25.0);
  EXPECT_GT(tiny, 0.0);
  EXPECT_LT(tiny, 1e-20);
  EXPECT_FALSE(std::isnan(tiny));
  double huge = irt::p_correct(25.0, -25.0);
  EXPECT_LE(huge, 1.0);
  EXPECT_GT(huge, 1.0 - 1e-15);
  EXPECT_FALSE(std::isnan(huge));
}

TEST(Model, ShiftInvariance) {
  for (double c : {-3.0, 0.7, 12.0})
    EXPECT_DOUBLE_EQ(irt::p_correct(0.4 + c, -1.1 + c), irt::p_correct(0.4, -1.1));
}

TEST(Model, LogLikSingleCell) {
  std::vector<double> theta{0.0}, beta{0.0};
  std::vector<irt::Observation> obs{{0, 0, 1}};
  EXPECT_NEAR(irt::log_likelihood(theta, beta, obs), std::log(0.5), 1e-12);
  obs[0].correct = 0;
  EXPECT_NEAR(irt::log_likelihood(theta, beta, obs), std::log(0.5), 1e-12);
}

TEST(Model, LogLikStableAtExtremes) {
  std::vector<double> theta{-50.0}, beta{0.0};
  std::vector<irt::Observation> obs{{0, 0, 1}};
  double ll = irt::log_likelihood(theta, beta, obs);
  EXPECT_NEAR(ll, -50.0, 1e-9);
  EXPECT_FALSE(std::isnan(ll));
  obs[0].correct = 0;
  EXPECT_NEAR(irt::log_likelihood(theta, beta, obs), 0.0, 1e-12);
}

TEST(Gradients, MatchFiniteDifferences) {
  Rng rng(101);
  std::size_t n_s = 5, n_q = 5;
  std::vector<double> theta(n_s), beta(n_q);
  for (double& t : theta) t = rng.normal(0.0, 1.0);
  for (double& b : beta) b = rng.normal(0.0, 1.0);
  std::vector<irt::Observation> obs;
  for (std::size_t j = 0; j < n_s; ++j)
    for (std::size_t i = 0; i < n_q; ++i)
      if ((j + i) % 3 != 0) obs.push_back({j, i, rng.bernoulli(0.5)});

  const double prec = 0.01, eps = 1e-5;
  std::vector<double> g_theta, g_beta;
  irt::gradients(theta, beta, obs, prec, g_theta, g_beta);
  auto check = [&](std::vector<double>& v, const std::vector<double>& g) {
    for (std::size_t k = 0; k < v.size(); ++k) {
      double saved = v[k];
      v[k] = saved + eps;
      double up = irt::objective(theta, beta, obs, prec);
      v[k] = saved - eps;
      double down = irt::objective(theta, beta, obs, prec);
      v[k] = saved;
      double numeric = (up - down) / (2.0 * eps);
      EXPECT_NEAR(g[k], numeric, 1e-6 * std::max(1.0, std::fabs(g[k])));
    }
  };
  check(theta, g_theta);
  check(beta, g_beta);
}

TEST(Fit, MonotoneObjectiveTrajectory) {
  Rng rng(103);
  std::vector<double> theta(20), beta(15);
  for (double& t : theta) t = rng.normal(0.0, 1.0);
  for (double& b : beta) b = rng.normal(0.0, 1.0);
  std::vector<irt::Observation> obs = simulate(20, 15, theta, beta, 1.0, 103);
  irt::FitConfig cfg;
  cfg.tolerance = 0.0;
  cfg.max_iterations = 50;
  cfg.record_trace = true;
  irt::FitResult r = irt::fit_1pl(20, 15, obs, cfg);
  ASSERT_GE(r.trace.size(), 2u);
  for (std::size_t k = 1; k < r.trace.size(); ++k)
    EXPECT_GE(r.trace[k], r.trace[k - 1] - 1e-9);
}

TEST(Fit, SymmetricTwoByThreeOracle) {
  // two students, three items; each item solved by exactly one student
  std::vector<irt::Observation> obs{
      {0, 0, 1}, {1, 0, 0}, {0, 1, 0}, {1, 1, 1}, {0, 2, 1}, {1, 2, 0}};
  irt::FitConfig cfg;
  cfg.tolerance = 1e-7;
  irt::FitResult r = irt::fit_1pl(2, 3, obs, cfg);
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.beta[0], 0.0, 0.02);
  EXPECT_NEAR(r.beta[1], 0.0, 0.02);
  EXPECT_NEAR(r.beta[2], 0.0, 0.02);
  EXPECT_NEAR(r.beta[0], r.beta[2], 1e-6);
  EXPECT_NEAR(r.theta[0], std::log(2.0), 0.05);
  EXPECT_NEAR(r.theta[1], -std::log(2.0), 0.05);
  EXPECT_NEAR(r.theta[0] + r.theta[1], 0.0, 1e-9);
}

TEST(Fit, AllCorrectItemStaysFinite) {
  Rng rng(107);
  std::vector<double> theta(30), beta(10);
  for (double& t : theta) t = rng.normal(0.0, 1.0);
  for (double& b : beta) b = rng.normal(0.0, 1.0);
  std::vector<irt::Observation> obs = simulate(30, 10, theta, beta, 1.0, 107);
  for (irt::Observation& o : obs)
    if (o.question == 0) o.correct = 1;
  irt::FitResult r = irt::fit_1pl(30, 10, obs);
  EXPECT_TRUE(std::isfinite(r.beta[0]));
  // the mean-ability gauge shift applied after fitting can move a clamped
  // parameter past the raw bound by at most the shift itself
  EXPECT_GE(r.beta[0], -12.0);
  double beta_others_min = *std::min_element(r.beta.begin() + 1, r.beta.end());
  EXPECT_LT(r.beta[0], beta_others_min);
}

TEST(Fit, ComparativeStatics) {
  // same students; item 0 answered correctly far more often than item 1
  std::vector<irt::Observation> obs;
  for (std::size_t j = 0; j < 40; ++j) {
    obs.push_back({j, 0, j % 10 < 7 ? 1 : 0});
    obs.push_back({j, 1, j % 10 < 3 ? 1 : 0});
  }
  irt::FitResult r = irt::fit_1pl(40, 2, obs);
  EXPECT_LT(r.beta[0], r.beta[1]);
}

TEST(Fit, SparseDataConverges) {
  Rng rng(109);
  std::vector<double> theta(80), beta(40);
  for (double& t : theta) t = rng.normal(0.0, 1.0);
  for (double& b : beta) b = rng.normal(0.0, 1.0);
  std::vector<irt::Observation> obs = simulate(80, 40, theta, beta, 0.4, 109);
  irt::FitResult r = irt::fit_1pl(80, 40, obs);
  EXPECT_TRUE(r.converged);
  EXPECT_LT(r.iterations, 2000);
  double m = stats::mean(r.theta);
  EXPECT_LT(std::fabs(m), 1e-6);
}

TEST(Fit, GaugeAndDeterminism) {
  Rng rng(113);
  std::vector<double> theta(25), beta(20);
  for (double& t : theta) t = rng.normal(0.0, 1.0);
  for (double& b : beta) b = rng.normal(0.0, 1.0);
  std::vector<irt::Observation> obs = simulate(25, 20, theta, beta, 1.0, 113);
  irt::FitResult a = irt::fit_1pl(25, 20, obs);
  irt::FitResult b = irt::fit_1pl(25, 20, obs);
  EXPECT_EQ(a.theta, b.theta);
  EXPECT_EQ(a.beta, b.beta);
  EXPECT_LT(std::fabs(stats::mean(a.theta)), 1e-9);
}

TEST(Fit, ParameterRecoveryModerate) {
  Rng rng(127);
  const std::size_t n_s = 400, n_q = 60;
  std::vector<double> theta(n_s), beta(n_q);
  for (double& t : theta) t = rng.normal(0.0, 1.0);
  for (double& b : beta) b = rng.normal(0.0, 1.0);
  std::vector<irt::Observation> obs = simulate(n_s, n_q, theta, beta, 1.0, 127);
  irt::FitResult r = irt::fit_1pl(n_s, n_q, obs);
  auto corr = stats::pearson(r.beta, beta);
  ASSERT_TRUE(corr.has_value());
  EXPECT_GT(*corr, 0.9);
  double se = 0.0;
  for (std::size_t i = 0; i < n_q; ++i) se += (r.beta[i] - beta[i]) * (r.beta[i] - beta[i]);
  double rmse = std::sqrt(se / static_cast<double>(n_q));
  EXPECT_LT(rmse, 0.35);
}

TEST(Fit, RejectsBadInput) {
  std::vector<irt::Observation> obs{{0, 0, 1}};
  EXPECT_THROW(irt::fit_1pl(0, 1, obs), ValidationError);
  EXPECT_THROW(irt::fit_1pl(1, 1, {}), ValidationError);
  std::vector<irt::Observation> bad_idx{{2, 0, 1}};
  EXPECT_THROW(irt::fit_1pl(2, 1, bad_idx), ValidationError);
  std::vector<irt::Observation> bad_y{{0, 0, 2}};
  EXPECT_THROW(irt::fit_1pl(1, 1, bad_y), ValidationError);
}

TEST(Fit, ObservationsFromMatrix) {
  std::vector<std::vector<std::int8_t>> m{{1, 0, 1}, {0, 0, 1}};
  std::vector<irt::Observation> obs = irt::observations_from_matrix(m);
  ASSERT_EQ(obs.size(), 6u);
  EXPECT_EQ(obs[0].student, 0u);
  EXPECT_EQ(obs[0].question, 0u);
  EXPECT_EQ(obs[0].correct, 1);
  EXPECT_EQ(obs[5].student, 1u);
  EXPECT_EQ(obs[5].question, 2u);
  EXPECT_EQ(obs[5].correct, 1);
}

TEST(Artifacts, CsvAndSummaryRoundTrip) {
  std::filesystem::path dir = temp_path("pf-irt");
  std::filesystem::create_directories(dir);
  std::vector<std::string> qids{"q1", "q2"}, sids{"s1", "s2", "s3"};
  std::vector<double> beta{-0.25, 1.5}, theta{0.5, -0.5, 0.0};
  irt::write_beta_csv(dir / "betas.csv", qids, beta);
  irt::write_theta_csv(dir / "thetas.csv", sids, theta);

  auto brows = irt::read_value_csv(dir / "betas.csv", "question_id", "beta");
  ASSERT_EQ(brows.size(), 2u);
  EXPECT_EQ(brows[0].first, "q1");
  EXPECT_DOUBLE_EQ(brows[0].second, -0.25);
  EXPECT_DOUBLE_EQ(brows[1].second, 1.5);
  auto trows = irt::read_value_csv(dir / "thetas.csv", "student_id", "theta");
  ASSERT_EQ(trows.size(), 3u);
  EXPECT_DOUBLE_EQ(trows[0].second, 0.5);

  EXPECT_THROW(irt::read_value_csv(dir / "betas.csv", "student_id", "theta"),
               ValidationError);
  EXPECT_THROW(irt::write_beta_csv(dir / "x.csv", qids, theta), ValidationError);

  irt::FitResult r;
  r.theta = theta;
  r.beta = beta;
  r.converged = true;
  r.iterations = 12;
  r.objective = -3.5;
  nlohmann::json j = irt::fit_summary_json(r, 6);
  EXPECT_EQ(j["n_students"], 3);
  EXPECT_EQ(j["n_questions"], 2);
  EXPECT_EQ(j["n_observations"], 6);
  EXPECT_TRUE(j["converged"].get<bool>());
  EXPECT_DOUBLE_EQ(j["theta_mean"].get<double>(), 0.0);

  std::filesystem::remove_all(dir);
}
