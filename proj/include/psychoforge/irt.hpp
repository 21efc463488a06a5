#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "psychoforge/common.hpp"
#include "psychoforge/stats.hpp"

namespace psychoforge::irt {

struct Observation {
  std::size_t student = 0;
  std::size_t question = 0;
  int correct = 0;
};

struct FitConfig {
  int max_iterations = 2000;
  double tolerance = 1e-5;  // on the scaled projected gradient, inf norm
  double prior_precision = 0.01;
  double bound = 6.0;
  double initial_step = 0.5;
  bool record_trace = false;
};

struct FitResult {
  std::vector<double> theta;
  std::vector<double> beta;
  bool converged = false;
  int iterations = 0;
  double objective = 0.0;
  std::vector<double> trace;  // objective after each accepted step
};

inline double p_correct(double theta, double beta) { return sigmoid(theta - beta); }

namespace detail {

inline double softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::fabs(x)));
}

inline void check_observations(std::size_t n_students, std::size_t n_questions,
                               const std::vector<Observation>& obs) {
  if (n_students == 0 || n_questions == 0)
    throw ValidationError("1PL fit needs at least one student and one question");
  if (obs.empty()) throw ValidationError("1PL fit needs at least one observation");
  for (const Observation& o : obs) {
    if (o.student >= n_students)
      throw ValidationError("observation has student index out of range");
    if (o.question >= n_questions)
      throw ValidationError("observation has question index out of range");
    if (o.correct != 0 && o.correct != 1)
      throw ValidationError("observation outcome must be 0 or 1");
  }
}

}  // namespace detail

inline double log_likelihood(const std::vector<double>& theta,
                             const std::vector<double>& beta,
                             const std::vector<Observation>& obs) {
  double ll = 0.0;
  for (const Observation& o : obs) {
    double x = theta[o.student] - beta[o.question];
    ll -= o.correct == 1 ? detail::softplus(-x) : detail::softplus(x);
  }
  return ll;
}

inline double objective(const std::vector<double>& theta,
                        const std::vector<double>& beta,
                        const std::vector<Observation>& obs, double prior_precision) {
  double penalty = 0.0;
  for (double t : theta) penalty += t * t;
  for (double b : beta) penalty += b * b;
  return log_likelihood(theta, beta, obs) - 0.5 * prior_precision * penalty;
}

// Raw gradient of `objective` with respect to theta and beta.
inline void gradients(const std::vector<double>& theta, const std::vector<double>& beta,
                      const std::vector<Observation>& obs, double prior_precision,
                      std::vector<double>& g_theta, std::vector<double>& g_beta) {
  g_theta.assign(theta.size(), 0.0);
  g_beta.assign(beta.size(), 0.0);
  for (const Observation& o : obs) {
    double r = static_cast<double>(o.correct) - sigmoid(theta[o.student] - beta[o.question]);
    g_theta[o.student] += r;
    g_beta[o.question] -= r;
  }
  for (std::size_t j = 0; j < theta.size(); ++j) g_theta[j] -= prior_precision * theta[j];
  for (std::size_t i = 0; i < beta.size(); ++i) g_beta[i] -= prior_precision * beta[i];
}

inline FitResult fit_1pl(std::size_t n_students, std::size_t n_questions,
                         const std::vector<Observation>& obs, const FitConfig& cfg = {}) {
  detail::check_observations(n_students, n_questions, obs);
  if (cfg.bound <= 0.0) throw ValidationError("1PL fit bound must be positive");
  if (cfg.initial_step <= 0.0) throw ValidationError("1PL fit step must be positive");

  FitResult result;
  result.theta.assign(n_students, 0.0);
  result.beta.assign(n_questions, 0.0);
  std::vector<double>& theta = result.theta;
  std::vector<double>& beta = result.beta;

  std::vector<double> g_theta, g_beta, curv_s, curv_q, cand_theta, cand_beta;
  double obj = objective(theta, beta, obs, cfg.prior_precision);
  if (cfg.record_trace) result.trace.push_back(obj);
  double step = cfg.initial_step;

  for (int iter = 0; iter < cfg.max_iterations; ++iter) {
    // raw gradient scaled by the per-parameter diagonal curvature; the
    // scaling keeps the stationary points of `objective` intact while
    // giving prior-dominated parameters a usable step size
    g_theta.assign(n_students, 0.0);
    g_beta.assign(n_questions, 0.0);
    curv_s.assign(n_students, cfg.prior_precision);
    curv_q.assign(n_questions, cfg.prior_precision);
    for (const Observation& o : obs) {
      double p = sigmoid(theta[o.student] - beta[o.question]);
      double r = static_cast<double>(o.correct) - p;
      double w = p * (1.0 - p);
      g_theta[o.student] += r;
      g_beta[o.question] -= r;
      curv_s[o.student] += w;
      curv_q[o.question] += w;
    }
    for (std::size_t j = 0; j < n_students; ++j)
      g_theta[j] = (g_theta[j] - cfg.prior_precision * theta[j]) /
                   std::max(curv_s[j], 1e-12);
    for (std::size_t i = 0; i < n_questions; ++i)
      g_beta[i] = (g_beta[i] - cfg.prior_precision * beta[i]) /
                  std::max(curv_q[i], 1e-12);

    double proj = 0.0;
    auto proj_abs = [&](double x, double g) {
      if (x >= cfg.bound && g > 0.0) return 0.0;
      if (x <= -cfg.bound && g < 0.0) return 0.0;
      return std::fabs(g);
    };
    for (std::size_t j = 0; j < n_students; ++j)
      proj = std::max(proj, proj_abs(theta[j], g_theta[j]));
    for (std::size_t i = 0; i < n_questions; ++i)
      proj = std::max(proj, proj_abs(beta[i], g_beta[i]));
    if (proj < cfg.tolerance) {
      result.converged = true;
      break;
    }

    bool accepted = false;
    while (step >= 1e-12) {
      cand_theta = theta;
      cand_beta = beta;
      for (std::size_t j = 0; j < n_students; ++j)
        cand_theta[j] = std::clamp(theta[j] + step * g_theta[j], -cfg.bound, cfg.bound);
      for (std::size_t i = 0; i < n_questions; ++i)
        cand_beta[i] = std::clamp(beta[i] + step * g_beta[i], -cfg.bound, cfg.bound);
      double cand_obj = objective(cand_theta, cand_beta, obs, cfg.prior_precision);
      if (cand_obj >= obj - 1e-12) {
        theta.swap(cand_theta);
        beta.swap(cand_beta);
        obj = cand_obj;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    result.iterations = iter + 1;
    if (!accepted) break;
    step = std::min(cfg.initial_step, step * 2.0);

    // the likelihood is invariant under a common shift of all parameters, so
    // the shift minimizing the prior penalty can be applied in closed form;
    // without it the translation mode is the slowest to converge by far
    double sum_all = 0.0, min_p = theta[0], max_p = theta[0];
    for (double t : theta) {
      sum_all += t;
      min_p = std::min(min_p, t);
      max_p = std::max(max_p, t);
    }
    for (double b : beta) {
      sum_all += b;
      min_p = std::min(min_p, b);
      max_p = std::max(max_p, b);
    }
    double n_all = static_cast<double>(n_students + n_questions);
    double shift = std::clamp(-sum_all / n_all, -cfg.bound - min_p, cfg.bound - max_p);
    if (shift != 0.0) {
      for (double& t : theta) t += shift;
      for (double& b : beta) b += shift;
      obj -= cfg.prior_precision * shift * (sum_all + 0.5 * n_all * shift);
    }
    if (cfg.record_trace) result.trace.push_back(obj);
  }

  double shift = stats::mean(theta);
  for (double& t : theta) t -= shift;
  for (double& b : beta) b -= shift;
  result.objective = objective(theta, beta, obs, cfg.prior_precision);
  return result;
}

inline std::vector<Observation> observations_from_matrix(
    const std::vector<std::vector<std::int8_t>>& matrix) {
  std::vector<Observation> obs;
  for (std::size_t j = 0; j < matrix.size(); ++j)
    for (std::size_t i = 0; i < matrix[j].size(); ++i)
      obs.push_back({j, i, static_cast<int>(matrix[j][i])});
  return obs;
}

// ---------------------------------------------------------------------------
// Artifact writers
// ---------------------------------------------------------------------------

namespace detail {

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

inline void write_beta_csv(const std::filesystem::path& path,
                           const std::vector<std::string>& question_ids,
                           const std::vector<double>& beta) {
  if (question_ids.size() != beta.size())
    throw ValidationError("beta csv: id and value counts differ");
  std::string out = "question_id,beta\n";
  for (std::size_t i = 0; i < beta.size(); ++i)
    out += question_ids[i] + "," + detail::fmt_double(beta[i]) + "\n";
  write_text_file(path, out);
}

inline void write_theta_csv(const std::filesystem::path& path,
                            const std::vector<std::string>& student_ids,
                            const std::vector<double>& theta) {
  if (student_ids.size() != theta.size())
    throw ValidationError("theta csv: id and value counts differ");
  std::string out = "student_id,theta\n";
  for (std::size_t j = 0; j < theta.size(); ++j)
    out += student_ids[j] + "," + detail::fmt_double(theta[j]) + "\n";
  write_text_file(path, out);
}

inline std::vector<std::pair<std::string, double>> read_value_csv(
    const std::filesystem::path& path, const std::string& id_column,
    const std::string& value_column) {
  std::string text = read_text_file(path);
  std::vector<std::pair<std::string, double>> rows;
  std::size_t pos = 0;
  bool first = true;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) nl = text.size();
    std::string line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (line.empty()) continue;
    std::size_t comma = line.find(',');
    if (comma == std::string::npos)
      throw ValidationError(path.string() + ":" + std::to_string(line_no) +
                            ": expected two columns");
    std::string a = line.substr(0, comma), b = line.substr(comma + 1);
    if (first) {
      if (a != id_column || b != value_column)
        throw ValidationError(path.string() + ": unexpected header '" + line + "'");
      first = false;
      continue;
    }
    rows.emplace_back(a, parse_double(b, value_column));
  }
  if (first) throw ValidationError(path.string() + ": empty file");
  return rows;
}

inline nlohmann::json fit_summary_json(const FitResult& result, std::size_t n_obs) {
  nlohmann::json j;
  j["n_students"] = result.theta.size();
  j["n_questions"] = result.beta.size();
  j["n_observations"] = n_obs;
  j["converged"] = result.converged;
  j["iterations"] = result.iterations;
  j["objective"] = result.objective;
  j["theta_mean"] = stats::mean(result.theta);
  j["beta_mean"] = stats::mean(result.beta);
  j["beta_sd"] = stats::stddev(result.beta);
  return j;
}

}  // namespace psychoforge::irt
