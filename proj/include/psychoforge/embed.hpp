#pragma once

#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "psychoforge/common.hpp"
#include "psychoforge/corpus.hpp"

namespace psychoforge::embed {

struct EmbeddingSet {
  std::map<std::string, std::vector<double>> by_id;
  std::size_t dim = 0;
  std::size_t duplicates_dropped = 0;

  const std::vector<double>* find(const std::string& id) const {
    auto it = by_id.find(id);
    return it == by_id.end() ? nullptr : &it->second;
  }
};

// Per-option rows use this id form; bare question_id rows hold the combined
// question-text vector.
inline std::string option_key(const std::string& question_id, std::size_t k) {
  return question_id + "#option_" + std::to_string(k);
}

inline EmbeddingSet load_embeddings(const std::filesystem::path& path,
                                    std::optional<std::size_t> expected_dim = {}) {
  std::vector<std::string> lines = read_lines(path);
  EmbeddingSet set;
  if (expected_dim) set.dim = *expected_dim;
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    if (trim(lines[ln]).empty()) continue;
    std::string where = path.string() + ":" + std::to_string(ln + 1);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(lines[ln]);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(where + ": invalid JSON: " + e.what());
    }
    std::string id;
    std::vector<double> vec;
    try {
      id = j.at("id").get<std::string>();
      vec = j.at("vector").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(where + ": bad field: " + e.what());
    }
    if (vec.empty()) throw ValidationError(where + ": empty vector for id '" + id + "'");
    for (double v : vec)
      if (!std::isfinite(v))
        throw ValidationError(where + ": non-finite value for id '" + id + "'");
    if (set.dim == 0) set.dim = vec.size();
    if (vec.size() != set.dim)
      throw ValidationError(where + ": id '" + id + "' has dimension " +
                            std::to_string(vec.size()) + ", expected " +
                            std::to_string(set.dim));
    if (!set.by_id.emplace(id, std::move(vec)).second) ++set.duplicates_dropped;
  }
  return set;
}

inline void save_embeddings(const EmbeddingSet& set, const std::filesystem::path& path) {
  std::string out;
  for (const auto& [id, vec] : set.by_id) {
    nlohmann::json j;
    j["id"] = id;
    j["vector"] = vec;
    out += j.dump();
    out += '\n';
  }
  write_text_file(path, out);
}

inline std::vector<double> l2_normalize(const std::vector<double>& v,
                                        const std::string& what = "vector") {
  double norm2 = 0.0;
  for (double x : v) norm2 += x * x;
  if (norm2 <= 0.0)
    throw ValidationError("cannot L2-normalize zero " + what);
  double inv = 1.0 / std::sqrt(norm2);
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] * inv;
  return out;
}

inline EmbeddingSet normalize_all(const EmbeddingSet& set) {
  EmbeddingSet out;
  out.dim = set.dim;
  out.duplicates_dropped = set.duplicates_dropped;
  for (const auto& [id, vec] : set.by_id)
    out.by_id.emplace(id, l2_normalize(vec, "vector for id '" + id + "'"));
  return out;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::logic_error("dot: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double cosine_similarity(const std::vector<double>& a,
                                const std::vector<double>& b) {
  double na = std::sqrt(dot(a, a)), nb = std::sqrt(dot(b, b));
  if (na <= 0.0 || nb <= 0.0)
    throw ValidationError("cosine similarity undefined for zero vector");
  return dot(a, b) / (na * nb);
}

inline double euclidean_distance(const std::vector<double>& a,
                                 const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::logic_error("distance: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

struct SemanticOptionMetrics {
  double cos_sim_mean_correct_vs_distractors = 0.0;
  double mean_distractor_pairwise_distance = 0.0;
};

// Neutral values stand in when per-option vectors are absent (the caller
// decides that); with a single distractor there are no pairs, so the distance
// falls back to the same neutral 1.0.
inline constexpr double kNeutralCosine = 0.5;
inline constexpr double kNeutralDistance = 1.0;

inline SemanticOptionMetrics semantic_option_metrics(
    const std::vector<double>& correct,
    const std::vector<std::vector<double>>& distractors) {
  if (distractors.empty())
    throw ValidationError("semantic_option_metrics: need at least one distractor");
  SemanticOptionMetrics m;
  double cs = 0.0;
  for (const std::vector<double>& d : distractors) cs += cosine_similarity(correct, d);
  m.cos_sim_mean_correct_vs_distractors = cs / static_cast<double>(distractors.size());
  if (distractors.size() < 2) {
    m.mean_distractor_pairwise_distance = kNeutralDistance;
    return m;
  }
  double ds = 0.0;
  std::size_t pairs = 0;
  for (std::size_t a = 0; a < distractors.size(); ++a) {
    for (std::size_t b = a + 1; b < distractors.size(); ++b) {
      ds += euclidean_distance(distractors[a], distractors[b]);
      ++pairs;
    }
  }
  m.mean_distractor_pairwise_distance = ds / static_cast<double>(pairs);
  return m;
}

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::vector<double> embed(const std::string& text) = 0;
  virtual std::size_t dim() const = 0;
};

// Deterministic stub: unit vector seeded by the text bytes. Carries no
// semantic signal by construction, which is exactly what the synthetic
// ablation experiments need from it.
class HashEmbeddingProvider : public EmbeddingProvider {
 public:
  HashEmbeddingProvider(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
    if (dim_ == 0) throw ValidationError("embedding dimension must be positive");
  }

  std::vector<double> embed(const std::string& text) override {
    Rng rng(derive_seed(seed_, text));
    std::vector<double> v(dim_);
    for (double& x : v) x = rng.normal(0.0, 1.0);
    return l2_normalize(v, "stub embedding");
  }

  std::size_t dim() const override { return dim_; }

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

// The text fed upstream to real embedding models, reproduced here so the stub
// and any user tooling agree on bytes.
inline std::string combined_question_text(const corpus::QuestionRecord& q) {
  return "Question: " + q.statement +
         "\nCorrect Answer: " + q.options[static_cast<std::size_t>(q.correct_index)];
}

}  // namespace psychoforge::embed
