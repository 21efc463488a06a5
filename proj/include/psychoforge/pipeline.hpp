#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include <json.hpp>

#include "psychoforge/common.hpp"
#include "psychoforge/corpus.hpp"
#include "psychoforge/embed.hpp"
#include "psychoforge/evalharness.hpp"
#include "psychoforge/features.hpp"
#include "psychoforge/irt.hpp"
#include "psychoforge/neuralnet.hpp"
#include "psychoforge/pedafeat.hpp"
#include "psychoforge/synth.hpp"

namespace psychoforge::pipeline {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kTimestamp = "1970-01-01T00:00:00Z";

// ---------------------------------------------------------------------------
// Config file (INI-style sections; full-line comments with '#' or ';')
// ---------------------------------------------------------------------------

namespace detail {

struct IniFile {
  std::map<std::string, std::map<std::string, std::string>> sections;
};

inline std::string join_problems(const std::string& head,
                                 const std::vector<std::string>& problems) {
  std::string msg = head;
  for (const std::string& p : problems) {
    msg += "\n  - ";
    msg += p;
  }
  return msg;
}

inline IniFile parse_ini(const std::string& text, const std::string& where) {
  IniFile ini;
  std::string section;
  std::vector<std::string> problems;
  std::vector<std::string> lines = split(text, '\n');
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string line = trim(lines[i]);
    std::string at = "line " + std::to_string(i + 1);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        problems.push_back(at + ": malformed section header '" + line + "'");
        continue;
      }
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) {
        problems.push_back(at + ": empty section name");
        continue;
      }
      ini.sections[section];
      continue;
    }
    std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      problems.push_back(at + ": expected 'key = value', got '" + line + "'");
      continue;
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      problems.push_back(at + ": empty key");
      continue;
    }
    if (section.empty()) {
      problems.push_back(at + ": key '" + key + "' appears before any [section]");
      continue;
    }
    if (!ini.sections[section].emplace(key, value).second)
      problems.push_back(at + ": duplicate key '" + key + "' in [" + section + "]");
  }
  if (!problems.empty())
    throw ValidationError(join_problems(where + ": malformed config", problems));
  return ini;
}

}  // namespace detail

struct Config {
  std::uint64_t seed = 0;
  std::filesystem::path out_dir = "out";

  int synthetic_students = 250;
  int synthetic_questions = 400;
  double synthetic_density = 0.4;

  // When questions/responses are set the simulate stage ingests those files
  // instead of generating a corpus (and writes no truth.json).
  std::filesystem::path questions_path;
  std::filesystem::path responses_path;
  std::filesystem::path embeddings_path;  // file-backed embeddings; else hash stub
  std::filesystem::path cache_path;       // LLM run cache; default <out>/llm_runs.jsonl

  std::array<double, 3> split_ratios{0.7, 0.15, 0.15};

  std::string provider = "mock";  // "mock" | "http"
  std::string model_tag = "mock-1";
  std::string endpoint;
  double temperature = 0.0;
  int timeout_seconds = 60;
  int max_in_flight = 4;
  int retry_attempts = 3;

  std::string abstract_source = "llm";
  std::size_t embedding_dim = 16;  // 0 disables the text pathway

  nn::TrainConfig train;  // .seed is ignored; stages derive from the root seed
  irt::FitConfig fit;
  std::vector<double> efficiency_fractions = evalharness::EfficiencyConfig{}.fractions;
  int efficiency_repetitions = 5;

  std::map<std::string, int> llm_runs;  // per-feature run-count overrides

  std::filesystem::path cache_file() const {
    return cache_path.empty() ? out_dir / "llm_runs.jsonl" : cache_path;
  }
};

namespace detail {

struct KeyReader {
  const IniFile& ini;
  std::vector<std::string>& problems;
  std::set<std::string> consumed;

  const std::string* find(const std::string& sec, const std::string& key) {
    consumed.insert(sec + "\x1f" + key);
    auto s = ini.sections.find(sec);
    if (s == ini.sections.end()) return nullptr;
    auto k = s->second.find(key);
    return k == s->second.end() ? nullptr : &k->second;
  }

  void fail(const std::string& sec, const std::string& key, const std::string& what) {
    problems.push_back("[" + sec + "] " + key + ": " + what);
  }

  void str(const std::string& sec, const std::string& key, std::string& out) {
    if (const std::string* v = find(sec, key)) out = *v;
  }

  bool path(const std::string& sec, const std::string& key,
            std::filesystem::path& out) {
    if (const std::string* v = find(sec, key)) {
      out = *v;
      return true;
    }
    return false;
  }

  void u64(const std::string& sec, const std::string& key, std::uint64_t& out) {
    const std::string* v = find(sec, key);
    if (!v) return;
    try {
      std::size_t used = 0;
      unsigned long long parsed = std::stoull(*v, &used);
      if (used != v->size()) throw std::invalid_argument("trailing characters");
      out = parsed;
    } catch (const std::exception&) {
      fail(sec, key, "not an unsigned integer: '" + *v + "'");
    }
  }

  template <class T>
  void integer(const std::string& sec, const std::string& key, T& out) {
    const std::string* v = find(sec, key);
    if (!v) return;
    try {
      long long parsed = parse_int(*v, "[" + sec + "] " + key);
      if (std::is_unsigned_v<T> && parsed < 0) {
        fail(sec, key, "must not be negative");
        return;
      }
      out = static_cast<T>(parsed);
    } catch (const ValidationError& e) {
      problems.push_back(e.what());
    }
  }

  void real(const std::string& sec, const std::string& key, double& out) {
    const std::string* v = find(sec, key);
    if (!v) return;
    try {
      out = parse_double(*v, "[" + sec + "] " + key);
    } catch (const ValidationError& e) {
      problems.push_back(e.what());
    }
  }
};

}  // namespace detail

inline Config load_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path))
    throw ValidationError("config file not found: " + path.string());
  detail::IniFile ini = detail::parse_ini(read_text_file(path), path.string());

  Config c;
  std::vector<std::string> problems;
  detail::KeyReader r{ini, problems, {}};

  r.u64("run", "seed", c.seed);
  std::filesystem::path out_dir;
  if (r.path("run", "out_dir", out_dir)) c.out_dir = out_dir;

  r.integer("synthetic", "students", c.synthetic_students);
  r.integer("synthetic", "questions", c.synthetic_questions);
  r.real("synthetic", "density", c.synthetic_density);

  r.path("paths", "questions", c.questions_path);
  r.path("paths", "responses", c.responses_path);
  r.path("paths", "embeddings", c.embeddings_path);
  r.path("paths", "cache", c.cache_path);

  r.real("split", "train", c.split_ratios[0]);
  r.real("split", "validation", c.split_ratios[1]);
  r.real("split", "holdout", c.split_ratios[2]);

  r.str("provider", "kind", c.provider);
  r.str("provider", "model", c.model_tag);
  r.str("provider", "endpoint", c.endpoint);
  r.real("provider", "temperature", c.temperature);
  r.integer("provider", "timeout_seconds", c.timeout_seconds);
  r.integer("provider", "max_in_flight", c.max_in_flight);
  r.integer("provider", "attempts", c.retry_attempts);

  r.str("features", "abstract_source", c.abstract_source);
  long long embedding_dim = static_cast<long long>(c.embedding_dim);
  bool embedding_dim_set = r.find("features", "embedding_dim") != nullptr;
  r.integer("features", "embedding_dim", embedding_dim);

  r.integer("train", "epochs", c.train.epochs);
  r.integer("train", "patience", c.train.patience);
  r.integer("train", "batch_size", c.train.batch_size);
  r.real("train", "learning_rate", c.train.learning_rate);
  r.real("train", "dropout", c.train.dropout);
  r.real("train", "l2", c.train.l2);
  r.integer("train", "embedding_dim", c.train.emb_dim);
  r.integer("train", "hidden1", c.train.hidden1);
  r.integer("train", "hidden2", c.train.hidden2);

  r.integer("fit", "max_iterations", c.fit.max_iterations);
  r.real("fit", "tolerance", c.fit.tolerance);
  r.real("fit", "prior_precision", c.fit.prior_precision);
  r.real("fit", "bound", c.fit.bound);

  r.integer("efficiency", "repetitions", c.efficiency_repetitions);
  if (const std::string* v = r.find("efficiency", "fractions")) {
    std::vector<double> fs;
    bool ok = true;
    for (const std::string& part : split(*v, ',')) {
      std::string t = trim(part);
      if (t.empty()) {
        ok = false;
        break;
      }
      try {
        fs.push_back(parse_double(t, "[efficiency] fractions"));
      } catch (const ValidationError&) {
        ok = false;
        break;
      }
    }
    if (!ok || fs.empty())
      r.fail("efficiency", "fractions", "expected a comma-separated list of numbers");
    else
      c.efficiency_fractions = std::move(fs);
  }

  if (auto s = ini.sections.find("llm"); s != ini.sections.end()) {
    for (const auto& [key, value] : s->second) {
      r.consumed.insert("llm\x1f" + key);
      if (key.rfind("runs_", 0) != 0) {
        r.fail("llm", key, "unknown key (expected runs_<feature>)");
        continue;
      }
      std::string name = key.substr(5);
      try {
        pedafeat::feature_from_name(name);
      } catch (const ValidationError& e) {
        r.fail("llm", key, e.what());
        continue;
      }
      try {
        long long n = parse_int(value, "[llm] " + key);
        if (n < 1) {
          r.fail("llm", key, "run count must be >= 1");
          continue;
        }
        c.llm_runs[name] = static_cast<int>(n);
      } catch (const ValidationError& e) {
        problems.push_back(e.what());
      }
    }
  }

  static const std::set<std::string> known{"run",      "synthetic", "paths",
                                           "split",    "provider",  "features",
                                           "train",    "fit",       "efficiency",
                                           "llm"};
  for (const auto& [sec, keys] : ini.sections) {
    if (!known.count(sec)) {
      problems.push_back("[" + sec + "]: unknown section");
      continue;
    }
    for (const auto& [key, value] : keys)
      if (!r.consumed.count(sec + "\x1f" + key))
        problems.push_back("[" + sec + "] " + key + ": unknown key");
  }

  auto check = [&](bool ok, const std::string& msg) {
    if (!ok) problems.push_back(msg);
  };
  check(c.synthetic_students >= 2, "[synthetic] students: must be >= 2");
  check(c.synthetic_questions >= 2, "[synthetic] questions: must be >= 2");
  check(c.synthetic_density > 0.0 && c.synthetic_density <= 1.0,
        "[synthetic] density: must be in (0, 1]");
  check(c.questions_path.empty() == c.responses_path.empty(),
        "[paths]: questions and responses must be set together");
  for (double ratio : c.split_ratios)
    check(ratio >= 0.0 && ratio <= 1.0, "[split]: each ratio must be in [0, 1]");
  check(std::abs(c.split_ratios[0] + c.split_ratios[1] + c.split_ratios[2] - 1.0) <=
            1e-9,
        "[split]: ratios must sum to 1");
  check(c.split_ratios[0] > 0.0, "[split] train: must be positive");
  check(c.split_ratios[1] > 0.0, "[split] validation: must be positive");
  check(c.provider == "mock" || c.provider == "http",
        "[provider] kind: must be 'mock' or 'http'");
  check(c.provider != "http" || !c.endpoint.empty(),
        "[provider] endpoint: required when kind = http");
  check(c.temperature >= 0.0, "[provider] temperature: must be >= 0");
  check(c.timeout_seconds >= 1, "[provider] timeout_seconds: must be >= 1");
  check(c.max_in_flight >= 1, "[provider] max_in_flight: must be >= 1");
  check(c.retry_attempts >= 1, "[provider] attempts: must be >= 1");
  check(c.abstract_source == "llm" || c.abstract_source == "textfeat",
        "[features] abstract_source: must be 'llm' or 'textfeat'");
  check(embedding_dim >= 0, "[features] embedding_dim: must be >= 0");
  if (embedding_dim >= 0) c.embedding_dim = static_cast<std::size_t>(embedding_dim);
  check(!(embedding_dim_set && !c.embeddings_path.empty()),
        "[features] embedding_dim: conflicts with [paths] embeddings (the file fixes "
        "the dimension)");
  check(c.train.epochs >= 1, "[train] epochs: must be >= 1");
  check(c.train.patience >= 1, "[train] patience: must be >= 1");
  check(c.train.batch_size >= 1, "[train] batch_size: must be >= 1");
  check(c.train.learning_rate > 0.0, "[train] learning_rate: must be positive");
  check(c.train.dropout >= 0.0 && c.train.dropout < 1.0,
        "[train] dropout: must be in [0, 1)");
  check(c.train.l2 >= 0.0, "[train] l2: must be >= 0");
  check(c.train.emb_dim >= 1, "[train] embedding_dim: must be >= 1");
  check(c.train.hidden1 >= 1, "[train] hidden1: must be >= 1");
  check(c.train.hidden2 >= 1, "[train] hidden2: must be >= 1");
  check(c.fit.max_iterations >= 1, "[fit] max_iterations: must be >= 1");
  check(c.fit.tolerance > 0.0, "[fit] tolerance: must be positive");
  check(c.fit.prior_precision >= 0.0, "[fit] prior_precision: must be >= 0");
  check(c.fit.bound > 0.0, "[fit] bound: must be positive");
  check(c.efficiency_repetitions >= 1, "[efficiency] repetitions: must be >= 1");
  check(std::is_sorted(c.efficiency_fractions.begin(), c.efficiency_fractions.end()),
        "[efficiency] fractions: must be ascending");
  for (double f : c.efficiency_fractions)
    check(f > 0.0 && f <= 1.0, "[efficiency] fractions: values must be in (0, 1]");

  if (!problems.empty())
    throw ValidationError(
        detail::join_problems("invalid config " + path.string() + ":", problems));
  return c;
}

// Canonical resolved-config view; out_dir is location, not content, so it is
// excluded and two runs into different directories stay byte-comparable.
inline nlohmann::json config_to_json(const Config& c) {
  nlohmann::json j;
  j["version"] = kVersion;
  j["run"]["seed"] = c.seed;
  j["synthetic"]["students"] = c.synthetic_students;
  j["synthetic"]["questions"] = c.synthetic_questions;
  j["synthetic"]["density"] = c.synthetic_density;
  j["paths"]["questions"] = c.questions_path.generic_string();
  j["paths"]["responses"] = c.responses_path.generic_string();
  j["paths"]["embeddings"] = c.embeddings_path.generic_string();
  j["paths"]["cache"] = c.cache_path.generic_string();
  j["split"]["train"] = c.split_ratios[0];
  j["split"]["validation"] = c.split_ratios[1];
  j["split"]["holdout"] = c.split_ratios[2];
  j["provider"]["kind"] = c.provider;
  j["provider"]["model"] = c.model_tag;
  j["provider"]["endpoint"] = c.endpoint;
  j["provider"]["temperature"] = c.temperature;
  j["provider"]["timeout_seconds"] = c.timeout_seconds;
  j["provider"]["max_in_flight"] = c.max_in_flight;
  j["provider"]["attempts"] = c.retry_attempts;
  j["features"]["abstract_source"] = c.abstract_source;
  j["features"]["embedding_dim"] = c.embedding_dim;
  j["train"]["epochs"] = c.train.epochs;
  j["train"]["patience"] = c.train.patience;
  j["train"]["batch_size"] = c.train.batch_size;
  j["train"]["learning_rate"] = c.train.learning_rate;
  j["train"]["dropout"] = c.train.dropout;
  j["train"]["l2"] = c.train.l2;
  j["train"]["embedding_dim"] = c.train.emb_dim;
  j["train"]["hidden1"] = c.train.hidden1;
  j["train"]["hidden2"] = c.train.hidden2;
  j["fit"]["max_iterations"] = c.fit.max_iterations;
  j["fit"]["tolerance"] = c.fit.tolerance;
  j["fit"]["prior_precision"] = c.fit.prior_precision;
  j["fit"]["bound"] = c.fit.bound;
  j["efficiency"]["repetitions"] = c.efficiency_repetitions;
  j["efficiency"]["fractions"] = c.efficiency_fractions;
  j["llm_runs"] = c.llm_runs;
  return j;
}

// ---------------------------------------------------------------------------
// Artifact layout and stage manifests
// ---------------------------------------------------------------------------

struct Artifacts {
  std::filesystem::path dir;

  explicit Artifacts(const Config& c) : dir(c.out_dir) {}

  std::filesystem::path config_json() const { return dir / "config.json"; }
  std::filesystem::path questions() const { return dir / "questions.jsonl"; }
  std::filesystem::path responses() const { return dir / "responses.csv"; }
  std::filesystem::path truth() const { return dir / "truth.json"; }
  std::filesystem::path split() const { return dir / "split.csv"; }
  std::filesystem::path reference_betas() const { return dir / "reference_betas.csv"; }
  std::filesystem::path reference_thetas() const { return dir / "reference_thetas.csv"; }
  std::filesystem::path reference_fit() const { return dir / "reference_fit.json"; }
  std::filesystem::path llm_aggregates() const { return dir / "llm_aggregates.jsonl"; }
  std::filesystem::path embeddings() const { return dir / "embeddings.jsonl"; }
  std::filesystem::path features() const { return dir / "features.csv"; }
  std::filesystem::path model() const { return dir / "model.json"; }
  std::filesystem::path history() const { return dir / "history.csv"; }
  std::filesystem::path predictions() const { return dir / "predictions.csv"; }
  std::filesystem::path betas() const { return dir / "betas.csv"; }
  std::filesystem::path thetas() const { return dir / "thetas.csv"; }
  std::filesystem::path fit() const { return dir / "fit.json"; }
  std::filesystem::path metrics() const { return dir / "metrics.json"; }
  std::filesystem::path efficiency() const { return dir / "efficiency.json"; }
  std::filesystem::path ablation() const { return dir / "ablation.json"; }
  std::filesystem::path manifest(const std::string& stage) const {
    return dir / (stage + ".manifest.json");
  }
};

namespace detail {

inline nlohmann::json hash_table(const std::vector<std::filesystem::path>& files) {
  nlohmann::json o = nlohmann::json::object();
  for (const std::filesystem::path& p : files)
    o[p.filename().string()] = hash_hex(file_content_hash(p));
  return o;
}

inline void write_manifest(const Config& cfg, const std::string& stage,
                           const std::vector<std::filesystem::path>& inputs,
                           const std::vector<std::filesystem::path>& outputs,
                           nlohmann::json counts = {}) {
  nlohmann::json j;
  j["stage"] = stage;
  j["version"] = kVersion;
  j["seed"] = cfg.seed;
  j["config_hash"] = hash_hex(fnv1a64(config_to_json(cfg).dump()));
  j["timestamp"] = kTimestamp;
  j["inputs"] = hash_table(inputs);
  j["outputs"] = hash_table(outputs);
  if (!counts.is_null()) j["counts"] = counts;
  write_text_file(Artifacts(cfg).manifest(stage), j.dump(2) + "\n");
}

inline void require_artifact(const std::filesystem::path& p, const std::string& stage,
                             const std::string& producer) {
  if (!std::filesystem::exists(p))
    throw ValidationError("stage '" + stage + "': missing input '" +
                          p.filename().string() + "'; run '" + producer + "' first");
}

inline void ensure_out(const Config& cfg) {
  std::filesystem::create_directories(cfg.out_dir);
  write_text_file(Artifacts(cfg).config_json(), config_to_json(cfg).dump(2) + "\n");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Canonical index spaces: questions in questions.jsonl order, students sorted.
// Duplicate (student, question) responses keep the first occurrence.
// ---------------------------------------------------------------------------

struct CorpusView {
  std::vector<corpus::QuestionRecord> questions;
  std::vector<std::string> question_ids;
  std::map<std::string, std::size_t> question_index;
  std::vector<corpus::ResponseRecord> responses;
  std::size_t duplicates_dropped = 0;
  std::vector<std::string> student_ids;
  std::map<std::string, std::size_t> student_index;

  std::vector<irt::Observation> observations() const {
    std::vector<irt::Observation> out;
    out.reserve(responses.size());
    for (const corpus::ResponseRecord& r : responses)
      out.push_back({student_index.at(r.student_id), question_index.at(r.question_id),
                     r.correct});
    return out;
  }
};

namespace detail {

inline CorpusView load_view(const Config& cfg, const std::string& stage) {
  Artifacts a(cfg);
  require_artifact(a.questions(), stage, "simulate");
  require_artifact(a.responses(), stage, "simulate");

  CorpusView v;
  v.questions = corpus::load_questions(a.questions());
  for (std::size_t i = 0; i < v.questions.size(); ++i) {
    v.question_ids.push_back(v.questions[i].question_id);
    v.question_index[v.questions[i].question_id] = i;
  }

  std::set<std::string> students;
  std::set<std::pair<std::string, std::string>> seen;
  for (corpus::ResponseRecord& r : corpus::load_responses(a.responses())) {
    if (!v.question_index.count(r.question_id))
      throw ValidationError("responses reference unknown question '" + r.question_id +
                            "'");
    if (!seen.emplace(r.student_id, r.question_id).second) {
      ++v.duplicates_dropped;
      continue;
    }
    students.insert(r.student_id);
    v.responses.push_back(std::move(r));
  }
  if (v.responses.empty()) throw ValidationError("responses file has no usable rows");
  v.student_ids.assign(students.begin(), students.end());
  for (std::size_t j = 0; j < v.student_ids.size(); ++j)
    v.student_index[v.student_ids[j]] = j;
  return v;
}

inline std::map<std::string, double> align_params(
    const std::filesystem::path& path, const std::string& id_col,
    const std::string& val_col, const std::vector<std::string>& expected_ids) {
  std::map<std::string, double> out;
  for (auto& [id, value] : irt::read_value_csv(path, id_col, val_col))
    out[id] = value;
  for (const std::string& id : expected_ids)
    if (!out.count(id))
      throw ValidationError(path.string() + ": missing " + id_col + " '" + id + "'");
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Stages
// ---------------------------------------------------------------------------

inline void run_simulate(const Config& cfg) {
  detail::ensure_out(cfg);
  Artifacts a(cfg);
  std::vector<std::filesystem::path> inputs, outputs;
  nlohmann::json counts;

  if (!cfg.questions_path.empty()) {
    for (const std::filesystem::path* p : {&cfg.questions_path, &cfg.responses_path})
      if (!std::filesystem::exists(*p))
        throw ValidationError("config [paths]: file not found: " + p->string());
    std::vector<corpus::QuestionRecord> qs = corpus::load_questions(cfg.questions_path);
    std::vector<corpus::ResponseRecord> rs = corpus::load_responses(cfg.responses_path);
    std::set<std::string> qids;
    for (const corpus::QuestionRecord& q : qs) qids.insert(q.question_id);
    for (const corpus::ResponseRecord& r : rs)
      if (!qids.count(r.question_id))
        throw ValidationError(cfg.responses_path.string() +
                              ": response references unknown question '" +
                              r.question_id + "'");
    corpus::save_questions(qs, a.questions());
    corpus::save_responses(rs, a.responses());
    inputs = {cfg.questions_path, cfg.responses_path};
    counts["questions"] = qs.size();
    counts["responses"] = rs.size();
  } else {
    synth::SyntheticConfig sc;
    sc.n_students = cfg.synthetic_students;
    sc.n_questions = cfg.synthetic_questions;
    sc.density = cfg.synthetic_density;
    sc.seed = derive_seed(cfg.seed, "simulate");
    synth::SyntheticData data = synth::generate_synthetic_corpus(sc);
    corpus::save_questions(data.questions, a.questions());
    corpus::save_responses(data.responses, a.responses());
    nlohmann::json truth;
    for (std::size_t j = 0; j < data.student_ids.size(); ++j)
      truth["theta"][data.student_ids[j]] = data.true_theta[j];
    for (std::size_t i = 0; i < data.questions.size(); ++i)
      truth["beta"][data.questions[i].question_id] = data.true_beta[i];
    write_text_file(a.truth(), truth.dump(2) + "\n");
    outputs.push_back(a.truth());
    counts["questions"] = data.questions.size();
    counts["responses"] = data.responses.size();
    counts["students"] = data.student_ids.size();
  }
  outputs.push_back(a.questions());
  outputs.push_back(a.responses());
  detail::write_manifest(cfg, "simulate", inputs, outputs, counts);
}

inline void run_split(const Config& cfg) {
  detail::ensure_out(cfg);
  Artifacts a(cfg);
  CorpusView v = detail::load_view(cfg, "split");

  std::vector<irt::Observation> obs = v.observations();
  irt::FitResult ref =
      irt::fit_1pl(v.student_ids.size(), v.question_ids.size(), obs, cfg.fit);

  std::map<std::string, double> difficulty;
  std::map<std::string, double> mean_correct;
  std::vector<double> sums(v.question_ids.size(), 0.0);
  std::vector<std::size_t> hits(v.question_ids.size(), 0);
  for (const irt::Observation& o : obs) {
    sums[o.question] += o.correct;
    ++hits[o.question];
  }
  for (std::size_t i = 0; i < v.question_ids.size(); ++i) {
    difficulty[v.question_ids[i]] = ref.beta[i];
    mean_correct[v.question_ids[i]] =
        hits[i] ? sums[i] / static_cast<double>(hits[i]) : 0.5;
  }

  corpus::SplitAssignment split = corpus::stratified_split(
      v.questions, difficulty, mean_correct, cfg.split_ratios,
      derive_seed(cfg.seed, "split"));
  corpus::save_split(split, a.split());
  irt::write_beta_csv(a.reference_betas(), v.question_ids, ref.beta);
  irt::write_theta_csv(a.reference_thetas(), v.student_ids, ref.theta);
  write_text_file(a.reference_fit(), irt::fit_summary_json(ref, obs.size()).dump(2) + "\n");

  detail::write_manifest(cfg, "split", {a.questions(), a.responses()},
                         {a.split(), a.reference_betas(), a.reference_thetas(),
                          a.reference_fit()});
}

inline void run_llm_extract(const Config& cfg, pedafeat::LlmProvider& provider) {
  detail::ensure_out(cfg);
  Artifacts a(cfg);
  detail::require_artifact(a.questions(), "llm_extract", "simulate");
  std::vector<corpus::QuestionRecord> qs = corpus::load_questions(a.questions());

  pedafeat::RunCache cache(cfg.cache_file());
  pedafeat::ExtractOptions opts;
  opts.settings.model_tag = cfg.model_tag;
  opts.settings.temperature = cfg.temperature;
  opts.run_overrides = cfg.llm_runs;
  opts.max_in_flight = cfg.max_in_flight;
  opts.cache = &cache;

  pedafeat::AggregateTable agg;
  std::vector<pedafeat::LlmRunRecord> records;
  for (const corpus::QuestionRecord& q : qs) {
    auto [bundle, recs] = pedafeat::extract_bundle(provider, q, opts);
    for (const auto& [name, value] : bundle.by_feature) agg.put(q.question_id, name, value);
    for (pedafeat::LlmRunRecord& rec : recs) records.push_back(std::move(rec));
  }
  agg.save(a.llm_aggregates());

  // The default cache lives in the out directory and is rewritten in canonical
  // order so reruns are byte-identical; a user-supplied cache path stays
  // append-only because it may be shared across corpora.
  if (cfg.cache_path.empty()) {
    std::string out;
    for (const pedafeat::LlmRunRecord& rec : records) {
      out += pedafeat::run_record_to_json(rec).dump();
      out += '\n';
    }
    write_text_file(cfg.cache_file(), out);
  }

  detail::write_manifest(cfg, "llm_extract", {a.questions()},
                         {cfg.cache_file(), a.llm_aggregates()});
}

inline void run_features(const Config& cfg) {
  detail::ensure_out(cfg);
  Artifacts a(cfg);
  detail::require_artifact(a.questions(), "features", "simulate");
  detail::require_artifact(a.llm_aggregates(), "features", "llm_extract");

  std::vector<corpus::QuestionRecord> qs = corpus::load_questions(a.questions());
  pedafeat::AggregateTable agg = pedafeat::AggregateTable::load(a.llm_aggregates());

  std::vector<std::filesystem::path> inputs{a.questions(), a.llm_aggregates()};
  embed::EmbeddingSet set;
  if (!cfg.embeddings_path.empty()) {
    if (!std::filesystem::exists(cfg.embeddings_path))
      throw ValidationError("config [paths] embeddings: file not found: " +
                            cfg.embeddings_path.string());
    set = embed::load_embeddings(cfg.embeddings_path);
    inputs.push_back(cfg.embeddings_path);
  } else if (cfg.embedding_dim > 0) {
    embed::HashEmbeddingProvider stub(cfg.embedding_dim, derive_seed(cfg.seed, "embed"));
    for (const corpus::QuestionRecord& q : qs) {
      set.by_id[q.question_id] = stub.embed(embed::combined_question_text(q));
      for (std::size_t k = 0; k < q.options.size(); ++k)
        set.by_id[embed::option_key(q.question_id, k)] = stub.embed(q.options[k]);
    }
    set.dim = cfg.embedding_dim;
  }

  std::vector<std::filesystem::path> outputs;
  if (set.dim > 0) {
    embed::save_embeddings(set, a.embeddings());
    outputs.push_back(a.embeddings());
  }

  features::AssembleOptions opts;
  opts.abstract_source = cfg.abstract_source;
  features::FeatureTable table =
      features::assemble_features(qs, set.dim > 0 ? &set : nullptr, &agg, opts);
  features::save_feature_csv(table, a.features());
  outputs.push_back(a.features());

  detail::write_manifest(cfg, "features", inputs, outputs);
}

namespace detail {

struct ModelBundle {
  nn::Model model;
  features::Standardizer standardizer;
  std::vector<std::string> feature_columns;
  std::string abstract_source;
  std::size_t text_dim = 0;
};

inline void save_bundle(const ModelBundle& b, const std::filesystem::path& path) {
  nlohmann::json j;
  j["version"] = kVersion;
  j["abstract_source"] = b.abstract_source;
  j["feature_columns"] = b.feature_columns;
  j["standardizer"]["mean"] = b.standardizer.mean;
  j["standardizer"]["stddev"] = b.standardizer.stddev;
  j["text_dim"] = b.text_dim;
  j["network"] = nn::model_to_json(b.model);
  write_text_file(path, j.dump(2) + "\n");
}

inline ModelBundle load_bundle(const std::filesystem::path& path) {
  nlohmann::json j = nlohmann::json::parse(read_text_file(path), nullptr, false);
  if (j.is_discarded())
    throw ValidationError(path.string() + ": malformed model bundle JSON");
  ModelBundle b;
  try {
    b.model = nn::model_from_json(j.at("network"));
    b.standardizer.mean = j.at("standardizer").at("mean").get<std::vector<double>>();
    b.standardizer.stddev =
        j.at("standardizer").at("stddev").get<std::vector<double>>();
    b.feature_columns = j.at("feature_columns").get<std::vector<std::string>>();
    b.abstract_source = j.at("abstract_source").get<std::string>();
    b.text_dim = j.at("text_dim").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path.string() + ": bad model bundle: " + e.what());
  }
  if (b.standardizer.mean.size() != b.feature_columns.size() ||
      b.standardizer.stddev.size() != b.feature_columns.size())
    throw ValidationError(path.string() + ": standardizer width does not match columns");
  return b;
}

inline std::vector<std::string> layout_names(const features::FeatureTable& table) {
  std::vector<std::string> names;
  for (const features::FeatureColumn& c : table.layout.columns) names.push_back(c.name);
  return names;
}

// Standardized numeric rows plus text rows, both in canonical question order.
struct NetworkInputs {
  std::vector<std::vector<double>> features;
  std::vector<std::vector<double>> text_embeds;
};

inline NetworkInputs network_inputs(const Config& cfg, const std::string& stage,
                                    const std::vector<std::string>& question_ids,
                                    const features::FeatureTable& table,
                                    const features::Standardizer& standardizer,
                                    std::size_t text_dim) {
  Artifacts a(cfg);
  NetworkInputs in;
  for (const std::string& qid : question_ids) {
    std::optional<std::size_t> row = table.row_of(qid);
    if (!row)
      throw ValidationError("stage '" + stage + "': question '" + qid +
                            "' has no feature row; rerun 'features'");
    in.features.push_back(standardizer.apply(table.rows[*row]));
  }
  if (text_dim > 0) {
    require_artifact(a.embeddings(), stage, "features");
    embed::EmbeddingSet set = embed::load_embeddings(a.embeddings(), text_dim);
    for (const std::string& qid : question_ids) {
      const std::vector<double>* vec = set.find(qid);
      if (!vec)
        throw ValidationError("stage '" + stage + "': question '" + qid +
                              "' has no embedding; rerun 'features'");
      in.text_embeds.push_back(*vec);
    }
  }
  return in;
}

}  // namespace detail

inline void run_train(const Config& cfg) {
  detail::ensure_out(cfg);
  Artifacts a(cfg);
  CorpusView v = detail::load_view(cfg, "train");
  detail::require_artifact(a.split(), "train", "split");
  detail::require_artifact(a.features(), "train", "features");

  corpus::SplitAssignment split = corpus::load_split(a.split());
  features::FeatureTable table = features::load_feature_csv(a.features());
  features::Standardizer standardizer =
      features::Standardizer::fit(table, split.ids_in(corpus::Split::Train));

  std::size_t text_dim =
      std::filesystem::exists(a.embeddings())
          ? embed::load_embeddings(a.embeddings()).dim
          : 0;
  detail::NetworkInputs in =
      detail::network_inputs(cfg, "train", v.question_ids, table, standardizer, text_dim);

  nn::DataSet data;
  data.student_ids = v.student_ids;
  data.question_ids = v.question_ids;
  data.features = std::move(in.features);
  data.text_embeds = std::move(in.text_embeds);
  for (const corpus::ResponseRecord& r : v.responses) {
    nn::TrainSample s{v.student_index.at(r.student_id),
                      v.question_index.at(r.question_id),
                      static_cast<double>(r.correct)};
    switch (split.of(r.question_id)) {
      case corpus::Split::Train: data.train.push_back(s); break;
      case corpus::Split::Validation: data.val.push_back(s); break;
      case corpus::Split::Holdout: break;
    }
  }

  nn::TrainConfig tcfg = cfg.train;
  tcfg.seed = derive_seed(cfg.seed, "train");
  nn::TrainResult result = nn::train(data, tcfg);

  detail::ModelBundle bundle;
  bundle.model = nn::Model{std::move(result.params), v.student_ids};
  bundle.standardizer = std::move(standardizer);
  bundle.feature_columns = detail::layout_names(table);
  bundle.abstract_source = cfg.abstract_source;
  bundle.text_dim = text_dim;
  detail::save_bundle(bundle, a.model());

  std::string history = "epoch,train_loss,val_loss\n";
  for (std::size_t e = 0; e < result.history.size(); ++e)
    history += std::to_string(e) + "," + fmt_g(result.history[e].train_loss) + "," +
               fmt_g(result.history[e].val_loss) + "\n";
  write_text_file(a.history(), history);

  nlohmann::json counts;
  counts["train_samples"] = data.train.size();
  counts["val_samples"] = data.val.size();
  counts["best_epoch"] = result.best_epoch;
  counts["best_val_loss"] = result.best_val_loss;
  counts["stopped_early"] = result.stopped_early;
  detail::write_manifest(
      cfg, "train",
      {a.questions(), a.responses(), a.split(), a.features()},
      {a.model(), a.history()}, counts);
}

inline void run_predict(const Config& cfg) {
  detail::ensure_out(cfg);
  Artifacts a(cfg);
  detail::require_artifact(a.questions(), "predict", "simulate");
  detail::require_artifact(a.features(), "predict", "features");
  detail::require_artifact(a.model(), "predict", "train");

  std::vector<corpus::QuestionRecord> qs = corpus::load_questions(a.questions());
  std::vector<std::string> question_ids;
  for (const corpus::QuestionRecord& q : qs) question_ids.push_back(q.question_id);

  detail::ModelBundle bundle = detail::load_bundle(a.model());
  features::FeatureTable table = features::load_feature_csv(a.features());
  if (detail::layout_names(table) != bundle.feature_columns)
    throw ValidationError("features.csv columns do not match the trained model; "
                          "rerun 'features' and 'train' together");
  detail::NetworkInputs in = detail::network_inputs(
      cfg, "predict", question_ids, table, bundle.standardizer, bundle.text_dim);

  std::vector<std::vector<double>> p = nn::predict_matrix(
      bundle.model.params, in.features, in.text_embeds, question_ids.size());

  std::string out = "student_id,question_id,p\n";
  out.reserve(out.size() + p.size() * question_ids.size() * 32);
  for (std::size_t j = 0; j < bundle.model.student_ids.size(); ++j)
    for (std::size_t i = 0; i < question_ids.size(); ++i)
      out += bundle.model.student_ids[j] + "," + question_ids[i] + "," +
             fmt_g(p[j][i]) + "\n";
  write_text_file(a.predictions(), out);

  detail::write_manifest(cfg, "predict",
                         {a.questions(), a.features(), a.model()},
                         {a.predictions()});
}

namespace detail {

struct PredictionMatrix {
  std::vector<std::string> student_ids;
  std::vector<std::string> question_ids;
  std::vector<std::vector<double>> p;  // students x questions
};

inline PredictionMatrix load_predictions(const std::filesystem::path& path) {
  std::vector<std::string> lines = read_lines(path);
  if (lines.empty() || trim(lines[0]) != "student_id,question_id,p")
    throw ValidationError(path.string() +
                          ": expected header 'student_id,question_id,p'");
  PredictionMatrix m;
  std::map<std::string, std::size_t> srow, qcol;
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    if (lines[ln].empty()) continue;
    std::vector<std::string> cells = split(lines[ln], ',');
    if (cells.size() != 3)
      throw ValidationError(path.string() + ":" + std::to_string(ln + 1) +
                            ": expected 3 cells");
    if (srow.emplace(cells[0], m.student_ids.size()).second)
      m.student_ids.push_back(cells[0]);
    if (qcol.emplace(cells[1], m.question_ids.size()).second)
      m.question_ids.push_back(cells[1]);
  }
  m.p.assign(m.student_ids.size(),
             std::vector<double>(m.question_ids.size(),
                                 std::numeric_limits<double>::quiet_NaN()));
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    if (lines[ln].empty()) continue;
    std::vector<std::string> cells = split(lines[ln], ',');
    std::string where = path.string() + ":" + std::to_string(ln + 1);
    double value = parse_double(cells[2], where);
    if (!(value >= 0.0 && value <= 1.0))
      throw ValidationError(where + ": probability out of [0, 1]");
    double& cell = m.p[srow.at(cells[0])][qcol.at(cells[1])];
    if (!std::isnan(cell)) throw ValidationError(where + ": duplicate cell");
    cell = value;
  }
  for (const std::vector<double>& row : m.p)
    for (double cell : row)
      if (std::isnan(cell))
        throw ValidationError(path.string() + ": prediction grid is incomplete");
  return m;
}

}  // namespace detail

inline void run_fit_irt(const Config& cfg) {
  detail::ensure_out(cfg);
  Artifacts a(cfg);
  detail::require_artifact(a.predictions(), "fit_irt", "predict");

  detail::PredictionMatrix m = detail::load_predictions(a.predictions());
  std::vector<std::vector<std::int8_t>> binary = nn::binarize_matrix(m.p);
  std::vector<irt::Observation> obs = irt::observations_from_matrix(binary);
  irt::FitResult fit =
      irt::fit_1pl(m.student_ids.size(), m.question_ids.size(), obs, cfg.fit);

  irt::write_beta_csv(a.betas(), m.question_ids, fit.beta);
  irt::write_theta_csv(a.thetas(), m.student_ids, fit.theta);
  write_text_file(a.fit(), irt::fit_summary_json(fit, obs.size()).dump(2) + "\n");

  detail::write_manifest(cfg, "fit_irt", {a.predictions()},
                         {a.betas(), a.thetas(), a.fit()});
}

inline void run_evaluate(const Config& cfg) {
  detail::ensure_out(cfg);
  Artifacts a(cfg);
  CorpusView v = detail::load_view(cfg, "evaluate");
  detail::require_artifact(a.split(), "evaluate", "split");
  detail::require_artifact(a.reference_betas(), "evaluate", "split");
  detail::require_artifact(a.predictions(), "evaluate", "predict");
  detail::require_artifact(a.betas(), "evaluate", "fit_irt");

  corpus::SplitAssignment split = corpus::load_split(a.split());
  detail::PredictionMatrix pm = detail::load_predictions(a.predictions());
  if (pm.student_ids != v.student_ids || pm.question_ids != v.question_ids)
    throw ValidationError("predictions.csv does not cover the corpus exactly; "
                          "rerun 'predict'");

  std::map<std::string, double> model_beta = detail::align_params(
      a.betas(), "question_id", "beta", v.question_ids);
  std::map<std::string, double> reference_beta = detail::align_params(
      a.reference_betas(), "question_id", "beta", v.question_ids);

  std::optional<std::map<std::string, double>> truth_beta;
  if (std::filesystem::exists(a.truth())) {
    nlohmann::json truth = nlohmann::json::parse(read_text_file(a.truth()));
    std::map<std::string, double> tb;
    for (const auto& [qid, value] : truth.at("beta").items())
      tb[qid] = value.get<double>();
    for (const std::string& qid : v.question_ids)
      if (!tb.count(qid))
        throw ValidationError(a.truth().string() + ": missing beta for '" + qid + "'");
    truth_beta = std::move(tb);
  }

  std::map<std::string, std::pair<std::vector<double>, std::vector<int>>> buckets;
  for (const corpus::ResponseRecord& r : v.responses) {
    std::string name = corpus::split_name(split.of(r.question_id));
    auto& [probs, labels] = buckets[name];
    probs.push_back(pm.p[v.student_index.at(r.student_id)]
                        [v.question_index.at(r.question_id)]);
    labels.push_back(r.correct);
  }

  nlohmann::json classification = nlohmann::json::object();
  std::vector<double> all_probs;
  std::vector<int> all_labels;
  for (const auto& [name, bucket] : buckets) {
    classification[name] =
        evalharness::to_json(evalharness::classification_metrics(bucket.first,
                                                                 bucket.second));
    all_probs.insert(all_probs.end(), bucket.first.begin(), bucket.first.end());
    all_labels.insert(all_labels.end(), bucket.second.begin(), bucket.second.end());
  }
  classification["all"] =
      evalharness::to_json(evalharness::classification_metrics(all_probs, all_labels));

  auto agreement_on = [&](const std::vector<std::string>& qids) {
    nlohmann::json out;
    std::vector<double> est, ref;
    for (const std::string& qid : qids) {
      est.push_back(model_beta.at(qid));
      ref.push_back(reference_beta.at(qid));
    }
    out["model_vs_reference"] =
        evalharness::to_json(evalharness::agreement_metrics(est, ref));
    if (truth_beta) {
      std::vector<double> tru;
      for (const std::string& qid : qids) tru.push_back(truth_beta->at(qid));
      out["model_vs_truth"] =
          evalharness::to_json(evalharness::agreement_metrics(est, tru));
      out["reference_vs_truth"] =
          evalharness::to_json(evalharness::agreement_metrics(ref, tru));
    }
    out["n_questions"] = qids.size();
    return out;
  };

  std::vector<std::string> holdout_ids;
  for (const std::string& qid : v.question_ids)
    if (split.of(qid) == corpus::Split::Holdout) holdout_ids.push_back(qid);
  if (holdout_ids.empty())
    throw ValidationError("evaluate: split has no holdout questions");

  nlohmann::json j;
  j["version"] = kVersion;
  j["counts"]["n_students"] = v.student_ids.size();
  j["counts"]["n_questions"] = v.question_ids.size();
  j["counts"]["n_responses"] = v.responses.size();
  j["counts"]["n_holdout_questions"] = holdout_ids.size();
  j["classification"] = classification;
  j["difficulty_agreement"]["holdout"] = agreement_on(holdout_ids);
  j["difficulty_agreement"]["all"] = agreement_on(v.question_ids);
  write_text_file(a.metrics(), j.dump(2) + "\n");

  std::vector<std::filesystem::path> inputs{a.questions(), a.responses(), a.split(),
                                            a.reference_betas(), a.predictions(),
                                            a.betas()};
  if (truth_beta) inputs.push_back(a.truth());
  detail::write_manifest(cfg, "evaluate", inputs, {a.metrics()});
}

inline void run_efficiency(const Config& cfg) {
  detail::ensure_out(cfg);
  Artifacts a(cfg);
  CorpusView v = detail::load_view(cfg, "efficiency");
  detail::require_artifact(a.split(), "efficiency", "split");
  detail::require_artifact(a.reference_betas(), "efficiency", "split");
  detail::require_artifact(a.betas(), "efficiency", "fit_irt");

  corpus::SplitAssignment split = corpus::load_split(a.split());
  std::map<std::string, double> model_beta = detail::align_params(
      a.betas(), "question_id", "beta", v.question_ids);
  std::map<std::string, double> reference_beta = detail::align_params(
      a.reference_betas(), "question_id", "beta", v.question_ids);

  std::vector<std::string> holdout_ids;
  std::map<std::string, std::size_t> holdout_index;
  for (const std::string& qid : v.question_ids)
    if (split.of(qid) == corpus::Split::Holdout) {
      holdout_index[qid] = holdout_ids.size();
      holdout_ids.push_back(qid);
    }
  if (holdout_ids.empty())
    throw ValidationError("efficiency: split has no holdout questions");

  std::vector<irt::Observation> obs;
  for (const corpus::ResponseRecord& r : v.responses) {
    auto it = holdout_index.find(r.question_id);
    if (it == holdout_index.end()) continue;
    obs.push_back({v.student_index.at(r.student_id), it->second, r.correct});
  }

  std::vector<double> ref_h, model_h;
  for (const std::string& qid : holdout_ids) {
    ref_h.push_back(reference_beta.at(qid));
    model_h.push_back(model_beta.at(qid));
  }

  evalharness::EfficiencyConfig ec;
  ec.fractions = cfg.efficiency_fractions;
  ec.repetitions = cfg.efficiency_repetitions;
  ec.seed = derive_seed(cfg.seed, "efficiency");
  ec.fit = cfg.fit;
  evalharness::EfficiencyCurve curve = evalharness::efficiency_curve(
      v.student_ids.size(), holdout_ids.size(), obs, ref_h, model_h, ec);

  nlohmann::json j;
  j["version"] = kVersion;
  j["n_students"] = v.student_ids.size();
  j["n_holdout_questions"] = holdout_ids.size();
  j["curve"] = evalharness::to_json(curve);
  write_text_file(a.efficiency(), j.dump(2) + "\n");

  detail::write_manifest(cfg, "efficiency",
                         {a.questions(), a.responses(), a.split(),
                          a.reference_betas(), a.betas()},
                         {a.efficiency()});
}

inline void run_ablation(const Config& cfg) {
  detail::ensure_out(cfg);
  Artifacts a(cfg);
  CorpusView v = detail::load_view(cfg, "ablation");
  detail::require_artifact(a.split(), "ablation", "split");
  detail::require_artifact(a.features(), "ablation", "features");
  detail::require_artifact(a.reference_betas(), "ablation", "split");

  corpus::SplitAssignment split = corpus::load_split(a.split());
  features::FeatureTable table = features::load_feature_csv(a.features());
  std::map<std::string, double> reference_beta = detail::align_params(
      a.reference_betas(), "question_id", "beta", v.question_ids);

  evalharness::AblationInputs in;
  in.student_ids = v.student_ids;
  in.question_ids = v.question_ids;
  in.table = std::move(table);
  std::size_t text_dim =
      std::filesystem::exists(a.embeddings())
          ? embed::load_embeddings(a.embeddings()).dim
          : 0;
  if (text_dim > 0) {
    embed::EmbeddingSet set = embed::load_embeddings(a.embeddings(), text_dim);
    for (const std::string& qid : v.question_ids) {
      const std::vector<double>* vec = set.find(qid);
      if (!vec)
        throw ValidationError("stage 'ablation': question '" + qid +
                              "' has no embedding; rerun 'features'");
      in.text_embeds.push_back(*vec);
    }
  } else {
    in.text_embeds.assign(v.question_ids.size(), {});
  }
  for (const corpus::ResponseRecord& r : v.responses) {
    irt::Observation o{v.student_index.at(r.student_id),
                       v.question_index.at(r.question_id), r.correct};
    switch (split.of(r.question_id)) {
      case corpus::Split::Train: in.train.push_back(o); break;
      case corpus::Split::Validation: in.val.push_back(o); break;
      case corpus::Split::Holdout: in.test.push_back(o); break;
    }
  }
  for (const std::string& qid : v.question_ids)
    in.reference_beta.push_back(reference_beta.at(qid));

  evalharness::AblationConfig ac;
  ac.train = cfg.train;
  ac.train.seed = derive_seed(cfg.seed, "ablation");
  ac.fit = cfg.fit;
  std::vector<evalharness::AblationOutcome> outcomes = evalharness::run_ablation(in, ac);

  nlohmann::json j;
  j["version"] = kVersion;
  j["presets"] = nlohmann::json::array();
  for (const evalharness::AblationOutcome& o : outcomes)
    j["presets"].push_back(evalharness::to_json(o));
  write_text_file(a.ablation(), j.dump(2) + "\n");

  std::vector<std::filesystem::path> inputs{a.questions(), a.responses(), a.split(),
                                            a.features(), a.reference_betas()};
  if (text_dim > 0) inputs.push_back(a.embeddings());
  detail::write_manifest(cfg, "ablation", inputs, {a.ablation()});
}

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& run_all_stages() {
  static const std::vector<std::string> stages{
      "simulate", "split",   "llm_extract", "features",
      "train",    "predict", "fit_irt",     "evaluate"};
  return stages;
}

inline void run_stage(const Config& cfg, const std::string& name,
                      pedafeat::LlmProvider* provider = nullptr) {
  if (name == "simulate") return run_simulate(cfg);
  if (name == "split") return run_split(cfg);
  if (name == "llm_extract") {
    if (!provider) throw ValidationError("llm_extract needs a provider");
    return run_llm_extract(cfg, *provider);
  }
  if (name == "features") return run_features(cfg);
  if (name == "train") return run_train(cfg);
  if (name == "predict") return run_predict(cfg);
  if (name == "fit_irt") return run_fit_irt(cfg);
  if (name == "evaluate") return run_evaluate(cfg);
  if (name == "efficiency") return run_efficiency(cfg);
  if (name == "ablation") return run_ablation(cfg);
  throw ValidationError("unknown stage: '" + name + "'");
}

inline void run_all(const Config& cfg, pedafeat::LlmProvider& provider) {
  for (const std::string& stage : run_all_stages()) run_stage(cfg, stage, &provider);
}

}  // namespace psychoforge::pipeline
