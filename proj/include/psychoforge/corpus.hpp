#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "psychoforge/common.hpp"

namespace psychoforge::corpus {

struct QuestionRecord {
  std::string question_id;
  std::string statement;
  std::vector<std::string> options;
  int correct_index = 0;
  bool has_image = false;
};

inline void validate_question(const QuestionRecord& q, const std::string& where) {
  if (q.question_id.empty())
    throw ValidationError(where + ": empty question_id");
  if (q.options.size() < 2 || q.options.size() > 5)
    throw ValidationError(where + ": question '" + q.question_id +
                          "' must have 2-5 options, has " +
                          std::to_string(q.options.size()));
  if (q.correct_index < 0 ||
      static_cast<std::size_t>(q.correct_index) >= q.options.size())
    throw ValidationError(where + ": question '" + q.question_id +
                          "' correct_index " + std::to_string(q.correct_index) +
                          " out of range");
}

struct ResponseRecord {
  std::string student_id;
  std::string question_id;
  int correct = 0;
};

// Dense storage, Missing encoded as -1. Row j / column i refer to
// student_ids()[j] / question_ids()[i]; orders are fixed at construction.
class ResponseMatrix {
 public:
  static constexpr std::int8_t kMissing = -1;

  ResponseMatrix() = default;
  ResponseMatrix(std::vector<std::string> students, std::vector<std::string> questions)
      : students_(std::move(students)), questions_(std::move(questions)),
        cells_(students_.size() * questions_.size(), kMissing) {
    for (std::size_t j = 0; j < students_.size(); ++j) {
      if (!srow_.emplace(students_[j], j).second)
        throw ValidationError("duplicate student id in matrix: " + students_[j]);
    }
    for (std::size_t i = 0; i < questions_.size(); ++i) {
      if (!qcol_.emplace(questions_[i], i).second)
        throw ValidationError("duplicate question id in matrix: " + questions_[i]);
    }
  }

  std::size_t n_students() const { return students_.size(); }
  std::size_t n_questions() const { return questions_.size(); }
  const std::vector<std::string>& student_ids() const { return students_; }
  const std::vector<std::string>& question_ids() const { return questions_; }

  std::int8_t cell(std::size_t j, std::size_t i) const {
    return cells_[j * questions_.size() + i];
  }
  void set(std::size_t j, std::size_t i, std::int8_t v) {
    cells_[j * questions_.size() + i] = v;
  }
  bool missing(std::size_t j, std::size_t i) const { return cell(j, i) == kMissing; }

  std::optional<std::size_t> student_index(const std::string& id) const {
    auto it = srow_.find(id);
    if (it == srow_.end()) return std::nullopt;
    return it->second;
  }
  std::optional<std::size_t> question_index(const std::string& id) const {
    auto it = qcol_.find(id);
    if (it == qcol_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t observed_count() const {
    std::size_t n = 0;
    for (std::int8_t c : cells_)
      if (c != kMissing) ++n;
    return n;
  }

 private:
  std::vector<std::string> students_, questions_;
  std::unordered_map<std::string, std::size_t> srow_, qcol_;
  std::vector<std::int8_t> cells_;
};

enum class Split { Train, Validation, Holdout };

inline const char* split_name(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Validation: return "validation";
    default: return "holdout";
  }
}

inline Split split_from_name(const std::string& s) {
  if (s == "train") return Split::Train;
  if (s == "validation") return Split::Validation;
  if (s == "holdout") return Split::Holdout;
  throw ValidationError("unknown split label: '" + s + "'");
}

class SplitAssignment {
 public:
  SplitAssignment() = default;
  SplitAssignment(std::vector<std::string> ids, std::vector<Split> splits)
      : ids_(std::move(ids)), splits_(std::move(splits)) {
    if (ids_.size() != splits_.size())
      throw std::logic_error("SplitAssignment: size mismatch");
    for (std::size_t i = 0; i < ids_.size(); ++i) {
      if (!index_.emplace(ids_[i], i).second)
        throw ValidationError("duplicate question id in split: " + ids_[i]);
    }
  }

  std::size_t size() const { return ids_.size(); }
  const std::vector<std::string>& question_ids() const { return ids_; }

  Split of(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end())
      throw ValidationError("question id not in split assignment: " + id);
    return splits_[it->second];
  }
  bool contains(const std::string& id) const { return index_.count(id) > 0; }

  std::vector<std::string> ids_in(Split s) const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < ids_.size(); ++i)
      if (splits_[i] == s) out.push_back(ids_[i]);
    return out;
  }
  std::size_t count(Split s) const { return ids_in(s).size(); }

  bool operator==(const SplitAssignment& o) const {
    return ids_ == o.ids_ && splits_ == o.splits_;
  }

 private:
  std::vector<std::string> ids_;
  std::vector<Split> splits_;
  std::unordered_map<std::string, std::size_t> index_;
};

// ---------------------------------------------------------------------------
// File ingestion
// ---------------------------------------------------------------------------

inline std::vector<QuestionRecord> load_questions(const std::filesystem::path& path) {
  std::vector<std::string> lines = read_lines(path);
  std::vector<QuestionRecord> out;
  std::unordered_map<std::string, std::size_t> seen;
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    if (trim(lines[ln]).empty()) continue;
    std::string where = path.string() + ":" + std::to_string(ln + 1);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(lines[ln]);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(where + ": invalid JSON: " + e.what());
    }
    QuestionRecord q;
    try {
      q.question_id = j.at("question_id").get<std::string>();
      q.statement = j.at("statement").get<std::string>();
      q.options = j.at("options").get<std::vector<std::string>>();
      q.correct_index = j.at("correct_index").get<int>();
      if (j.contains("has_image")) q.has_image = j.at("has_image").get<bool>();
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(where + ": bad field: " + e.what());
    }
    validate_question(q, where);
    if (!seen.emplace(q.question_id, ln).second)
      throw ValidationError(where + ": duplicate question_id '" + q.question_id + "'");
    out.push_back(std::move(q));
  }
  return out;
}

inline void save_questions(const std::vector<QuestionRecord>& questions,
                           const std::filesystem::path& path) {
  std::string out;
  for (const QuestionRecord& q : questions) {
    nlohmann::json j;
    j["question_id"] = q.question_id;
    j["statement"] = q.statement;
    j["options"] = q.options;
    j["correct_index"] = q.correct_index;
    j["has_image"] = q.has_image;
    out += j.dump();
    out += '\n';
  }
  write_text_file(path, out);
}

inline std::vector<ResponseRecord> load_responses(const std::filesystem::path& path) {
  std::vector<std::string> lines = read_lines(path);
  if (lines.empty())
    throw ValidationError(path.string() + ": empty responses file");
  if (trim(lines[0]) != "student_id,question_id,correct")
    throw ValidationError(path.string() +
                          ": expected header 'student_id,question_id,correct'");
  std::vector<ResponseRecord> out;
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    if (trim(lines[ln]).empty()) continue;
    std::string where = path.string() + ":" + std::to_string(ln + 1);
    std::vector<std::string> f = parse_csv_line(lines[ln]);
    if (f.size() != 3)
      throw ValidationError(where + ": expected 3 fields, got " +
                            std::to_string(f.size()));
    ResponseRecord r;
    r.student_id = f[0];
    r.question_id = f[1];
    if (r.student_id.empty()) throw ValidationError(where + ": empty student_id");
    if (r.question_id.empty()) throw ValidationError(where + ": empty question_id");
    std::string c = trim(f[2]);
    if (c == "0") r.correct = 0;
    else if (c == "1") r.correct = 1;
    else
      throw ValidationError(where + ": field 'correct' must be 0 or 1, got '" + c + "'");
    out.push_back(std::move(r));
  }
  return out;
}

inline void save_responses(const std::vector<ResponseRecord>& responses,
                           const std::filesystem::path& path) {
  std::string out = "student_id,question_id,correct\n";
  for (const ResponseRecord& r : responses) {
    out += csv_join({r.student_id, r.question_id, std::to_string(r.correct)});
    out += '\n';
  }
  write_text_file(path, out);
}

struct Corpus {
  std::vector<QuestionRecord> questions;
  std::vector<ResponseRecord> responses;
};

inline Corpus load_corpus(const std::filesystem::path& questions_path,
                          const std::filesystem::path& responses_path) {
  Corpus c;
  c.questions = load_questions(questions_path);
  c.responses = load_responses(responses_path);
  std::unordered_map<std::string, bool> known;
  for (const QuestionRecord& q : c.questions) known[q.question_id] = true;
  std::vector<std::string> unknown;
  std::unordered_map<std::string, bool> reported;
  for (const ResponseRecord& r : c.responses) {
    if (!known.count(r.question_id) && !reported[r.question_id]) {
      unknown.push_back(r.question_id);
      reported[r.question_id] = true;
    }
  }
  if (!unknown.empty()) {
    std::string msg = responses_path.string() +
                      ": responses reference unknown question ids:";
    for (const std::string& id : unknown) msg += " '" + id + "'";
    throw ValidationError(msg);
  }
  return c;
}

// ---------------------------------------------------------------------------
// Matrix assembly and matrix file format
// ---------------------------------------------------------------------------

struct AssembledMatrix {
  ResponseMatrix matrix;
  std::size_t duplicates_dropped = 0;
};

// Row/column order = first appearance in the response list; duplicate
// (student, question) pairs keep the first outcome.
inline AssembledMatrix assemble_matrix(const std::vector<ResponseRecord>& responses) {
  std::vector<std::string> students, questions;
  std::unordered_map<std::string, std::size_t> srow, qcol;
  for (const ResponseRecord& r : responses) {
    if (srow.emplace(r.student_id, students.size()).second)
      students.push_back(r.student_id);
    if (qcol.emplace(r.question_id, questions.size()).second)
      questions.push_back(r.question_id);
  }
  AssembledMatrix out{ResponseMatrix(students, questions), 0};
  for (const ResponseRecord& r : responses) {
    std::size_t j = srow[r.student_id], i = qcol[r.question_id];
    if (out.matrix.missing(j, i))
      out.matrix.set(j, i, static_cast<std::int8_t>(r.correct));
    else
      ++out.duplicates_dropped;
  }
  return out;
}

inline void save_matrix_csv(const ResponseMatrix& m, const std::filesystem::path& path) {
  std::string out = "student_id";
  for (const std::string& q : m.question_ids()) out += "," + csv_escape(q);
  out += '\n';
  for (std::size_t j = 0; j < m.n_students(); ++j) {
    out += csv_escape(m.student_ids()[j]);
    for (std::size_t i = 0; i < m.n_questions(); ++i) {
      out += ',';
      if (!m.missing(j, i)) out += m.cell(j, i) ? '1' : '0';
    }
    out += '\n';
  }
  write_text_file(path, out);
}

inline ResponseMatrix load_matrix_csv(const std::filesystem::path& path) {
  std::vector<std::string> lines = read_lines(path);
  if (lines.empty()) throw ValidationError(path.string() + ": empty matrix file");
  std::vector<std::string> header = parse_csv_line(lines[0]);
  if (header.empty() || header[0] != "student_id")
    throw ValidationError(path.string() + ": first column must be student_id");
  std::vector<std::string> questions(header.begin() + 1, header.end());
  std::vector<std::string> students;
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    if (trim(lines[ln]).empty()) continue;
    std::vector<std::string> f = parse_csv_line(lines[ln]);
    if (f.empty() || f[0].empty())
      throw ValidationError(path.string() + ":" + std::to_string(ln + 1) +
                            ": missing student_id");
    students.push_back(f[0]);
  }
  ResponseMatrix m(students, questions);
  std::size_t j = 0;
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    if (trim(lines[ln]).empty()) continue;
    std::string where = path.string() + ":" + std::to_string(ln + 1);
    std::vector<std::string> f = parse_csv_line(lines[ln]);
    if (f.size() != questions.size() + 1)
      throw ValidationError(where + ": expected " +
                            std::to_string(questions.size() + 1) + " fields, got " +
                            std::to_string(f.size()));
    for (std::size_t i = 0; i < questions.size(); ++i) {
      const std::string& cell = f[i + 1];
      if (cell.empty()) continue;
      if (cell == "0") m.set(j, i, 0);
      else if (cell == "1") m.set(j, i, 1);
      else
        throw ValidationError(where + ": cell must be 0, 1 or empty, got '" + cell + "'");
    }
    ++j;
  }
  return m;
}

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

inline std::string padded_id(const char* prefix, std::size_t i, std::size_t n) {
  std::string num = std::to_string(i + 1);
  std::size_t width = std::to_string(n).size();
  if (width < 4) width = 4;
  std::string out = prefix;
  for (std::size_t k = num.size(); k < width; ++k) out += '0';
  return out + num;
}

struct SimulatedCorpus {
  ResponseMatrix matrix;
  std::map<std::string, double> true_theta;
  std::map<std::string, double> true_beta;
};

inline SimulatedCorpus simulate_corpus(int n_students, int n_questions,
                                       std::pair<double, double> theta_dist,
                                       std::pair<double, double> beta_dist,
                                       std::uint64_t seed) {
  if (n_students < 1 || n_questions < 1)
    throw ValidationError("simulate_corpus: need at least 1 student and 1 question");
  if (theta_dist.second < 0 || beta_dist.second < 0)
    throw ValidationError("simulate_corpus: sd values must be >= 0");

  std::vector<std::string> students, questions;
  students.reserve(static_cast<std::size_t>(n_students));
  questions.reserve(static_cast<std::size_t>(n_questions));
  for (int j = 0; j < n_students; ++j)
    students.push_back(padded_id("s", static_cast<std::size_t>(j),
                                 static_cast<std::size_t>(n_students)));
  for (int i = 0; i < n_questions; ++i)
    questions.push_back(padded_id("q", static_cast<std::size_t>(i),
                                  static_cast<std::size_t>(n_questions)));

  SimulatedCorpus out{ResponseMatrix(students, questions), {}, {}};
  std::vector<double> theta(students.size()), beta(questions.size());
  {
    Rng rng(derive_seed(seed, "theta"));
    for (std::size_t j = 0; j < theta.size(); ++j) {
      theta[j] = rng.normal(theta_dist.first, theta_dist.second);
      out.true_theta[students[j]] = theta[j];
    }
  }
  {
    Rng rng(derive_seed(seed, "beta"));
    for (std::size_t i = 0; i < beta.size(); ++i) {
      beta[i] = rng.normal(beta_dist.first, beta_dist.second);
      out.true_beta[questions[i]] = beta[i];
    }
  }
  Rng rng(derive_seed(seed, "cells"));
  for (std::size_t j = 0; j < students.size(); ++j)
    for (std::size_t i = 0; i < questions.size(); ++i)
      out.matrix.set(j, i, static_cast<std::int8_t>(
                               rng.bernoulli(sigmoid(theta[j] - beta[i]))));
  return out;
}

// ---------------------------------------------------------------------------
// Stratified split
// ---------------------------------------------------------------------------

namespace detail {

// bin(v) = number of quantile edges <= v; edges at sorted[floor(n*k/bins)].
inline std::vector<double> quantile_edges(std::vector<double> values, int bins) {
  std::sort(values.begin(), values.end());
  std::vector<double> edges;
  std::size_t n = values.size();
  for (int k = 1; k < bins; ++k)
    edges.push_back(values[n * static_cast<std::size_t>(k) / static_cast<std::size_t>(bins)]);
  return edges;
}

inline int bin_of(double v, const std::vector<double>& edges) {
  int b = 0;
  for (double e : edges)
    if (v >= e) ++b;
  return b;
}

}  // namespace detail

// Questions are binned on the joint (difficulty quantile, correctness
// quantile) grid, 5x5 collapsing to 3x3 then 1x1 whenever some nonempty
// stratum would hold fewer than 3 questions. Within the stratum sequence,
// counts come from cumulative-target rounding so the realized global shares
// stay within one question of the configured ratios at every boundary.
inline SplitAssignment stratified_split(
    const std::vector<QuestionRecord>& questions,
    const std::map<std::string, double>& difficulty,
    const std::map<std::string, double>& mean_correctness,
    std::array<double, 3> ratios, std::uint64_t seed) {
  double rsum = ratios[0] + ratios[1] + ratios[2];
  if (std::abs(rsum - 1.0) > 1e-9)
    throw ValidationError("stratified_split: ratios must sum to 1");
  for (double r : ratios)
    if (r < 0) throw ValidationError("stratified_split: negative ratio");

  std::vector<double> dvals, cvals;
  dvals.reserve(questions.size());
  cvals.reserve(questions.size());
  for (const QuestionRecord& q : questions) {
    auto di = difficulty.find(q.question_id);
    auto ci = mean_correctness.find(q.question_id);
    if (di == difficulty.end())
      throw ValidationError("stratified_split: no difficulty for '" + q.question_id + "'");
    if (ci == mean_correctness.end())
      throw ValidationError("stratified_split: no mean correctness for '" +
                            q.question_id + "'");
    dvals.push_back(di->second);
    cvals.push_back(ci->second);
  }

  std::size_t n = questions.size();
  if (n == 0) return SplitAssignment({}, {});

  std::map<std::pair<int, int>, std::vector<std::size_t>> strata;
  for (int bins : {5, 3, 1}) {
    strata.clear();
    std::vector<double> dedges = detail::quantile_edges(dvals, bins);
    std::vector<double> cedges = detail::quantile_edges(cvals, bins);
    for (std::size_t i = 0; i < n; ++i)
      strata[{detail::bin_of(dvals[i], dedges), detail::bin_of(cvals[i], cedges)}]
          .push_back(i);
    bool too_small = false;
    for (const auto& [key, members] : strata)
      if (members.size() < 3) too_small = true;
    if (!too_small || bins == 1) break;
  }

  Rng rng(derive_seed(seed, "stratified-split"));
  std::vector<Split> splits(n, Split::Holdout);
  std::size_t cum = 0, assigned_train = 0, assigned_val = 0;
  for (auto& [key, members] : strata) {
    rng.shuffle(members);
    cum += members.size();
    auto target1 = static_cast<std::size_t>(std::llround(ratios[0] * static_cast<double>(cum)));
    auto target2 = static_cast<std::size_t>(
        std::llround((ratios[0] + ratios[1]) * static_cast<double>(cum)));
    std::size_t a_train =
        std::min(members.size(),
                 target1 > assigned_train ? target1 - assigned_train : 0);
    std::size_t already = assigned_train + assigned_val + a_train;
    std::size_t a_val = std::min(members.size() - a_train,
                                 target2 > already ? target2 - already : 0);
    for (std::size_t k = 0; k < members.size(); ++k) {
      if (k < a_train) splits[members[k]] = Split::Train;
      else if (k < a_train + a_val) splits[members[k]] = Split::Validation;
      else splits[members[k]] = Split::Holdout;
    }
    assigned_train += a_train;
    assigned_val += a_val;
  }

  std::vector<std::string> ids;
  ids.reserve(n);
  for (const QuestionRecord& q : questions) ids.push_back(q.question_id);
  return SplitAssignment(std::move(ids), std::move(splits));
}

inline void save_split(const SplitAssignment& split, const std::filesystem::path& path) {
  std::string out = "question_id,split\n";
  for (const std::string& id : split.question_ids()) {
    out += csv_join({id, split_name(split.of(id))});
    out += '\n';
  }
  write_text_file(path, out);
}

inline SplitAssignment load_split(const std::filesystem::path& path) {
  std::vector<std::string> lines = read_lines(path);
  if (lines.empty()) throw ValidationError(path.string() + ": empty split file");
  if (trim(lines[0]) != "question_id,split")
    throw ValidationError(path.string() + ": expected header 'question_id,split'");
  std::vector<std::string> ids;
  std::vector<Split> splits;
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    if (trim(lines[ln]).empty()) continue;
    std::vector<std::string> f = parse_csv_line(lines[ln]);
    if (f.size() != 2)
      throw ValidationError(path.string() + ":" + std::to_string(ln + 1) +
                            ": expected 2 fields");
    ids.push_back(f[0]);
    splits.push_back(split_from_name(trim(f[1])));
  }
  return SplitAssignment(std::move(ids), std::move(splits));
}

// betas.csv / thetas.csv round-trip helpers shared by several stages.
inline void save_param_csv(const std::map<std::string, double>& params,
                           const std::string& id_col, const std::string& val_col,
                           const std::filesystem::path& path) {
  std::string out = id_col + "," + val_col + "\n";
  for (const auto& [id, v] : params) {
    out += csv_join({id, fmt_g(v)});
    out += '\n';
  }
  write_text_file(path, out);
}

inline std::map<std::string, double> load_param_csv(const std::filesystem::path& path,
                                                    const std::string& id_col,
                                                    const std::string& val_col) {
  std::vector<std::string> lines = read_lines(path);
  if (lines.empty()) throw ValidationError(path.string() + ": empty file");
  if (trim(lines[0]) != id_col + "," + val_col)
    throw ValidationError(path.string() + ": expected header '" + id_col + "," +
                          val_col + "'");
  std::map<std::string, double> out;
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    if (trim(lines[ln]).empty()) continue;
    std::vector<std::string> f = parse_csv_line(lines[ln]);
    if (f.size() != 2)
      throw ValidationError(path.string() + ":" + std::to_string(ln + 1) +
                            ": expected 2 fields");
    out[f[0]] = parse_double(f[1], val_col);
  }
  return out;
}

}  // namespace psychoforge::corpus
