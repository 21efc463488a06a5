#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "psychoforge/common.hpp"

namespace psychoforge::nn {

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

struct Dense {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> w;  // row-major in x out
  std::vector<double> b;
};

struct NetworkParams {
  std::size_t n_students = 0;
  std::size_t emb_dim = 8;
  std::size_t feat_dim = 0;  // 0 drops the pathway
  std::size_t text_dim = 0;  // 0 drops the pathway
  std::size_t hidden1 = 64;
  std::size_t hidden2 = 32;
  std::vector<double> table;  // n_students x emb_dim
  Dense feat;                 // feat_dim -> 32
  Dense text;                 // text_dim -> 32
  Dense h1;                   // concat -> hidden1
  Dense h2;                   // hidden1 -> hidden2
  Dense head;                 // hidden2 -> 1

  bool has_feat() const { return feat_dim > 0; }
  bool has_text() const { return text_dim > 0; }
  std::size_t concat_dim() const {
    return emb_dim + (has_feat() ? std::size_t{32} : 0) +
           (has_text() ? std::size_t{32} : 0);
  }
};

template <class F>
void visit_params(NetworkParams& p, F&& fn) {
  fn(p.table);
  if (p.has_feat()) {
    fn(p.feat.w);
    fn(p.feat.b);
  }
  if (p.has_text()) {
    fn(p.text.w);
    fn(p.text.b);
  }
  fn(p.h1.w);
  fn(p.h1.b);
  fn(p.h2.w);
  fn(p.h2.b);
  fn(p.head.w);
  fn(p.head.b);
}

inline NetworkParams zeros_like(const NetworkParams& p) {
  NetworkParams z = p;
  visit_params(z, [](std::vector<double>& v) { std::fill(v.begin(), v.end(), 0.0); });
  return z;
}

namespace detail {

inline Dense make_dense(std::size_t in, std::size_t out) {
  Dense d;
  d.in = in;
  d.out = out;
  d.w.assign(in * out, 0.0);
  d.b.assign(out, 0.0);
  return d;
}

inline void glorot_fill(Dense& d, Rng& rng) {
  double limit = std::sqrt(6.0 / static_cast<double>(d.in + d.out));
  for (double& v : d.w) v = rng.uniform(-limit, limit);
}

}  // namespace detail

struct TrainConfig {
  int epochs = 60;
  int patience = 12;
  std::size_t batch_size = 1024;
  double learning_rate = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-7;
  double l2 = 5e-4;
  double dropout = 0.25;
  std::size_t emb_dim = 8;
  std::size_t hidden1 = 64;
  std::size_t hidden2 = 32;
  std::uint64_t seed = 0;
};

inline NetworkParams init_params(std::size_t n_students, std::size_t feat_dim,
                                 std::size_t text_dim, const TrainConfig& cfg) {
  if (n_students == 0) throw ValidationError("network needs at least one student");
  if (feat_dim == 0 && text_dim == 0 && cfg.emb_dim == 0)
    throw ValidationError("network needs at least one input pathway");
  NetworkParams p;
  p.n_students = n_students;
  p.emb_dim = cfg.emb_dim;
  p.feat_dim = feat_dim;
  p.text_dim = text_dim;
  p.hidden1 = cfg.hidden1;
  p.hidden2 = cfg.hidden2;
  Rng rng(derive_seed(cfg.seed, "nn-init"));
  p.table.resize(n_students * p.emb_dim);
  for (double& v : p.table) v = rng.uniform(-0.05, 0.05);
  if (feat_dim > 0) {
    p.feat = detail::make_dense(feat_dim, 32);
    detail::glorot_fill(p.feat, rng);
  }
  if (text_dim > 0) {
    p.text = detail::make_dense(text_dim, 32);
    detail::glorot_fill(p.text, rng);
  }
  p.h1 = detail::make_dense(p.concat_dim(), p.hidden1);
  detail::glorot_fill(p.h1, rng);
  p.h2 = detail::make_dense(p.hidden1, p.hidden2);
  detail::glorot_fill(p.h2, rng);
  p.head = detail::make_dense(p.hidden2, 1);
  detail::glorot_fill(p.head, rng);
  return p;
}

// ---------------------------------------------------------------------------
// Data
// ---------------------------------------------------------------------------

struct TrainSample {
  std::size_t student = 0;
  std::size_t question = 0;
  double y = 0.0;
};

struct DataSet {
  std::vector<std::string> student_ids;
  std::vector<std::string> question_ids;
  std::vector<std::vector<double>> features;     // per question; may be empty rows
  std::vector<std::vector<double>> text_embeds;  // per question; may be empty rows
  std::vector<TrainSample> train;
  std::vector<TrainSample> val;

  std::size_t feat_dim() const { return features.empty() ? 0 : features[0].size(); }
  std::size_t text_dim() const {
    return text_embeds.empty() ? 0 : text_embeds[0].size();
  }

  void validate() const {
    if (student_ids.empty()) throw ValidationError("dataset has no students");
    if (question_ids.empty()) throw ValidationError("dataset has no questions");
    if (!features.empty() && features.size() != question_ids.size())
      throw ValidationError("feature rows do not match question count");
    if (!text_embeds.empty() && text_embeds.size() != question_ids.size())
      throw ValidationError("text embedding rows do not match question count");
    for (const std::vector<double>& r : features)
      if (r.size() != feat_dim())
        throw ValidationError("ragged feature rows in dataset");
    for (const std::vector<double>& r : text_embeds)
      if (r.size() != text_dim())
        throw ValidationError("ragged text embedding rows in dataset");
    auto check = [&](const std::vector<TrainSample>& v, const char* which) {
      for (const TrainSample& s : v) {
        if (s.student >= student_ids.size())
          throw ValidationError(std::string(which) + " sample has bad student index");
        if (s.question >= question_ids.size())
          throw ValidationError(std::string(which) + " sample has bad question index");
        if (s.y != 0.0 && s.y != 1.0)
          throw ValidationError(std::string(which) + " sample label must be 0 or 1");
      }
    };
    check(train, "train");
    check(val, "val");
  }
};

// ---------------------------------------------------------------------------
// Forward / backward
// ---------------------------------------------------------------------------

namespace detail {

inline void dense_forward(const Dense& d, const double* x, double* y, bool relu) {
  for (std::size_t o = 0; o < d.out; ++o) y[o] = d.b[o];
  for (std::size_t i = 0; i < d.in; ++i) {
    double xi = x[i];
    if (xi == 0.0) continue;
    const double* row = d.w.data() + i * d.out;
    for (std::size_t o = 0; o < d.out; ++o) y[o] += xi * row[o];
  }
  if (relu)
    for (std::size_t o = 0; o < d.out; ++o) y[o] = y[o] > 0.0 ? y[o] : 0.0;
}

// dy is modified in place by the relu gate; dx may be null.
inline void dense_backward(const Dense& d, const double* x, const double* y_post,
                           double* dy, Dense& grad, double* dx, bool relu) {
  if (relu)
    for (std::size_t o = 0; o < d.out; ++o)
      if (y_post[o] <= 0.0) dy[o] = 0.0;
  for (std::size_t o = 0; o < d.out; ++o) grad.b[o] += dy[o];
  for (std::size_t i = 0; i < d.in; ++i) {
    double xi = x[i];
    double* grow = grad.w.data() + i * d.out;
    const double* row = d.w.data() + i * d.out;
    double acc = 0.0;
    for (std::size_t o = 0; o < d.out; ++o) {
      grow[o] += xi * dy[o];
      acc += row[o] * dy[o];
    }
    if (dx) dx[i] = acc;
  }
}

}  // namespace detail

struct Activations {
  std::vector<double> emb;       // after dropout scaling
  std::vector<double> feat_out;  // post-relu
  std::vector<double> text_out;  // post-relu
  std::vector<double> concat;
  std::vector<double> h1_out;
  std::vector<double> h2_out;
  double z = 0.0;
  double p = 0.5;
};

// drop_mask: entries in {0, 1/keep}, length emb_dim; null means eval mode.
inline double forward_sample(const NetworkParams& params,
                             const std::vector<double>* feat_row,
                             const std::vector<double>* text_row, std::size_t student,
                             const std::vector<double>* drop_mask, Activations& act) {
  if (student >= params.n_students)
    throw ValidationError("forward: student index out of range");
  if (params.has_feat() && (!feat_row || feat_row->size() != params.feat_dim))
    throw ValidationError("forward: feature row missing or wrong width");
  if (params.has_text() && (!text_row || text_row->size() != params.text_dim))
    throw ValidationError("forward: text embedding row missing or wrong width");

  act.emb.assign(params.emb_dim, 0.0);
  const double* trow = params.table.data() + student * params.emb_dim;
  for (std::size_t k = 0; k < params.emb_dim; ++k)
    act.emb[k] = drop_mask ? trow[k] * (*drop_mask)[k] : trow[k];

  act.concat.clear();
  act.concat.insert(act.concat.end(), act.emb.begin(), act.emb.end());
  if (params.has_feat()) {
    act.feat_out.assign(32, 0.0);
    detail::dense_forward(params.feat, feat_row->data(), act.feat_out.data(), true);
    act.concat.insert(act.concat.end(), act.feat_out.begin(), act.feat_out.end());
  }
  if (params.has_text()) {
    act.text_out.assign(32, 0.0);
    detail::dense_forward(params.text, text_row->data(), act.text_out.data(), true);
    act.concat.insert(act.concat.end(), act.text_out.begin(), act.text_out.end());
  }
  act.h1_out.assign(params.hidden1, 0.0);
  detail::dense_forward(params.h1, act.concat.data(), act.h1_out.data(), true);
  act.h2_out.assign(params.hidden2, 0.0);
  detail::dense_forward(params.h2, act.h1_out.data(), act.h2_out.data(), true);
  double z = params.head.b[0];
  for (std::size_t i = 0; i < params.hidden2; ++i)
    z += act.h2_out[i] * params.head.w[i];
  act.z = z;
  act.p = sigmoid(z);
  return act.p;
}

// Loss value clamps the probability; the gradient uses the raw (p - y).
inline double bce_loss(double p, double y) {
  double q = std::clamp(p, 1e-7, 1.0 - 1e-7);
  return -(y * std::log(q) + (1.0 - y) * std::log(1.0 - q));
}

inline double l2_term(const NetworkParams& params, double lambda) {
  if (lambda == 0.0) return 0.0;
  double s = 0.0;
  auto add = [&](const Dense& d) {
    for (double v : d.w) s += v * v;
  };
  if (params.has_feat()) add(params.feat);
  if (params.has_text()) add(params.text);
  add(params.h1);
  add(params.h2);
  add(params.head);
  return lambda * s;
}

// Mean BCE over the index set plus the L2 term; fills grads (same shapes as
// params). masks, when given, supplies one dropout mask per position in
// `indices`; null means eval-mode forward (no dropout).
inline double batch_loss_and_grads(const NetworkParams& params, const DataSet& data,
                                   const std::vector<std::size_t>& indices,
                                   const std::vector<TrainSample>& samples,
                                   const std::vector<std::vector<double>>* masks,
                                   double lambda, NetworkParams& grads) {
  if (indices.empty()) throw ValidationError("empty batch");
  grads = zeros_like(params);
  double loss = 0.0;
  Activations act;
  std::vector<double> d_h2(params.hidden2), d_h1(params.hidden1),
      d_concat(params.concat_dim());
  const double inv_n = 1.0 / static_cast<double>(indices.size());

  for (std::size_t pos = 0; pos < indices.size(); ++pos) {
    const TrainSample& s = samples[indices[pos]];
    const std::vector<double>* feat_row =
        params.has_feat() ? &data.features[s.question] : nullptr;
    const std::vector<double>* text_row =
        params.has_text() ? &data.text_embeds[s.question] : nullptr;
    const std::vector<double>* mask = masks ? &(*masks)[pos] : nullptr;
    double p = forward_sample(params, feat_row, text_row, s.student, mask, act);
    loss += bce_loss(p, s.y) * inv_n;

    double dz = (p - s.y) * inv_n;
    // head (no relu on z)
    grads.head.b[0] += dz;
    for (std::size_t i = 0; i < params.hidden2; ++i) {
      grads.head.w[i] += act.h2_out[i] * dz;
      d_h2[i] = params.head.w[i] * dz;
    }
    detail::dense_backward(params.h2, act.h1_out.data(), act.h2_out.data(), d_h2.data(),
                           grads.h2, d_h1.data(), true);
    detail::dense_backward(params.h1, act.concat.data(), act.h1_out.data(), d_h1.data(),
                           grads.h1, d_concat.data(), true);

    std::size_t off = 0;
    double* demb = d_concat.data();
    off += params.emb_dim;
    double* table_grad = grads.table.data() + s.student * params.emb_dim;
    for (std::size_t k = 0; k < params.emb_dim; ++k) {
      double g = demb[k];
      if (mask) g *= (*mask)[k];
      table_grad[k] += g;
    }
    if (params.has_feat()) {
      detail::dense_backward(params.feat, feat_row->data(), act.feat_out.data(),
                             d_concat.data() + off, grads.feat, nullptr, true);
      off += 32;
    }
    if (params.has_text()) {
      detail::dense_backward(params.text, text_row->data(), act.text_out.data(),
                             d_concat.data() + off, grads.text, nullptr, true);
      off += 32;
    }
  }

  if (lambda > 0.0) {
    loss += l2_term(params, lambda);
    auto reg = [&](const Dense& d, Dense& g) {
      for (std::size_t i = 0; i < d.w.size(); ++i) g.w[i] += 2.0 * lambda * d.w[i];
    };
    if (params.has_feat()) reg(params.feat, grads.feat);
    if (params.has_text()) reg(params.text, grads.text);
    reg(params.h1, grads.h1);
    reg(params.h2, grads.h2);
    reg(params.head, grads.head);
  }
  return loss;
}

// Mean BCE + L2 in eval mode (no dropout).
inline double eval_loss(const NetworkParams& params, const DataSet& data,
                        const std::vector<TrainSample>& samples, double lambda) {
  if (samples.empty()) throw ValidationError("eval_loss: empty sample set");
  double loss = 0.0;
  Activations act;
  for (const TrainSample& s : samples) {
    const std::vector<double>* feat_row =
        params.has_feat() ? &data.features[s.question] : nullptr;
    const std::vector<double>* text_row =
        params.has_text() ? &data.text_embeds[s.question] : nullptr;
    double p = forward_sample(params, feat_row, text_row, s.student, nullptr, act);
    loss += bce_loss(p, s.y);
  }
  return loss / static_cast<double>(samples.size()) + l2_term(params, lambda);
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

struct AdamState {
  long long t = 0;
  NetworkParams m;
  NetworkParams v;

  static AdamState for_params(const NetworkParams& p) {
    AdamState s;
    s.m = zeros_like(p);
    s.v = zeros_like(p);
    return s;
  }
};

inline void adam_step(NetworkParams& params, const NetworkParams& grads,
                      AdamState& state, const TrainConfig& cfg) {
  state.t += 1;
  double b1t = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  double b2t = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  std::vector<std::vector<double>*> pv, gv, mv, vv;
  auto collect = [](NetworkParams& n, std::vector<std::vector<double>*>& out) {
    visit_params(n, [&out](std::vector<double>& v) { out.push_back(&v); });
  };
  collect(params, pv);
  collect(const_cast<NetworkParams&>(grads), gv);
  collect(state.m, mv);
  collect(state.v, vv);
  for (std::size_t b = 0; b < pv.size(); ++b) {
    std::vector<double>& p = *pv[b];
    std::vector<double>& gr = *gv[b];
    std::vector<double>& m = *mv[b];
    std::vector<double>& v = *vv[b];
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gr[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gr[i] * gr[i];
      double mhat = m[i] / b1t;
      double vhat = v[i] / b2t;
      p[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.epsilon);
    }
  }
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

struct EpochStats {
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainResult {
  NetworkParams params;
  std::vector<EpochStats> history;
  int best_epoch = -1;  // 0-based index into history
  double best_val_loss = std::numeric_limits<double>::infinity();
  bool stopped_early = false;
};

inline TrainResult train(const DataSet& data, const TrainConfig& cfg) {
  data.validate();
  if (data.train.empty()) throw ValidationError("train: no training samples");
  if (data.val.empty()) throw ValidationError("train: no validation samples");
  if (cfg.batch_size == 0) throw ValidationError("train: batch_size must be positive");
  if (cfg.dropout < 0.0 || cfg.dropout >= 1.0)
    throw ValidationError("train: dropout must be in [0, 1)");

  NetworkParams params =
      init_params(data.student_ids.size(), data.feat_dim(), data.text_dim(), cfg);
  AdamState adam = AdamState::for_params(params);
  Rng rng(derive_seed(cfg.seed, "nn-train"));

  TrainResult result;
  NetworkParams best = params;
  int since_best = 0;
  double keep = 1.0 - cfg.dropout;

  std::vector<std::size_t> order(data.train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    std::size_t n_batches = 0;
    NetworkParams grads = zeros_like(params);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::vector<std::size_t> batch(order.begin() + static_cast<std::ptrdiff_t>(start),
                                     order.begin() + static_cast<std::ptrdiff_t>(end));
      std::vector<std::vector<double>> masks;
      const std::vector<std::vector<double>>* masks_ptr = nullptr;
      if (cfg.dropout > 0.0) {
        masks.resize(batch.size());
        for (std::vector<double>& m : masks) {
          m.resize(params.emb_dim);
          for (double& v : m) v = rng.bernoulli(keep) ? 1.0 / keep : 0.0;
        }
        masks_ptr = &masks;
      }
      double loss = batch_loss_and_grads(params, data, batch, data.train, masks_ptr,
                                         cfg.l2, grads);
      adam_step(params, grads, adam, cfg);
      epoch_loss += loss;
      ++n_batches;
    }
    EpochStats stats;
    stats.train_loss = epoch_loss / static_cast<double>(n_batches);
    stats.val_loss = eval_loss(params, data, data.val, cfg.l2);
    result.history.push_back(stats);

    if (stats.val_loss < result.best_val_loss) {
      result.best_val_loss = stats.val_loss;
      result.best_epoch = epoch;
      best = params;
      since_best = 0;
    } else {
      ++since_best;
      if (since_best >= cfg.patience) {
        result.stopped_early = true;
        break;
      }
    }
  }
  result.params = best;
  return result;
}

// ---------------------------------------------------------------------------
// Prediction and binarization
// ---------------------------------------------------------------------------

struct Model {
  NetworkParams params;
  std::vector<std::string> student_ids;

  std::size_t student_index(const std::string& id) const {
    for (std::size_t i = 0; i < student_ids.size(); ++i)
      if (student_ids[i] == id) return i;
    throw ValidationError("unknown student id '" + id + "'");
  }
};

inline double predict_one(const NetworkParams& params,
                          const std::vector<double>* feat_row,
                          const std::vector<double>* text_row, std::size_t student) {
  Activations act;
  return forward_sample(params, feat_row, text_row, student, nullptr, act);
}

// Rows follow student order, columns question order.
inline std::vector<std::vector<double>> predict_matrix(
    const NetworkParams& params, const std::vector<std::vector<double>>& features,
    const std::vector<std::vector<double>>& text_embeds, std::size_t n_questions) {
  std::vector<std::vector<double>> out(params.n_students,
                                       std::vector<double>(n_questions, 0.0));
  Activations act;
  for (std::size_t j = 0; j < params.n_students; ++j) {
    for (std::size_t i = 0; i < n_questions; ++i) {
      const std::vector<double>* feat_row = params.has_feat() ? &features[i] : nullptr;
      const std::vector<double>* text_row =
          params.has_text() ? &text_embeds[i] : nullptr;
      out[j][i] = forward_sample(params, feat_row, text_row, j, nullptr, act);
    }
  }
  return out;
}

inline int binarize(double p) { return p >= 0.5 ? 1 : 0; }

inline std::vector<std::vector<std::int8_t>> binarize_matrix(
    const std::vector<std::vector<double>>& probs) {
  std::vector<std::vector<std::int8_t>> out(probs.size());
  for (std::size_t j = 0; j < probs.size(); ++j) {
    out[j].resize(probs[j].size());
    for (std::size_t i = 0; i < probs[j].size(); ++i)
      out[j][i] = static_cast<std::int8_t>(binarize(probs[j][i]));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace detail {

inline nlohmann::json dense_to_json(const Dense& d) {
  nlohmann::json j;
  j["in"] = d.in;
  j["out"] = d.out;
  j["w"] = d.w;
  j["b"] = d.b;
  return j;
}

inline Dense dense_from_json(const nlohmann::json& j) {
  Dense d;
  d.in = j.at("in").get<std::size_t>();
  d.out = j.at("out").get<std::size_t>();
  d.w = j.at("w").get<std::vector<double>>();
  d.b = j.at("b").get<std::vector<double>>();
  if (d.w.size() != d.in * d.out || d.b.size() != d.out)
    throw ValidationError("model file: dense layer shape mismatch");
  return d;
}

}  // namespace detail

inline nlohmann::json model_to_json(const Model& model) {
  const NetworkParams& p = model.params;
  nlohmann::json j;
  j["n_students"] = p.n_students;
  j["emb_dim"] = p.emb_dim;
  j["feat_dim"] = p.feat_dim;
  j["text_dim"] = p.text_dim;
  j["hidden1"] = p.hidden1;
  j["hidden2"] = p.hidden2;
  j["student_ids"] = model.student_ids;
  j["table"] = p.table;
  if (p.has_feat()) j["feat"] = detail::dense_to_json(p.feat);
  if (p.has_text()) j["text"] = detail::dense_to_json(p.text);
  j["h1"] = detail::dense_to_json(p.h1);
  j["h2"] = detail::dense_to_json(p.h2);
  j["head"] = detail::dense_to_json(p.head);
  return j;
}

inline Model model_from_json(const nlohmann::json& j) {
  Model m;
  NetworkParams& p = m.params;
  p.n_students = j.at("n_students").get<std::size_t>();
  p.emb_dim = j.at("emb_dim").get<std::size_t>();
  p.feat_dim = j.at("feat_dim").get<std::size_t>();
  p.text_dim = j.at("text_dim").get<std::size_t>();
  p.hidden1 = j.at("hidden1").get<std::size_t>();
  p.hidden2 = j.at("hidden2").get<std::size_t>();
  m.student_ids = j.at("student_ids").get<std::vector<std::string>>();
  p.table = j.at("table").get<std::vector<double>>();
  if (m.student_ids.size() != p.n_students)
    throw ValidationError("model file: student id count mismatch");
  if (p.table.size() != p.n_students * p.emb_dim)
    throw ValidationError("model file: embedding table shape mismatch");
  if (p.has_feat()) p.feat = detail::dense_from_json(j.at("feat"));
  if (p.has_text()) p.text = detail::dense_from_json(j.at("text"));
  p.h1 = detail::dense_from_json(j.at("h1"));
  p.h2 = detail::dense_from_json(j.at("h2"));
  p.head = detail::dense_from_json(j.at("head"));
  if (p.h1.in != p.concat_dim())
    throw ValidationError("model file: trunk input width mismatch");
  return m;
}

inline void save_model(const Model& model, const std::filesystem::path& path) {
  write_text_file(path, model_to_json(model).dump(2) + "\n");
}

inline Model load_model(const std::filesystem::path& path) {
  nlohmann::json j = nlohmann::json::parse(read_text_file(path), nullptr, false);
  if (j.is_discarded())
    throw ValidationError(path.string() + ": malformed model JSON");
  return model_from_json(j);
}

}  // namespace psychoforge::nn
