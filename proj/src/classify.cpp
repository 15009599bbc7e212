#include "smn/classify.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "smn/binio.hpp"
#include "smn/dataset.hpp"
#include "smn/error.hpp"
#include "smn/kernels.hpp"
#include "smn/rng.hpp"

namespace smn {

using nlohmann::json;

const char* classifier_kind_name(ClassifierKind k) {
  return k == ClassifierKind::Softmax ? "softmax" : "mlp1";
}

ClassifierKind parse_classifier_kind(const std::string& name) {
  if (name == "softmax") return ClassifierKind::Softmax;
  if (name == "mlp1") return ClassifierKind::Mlp1;
  fail(Err::InvalidSpec, "unknown classifier kind '" + name + "'");
}

std::size_t ModelShape::param_count() const {
  if (kind == ClassifierKind::Softmax) return classes * input_dim + classes;
  return hidden * input_dim + hidden + classes * hidden + classes;
}

namespace {

void softmax_inplace(std::vector<double>& z) {
  const double m = *std::max_element(z.begin(), z.end());
  double total = 0.0;
  for (auto& v : z) {
    v = std::exp(v - m);
    total += v;
  }
  for (auto& v : z) v /= total;
}

struct Mlp1View {
  // parameter windows into the flat vector
  const double *w1, *b1, *w2, *b2;
  double *gw1, *gb1, *gw2, *gb2;
};

}  // namespace

double model_loss_grad(const ModelShape& shape, std::span<const double> params, const Matrix& x,
                       const std::vector<int>& labels, double l2, std::span<double> grad) {
  const std::size_t n = x.rows;
  const std::size_t p = shape.input_dim;
  const std::size_t c = shape.classes;
  std::fill(grad.begin(), grad.end(), 0.0);
  const double inv_n = 1.0 / static_cast<double>(n);
  double loss = 0.0;

  if (shape.kind == ClassifierKind::Softmax) {
    const double* w = params.data();
    const double* b = params.data() + c * p;
    double* gw = grad.data();
    double* gb = grad.data() + c * p;
    std::vector<double> probs(c);
    for (std::size_t i = 0; i < n; ++i) {
      const double* xi = x.row(i);
      for (std::size_t j = 0; j < c; ++j) probs[j] = kern::dot(w + j * p, xi, p) + b[j];
      softmax_inplace(probs);
      const auto y = static_cast<std::size_t>(labels[i]);
      loss -= std::log(std::max(probs[y], 1e-300)) * inv_n;
      for (std::size_t j = 0; j < c; ++j) {
        const double delta = (probs[j] - (j == y ? 1.0 : 0.0)) * inv_n;
        kern::axpy(delta, xi, gw + j * p, p);
        gb[j] += delta;
      }
    }
    for (std::size_t idx = 0; idx < c * p; ++idx) {
      loss += 0.5 * l2 * w[idx] * w[idx];
      gw[idx] += l2 * w[idx];
    }
    return loss;
  }

  // mlp1: rectifier hidden layer
  const std::size_t h = shape.hidden;
  const double* w1 = params.data();
  const double* b1 = w1 + h * p;
  const double* w2 = b1 + h;
  const double* b2 = w2 + c * h;
  double* gw1 = grad.data();
  double* gb1 = gw1 + h * p;
  double* gw2 = gb1 + h;
  double* gb2 = gw2 + c * h;

  std::vector<double> hidden(h), probs(c), dh(h);
  for (std::size_t i = 0; i < n; ++i) {
    const double* xi = x.row(i);
    for (std::size_t j = 0; j < h; ++j)
      hidden[j] = std::max(0.0, kern::dot(w1 + j * p, xi, p) + b1[j]);
    for (std::size_t j = 0; j < c; ++j) probs[j] = kern::dot(w2 + j * h, hidden.data(), h) + b2[j];
    softmax_inplace(probs);
    const auto y = static_cast<std::size_t>(labels[i]);
    loss -= std::log(std::max(probs[y], 1e-300)) * inv_n;

    std::fill(dh.begin(), dh.end(), 0.0);
    for (std::size_t j = 0; j < c; ++j) {
      const double delta = (probs[j] - (j == y ? 1.0 : 0.0)) * inv_n;
      kern::axpy(delta, hidden.data(), gw2 + j * h, h);
      gb2[j] += delta;
      kern::axpy(delta, w2 + j * h, dh.data(), h);
    }
    for (std::size_t j = 0; j < h; ++j) {
      if (hidden[j] <= 0.0) continue;  // rectifier gate
      kern::axpy(dh[j], xi, gw1 + j * p, p);
      gb1[j] += dh[j];
    }
  }
  for (std::size_t idx = 0; idx < h * p; ++idx) {
    loss += 0.5 * l2 * w1[idx] * w1[idx];
    gw1[idx] += l2 * w1[idx];
  }
  for (std::size_t idx = 0; idx < c * h; ++idx) {
    loss += 0.5 * l2 * w2[idx] * w2[idx];
    gw2[idx] += l2 * w2[idx];
  }
  return loss;
}

std::vector<double> model_forward(const ModelShape& shape, std::span<const double> params,
                                  std::span<const double> v) {
  if (v.size() != shape.input_dim)
    fail(Err::DimensionMismatch, "input length " + std::to_string(v.size()) + ", model expects " +
                                     std::to_string(shape.input_dim));
  const std::size_t p = shape.input_dim;
  const std::size_t c = shape.classes;
  std::vector<double> probs(c);
  if (shape.kind == ClassifierKind::Softmax) {
    const double* w = params.data();
    const double* b = params.data() + c * p;
    for (std::size_t j = 0; j < c; ++j) probs[j] = kern::dot(w + j * p, v.data(), p) + b[j];
  } else {
    const std::size_t h = shape.hidden;
    const double* w1 = params.data();
    const double* b1 = w1 + h * p;
    const double* w2 = b1 + h;
    const double* b2 = w2 + c * h;
    std::vector<double> hidden(h);
    for (std::size_t j = 0; j < h; ++j)
      hidden[j] = std::max(0.0, kern::dot(w1 + j * p, v.data(), p) + b1[j]);
    for (std::size_t j = 0; j < c; ++j) probs[j] = kern::dot(w2 + j * h, hidden.data(), h) + b2[j];
  }
  softmax_inplace(probs);
  return probs;
}

TrainedStream train_stream(const StreamPlan& plan, int stream_id, const Matrix& x,
                           const std::vector<int>& labels, const ClassifierConfig& cfg) {
  if (stream_id < 0 || static_cast<std::size_t>(stream_id) >= plan.num_streams)
    fail(Err::UntrainedStream, "stream id out of range");
  if (x.rows != labels.size()) fail(Err::DimensionMismatch, "feature/label count mismatch");
  if (!(cfg.learning_rate > 0) || cfg.max_epochs < 1 ||
      (cfg.kind == ClassifierKind::Mlp1 && cfg.hidden_units < 1))
    fail(Err::InvalidSpec, "classifier config requires positive rates and epochs");

  TrainedStream ts;
  ts.stream_id = stream_id;
  ts.roster = plan.stream_rosters.at(static_cast<std::size_t>(stream_id));
  ts.config = cfg;
  const std::size_t c = ts.roster.size();
  if (c == 0) fail(Err::EmptyRosterClass, "stream roster is empty");

  std::vector<int> local(labels.size());
  std::vector<std::size_t> per_class(c, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto it = std::lower_bound(ts.roster.begin(), ts.roster.end(), labels[i]);
    if (it == ts.roster.end() || *it != labels[i])
      fail(Err::UnknownClass, "label " + std::to_string(labels[i]) + " not in roster of stream " +
                                  std::to_string(stream_id));
    local[i] = static_cast<int>(it - ts.roster.begin());
    per_class[static_cast<std::size_t>(local[i])]++;
  }
  for (std::size_t j = 0; j < c; ++j) {
    if (per_class[j] == 0)
      fail(Err::EmptyRosterClass,
           "roster class " + std::to_string(ts.roster[j]) + " has no training samples");
  }

  ts.shape = {cfg.kind, x.cols, c, cfg.kind == ClassifierKind::Mlp1 ? cfg.hidden_units : 0};
  ts.params.assign(ts.shape.param_count(), 0.0);
  if (cfg.kind == ClassifierKind::Mlp1) {
    Rng rng(cfg.seed);
    const std::size_t h = cfg.hidden_units;
    const double s1 = std::sqrt(2.0 / static_cast<double>(x.cols));
    const double s2 = std::sqrt(2.0 / static_cast<double>(h));
    for (std::size_t i = 0; i < h * x.cols; ++i) ts.params[i] = s1 * rng.normal();
    for (std::size_t i = 0; i < c * h; ++i) ts.params[h * x.cols + h + i] = s2 * rng.normal();
  }

  std::vector<double> grad(ts.params.size());
  double prev_loss = std::numeric_limits<double>::infinity();
  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    const double loss = model_loss_grad(ts.shape, ts.params, x, local, cfg.l2_lambda, grad);
    if (!std::isfinite(loss)) fail(Err::DivergedLoss, "non-finite training loss");
    ts.training_loss_curve.push_back(loss);
    kern::axpy(-cfg.learning_rate, grad.data(), ts.params.data(), ts.params.size());
    if (std::abs(prev_loss - loss) < cfg.early_stop_tol) break;
    prev_loss = loss;
  }

  // per-class statistics used by the weighted fusion rules
  ts.class_means.assign(c, std::vector<double>(x.cols, 0.0));
  ts.member_bank.clear();
  for (std::size_t j = 0; j < c; ++j) ts.member_bank.emplace_back(per_class[j], x.cols);
  std::vector<std::size_t> fill(c, 0);
  for (std::size_t i = 0; i < x.rows; ++i) {
    const auto j = static_cast<std::size_t>(local[i]);
    std::memcpy(ts.member_bank[j].row(fill[j]++), x.row(i), x.cols * sizeof(double));
    kern::axpy(1.0, x.row(i), ts.class_means[j].data(), x.cols);
  }
  for (std::size_t j = 0; j < c; ++j) {
    const double inv = 1.0 / static_cast<double>(per_class[j]);
    for (auto& v : ts.class_means[j]) v *= inv;
  }
  return ts;
}

std::vector<double> predict_proba(const TrainedStream& ts, std::span<const double> v) {
  return model_forward(ts.shape, ts.params, v);
}

double stream_accuracy(const TrainedStream& ts, const Matrix& x, const std::vector<int>& labels) {
  if (x.rows == 0) fail(Err::EmptyTestSet, "no test clips for stream accuracy");
  if (x.rows != labels.size()) fail(Err::DimensionMismatch, "feature/label count mismatch");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < x.rows; ++i) {
    const auto probs = predict_proba(ts, x.row_span(i));
    std::size_t best = 0;
    for (std::size_t j = 1; j < probs.size(); ++j) {
      if (probs[j] > probs[best]) best = j;  // ties keep the lowest roster index
    }
    if (ts.roster[best] == labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(x.rows);
}

void save_stream(const TrainedStream& ts, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  const std::string tag = "stream_" + std::to_string(ts.stream_id);

  json j;
  j["stream_id"] = ts.stream_id;
  j["kind"] = classifier_kind_name(ts.shape.kind);
  j["roster"] = ts.roster;
  j["input_dim"] = ts.shape.input_dim;
  j["hidden_units"] = ts.shape.hidden;
  j["l2_lambda"] = ts.config.l2_lambda;
  j["learning_rate"] = ts.config.learning_rate;
  j["max_epochs"] = ts.config.max_epochs;
  j["early_stop_tol"] = ts.config.early_stop_tol;
  j["seed"] = ts.config.seed;
  j["epochs_run"] = ts.training_loss_curve.size();
  std::ofstream jf(dir / (tag + ".json"), std::ios::trunc);
  if (!jf) fail(Err::IoFailure, "cannot write model header for " + tag);
  jf << j.dump(2) << '\n';

  // parameter blob: params, then the per-class means (float64 LE)
  std::ofstream bf(dir / (tag + ".params.bin"), std::ios::binary | std::ios::trunc);
  if (!bf) fail(Err::IoFailure, "cannot write params for " + tag);
  io::put(bf, static_cast<std::uint64_t>(ts.params.size()));
  for (double v : ts.params) io::put(bf, v);
  io::put(bf, static_cast<std::uint64_t>(ts.class_means.size()));
  for (const auto& mean : ts.class_means) {
    io::put(bf, static_cast<std::uint64_t>(mean.size()));
    for (double v : mean) io::put(bf, v);
  }
  if (!bf) fail(Err::IoFailure, "write failed for " + tag + ".params.bin");

  for (std::size_t j2 = 0; j2 < ts.member_bank.size(); ++j2) {
    write_feature_file(dir / (tag + "_bank_" + std::to_string(ts.roster[j2]) + ".smnf"),
                       ts.member_bank[j2]);
  }
}

TrainedStream load_stream(const std::filesystem::path& dir, int stream_id) {
  const std::string tag = "stream_" + std::to_string(stream_id);
  std::ifstream jf(dir / (tag + ".json"));
  if (!jf) fail(Err::MissingFile, "cannot open model header for " + tag);
  json j;
  try {
    jf >> j;
  } catch (...) {
    fail(Err::CorruptHeader, "unparseable model header for " + tag);
  }
  TrainedStream ts;
  ts.stream_id = stream_id;
  ts.roster = j.at("roster").get<std::vector<int>>();
  ts.config.kind = parse_classifier_kind(j.at("kind").get<std::string>());
  ts.config.l2_lambda = j.value("l2_lambda", 1e-4);
  ts.config.learning_rate = j.value("learning_rate", 0.1);
  ts.config.max_epochs = j.value("max_epochs", std::size_t{500});
  ts.config.early_stop_tol = j.value("early_stop_tol", 1e-7);
  ts.config.seed = j.value("seed", std::uint64_t{0});
  ts.shape = {ts.config.kind, j.at("input_dim").get<std::size_t>(), ts.roster.size(),
              j.at("hidden_units").get<std::size_t>()};
  ts.config.hidden_units = std::max<std::size_t>(ts.shape.hidden, 1);

  std::ifstream bf(dir / (tag + ".params.bin"), std::ios::binary);
  if (!bf) fail(Err::MissingFile, "cannot open params for " + tag);
  std::uint64_t count = 0;
  if (!io::get(bf, count) || count != ts.shape.param_count())
    fail(Err::CorruptHeader, "parameter blob shape mismatch for " + tag);
  ts.params.resize(count);
  for (auto& v : ts.params)
    if (!io::get(bf, v)) fail(Err::CorruptHeader, "truncated params for " + tag);
  std::uint64_t n_means = 0;
  if (!io::get(bf, n_means) || n_means != ts.roster.size())
    fail(Err::CorruptHeader, "class-mean count mismatch for " + tag);
  ts.class_means.resize(n_means);
  for (auto& mean : ts.class_means) {
    std::uint64_t len = 0;
    if (!io::get(bf, len) || len != ts.shape.input_dim)
      fail(Err::CorruptHeader, "class-mean length mismatch for " + tag);
    mean.resize(len);
    for (auto& v : mean)
      if (!io::get(bf, v)) fail(Err::CorruptHeader, "truncated class means for " + tag);
  }

  for (int cls : ts.roster) {
    ts.member_bank.push_back(
        read_feature_file(dir / (tag + "_bank_" + std::to_string(cls) + ".smnf")));
  }
  return ts;
}

}  // namespace smn
