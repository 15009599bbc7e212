#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "smn/matrix.hpp"
#include "smn/partition.hpp"

namespace smn {

enum class ClassifierKind { Softmax, Mlp1 };

const char* classifier_kind_name(ClassifierKind k);
ClassifierKind parse_classifier_kind(const std::string& name);

struct ClassifierConfig {
  ClassifierKind kind = ClassifierKind::Softmax;
  double l2_lambda = 1e-4;
  double learning_rate = 0.1;
  std::size_t max_epochs = 500;
  double early_stop_tol = 1e-7;
  std::size_t hidden_units = 128;  // mlp1 only
  std::uint64_t seed = 0;
};

/// Flat-parameter model description. Softmax: [W (C x p), b (C)].
/// Mlp1: [W1 (H x p), b1 (H), W2 (C x H), b2 (C)] with rectifier hidden units.
struct ModelShape {
  ClassifierKind kind = ClassifierKind::Softmax;
  std::size_t input_dim = 0;
  std::size_t classes = 0;
  std::size_t hidden = 0;

  std::size_t param_count() const;
};

// Mean cross-entropy + (l2/2)*||weights||^2 (biases excluded); writes the
// analytic gradient into grad (same length as params). Exposed so tests can
// check it against finite differences.
double model_loss_grad(const ModelShape& shape, std::span<const double> params, const Matrix& x,
                       const std::vector<int>& labels, double l2, std::span<double> grad);

std::vector<double> model_forward(const ModelShape& shape, std::span<const double> params,
                                  std::span<const double> v);

/// One trained stream: roster, fitted parameters, and the per-class statistics
/// fusion needs (mean vectors and the full member bank).
struct TrainedStream {
  int stream_id = 0;
  std::vector<int> roster;  // global class ids, ascending
  ModelShape shape;
  std::vector<double> params;
  std::vector<std::vector<double>> class_means;  // per roster position
  std::vector<Matrix> member_bank;               // per roster position
  std::vector<double> training_loss_curve;
  ClassifierConfig config;
};

// Full-batch gradient descent, deterministic given cfg.seed. Labels are
// global class ids and must all belong to the stream's roster.
TrainedStream train_stream(const StreamPlan& plan, int stream_id, const Matrix& x,
                           const std::vector<int>& labels, const ClassifierConfig& cfg);

// Probabilities over the roster; nonnegative, sums to 1 within 1e-9.
std::vector<double> predict_proba(const TrainedStream& ts, std::span<const double> v);

// Fraction of clips whose argmax prediction matches the label (ties to the
// lowest roster index). Labels are global ids restricted to the roster.
double stream_accuracy(const TrainedStream& ts, const Matrix& x, const std::vector<int>& labels);

void save_stream(const TrainedStream& ts, const std::filesystem::path& dir);
TrainedStream load_stream(const std::filesystem::path& dir, int stream_id);

}  // namespace smn
