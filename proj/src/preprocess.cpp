#include "smn/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include <Eigen/Dense>

#include "smn/binio.hpp"
#include "smn/error.hpp"
#include "smn/kernels.hpp"

namespace smn {

namespace {

constexpr char kPcaMagic[4] = {'S', 'M', 'N', 'P'};
constexpr std::uint16_t kPcaVersion = 1;

using RowMajorMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

// largest-magnitude entry positive; ties to the lowest index
void fix_sign(double* row, std::size_t n) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (std::abs(row[i]) > std::abs(row[best])) best = i;
  }
  if (row[best] < 0) {
    for (std::size_t i = 0; i < n; ++i) row[i] = -row[i];
  }
}

}  // namespace

std::size_t resolve_target(const Dataset& ds, const EqualizationConfig& cfg) {
  std::size_t max_s = 0;
  for (const auto& c : ds.clips) {
    if (c.split == Split::Train) max_s = std::max(max_s, c.segments.rows);
  }
  if (max_s == 0) fail(Err::EmptyTestSet, "dataset has no training clips");
  if (cfg.target_segments) {
    if (*cfg.target_segments < max_s)
      fail(Err::TargetBelowObserved,
           "fixed target " + std::to_string(*cfg.target_segments) +
               " below observed training maximum " + std::to_string(max_s));
    return *cfg.target_segments;
  }
  return max_s;
}

std::vector<double> equalize(const ClipRecord& clip, std::size_t target) {
  const std::size_t s = clip.segments.rows;
  const std::size_t d = clip.segments.cols;
  if (s == 0) fail(Err::InvalidDataset, "clip " + clip.clip_id + " has no segments");
  if (target < s)
    fail(Err::TargetBelowObserved, "clip " + clip.clip_id + " has " + std::to_string(s) +
                                       " segments, target " + std::to_string(target));
  std::vector<double> out(target * d);
  for (std::size_t i = 0; i < target; ++i) {
    const double* src = clip.segments.row(i % s);
    std::memcpy(out.data() + i * d, src, d * sizeof(double));
  }
  return out;
}

PcaModel fit_pca(const Matrix& train_vectors, std::size_t requested_components) {
  const std::size_t n = train_vectors.rows;
  const std::size_t dim = train_vectors.cols;
  if (n < 2) fail(Err::InsufficientData, "PCA needs at least 2 training vectors");
  if (requested_components < 1) fail(Err::InsufficientData, "requested components must be >= 1");

  PcaModel model;
  model.mean.assign(dim, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    kern::axpy(1.0, train_vectors.row(i), model.mean.data(), dim);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (auto& v : model.mean) v *= inv_n;

  RowMajorMap x(train_vectors.data.data(), static_cast<Eigen::Index>(n),
                static_cast<Eigen::Index>(dim));
  Eigen::Map<const Eigen::VectorXd> mean(model.mean.data(), static_cast<Eigen::Index>(dim));
  Eigen::MatrixXd centered = x.rowwise() - mean.transpose();

  const double denom = static_cast<double>(n - 1);
  Eigen::VectorXd eigenvalues;   // variances, ascending from the solver
  Eigen::MatrixXd basis;         // columns = candidate components
  if (dim <= n) {
    Eigen::MatrixXd cov = centered.transpose() * centered / denom;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    eigenvalues = es.eigenvalues();
    basis = es.eigenvectors();
  } else {
    // Gram route: eigenvectors of (X Xt) mapped back through Xt
    Eigen::MatrixXd gram = centered * centered.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
    const Eigen::VectorXd& mu = es.eigenvalues();
    eigenvalues = mu / denom;
    basis.resize(static_cast<Eigen::Index>(dim), mu.size());
    for (Eigen::Index j = 0; j < mu.size(); ++j) {
      if (mu(j) > 0) {
        basis.col(j) = centered.transpose() * es.eigenvectors().col(j) / std::sqrt(mu(j));
      } else {
        basis.col(j).setZero();
      }
    }
  }

  // rank cut: keep directions carrying non-negligible variance
  const double max_ev = std::max(eigenvalues.size() ? eigenvalues(eigenvalues.size() - 1) : 0.0, 0.0);
  const double cutoff = max_ev * 1e-10;
  std::vector<Eigen::Index> keep;
  for (Eigen::Index j = eigenvalues.size() - 1; j >= 0; --j) {
    if (eigenvalues(j) > cutoff && eigenvalues(j) > 0) keep.push_back(j);
  }
  const std::size_t rank = std::min<std::size_t>(keep.size(), std::min(n - 1, dim));
  const std::size_t p = std::min(requested_components, rank);
  if (p == 0) fail(Err::InsufficientData, "training data has zero variance");

  model.components = Matrix(p, dim);
  model.explained_variance.resize(p);
  for (std::size_t i = 0; i < p; ++i) {
    const Eigen::Index j = keep[i];
    for (std::size_t kcol = 0; kcol < dim; ++kcol)
      model.components.at(i, kcol) = basis(static_cast<Eigen::Index>(kcol), j);
    fix_sign(model.components.row(i), dim);
    model.explained_variance[i] = std::max(eigenvalues(j), 0.0);
  }
  return model;
}

std::vector<double> project(const PcaModel& model, std::span<const double> v) {
  const std::size_t dim = model.input_dim();
  if (v.size() != dim)
    fail(Err::DimensionMismatch, "project: vector length " + std::to_string(v.size()) +
                                     ", model expects " + std::to_string(dim));
  std::vector<double> centered(v.begin(), v.end());
  kern::axpy(-1.0, model.mean.data(), centered.data(), dim);
  std::vector<double> out(model.num_components());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = kern::dot(model.components.row(i), centered.data(), dim);
  return out;
}

void save_pca(const PcaModel& model, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail(Err::IoFailure, "cannot write " + path.string());
  f.write(kPcaMagic, 4);
  io::put(f, kPcaVersion);
  io::put(f, static_cast<std::uint32_t>(model.num_components()));
  io::put(f, static_cast<std::uint32_t>(model.input_dim()));
  for (double v : model.mean) io::put(f, v);
  for (double v : model.components.data) io::put(f, v);
  for (double v : model.explained_variance) io::put(f, v);
  if (!f) fail(Err::IoFailure, "write failed for " + path.string());
}

PcaModel load_pca(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(Err::MissingFile, "cannot open " + path.string());
  char magic[4];
  if (!f.read(magic, 4) || std::memcmp(magic, kPcaMagic, 4) != 0)
    fail(Err::CorruptHeader, "bad magic in " + path.string());
  std::uint16_t version = 0;
  std::uint32_t p = 0, dim = 0;
  if (!io::get(f, version) || version != kPcaVersion)
    fail(Err::CorruptHeader, "unsupported version in " + path.string());
  if (!io::get(f, p) || !io::get(f, dim) || p == 0 || dim == 0)
    fail(Err::CorruptHeader, "bad shape in " + path.string());
  PcaModel model;
  model.mean.resize(dim);
  model.components = Matrix(p, dim);
  model.explained_variance.resize(p);
  auto read_all = [&](std::vector<double>& v) {
    for (auto& x : v)
      if (!io::get(f, x)) fail(Err::CorruptHeader, "truncated payload in " + path.string());
  };
  read_all(model.mean);
  read_all(model.components.data);
  read_all(model.explained_variance);
  return model;
}

}  // namespace smn
