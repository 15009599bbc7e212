#include "smn/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "smn/binio.hpp"
#include "smn/error.hpp"
#include "smn/kernels.hpp"
#include "smn/rng.hpp"

namespace smn {

namespace {

constexpr char kCentroidMagic[4] = {'S', 'M', 'N', 'C'};
constexpr std::uint16_t kCentroidVersion = 1;

std::vector<std::size_t> init_kmeanspp(const Matrix& x, std::size_t k, Rng& rng) {
  const std::size_t n = x.rows;
  std::vector<std::size_t> centers;
  centers.reserve(k);
  centers.push_back(rng.below(n));
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i)
    d2[i] = kern::squared_distance(x.row(i), x.row(centers[0]), x.cols);
  std::vector<char> chosen(n, 0);
  chosen[centers[0]] = 1;

  while (centers.size() < k) {
    const double total = kern::sum(d2.data(), n);
    std::size_t pick = n;
    if (total > 0) {
      const double r = rng.uniform01() * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc > r) {
          pick = i;
          break;
        }
      }
      if (pick == n) {  // FP slack at the end of the prefix walk
        for (std::size_t i = n; i-- > 0;) {
          if (d2[i] > 0) {
            pick = i;
            break;
          }
        }
      }
    }
    if (pick == n) {  // all remaining distances zero: take lowest unchosen index
      for (std::size_t i = 0; i < n; ++i) {
        if (!chosen[i]) {
          pick = i;
          break;
        }
      }
    }
    chosen[pick] = 1;
    centers.push_back(pick);
    for (std::size_t i = 0; i < n; ++i)
      d2[i] = std::min(d2[i], kern::squared_distance(x.row(i), x.row(pick), x.cols));
  }
  return centers;
}

std::vector<std::size_t> init_random(const Matrix& x, std::size_t k, Rng& rng) {
  std::vector<std::size_t> order(x.rows);
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  order.resize(k);
  return order;
}

}  // namespace

KmeansResult run_kmeans(const Matrix& points, const KmeansConfig& cfg) {
  const std::size_t n = points.rows;
  const std::size_t dim = points.cols;
  if (cfg.k < 1) fail(Err::TooFewPoints, "k must be >= 1");
  if (n < cfg.k)
    fail(Err::TooFewPoints,
         std::to_string(n) + " points for k=" + std::to_string(cfg.k));

  Rng rng(cfg.seed);
  const auto seeds = cfg.init == KmeansConfig::Init::KmeansPlusPlus
                         ? init_kmeanspp(points, cfg.k, rng)
                         : init_random(points, cfg.k, rng);

  KmeansResult res;
  res.centroids = Matrix(cfg.k, dim);
  for (std::size_t c = 0; c < cfg.k; ++c)
    std::memcpy(res.centroids.row(c), points.row(seeds[c]), dim * sizeof(double));
  res.labels.assign(n, 0);

  std::vector<double> point_d2(n, 0.0);
  std::vector<std::size_t> counts(cfg.k, 0);

  auto assign = [&]() {
    double sse = 0.0;
    std::fill(counts.begin(), counts.end(), std::size_t{0});
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < cfg.k; ++c) {
        const double d = kern::squared_distance(points.row(i), res.centroids.row(c), dim);
        if (d < best_d) {  // strict: ties stay with the lowest centroid id
          best_d = d;
          best = static_cast<int>(c);
        }
      }
      res.labels[i] = best;
      point_d2[i] = best_d;
      counts[static_cast<std::size_t>(best)]++;
      sse += best_d;
    }
    return sse;
  };

  auto repair_empty = [&]() {
    for (std::size_t c = 0; c < cfg.k; ++c) {
      if (counts[c] > 0) continue;
      // steal the point farthest from its own centroid (ties: lowest index),
      // never emptying another cluster in the process
      std::size_t victim = n;
      double worst = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (counts[static_cast<std::size_t>(res.labels[i])] <= 1) continue;
        if (point_d2[i] > worst) {
          worst = point_d2[i];
          victim = i;
        }
      }
      if (victim == n) continue;  // nothing stealable; cluster stays empty
      counts[static_cast<std::size_t>(res.labels[victim])]--;
      res.labels[victim] = static_cast<int>(c);
      counts[c] = 1;
      std::memcpy(res.centroids.row(c), points.row(victim), dim * sizeof(double));
      point_d2[victim] = 0.0;
    }
  };

  double prev_sse = std::numeric_limits<double>::infinity();
  Matrix next(cfg.k, dim);
  for (std::size_t iter = 1; iter <= cfg.max_iter; ++iter) {
    const double sse = assign();
    if (!(sse <= prev_sse + 1e-9 + 1e-12 * std::abs(prev_sse)))
      throw std::logic_error("kmeans inertia increased between iterations");
    res.inertia_trace.push_back(sse);
    prev_sse = sse;
    repair_empty();

    std::fill(next.data.begin(), next.data.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i)
      kern::axpy(1.0, points.row(i), next.row(static_cast<std::size_t>(res.labels[i])), dim);
    double movement = 0.0;
    for (std::size_t c = 0; c < cfg.k; ++c) {
      const double inv = 1.0 / static_cast<double>(counts[c]);
      for (std::size_t j = 0; j < dim; ++j) next.at(c, j) *= inv;
      movement =
          std::max(movement, std::sqrt(kern::squared_distance(next.row(c), res.centroids.row(c), dim)));
    }
    res.centroids = next;
    res.iterations_run = iter;
    if (movement <= cfg.tol) break;
  }

  // final assignment so (labels, centroids, inertia) are mutually consistent
  const double final_sse = assign();
  if (!(final_sse <= prev_sse + 1e-9 + 1e-12 * std::abs(prev_sse)))
    throw std::logic_error("kmeans inertia increased at final assignment");
  res.inertia_trace.push_back(final_sse);
  repair_empty();
  res.inertia = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    res.inertia += kern::squared_distance(
        points.row(i), res.centroids.row(static_cast<std::size_t>(res.labels[i])), dim);
  return res;
}

ClusterAssignment assign_clusters(const Matrix& points, const std::vector<std::string>& clip_ids,
                                  const KmeansConfig& cfg) {
  if (clip_ids.size() != points.rows)
    fail(Err::DimensionMismatch, "clip id count does not match point count");
  KmeansResult r = run_kmeans(points, cfg);
  ClusterAssignment ca;
  ca.centroids = std::move(r.centroids);
  ca.inertia = r.inertia;
  ca.iterations_run = r.iterations_run;
  ca.inertia_trace = std::move(r.inertia_trace);
  ca.included_clips = clip_ids;
  for (std::size_t i = 0; i < clip_ids.size(); ++i) ca.labels[clip_ids[i]] = r.labels[i];
  return ca;
}

std::size_t default_k(std::size_t num_classes, std::size_t num_streams) {
  if (num_streams < 1 || num_classes < num_streams)
    fail(Err::InvalidCounts, "need class count >= stream count >= 1");
  return num_classes / num_streams;
}

std::vector<std::size_t> subsample_per_class(const Dataset& ds, double fraction,
                                             std::uint64_t seed) {
  if (!(fraction > 0.0) || fraction > 1.0)
    fail(Err::InvalidSpec, "subsample fraction must be in (0,1]");
  Rng rng(seed);
  std::vector<std::vector<std::size_t>> per_class(ds.num_classes());
  for (std::size_t i = 0; i < ds.clips.size(); ++i) {
    if (ds.clips[i].split == Split::Train)
      per_class[static_cast<std::size_t>(ds.clips[i].class_id)].push_back(i);
  }
  std::vector<std::size_t> out;
  for (auto& members : per_class) {
    if (members.empty()) continue;
    const auto n = members.size();
    const auto takef = std::ceil(fraction * static_cast<double>(n) - 1e-9);
    const auto take = std::clamp<std::size_t>(static_cast<std::size_t>(takef), 1, n);
    rng.shuffle(members);
    out.insert(out.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(take));
  }
  std::sort(out.begin(), out.end());
  return out;
}

void save_cluster_csv(const ClusterAssignment& ca, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) fail(Err::IoFailure, "cannot write " + path.string());
  f << "clip_id,cluster_id\n";
  for (const auto& [clip, cluster] : ca.labels) f << clip << ',' << cluster << '\n';
  if (!f) fail(Err::IoFailure, "write failed for " + path.string());
}

void save_centroids(const Matrix& centroids, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail(Err::IoFailure, "cannot write " + path.string());
  f.write(kCentroidMagic, 4);
  io::put(f, kCentroidVersion);
  io::put(f, static_cast<std::uint32_t>(centroids.rows));
  io::put(f, static_cast<std::uint32_t>(centroids.cols));
  for (double v : centroids.data) io::put(f, v);
  if (!f) fail(Err::IoFailure, "write failed for " + path.string());
}

Matrix load_centroids(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(Err::MissingFile, "cannot open " + path.string());
  char magic[4];
  if (!f.read(magic, 4) || std::memcmp(magic, kCentroidMagic, 4) != 0)
    fail(Err::CorruptHeader, "bad magic in " + path.string());
  std::uint16_t version = 0;
  std::uint32_t rows = 0, cols = 0;
  if (!io::get(f, version) || version != kCentroidVersion)
    fail(Err::CorruptHeader, "unsupported version in " + path.string());
  if (!io::get(f, rows) || !io::get(f, cols))
    fail(Err::CorruptHeader, "bad shape in " + path.string());
  Matrix m(rows, cols);
  for (auto& v : m.data)
    if (!io::get(f, v)) fail(Err::CorruptHeader, "truncated payload in " + path.string());
  return m;
}

}  // namespace smn
