#include <doctest.h>

#include <cmath>
#include <set>

#include "smn/clustering.hpp"
#include "smn/error.hpp"
#include "smn/kernels.hpp"
#include "smn/rng.hpp"
#include "support.hpp"

using namespace smn;
using namespace smn_test;

namespace {

// isolated Gaussian blobs at pairwise distance `separation`
Matrix make_blobs(std::size_t blobs, std::size_t per_blob, std::size_t dim, double separation,
                  std::uint64_t seed, std::vector<int>* truth = nullptr) {
  Rng rng(seed);
  // orthogonal centers: separation/sqrt(2) along distinct axes
  Matrix x(blobs * per_blob, dim);
  const double scale = separation / std::sqrt(2.0);
  std::size_t row = 0;
  for (std::size_t b = 0; b < blobs; ++b) {
    for (std::size_t i = 0; i < per_blob; ++i, ++row) {
      for (std::size_t j = 0; j < dim; ++j) x.at(row, j) = rng.normal();
      x.at(row, b % dim) += scale;
      if (truth) truth->push_back(static_cast<int>(b));
    }
  }
  return x;
}

}  // namespace

TEST_SUITE("clustering") {

TEST_CASE("k=1 yields the global mean and the total squared deviation") {
  Rng rng(1);
  Matrix x(12, 3);
  for (auto& v : x.data) v = rng.normal();
  KmeansConfig cfg;
  cfg.k = 1;
  cfg.seed = 0;
  const KmeansResult res = run_kmeans(x, cfg);

  std::vector<double> mean(3, 0.0);
  for (std::size_t i = 0; i < x.rows; ++i) kern::axpy(1.0, x.row(i), mean.data(), 3);
  for (auto& v : mean) v /= 12.0;
  for (std::size_t j = 0; j < 3; ++j)
    CHECK(res.centroids.at(0, j) == doctest::Approx(mean[j]).epsilon(1e-12));

  double sse = 0.0;
  for (std::size_t i = 0; i < x.rows; ++i)
    sse += kern::squared_distance(x.row(i), mean.data(), 3);
  CHECK(res.inertia == doctest::Approx(sse).epsilon(1e-12));
}

TEST_CASE("well-separated blobs are recovered exactly") {
  std::vector<int> truth;
  const Matrix x = make_blobs(4, 40, 8, 10.0, 3, &truth);
  KmeansConfig cfg;
  cfg.k = 4;
  cfg.seed = 17;
  const KmeansResult res = run_kmeans(x, cfg);
  CHECK(adjusted_rand_index(truth, res.labels) == doctest::Approx(1.0));
}

TEST_CASE("k equal to the point count gives zero inertia") {
  Rng rng(2);
  Matrix x(7, 4);
  for (auto& v : x.data) v = rng.normal();
  KmeansConfig cfg;
  cfg.k = 7;
  cfg.seed = 4;
  const KmeansResult res = run_kmeans(x, cfg);
  CHECK(res.inertia == doctest::Approx(0.0));
  std::set<int> distinct(res.labels.begin(), res.labels.end());
  CHECK(distinct.size() == 7);
}

TEST_CASE("degenerate duplicated points still fill every cluster") {
  Matrix x(5, 2, 1.0);  // five identical points
  KmeansConfig cfg;
  cfg.k = 5;
  cfg.seed = 1;
  const KmeansResult res = run_kmeans(x, cfg);
  CHECK(res.inertia == doctest::Approx(0.0));
  std::set<int> distinct(res.labels.begin(), res.labels.end());
  CHECK(distinct.size() == 5);
}

TEST_CASE("too few points is an error") {
  Matrix x(2, 2, 0.0);
  KmeansConfig cfg;
  cfg.k = 3;
  CHECK_THROWS_WITH_AS(run_kmeans(x, cfg), doctest::Contains("TooFewPoints"), Error);
}

TEST_CASE("runs are deterministic and internally consistent") {
  std::vector<int> truth;
  const Matrix x = make_blobs(3, 25, 5, 6.0, 9, &truth);
  KmeansConfig cfg;
  cfg.k = 3;
  cfg.seed = 23;
  const KmeansResult a = run_kmeans(x, cfg);
  const KmeansResult b = run_kmeans(x, cfg);
  CHECK(a.labels == b.labels);
  CHECK(a.centroids.data == b.centroids.data);
  CHECK(a.inertia == b.inertia);

  // recomputed SSE matches the reported inertia
  double sse = 0.0;
  for (std::size_t i = 0; i < x.rows; ++i)
    sse += kern::squared_distance(x.row(i), a.centroids.row(static_cast<std::size_t>(a.labels[i])),
                                  x.cols);
  CHECK(std::abs(sse - a.inertia) <= 1e-9 * std::max(1.0, a.inertia));

  // the per-assignment SSE trace never increases
  for (std::size_t i = 1; i < a.inertia_trace.size(); ++i)
    CHECK(a.inertia_trace[i] <= a.inertia_trace[i - 1] * (1 + 1e-12) + 1e-9);

  // every cluster nonempty
  std::set<int> seen(a.labels.begin(), a.labels.end());
  CHECK(seen.size() == cfg.k);
}

TEST_CASE("random init mode works and differs in seeding behavior") {
  std::vector<int> truth;
  const Matrix x = make_blobs(3, 30, 6, 10.0, 13, &truth);
  KmeansConfig cfg;
  cfg.k = 3;
  cfg.seed = 2;
  cfg.init = KmeansConfig::Init::Random;
  const KmeansResult res = run_kmeans(x, cfg);
  CHECK(adjusted_rand_index(truth, res.labels) == doctest::Approx(1.0));
}

TEST_CASE("default_k floors the class/stream ratio") {
  CHECK(default_k(101, 4) == 25);
  CHECK(default_k(8, 4) == 2);
  CHECK_THROWS_WITH_AS(default_k(3, 4), doctest::Contains("InvalidCounts"), Error);
}

TEST_CASE("per-class subsampling") {
  SynthSpec spec;
  spec.num_groups = 2;
  spec.classes_per_group = 2;
  spec.clips_per_class = 5;  // 4 train + 1 test per class
  spec.dim = 4;
  spec.group_separation = 8.0;
  spec.within_group_spread = 1.0;
  spec.noise_sigma = 1.0;
  spec.seed = 3;
  const Dataset ds = generate_synthetic(spec);

  SUBCASE("fraction one keeps every training clip") {
    const auto all = subsample_per_class(ds, 1.0, 5);
    std::size_t train_count = 0;
    for (const auto& c : ds.clips)
      if (c.split == Split::Train) ++train_count;
    CHECK(all.size() == train_count);
  }
  SUBCASE("a quarter of four clips is exactly one") {
    const auto sub = subsample_per_class(ds, 0.25, 5);
    CHECK(sub.size() == ds.num_classes());  // one per class
    std::set<int> classes;
    for (std::size_t i : sub) classes.insert(ds.clips[i].class_id);
    CHECK(classes.size() == ds.num_classes());
  }
  SUBCASE("same seed, same subset") {
    CHECK(subsample_per_class(ds, 0.5, 7) == subsample_per_class(ds, 0.5, 7));
  }
  SUBCASE("fraction out of range is rejected") {
    CHECK_THROWS_WITH_AS(subsample_per_class(ds, 0.0, 1), doctest::Contains("InvalidSpec"),
                         Error);
    CHECK_THROWS_WITH_AS(subsample_per_class(ds, 1.5, 1), doctest::Contains("InvalidSpec"),
                         Error);
  }
}

TEST_CASE("assignment export round-trip") {
  TempDir tmp;
  std::vector<int> truth;
  const Matrix x = make_blobs(2, 10, 4, 8.0, 21, &truth);
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < x.rows; ++i) ids.push_back("clip_" + std::to_string(i));
  KmeansConfig cfg;
  cfg.k = 2;
  cfg.seed = 8;
  const ClusterAssignment ca = assign_clusters(x, ids, cfg);
  CHECK(ca.labels.size() == x.rows);
  save_cluster_csv(ca, tmp.path() / "clusters.csv");
  save_centroids(ca.centroids, tmp.path() / "centroids.smnc");
  const Matrix back = load_centroids(tmp.path() / "centroids.smnc");
  CHECK(back == ca.centroids);
}

}  // TEST_SUITE
