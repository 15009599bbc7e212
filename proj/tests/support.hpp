#pragma once

// Shared test scaffolding: scratch directories, an adjusted-Rand-index oracle
// and small dataset builders. Everything here is independent of the library's
// computational paths it is used to check.

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "smn/dataset.hpp"
#include "smn/matrix.hpp"

namespace smn_test {

class TempDir {
 public:
  TempDir() {
    static std::atomic<unsigned> counter{0};
    const auto base = std::filesystem::temp_directory_path();
    path_ = base / ("smn_test_" + std::to_string(::getpid()) + "_" +
                    std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline double comb2(double n) { return n * (n - 1.0) / 2.0; }

// Adjusted Rand index by pair counting.
inline double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  const std::size_t n = a.size();
  int ka = 0, kb = 0;
  for (int v : a) ka = std::max(ka, v + 1);
  for (int v : b) kb = std::max(kb, v + 1);
  std::vector<std::vector<std::size_t>> table(static_cast<std::size_t>(ka),
                                              std::vector<std::size_t>(static_cast<std::size_t>(kb), 0));
  for (std::size_t i = 0; i < n; ++i)
    table[static_cast<std::size_t>(a[i])][static_cast<std::size_t>(b[i])]++;
  double sum_ij = 0, sum_a = 0, sum_b = 0;
  for (int i = 0; i < ka; ++i) {
    std::size_t row = 0;
    for (int j = 0; j < kb; ++j) {
      sum_ij += comb2(static_cast<double>(table[i][j]));
      row += table[i][j];
    }
    sum_a += comb2(static_cast<double>(row));
  }
  for (int j = 0; j < kb; ++j) {
    std::size_t col = 0;
    for (int i = 0; i < ka; ++i) col += table[i][j];
    sum_b += comb2(static_cast<double>(col));
  }
  const double expected = sum_a * sum_b / comb2(static_cast<double>(n));
  const double max_index = 0.5 * (sum_a + sum_b);
  if (max_index == expected) return 1.0;  // degenerate: single cluster both sides
  return (sum_ij - expected) / (max_index - expected);
}

// Hand-built dataset helper: one clip from explicit segment rows.
inline smn::ClipRecord make_clip(const std::string& id, int class_id, smn::Split split,
                                 const std::vector<std::vector<double>>& rows,
                                 const std::string& video = "") {
  smn::ClipRecord clip;
  clip.clip_id = id;
  clip.video_id = video.empty() ? id : video;
  clip.class_id = class_id;
  clip.split = split;
  clip.segments = smn::Matrix(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) clip.segments.at(i, j) = rows[i][j];
  clip.frame_count = 16 * static_cast<std::int64_t>(rows.size());
  return clip;
}

}  // namespace smn_test
