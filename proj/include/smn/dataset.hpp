#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "smn/matrix.hpp"

namespace smn {

enum class Split { Train, Test };

const char* split_name(Split s);

/// One clip: identity, class label, video membership, split tag and its raw
/// per-segment feature rows (S x d).
struct ClipRecord {
  std::string clip_id;
  std::string video_id;
  int class_id = 0;
  Split split = Split::Train;
  Matrix segments;
  std::int64_t frame_count = 1;
};

struct Dataset {
  std::vector<ClipRecord> clips;
  std::vector<std::string> class_names;
  std::size_t raw_dim = 0;
  std::uint64_t rng_seed = 0;

  std::size_t num_classes() const { return class_names.size(); }
};

/// Synthetic dataset layout: groups of mutually similar classes, groups far
/// apart. Distances are absolute; express "k sigma" separations by passing
/// k * noise_sigma.
struct SynthSpec {
  std::size_t num_groups = 1;
  std::size_t classes_per_group = 1;
  std::size_t clips_per_class = 2;
  std::size_t dim = 1;
  double group_separation = 10.0;   // pairwise distance between group centers
  double within_group_spread = 1.0; // class-mean offset from its group center
  double noise_sigma = 1.0;         // per-segment Gaussian noise
  std::size_t segments_min = 1;
  std::size_t segments_max = 1;
  std::uint64_t seed = 0;
};

// Throws on any invariant violation (dims, duplicate ids, split coverage...).
void validate_dataset(const Dataset& ds);

Dataset load_dataset(const std::filesystem::path& manifest_path);

// Writes manifest.csv + one feature file per clip (+ seed sidecar); returns
// the manifest path. load_dataset inverts it exactly.
std::filesystem::path save_dataset(const Dataset& ds, const std::filesystem::path& dir);

// Deterministic in spec (seed included). Per class, an 80/20 train/test split
// by seeded shuffle; every class lands in both splits. One clip per video.
Dataset generate_synthetic(const SynthSpec& spec);

// Feature-file codec (magic SMNF, float32 LE payload). Values read back are
// widened to double; values written are narrowed to float.
Matrix read_feature_file(const std::filesystem::path& path);
void write_feature_file(const std::filesystem::path& path, const Matrix& m);

}  // namespace smn
