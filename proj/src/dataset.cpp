#include "smn/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "smn/binio.hpp"
#include "smn/error.hpp"
#include "smn/rng.hpp"

#include <json.hpp>

namespace smn {

namespace fs = std::filesystem;

const char* split_name(Split s) { return s == Split::Train ? "train" : "test"; }

namespace {

constexpr char kFeatureMagic[4] = {'S', 'M', 'N', 'F'};
constexpr std::uint16_t kFeatureVersion = 1;
constexpr std::int64_t kFramesPerSegment = 16;  // default when a manifest omits frame_count

bool safe_id(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.'))
      return false;
  }
  return true;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

Matrix read_feature_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(Err::MissingFile, "cannot open feature file " + path.string());
  char magic[4];
  if (!f.read(magic, 4) || std::memcmp(magic, kFeatureMagic, 4) != 0)
    fail(Err::CorruptHeader, "bad magic in " + path.string());
  std::uint16_t version = 0;
  std::uint32_t rows = 0, cols = 0;
  if (!io::get(f, version) || version != kFeatureVersion)
    fail(Err::CorruptHeader, "unsupported version in " + path.string());
  if (!io::get(f, rows) || !io::get(f, cols) || rows == 0 || cols == 0)
    fail(Err::CorruptHeader, "bad shape in " + path.string());
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.data.size(); ++i) {
    float v = 0.f;
    if (!io::get(f, v)) fail(Err::CorruptHeader, "truncated payload in " + path.string());
    m.data[i] = static_cast<double>(v);
  }
  return m;
}

void write_feature_file(const fs::path& path, const Matrix& m) {
  if (m.empty()) fail(Err::InvalidDataset, "refusing to write empty feature matrix");
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail(Err::IoFailure, "cannot write " + path.string());
  f.write(kFeatureMagic, 4);
  io::put(f, kFeatureVersion);
  io::put(f, static_cast<std::uint32_t>(m.rows));
  io::put(f, static_cast<std::uint32_t>(m.cols));
  for (double v : m.data) io::put(f, static_cast<float>(v));
  if (!f) fail(Err::IoFailure, "write failed for " + path.string());
}

void validate_dataset(const Dataset& ds) {
  if (ds.clips.empty()) fail(Err::InvalidDataset, "dataset has no clips");
  if (ds.class_names.empty()) fail(Err::InvalidDataset, "dataset has no classes");
  const std::size_t m = ds.class_names.size();
  std::set<std::string> ids;
  std::vector<char> has_train(m, 0), has_test(m, 0);
  for (const auto& c : ds.clips) {
    if (!ids.insert(c.clip_id).second) fail(Err::DuplicateClipId, c.clip_id);
    if (c.class_id < 0 || static_cast<std::size_t>(c.class_id) >= m)
      fail(Err::UnknownClass, "clip " + c.clip_id + " references class out of range");
    if (c.segments.rows == 0) fail(Err::InvalidDataset, "clip " + c.clip_id + " has no segments");
    if (c.segments.cols != ds.raw_dim)
      fail(Err::DimensionMismatch, "clip " + c.clip_id + " dim mismatch");
    if (c.frame_count < 1) fail(Err::InvalidDataset, "clip " + c.clip_id + " frame_count < 1");
    (c.split == Split::Train ? has_train : has_test)[static_cast<std::size_t>(c.class_id)] = 1;
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (!has_train[i] || !has_test[i])
      fail(Err::InvalidDataset, "class " + ds.class_names[i] + " missing from a split");
  }
}

Dataset load_dataset(const fs::path& manifest_path) {
  std::ifstream f(manifest_path);
  if (!f) fail(Err::MissingFile, "cannot open manifest " + manifest_path.string());
  std::string line;
  if (!std::getline(f, line)) fail(Err::CorruptHeader, "empty manifest");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "clip_id,video_id,class_name,split,frame_count,feature_file")
    fail(Err::CorruptHeader, "unexpected manifest header: " + line);

  Dataset ds;
  std::map<std::string, int> class_index;
  const fs::path base = manifest_path.parent_path();

  while (std::getline(f, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_csv(line);
    if (fields.size() != 6) fail(Err::CorruptHeader, "malformed manifest row: " + line);
    ClipRecord clip;
    clip.clip_id = fields[0];
    clip.video_id = fields[1];
    const std::string& cls = fields[2];
    if (cls.empty()) fail(Err::UnknownClass, "empty class name for clip " + clip.clip_id);
    if (fields[3] == "train") clip.split = Split::Train;
    else if (fields[3] == "test") clip.split = Split::Test;
    else fail(Err::CorruptHeader, "bad split '" + fields[3] + "' for clip " + clip.clip_id);

    clip.segments = read_feature_file(base / fields[5]);
    if (ds.raw_dim == 0) ds.raw_dim = clip.segments.cols;
    else if (clip.segments.cols != ds.raw_dim)
      fail(Err::DimensionMismatch, "clip " + clip.clip_id + " has dim " +
                                        std::to_string(clip.segments.cols) + ", expected " +
                                        std::to_string(ds.raw_dim));

    if (fields[4].empty()) {
      clip.frame_count = kFramesPerSegment * static_cast<std::int64_t>(clip.segments.rows);
    } else {
      try {
        clip.frame_count = std::stoll(fields[4]);
      } catch (...) {
        fail(Err::CorruptHeader, "bad frame_count for clip " + clip.clip_id);
      }
      if (clip.frame_count < 1) fail(Err::CorruptHeader, "frame_count < 1 for " + clip.clip_id);
    }

    auto [it, inserted] = class_index.try_emplace(cls, static_cast<int>(ds.class_names.size()));
    if (inserted) ds.class_names.push_back(cls);
    clip.class_id = it->second;
    ds.clips.push_back(std::move(clip));
  }

  const fs::path sidecar = manifest_path.parent_path() / "dataset_meta.json";
  if (fs::exists(sidecar)) {
    std::ifstream sf(sidecar);
    try {
      nlohmann::json j;
      sf >> j;
      ds.rng_seed = j.value("rng_seed", std::uint64_t{0});
    } catch (...) {
      fail(Err::CorruptHeader, "unreadable sidecar " + sidecar.string());
    }
  }

  validate_dataset(ds);
  return ds;
}

fs::path save_dataset(const Dataset& ds, const fs::path& dir) {
  validate_dataset(ds);
  for (const auto& c : ds.clips) {
    if (!safe_id(c.clip_id))
      fail(Err::IoFailure, "clip_id '" + c.clip_id + "' is not filename-safe");
    if (c.clip_id.find(',') != std::string::npos || c.video_id.find(',') != std::string::npos ||
        ds.class_names[static_cast<std::size_t>(c.class_id)].find(',') != std::string::npos)
      fail(Err::IoFailure, "comma in identifier of clip " + c.clip_id);
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(Err::IoFailure, "cannot create " + dir.string());

  for (const auto& c : ds.clips) write_feature_file(dir / (c.clip_id + ".smnf"), c.segments);

  const fs::path manifest = dir / "manifest.csv";
  std::ofstream mf(manifest, std::ios::trunc);
  if (!mf) fail(Err::IoFailure, "cannot write " + manifest.string());
  mf << "clip_id,video_id,class_name,split,frame_count,feature_file\n";
  for (const auto& c : ds.clips) {
    mf << c.clip_id << ',' << c.video_id << ','
       << ds.class_names[static_cast<std::size_t>(c.class_id)] << ',' << split_name(c.split)
       << ',' << c.frame_count << ',' << c.clip_id << ".smnf\n";
  }
  if (!mf) fail(Err::IoFailure, "write failed for " + manifest.string());

  std::ofstream sf(dir / "dataset_meta.json", std::ios::trunc);
  sf << nlohmann::json{{"rng_seed", ds.rng_seed}}.dump(2) << '\n';
  if (!sf) fail(Err::IoFailure, "write failed for dataset_meta.json");
  return manifest;
}

namespace {

// G orthonormal directions in R^dim from seeded Gaussian draws (modified
// Gram-Schmidt). Requires G <= dim.
std::vector<std::vector<double>> orthonormal_frame(std::size_t g, std::size_t dim, Rng& rng) {
  std::vector<std::vector<double>> frame;
  frame.reserve(g);
  while (frame.size() < g) {
    std::vector<double> v(dim);
    for (auto& x : v) x = rng.normal();
    for (const auto& u : frame) {
      double proj = 0.0;
      for (std::size_t i = 0; i < dim; ++i) proj += u[i] * v[i];
      for (std::size_t i = 0; i < dim; ++i) v[i] -= proj * u[i];
    }
    double norm2 = 0.0;
    for (double x : v) norm2 += x * x;
    if (norm2 < 1e-12) continue;  // re-draw a (near-)dependent vector
    const double inv = 1.0 / std::sqrt(norm2);
    for (auto& x : v) x *= inv;
    frame.push_back(std::move(v));
  }
  return frame;
}

std::string zero_pad(std::size_t value, std::size_t width) {
  std::string s = std::to_string(value);
  if (s.size() < width) s.insert(0, width - s.size(), '0');
  return s;
}

}  // namespace

Dataset generate_synthetic(const SynthSpec& spec) {
  if (spec.num_groups < 1 || spec.classes_per_group < 1) fail(Err::InvalidSpec, "need >= 1 class");
  if (spec.clips_per_class < 2) fail(Err::InvalidSpec, "clips_per_class must be >= 2");
  if (spec.dim < 1) fail(Err::InvalidSpec, "dim must be >= 1");
  if (spec.num_groups > spec.dim)
    fail(Err::InvalidSpec, "num_groups must not exceed dim (orthogonal group centers)");
  if (!(spec.group_separation > spec.within_group_spread) || !(spec.within_group_spread > 0))
    fail(Err::InvalidSpec, "require group_separation > within_group_spread > 0");
  if (!(spec.noise_sigma > 0)) fail(Err::InvalidSpec, "noise_sigma must be positive");
  if (spec.segments_min < 1 || spec.segments_min > spec.segments_max)
    fail(Err::InvalidSpec, "require 1 <= segments_min <= segments_max");

  Rng rng(spec.seed);
  const std::size_t m = spec.num_groups * spec.classes_per_group;

  // Scaled orthonormal frame: all pairwise center distances equal
  // group_separation exactly.
  auto frame = orthonormal_frame(spec.num_groups, spec.dim, rng);
  const double center_scale = spec.group_separation / std::sqrt(2.0);

  Dataset ds;
  ds.raw_dim = spec.dim;
  ds.rng_seed = spec.seed;
  const std::size_t name_w = std::max<std::size_t>(3, std::to_string(m - 1).size());
  const std::size_t clip_w = std::max<std::size_t>(2, std::to_string(spec.clips_per_class - 1).size());

  for (std::size_t c = 0; c < m; ++c) ds.class_names.push_back("class_" + zero_pad(c, name_w));

  for (std::size_t c = 0; c < m; ++c) {
    const std::size_t g = c / spec.classes_per_group;

    // class mean = group center + spread * random unit direction
    std::vector<double> dir(spec.dim);
    double norm2 = 0.0;
    for (auto& x : dir) {
      x = rng.normal();
      norm2 += x * x;
    }
    const double inv = norm2 > 0 ? 1.0 / std::sqrt(norm2) : 0.0;
    std::vector<double> mean(spec.dim);
    for (std::size_t i = 0; i < spec.dim; ++i)
      mean[i] = center_scale * frame[g][i] + spec.within_group_spread * dir[i] * inv;

    const std::size_t n = spec.clips_per_class;
    std::vector<ClipRecord> clips(n);
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t segs =
          spec.segments_min + rng.below(spec.segments_max - spec.segments_min + 1);
      Matrix seg(segs, spec.dim);
      for (std::size_t r = 0; r < segs; ++r) {
        for (std::size_t i = 0; i < spec.dim; ++i) {
          // quantize through float32 so the on-disk format round-trips bitwise
          seg.at(r, i) = static_cast<double>(
              static_cast<float>(mean[i] + spec.noise_sigma * rng.normal()));
        }
      }
      ClipRecord& clip = clips[j];
      clip.clip_id = ds.class_names[c] + "_clip" + zero_pad(j, clip_w);
      clip.video_id = clip.clip_id;  // one clip per video
      clip.class_id = static_cast<int>(c);
      clip.frame_count = kFramesPerSegment * static_cast<std::int64_t>(segs);
      clip.segments = std::move(seg);
    }

    // 80/20 split by seeded shuffle; at least one clip in each split
    std::vector<std::size_t> order(n);
    for (std::size_t j = 0; j < n; ++j) order[j] = j;
    rng.shuffle(order);
    const auto want = static_cast<std::size_t>(std::lround(0.2 * static_cast<double>(n)));
    const std::size_t n_test = std::clamp<std::size_t>(want, 1, n - 1);
    for (std::size_t j = 0; j < n; ++j)
      clips[order[j]].split = j < n_test ? Split::Test : Split::Train;

    for (auto& clip : clips) ds.clips.push_back(std::move(clip));
  }

  validate_dataset(ds);
  return ds;
}

}  // namespace smn
