// Plain-text dataset directories:
//   edges.txt    one "u<TAB>v" pair per line, 0-based ids; duplicates and
//                self-loops are tolerated and cleaned during graph build
//   features.csv one row per node, comma-separated reals
//   labels.txt   one integer class per line
//   splits.json  {"train": [...], "val": [...], "test": [...]}, optional
//
// Features are L1 row-normalized at load. When splits.json is present it is
// used unless a random split is explicitly requested.

#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hoga/common.hpp"
#include "hoga/graph.hpp"

namespace hoga {

enum class SplitMode { automatic, public_split, random_split };

struct SplitSpec {
  SplitMode mode = SplitMode::automatic;
  std::array<double, 3> fractions{0.6, 0.2, 0.2};
  std::uint64_t seed = 0;
};

struct SplitMasks {
  std::vector<std::uint8_t> train, val, test;
};

// Seeded uniform shuffle partitioned at the rounded cumulative fractions;
// rounding of the first boundary hands the remainder to the training set.
inline SplitMasks make_random_split(std::int64_t n,
                                    const std::array<double, 3>& fractions,
                                    std::uint64_t seed) {
  if (n < 5) throw error("make_random_split: need at least 5 nodes");
  const double total = fractions[0] + fractions[1] + fractions[2];
  if (std::abs(total - 1.0) > 1e-9)
    throw error("make_random_split: fractions must sum to 1");

  std::vector<std::int64_t> perm(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
  std::mt19937_64 rng(seed);
  for (std::int64_t i = n - 1; i > 0; --i) {
    auto j = static_cast<std::int64_t>(
        uniform_index(rng, static_cast<std::uint64_t>(i) + 1));
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
  }

  auto boundary = [&](double cum) {
    auto b = static_cast<std::int64_t>(std::llround(cum * static_cast<double>(n)));
    return std::clamp<std::int64_t>(b, 0, n);
  };
  std::int64_t b1 = boundary(fractions[0]);
  std::int64_t b2 = std::max(b1, boundary(fractions[0] + fractions[1]));

  SplitMasks m;
  m.train.assign(static_cast<std::size_t>(n), 0);
  m.val.assign(static_cast<std::size_t>(n), 0);
  m.test.assign(static_cast<std::size_t>(n), 0);
  for (std::int64_t i = 0; i < b1; ++i)
    m.train[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] = 1;
  for (std::int64_t i = b1; i < b2; ++i)
    m.val[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] = 1;
  for (std::int64_t i = b2; i < n; ++i)
    m.test[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] = 1;
  return m;
}

struct Dataset {
  std::string name;
  Graph graph;
  FeatureMatrix features;  // preprocessed
  LabeledSplit split;
  bool used_public_split = false;
};

namespace detail {

inline std::vector<edge_pair> read_edges(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw dataset_error("cannot open " + path.string());
  std::vector<edge_pair> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const char* p = line.data();
    const char* end = p + line.size();
    node_t u = 0, v = 0;
    auto r1 = std::from_chars(p, end, u);
    if (r1.ec != std::errc{})
      throw dataset_error(path.string() + ":" + std::to_string(line_no) +
                          ": malformed edge line");
    p = r1.ptr;
    while (p < end && (*p == '\t' || *p == ' ')) ++p;
    auto r2 = std::from_chars(p, end, v);
    if (r2.ec != std::errc{})
      throw dataset_error(path.string() + ":" + std::to_string(line_no) +
                          ": malformed edge line");
    pairs.emplace_back(u, v);
  }
  return pairs;
}

inline FeatureMatrix read_features(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw dataset_error("cannot open " + path.string());
  FeatureMatrix f;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::int64_t cols = 0;
    const char* p = line.data();
    const char* end = p + line.size();
    while (p < end) {
      double v = 0.0;
      auto r = std::from_chars(p, end, v);
      if (r.ec != std::errc{})
        throw dataset_error(path.string() + ":" + std::to_string(line_no) +
                            ": malformed feature value");
      f.values.push_back(v);
      ++cols;
      p = r.ptr;
      if (p < end) {
        if (*p != ',')
          throw dataset_error(path.string() + ":" + std::to_string(line_no) +
                              ": expected comma");
        ++p;
      }
    }
    if (f.rows == 0) {
      f.cols = cols;
    } else if (cols != f.cols) {
      throw dataset_error(path.string() + ":" + std::to_string(line_no) +
                          ": inconsistent column count");
    }
    ++f.rows;
  }
  if (f.rows == 0) throw dataset_error(path.string() + ": no feature rows");
  return f;
}

inline std::vector<std::int32_t> read_labels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw dataset_error("cannot open " + path.string());
  std::vector<std::int32_t> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::int32_t y = 0;
    auto r = std::from_chars(line.data(), line.data() + line.size(), y);
    if (r.ec != std::errc{})
      throw dataset_error(path.string() + ":" + std::to_string(line_no) +
                          ": malformed label");
    labels.push_back(y);
  }
  return labels;
}

inline SplitMasks read_public_split(const std::filesystem::path& path,
                                    std::int64_t n) {
  std::ifstream in(path);
  if (!in) throw dataset_error("cannot open " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw dataset_error(path.string() + ": " + e.what());
  }
  SplitMasks m;
  m.train.assign(static_cast<std::size_t>(n), 0);
  m.val.assign(static_cast<std::size_t>(n), 0);
  m.test.assign(static_cast<std::size_t>(n), 0);
  auto fill = [&](const char* key, std::vector<std::uint8_t>& mask) {
    for (auto id : j.at(key).get<std::vector<std::int64_t>>()) {
      if (id < 0 || id >= n)
        throw dataset_error(path.string() + ": split id " + std::to_string(id) +
                            " out of range");
      mask[static_cast<std::size_t>(id)] = 1;
    }
  };
  fill("train", m.train);
  fill("val", m.val);
  fill("test", m.test);
  return m;
}

}  // namespace detail

inline Dataset load_dataset(const std::filesystem::path& dir,
                            const SplitSpec& split_spec = {}) {
  if (!std::filesystem::is_directory(dir))
    throw dataset_error("dataset directory not found: " + dir.string());
  Dataset ds;
  ds.name = dir.filename().string();
  if (ds.name.empty()) ds.name = dir.parent_path().filename().string();

  FeatureMatrix raw = detail::read_features(dir / "features.csv");
  const std::int64_t n = raw.rows;
  try {
    ds.features = preprocess_features(raw);
  } catch (const error& e) {
    throw dataset_error(dir.string() + ": " + e.what());
  }

  auto pairs = detail::read_edges(dir / "edges.txt");
  try {
    ds.graph = build_graph(pairs, n);
  } catch (const error& e) {
    throw dataset_error(dir.string() + ": " + e.what());
  }

  ds.split.labels = detail::read_labels(dir / "labels.txt");
  if (static_cast<std::int64_t>(ds.split.labels.size()) != n)
    throw dataset_error(dir.string() + ": label count " +
                        std::to_string(ds.split.labels.size()) +
                        " does not match " + std::to_string(n) + " nodes");
  std::int32_t max_label = -1;
  for (auto y : ds.split.labels) {
    if (y < 0) throw dataset_error(dir.string() + ": negative label");
    max_label = std::max(max_label, y);
  }
  ds.split.num_classes = max_label + 1;

  const auto split_path = dir / "splits.json";
  const bool have_public = std::filesystem::exists(split_path);
  SplitMasks masks;
  switch (split_spec.mode) {
    case SplitMode::public_split:
      if (!have_public)
        throw dataset_error(dir.string() + ": public split requested but " +
                            split_path.filename().string() + " is missing");
      masks = detail::read_public_split(split_path, n);
      ds.used_public_split = true;
      break;
    case SplitMode::random_split:
      masks = make_random_split(n, split_spec.fractions, split_spec.seed);
      break;
    case SplitMode::automatic:
      if (have_public) {
        masks = detail::read_public_split(split_path, n);
        ds.used_public_split = true;
      } else {
        masks = make_random_split(n, split_spec.fractions, split_spec.seed);
      }
      break;
  }
  ds.split.train_mask = std::move(masks.train);
  ds.split.val_mask = std::move(masks.val);
  ds.split.test_mask = std::move(masks.test);
  try {
    validate_split(ds.split, n);
  } catch (const error& e) {
    throw dataset_error(dir.string() + ": " + e.what());
  }
  return ds;
}

}  // namespace hoga
