#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "sdss/graph.hpp"
#include "sdss/types.hpp"

namespace sdss {

struct Split {
  IndexList train;
  IndexList val;
  IndexList test;
};

struct SplitSpec {
  enum class Mode { PublicFile, PerClassSample };
  Mode mode = Mode::PublicFile;
  Index train_per_class = 20;
  Index val_per_class = 30;
  std::uint64_t seed = 0;
};

/// Node features, labels, graph, and a train/val/test split.
struct Dataset {
  Graph graph;
  Matrix features;
  IndexList labels;
  Index num_classes = 0;
  Split split;

  Index num_nodes() const { return graph.num_nodes(); }
  Index num_features() const { return features.cols(); }
  /// One-hot view of the labels, n x num_classes.
  Matrix one_hot() const;
};

/// Throws DataError when a dataset invariant does not hold.
void validate(const Dataset& ds);

struct LoadOptions {
  bool row_normalize = false;
  SplitSpec split;
};

/// Reads graph.txt, features.txt, labels.txt, and the optional split.txt.
/// Without split.txt, or when `split.mode` is PerClassSample, the split is
/// sampled per class.
Dataset load_dataset(const std::filesystem::path& dir, const LoadOptions& opts = {});
void write_dataset(const std::filesystem::path& dir, const Dataset& ds);

/// Seeded per-class sampling; the remainder of every class becomes test.
Split sample_split(const IndexList& labels, Index num_classes, const SplitSpec& spec);

/// Divides every row by its L1 norm; zero rows stay zero.
void row_normalize(Matrix& features);

struct PlantedPartitionSpec {
  Index blocks = 5;
  Index per_block = 100;
  double p_in = 0.1;
  double p_out = 0.01;
  Index num_features = 32;
  double shift = 1.0;
  std::uint64_t seed = 0;
  Index train_per_class = 20;
  Index val_per_class = 30;
};

/// Block-structured random graph. Node features are standard normal noise
/// plus `shift` along the block's own axis (axis = block mod num_features);
/// labels are block ids.
Dataset generate_planted_partition(const PlantedPartitionSpec& spec);

// Individual file formats, shared with the pretext exporter.
Graph read_graph_file(const std::filesystem::path& path);
Matrix read_features_file(const std::filesystem::path& path);
/// Returns labels; `num_classes` receives the header's class count.
IndexList read_labels_file(const std::filesystem::path& path, Index& num_classes);
Split read_split_file(const std::filesystem::path& path);

void write_graph_file(const std::filesystem::path& path, const Graph& g);
void write_features_file(const std::filesystem::path& path, const Matrix& m);
void write_labels_file(const std::filesystem::path& path, const IndexList& labels,
                       Index num_classes);
void write_split_file(const std::filesystem::path& path, const Split& split);

/// Shortest decimal text that parses back to exactly `x`.
std::string format_double(double x);

}  // namespace sdss
