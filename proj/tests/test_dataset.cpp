#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "sdss/dataset.hpp"
#include "test_util.hpp"

using namespace sdss;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("sdss_test_dataset_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& path, const std::string& text) { std::ofstream(path) << text; }

}  // namespace

TEST(Dataset, FormatDoubleRoundTrips) {
  for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) {
    EXPECT_EQ(std::stod(format_double(x)), x);
  }
  EXPECT_EQ(format_double(0.5), "0.5");
}

TEST(Dataset, WriteLoadRoundTrip) {
  const Dataset ds = sdss::testing::random_dataset(15, 4, 3, 2);
  const fs::path dir = fresh_dir("roundtrip");
  write_dataset(dir, ds);
  const Dataset back = load_dataset(dir);
  EXPECT_EQ(back.graph.edges(), ds.graph.edges());
  EXPECT_EQ(back.features, ds.features);
  EXPECT_EQ(back.labels, ds.labels);
  EXPECT_EQ(back.num_classes, 3);
  EXPECT_EQ(back.split.train, ds.split.train);
  EXPECT_EQ(back.split.val, ds.split.val);
  EXPECT_EQ(back.split.test, ds.split.test);
}

TEST(Dataset, MissingDirectoryAndFilesAreReported) {
  EXPECT_THROW(load_dataset("/nonexistent/sdss"), DataError);
  const fs::path dir = fresh_dir("missing");
  write_text(dir / "graph.txt", "2 1\n0 1\n");
  try {
    load_dataset(dir);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("features.txt"), std::string::npos);
  }
}

TEST(Dataset, MalformedLineReportsLineNumber) {
  const fs::path dir = fresh_dir("malformed");
  write_text(dir / "graph.txt", "3 2\n0 1\n1 x\n");
  try {
    read_graph_file(dir / "graph.txt");
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find(":3:"), std::string::npos) << e.what();
  }
}

TEST(Dataset, ShapeMismatchBetweenFilesRejected) {
  const fs::path dir = fresh_dir("shape");
  write_text(dir / "graph.txt", "3 1\n0 1\n");
  write_text(dir / "features.txt", "2 1\n0.5\n1.5\n");
  write_text(dir / "labels.txt", "3 2\n0\n1\n1\n");
  EXPECT_THROW(load_dataset(dir), DataError);
}

TEST(Dataset, LabelOutOfRangeRejected) {
  const fs::path dir = fresh_dir("labels");
  write_text(dir / "graph.txt", "2 1\n0 1\n");
  write_text(dir / "features.txt", "2 1\n0.5\n1.5\n");
  write_text(dir / "labels.txt", "2 2\n0\n2\n");
  EXPECT_THROW(load_dataset(dir), DataError);
}

TEST(Dataset, RowNormalizeL1) {
  Matrix x(2, 3);
  x << 1.0, -3.0, 0.0, 0.0, 0.0, 0.0;
  row_normalize(x);
  EXPECT_DOUBLE_EQ(x(0, 0), 0.25);
  EXPECT_DOUBLE_EQ(x(0, 1), -0.75);
  EXPECT_EQ(x.row(1).cwiseAbs().sum(), 0.0);
}

TEST(SampleSplit, PerClassCountsDisjointAndSeeded) {
  IndexList labels;
  for (Index c = 0; c < 4; ++c) {
    for (Index i = 0; i < 60; ++i) labels.push_back(c);
  }
  const SplitSpec spec{SplitSpec::Mode::PerClassSample, 20, 30, 5};
  const Split s = sample_split(labels, 4, spec);
  EXPECT_EQ(s.train.size(), 80u);
  EXPECT_EQ(s.val.size(), 120u);
  EXPECT_EQ(s.test.size(), 40u);
  std::set<Index> all(s.train.begin(), s.train.end());
  all.insert(s.val.begin(), s.val.end());
  all.insert(s.test.begin(), s.test.end());
  EXPECT_EQ(all.size(), labels.size());
  std::vector<Index> per_class(4, 0);
  for (Index v : s.train) ++per_class[labels[v]];
  for (Index c : per_class) EXPECT_EQ(c, 20);
  EXPECT_EQ(sample_split(labels, 4, spec).train, s.train);
  EXPECT_NE(sample_split(labels, 4, {SplitSpec::Mode::PerClassSample, 20, 30, 6}).train, s.train);
}

TEST(SampleSplit, TooSmallClassRejected) {
  const IndexList labels{0, 0, 1};
  EXPECT_THROW(sample_split(labels, 2, {SplitSpec::Mode::PerClassSample, 2, 0, 0}), DataError);
}

TEST(PlantedPartition, StructureMatchesSpec) {
  PlantedPartitionSpec spec;
  const Dataset ds = generate_planted_partition(spec);
  ASSERT_EQ(ds.num_nodes(), 500);
  EXPECT_EQ(ds.num_classes, 5);
  EXPECT_EQ(ds.num_features(), 32);
  EXPECT_EQ(ds.split.train.size(), 100u);
  EXPECT_EQ(ds.split.val.size(), 150u);
  EXPECT_EQ(ds.split.test.size(), 250u);
  Index in = 0, out = 0;
  for (const auto& [u, v] : ds.graph.edges()) (ds.labels[u] == ds.labels[v] ? in : out)++;
  // Expected counts: 5 * C(100, 2) * 0.1 = 2475 and C(5, 2) * 100^2 * 0.01 = 1000.
  EXPECT_NEAR(in, 2475, 200);
  EXPECT_NEAR(out, 1000, 120);
  // Block b is shifted along axis b.
  for (Index b = 0; b < 5; ++b) {
    double on = 0.0;
    for (Index i = b * 100; i < (b + 1) * 100; ++i) on += ds.features(i, b);
    EXPECT_NEAR(on / 100.0, spec.shift, 0.35);
  }
  const Dataset again = generate_planted_partition(spec);
  EXPECT_EQ(again.graph.edges(), ds.graph.edges());
  EXPECT_EQ(again.features, ds.features);
}

TEST(PlantedPartition, RejectsBadProbabilities) {
  PlantedPartitionSpec spec;
  spec.p_out = 0.5;
  spec.p_in = 0.1;
  EXPECT_THROW(generate_planted_partition(spec), DataError);
}
