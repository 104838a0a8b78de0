#include "sdss/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <string_view>

namespace sdss {

namespace fs = std::filesystem;

namespace {

class LineReader {
 public:
  explicit LineReader(const fs::path& path) : path_(path), in_(path) {
    if (!in_) throw DataError("cannot open " + path.string());
  }

  // Next non-empty line; false at end of file.
  bool next(std::string& line) {
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.find_first_not_of(" \t") != std::string::npos) return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw DataError(path_.string() + ":" + std::to_string(line_no_) + ": " + what);
  }

  void expect(std::string& line, const char* what) {
    if (!next(line)) fail(std::string("unexpected end of file, expected ") + what);
  }

 private:
  fs::path path_;
  std::ifstream in_;
  Index line_no_ = 0;
};

std::vector<std::string_view> tokens(std::string_view line) {
  std::vector<std::string_view> out;
  size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

template <typename T>
bool parse(std::string_view tok, T& out) {
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return ec == std::errc() && ptr == tok.data() + tok.size();
}

Index parse_index(LineReader& r, std::string_view tok) {
  Index v = 0;
  if (!parse(tok, v)) r.fail("expected integer, got '" + std::string(tok) + "'");
  return v;
}

std::pair<Index, Index> read_header(LineReader& r, const char* what) {
  std::string line;
  r.expect(line, what);
  auto t = tokens(line);
  if (t.size() != 2) r.fail(std::string("expected header '") + what + "'");
  Index a = parse_index(r, t[0]);
  Index b = parse_index(r, t[1]);
  if (a < 0 || b < 0) r.fail("negative count in header");
  return {a, b};
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

void write_index_line(std::ostream& out, const char* key, const IndexList& idx) {
  out << key << ':';
  for (Index i : idx) out << ' ' << i;
  out << '\n';
}

}  // namespace

std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, ptr);
}

Matrix Dataset::one_hot() const {
  Matrix y = Matrix::Zero(num_nodes(), num_classes);
  for (Index i = 0; i < num_nodes(); ++i) y(i, labels[i]) = 1.0;
  return y;
}

void validate(const Dataset& ds) {
  const Index n = ds.num_nodes();
  if (ds.features.rows() != n) {
    throw DataError("feature rows (" + std::to_string(ds.features.rows()) +
                    ") do not match node count " + std::to_string(n));
  }
  if (static_cast<Index>(ds.labels.size()) != n) {
    throw DataError("label count (" + std::to_string(ds.labels.size()) +
                    ") does not match node count " + std::to_string(n));
  }
  if (ds.num_classes < 1) throw DataError("dataset needs at least one class");
  for (Index i = 0; i < n; ++i) {
    if (ds.labels[i] < 0 || ds.labels[i] >= ds.num_classes) {
      throw DataError("label " + std::to_string(ds.labels[i]) + " of node " + std::to_string(i) +
                      " outside [0, " + std::to_string(ds.num_classes) + ")");
    }
  }
  if (!ds.features.allFinite()) throw DataError("features contain non-finite values");
  if (ds.split.train.empty()) throw DataError("training split is empty");
  std::vector<char> seen(n, 0);
  for (const IndexList* set : {&ds.split.train, &ds.split.val, &ds.split.test}) {
    for (Index i : *set) {
      if (i < 0 || i >= n) throw DataError("split index " + std::to_string(i) + " out of range");
      if (seen[i]) throw DataError("split sets overlap at node " + std::to_string(i));
      seen[i] = 1;
    }
  }
}

Graph read_graph_file(const fs::path& path) {
  LineReader r(path);
  auto [n, e] = read_header(r, "n e");
  if (n == 0) r.fail("graph has zero nodes");
  std::vector<Edge> edges;
  edges.reserve(e);
  std::string line;
  for (Index k = 0; k < e; ++k) {
    r.expect(line, "edge 'u v'");
    auto t = tokens(line);
    if (t.size() != 2) r.fail("expected 'u v'");
    Index u = parse_index(r, t[0]);
    Index v = parse_index(r, t[1]);
    if (u < 0 || v < 0 || u >= n || v >= n) r.fail("edge endpoint out of range");
    edges.emplace_back(u, v);
  }
  if (r.next(line)) r.fail("trailing content after " + std::to_string(e) + " edges");
  return Graph(n, edges);
}

Matrix read_features_file(const fs::path& path) {
  LineReader r(path);
  auto [n, f] = read_header(r, "n f");
  Matrix m(n, f);
  std::string line;
  for (Index i = 0; i < n; ++i) {
    r.expect(line, "feature row");
    auto t = tokens(line);
    if (static_cast<Index>(t.size()) != f) {
      r.fail("expected " + std::to_string(f) + " values, got " + std::to_string(t.size()));
    }
    for (Index j = 0; j < f; ++j) {
      double v = 0.0;
      if (!parse(t[j], v)) r.fail("expected decimal, got '" + std::string(t[j]) + "'");
      if (!std::isfinite(v)) r.fail("non-finite feature value");
      m(i, j) = v;
    }
  }
  if (r.next(line)) r.fail("trailing content after " + std::to_string(n) + " rows");
  return m;
}

IndexList read_labels_file(const fs::path& path, Index& num_classes) {
  LineReader r(path);
  auto [n, m] = read_header(r, "n m");
  IndexList labels(n);
  std::string line;
  for (Index i = 0; i < n; ++i) {
    r.expect(line, "label");
    auto t = tokens(line);
    if (t.size() != 1) r.fail("expected a single integer label");
    Index y = parse_index(r, t[0]);
    if (y < 0 || y >= m) {
      r.fail("label " + std::to_string(y) + " outside [0, " + std::to_string(m) + ")");
    }
    labels[i] = y;
  }
  if (r.next(line)) r.fail("trailing content after " + std::to_string(n) + " labels");
  num_classes = m;
  return labels;
}

Split read_split_file(const fs::path& path) {
  LineReader r(path);
  Split split;
  std::string line;
  bool have[3] = {false, false, false};
  while (r.next(line)) {
    auto colon = line.find(':');
    if (colon == std::string::npos) r.fail("expected 'train:', 'val:' or 'test:'");
    auto key_tokens = tokens(std::string_view(line).substr(0, colon));
    if (key_tokens.size() != 1) r.fail("expected 'train:', 'val:' or 'test:'");
    std::string key(key_tokens[0]);
    int which = key == "train" ? 0 : key == "val" ? 1 : key == "test" ? 2 : -1;
    if (which < 0) r.fail("unknown split key '" + key + "'");
    if (have[which]) r.fail("duplicate split key '" + key + "'");
    have[which] = true;
    IndexList& dst = which == 0 ? split.train : which == 1 ? split.val : split.test;
    for (auto tok : tokens(std::string_view(line).substr(colon + 1))) {
      dst.push_back(parse_index(r, tok));
    }
  }
  if (!have[0] || !have[1] || !have[2]) r.fail("split file needs train, val and test lines");
  return split;
}

void write_graph_file(const fs::path& path, const Graph& g) {
  auto out = open_out(path);
  out << g.num_nodes() << ' ' << g.num_edges() << '\n';
  for (auto [u, v] : g.edges()) out << u << ' ' << v << '\n';
}

void write_features_file(const fs::path& path, const Matrix& m) {
  auto out = open_out(path);
  out << m.rows() << ' ' << m.cols() << '\n';
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out << ' ';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

void write_labels_file(const fs::path& path, const IndexList& labels, Index num_classes) {
  auto out = open_out(path);
  out << labels.size() << ' ' << num_classes << '\n';
  for (Index y : labels) out << y << '\n';
}

void write_split_file(const fs::path& path, const Split& split) {
  auto out = open_out(path);
  write_index_line(out, "train", split.train);
  write_index_line(out, "val", split.val);
  write_index_line(out, "test", split.test);
}

void row_normalize(Matrix& features) {
  for (Index i = 0; i < features.rows(); ++i) {
    const double s = features.row(i).cwiseAbs().sum();
    if (s > 0.0) features.row(i) /= s;
  }
}

Dataset load_dataset(const fs::path& dir, const LoadOptions& opts) {
  if (!fs::is_directory(dir)) throw DataError("dataset directory not found: " + dir.string());
  for (const char* name : {"graph.txt", "features.txt", "labels.txt"}) {
    if (!fs::exists(dir / name)) throw DataError("missing file " + (dir / name).string());
  }
  Graph g = read_graph_file(dir / "graph.txt");
  Matrix x = read_features_file(dir / "features.txt");
  Index m = 0;
  IndexList y = read_labels_file(dir / "labels.txt", m);
  if (x.rows() != g.num_nodes()) {
    throw DataError("features.txt has " + std::to_string(x.rows()) + " rows but graph has " +
                    std::to_string(g.num_nodes()) + " nodes");
  }
  if (static_cast<Index>(y.size()) != g.num_nodes()) {
    throw DataError("labels.txt has " + std::to_string(y.size()) + " labels but graph has " +
                    std::to_string(g.num_nodes()) + " nodes");
  }
  if (opts.row_normalize) row_normalize(x);

  Split split;
  const bool use_file =
      opts.split.mode == SplitSpec::Mode::PublicFile && fs::exists(dir / "split.txt");
  split = use_file ? read_split_file(dir / "split.txt") : sample_split(y, m, opts.split);

  Dataset ds{std::move(g), std::move(x), std::move(y), m, std::move(split)};
  validate(ds);
  return ds;
}

void write_dataset(const fs::path& dir, const Dataset& ds) {
  fs::create_directories(dir);
  write_graph_file(dir / "graph.txt", ds.graph);
  write_features_file(dir / "features.txt", ds.features);
  write_labels_file(dir / "labels.txt", ds.labels, ds.num_classes);
  write_split_file(dir / "split.txt", ds.split);
}

Split sample_split(const IndexList& labels, Index num_classes, const SplitSpec& spec) {
  if (spec.train_per_class < 1 || spec.val_per_class < 0) {
    throw DataError("split needs train_per_class >= 1 and val_per_class >= 0");
  }
  std::vector<IndexList> members(num_classes);
  for (Index i = 0; i < static_cast<Index>(labels.size()); ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes) {
      throw DataError("label " + std::to_string(labels[i]) + " out of range");
    }
    members[labels[i]].push_back(i);
  }
  Split split;
  const Index need = spec.train_per_class + spec.val_per_class;
  for (Index c = 0; c < num_classes; ++c) {
    auto& idx = members[c];
    if (static_cast<Index>(idx.size()) < need) {
      throw DataError("class " + std::to_string(c) + " has " + std::to_string(idx.size()) +
                      " nodes, split needs " + std::to_string(need));
    }
    std::mt19937_64 rng(derive_seed(spec.seed, static_cast<std::uint64_t>(c)));
    std::shuffle(idx.begin(), idx.end(), rng);
    split.train.insert(split.train.end(), idx.begin(), idx.begin() + spec.train_per_class);
    split.val.insert(split.val.end(), idx.begin() + spec.train_per_class, idx.begin() + need);
    split.test.insert(split.test.end(), idx.begin() + need, idx.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.val.begin(), split.val.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

Dataset generate_planted_partition(const PlantedPartitionSpec& spec) {
  if (spec.blocks < 2) throw DataError("planted partition needs at least 2 blocks");
  if (spec.per_block < 1 || spec.num_features < 1) {
    throw DataError("planted partition needs per_block >= 1 and num_features >= 1");
  }
  if (!(0.0 <= spec.p_out && spec.p_out < spec.p_in && spec.p_in <= 1.0)) {
    throw DataError("planted partition needs 0 <= p_out < p_in <= 1");
  }
  const Index n = spec.blocks * spec.per_block;
  IndexList labels(n);
  for (Index i = 0; i < n; ++i) labels[i] = i / spec.per_block;

  std::mt19937_64 edge_rng(derive_seed(spec.seed, 0));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Edge> edges;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      const double p = labels[i] == labels[j] ? spec.p_in : spec.p_out;
      if (unit(edge_rng) < p) edges.emplace_back(i, j);
    }
  }

  std::mt19937_64 feat_rng(derive_seed(spec.seed, 1));
  std::normal_distribution<double> noise(0.0, 1.0);
  Matrix x(n, spec.num_features);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < spec.num_features; ++j) x(i, j) = noise(feat_rng);
    x(i, labels[i] % spec.num_features) += spec.shift;
  }

  SplitSpec split_spec;
  split_spec.mode = SplitSpec::Mode::PerClassSample;
  split_spec.train_per_class = spec.train_per_class;
  split_spec.val_per_class = spec.val_per_class;
  split_spec.seed = derive_seed(spec.seed, 2);
  Split split = sample_split(labels, spec.blocks, split_spec);

  Dataset ds{Graph(n, edges), std::move(x), std::move(labels), spec.blocks, std::move(split)};
  validate(ds);
  return ds;
}

}  // namespace sdss
