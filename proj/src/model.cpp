#include "sdss/model.hpp"

#include <fstream>
#include <random>
#include <sstream>

#include "sdss/dataset.hpp"
#include "sdss/dense.hpp"

namespace sdss {

namespace fs = std::filesystem;

ModelParams init_params(Index num_features, Index hidden, Index num_classes, Index pretext_dim,
                        double dropout, std::uint64_t seed) {
  if (!(dropout >= 0.0 && dropout < 1.0)) {
    throw std::invalid_argument("dropout must lie in [0, 1)");
  }
  ModelParams p;
  p.w0 = glorot_init(num_features, hidden, derive_seed(seed, 0));
  p.w1 = glorot_init(hidden, num_classes, derive_seed(seed, 1));
  p.w_hat = glorot_init(hidden, pretext_dim, derive_seed(seed, 2));
  p.dropout = dropout;
  return p;
}

Gradients Gradients::zeros_like(const ModelParams& p) {
  return {Matrix::Zero(p.w0.rows(), p.w0.cols()), Matrix::Zero(p.w1.rows(), p.w1.cols()),
          Matrix::Zero(p.w_hat.rows(), p.w_hat.cols())};
}

PropagatedInputs propagate_inputs(const NormalizedAdjacency& L, const Matrix& X,
                                  const std::optional<Matrix>& X_hat) {
  PropagatedInputs in;
  in.lx = spmm(L, X);
  if (X_hat) {
    require_same_shape(*X_hat, X, "pretext input override");
    in.lx_hat = spmm(L, *X_hat);
  }
  return in;
}

namespace {

BranchTrace extract(const ModelParams& params, const NormalizedAdjacency& L, const Matrix& lx,
                    bool train_mode, std::uint64_t seed) {
  BranchTrace b;
  b.pre = matmul(lx, params.w0);
  b.active = relu(b.pre);
  if (train_mode && params.dropout > 0.0) {
    const double scale = 1.0 / (1.0 - params.dropout);
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution keep(1.0 - params.dropout);
    b.keep.resize(b.pre.rows(), b.pre.cols());
    for (Index i = 0; i < b.keep.size(); ++i) b.keep.data()[i] = keep(rng) ? scale : 0.0;
    b.active.array() *= b.keep.array();
  }
  b.hidden = spmm(L, b.active);
  return b;
}

Matrix extract_backward(const NormalizedAdjacency& L, const Matrix& lx, const BranchTrace& b,
                        const Matrix& d_hidden) {
  // L is symmetric, so L^T · dH = L · dH.
  Matrix d_active = spmm(L, d_hidden);
  if (b.keep.size() > 0) d_active.array() *= b.keep.array();
  const Matrix d_pre = relu_backward(d_active, b.pre);
  Matrix dw(lx.cols(), d_pre.cols());
  dw.noalias() = lx.transpose() * d_pre;
  return dw;
}

void check_grad_shape(const Matrix& g, Index rows, Index cols, const char* what) {
  if (g.size() != 0 && (g.rows() != rows || g.cols() != cols)) {
    throw ShapeError(std::string("backward: ") + what + " is " + shape_str(g.rows(), g.cols()) +
                     ", expected " + shape_str(rows, cols));
  }
}

}  // namespace

ForwardTrace forward(const ModelParams& params, const NormalizedAdjacency& L,
                     const PropagatedInputs& inputs, bool train_mode, std::uint64_t seed) {
  if (inputs.lx.rows() != L.rows() || inputs.lx.cols() != params.w0.rows()) {
    throw ShapeError("forward: inputs " + shape_str(inputs.lx.rows(), inputs.lx.cols()) +
                     " incompatible with " + shape_str(L.rows(), L.cols()) + " graph and W0 " +
                     shape_str(params.w0.rows(), params.w0.cols()));
  }
  ForwardTrace t;
  t.main = extract(params, L, inputs.lx, train_mode, derive_seed(seed, 0));
  if (inputs.lx_hat) {
    t.pretext = extract(params, L, *inputs.lx_hat, train_mode, derive_seed(seed, 1));
  }
  t.logits = matmul(t.main.hidden, params.w1);
  t.pretext_logits = matmul(t.pretext_hidden(), params.w_hat);
  return t;
}

ForwardTrace forward(const ModelParams& params, const NormalizedAdjacency& L, const Matrix& X,
                     const std::optional<Matrix>& X_hat, bool train_mode, std::uint64_t seed) {
  return forward(params, L, propagate_inputs(L, X, X_hat), train_mode, seed);
}

Gradients backward(const ModelParams& params, const NormalizedAdjacency& L,
                   const PropagatedInputs& inputs, const ForwardTrace& trace,
                   const Matrix& d_logits, const Matrix& d_pretext_logits,
                   const Matrix& d_hidden) {
  const Index n = trace.logits.rows();
  check_grad_shape(d_logits, n, params.num_classes(), "dZ");
  check_grad_shape(d_pretext_logits, n, params.pretext_dim(), "dZ_hat");
  check_grad_shape(d_hidden, n, params.hidden(), "dH");
  if (trace.pretext.has_value() != inputs.lx_hat.has_value()) {
    throw ShapeError("backward: trace and inputs disagree on the pretext override");
  }

  Gradients g = Gradients::zeros_like(params);
  Matrix d_main = Matrix::Zero(n, params.hidden());
  if (d_logits.size() != 0) {
    g.w1.noalias() = trace.main.hidden.transpose() * d_logits;
    d_main.noalias() += d_logits * params.w1.transpose();
  }
  if (d_hidden.size() != 0) d_main += d_hidden;

  if (d_pretext_logits.size() != 0) {
    g.w_hat.noalias() = trace.pretext_hidden().transpose() * d_pretext_logits;
    if (trace.pretext) {
      Matrix d_pretext = d_pretext_logits * params.w_hat.transpose();
      g.w0 += extract_backward(L, *inputs.lx_hat, *trace.pretext, d_pretext);
    } else {
      d_main.noalias() += d_pretext_logits * params.w_hat.transpose();
    }
  }
  g.w0 += extract_backward(L, inputs.lx, trace.main, d_main);
  return g;
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

namespace {

void write_matrix(std::ostream& out, const char* name, const Matrix& m) {
  out << "matrix " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out << ' ';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

Matrix read_matrix(std::istream& in, const std::string& name, const fs::path& path) {
  std::string tag, got;
  Index rows = 0, cols = 0;
  if (!(in >> tag >> got >> rows >> cols) || tag != "matrix" || got != name || rows < 0 ||
      cols < 0) {
    throw DataError(path.string() + ": expected 'matrix " + name + " rows cols'");
  }
  Matrix m(rows, cols);
  std::string tok;
  for (Index i = 0; i < m.size(); ++i) {
    if (!(in >> tok)) throw DataError(path.string() + ": truncated matrix " + name);
    try {
      size_t used = 0;
      m.data()[i] = std::stod(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw DataError(path.string() + ": bad value '" + tok + "' in matrix " + name);
    }
  }
  return m;
}

}  // namespace

void write_checkpoint(const fs::path& path, const ModelParams& params, const CheckpointMeta& meta) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "sdss-checkpoint 1\n";
  out << "hidden " << params.hidden() << '\n';
  out << "dropout " << format_double(params.dropout) << '\n';
  out << "seed " << meta.seed << '\n';
  out << "config_hash " << (meta.config_hash.empty() ? "-" : meta.config_hash) << '\n';
  write_matrix(out, "W0", params.w0);
  write_matrix(out, "W1", params.w1);
  write_matrix(out, "W_hat", params.w_hat);
  if (!out) throw DataError("failed writing " + path.string());
}

ModelParams read_checkpoint(const fs::path& path, CheckpointMeta* meta) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string magic, key, hash;
  int version = 0;
  Index hidden = 0;
  std::uint64_t seed = 0;
  ModelParams p;
  if (!(in >> magic >> version) || magic != "sdss-checkpoint" || version != 1) {
    throw DataError(path.string() + ": not an sdss checkpoint");
  }
  if (!(in >> key >> hidden) || key != "hidden") throw DataError(path.string() + ": bad hidden");
  if (!(in >> key >> p.dropout) || key != "dropout") {
    throw DataError(path.string() + ": bad dropout");
  }
  if (!(in >> key >> seed) || key != "seed") throw DataError(path.string() + ": bad seed");
  if (!(in >> key >> hash) || key != "config_hash") {
    throw DataError(path.string() + ": bad config_hash");
  }
  p.w0 = read_matrix(in, "W0", path);
  p.w1 = read_matrix(in, "W1", path);
  p.w_hat = read_matrix(in, "W_hat", path);
  if (p.w0.cols() != hidden || p.w1.rows() != hidden || p.w_hat.rows() != hidden) {
    throw DataError(path.string() + ": matrix shapes disagree with hidden=" +
                    std::to_string(hidden));
  }
  if (meta) {
    meta->seed = seed;
    meta->config_hash = hash == "-" ? std::string() : hash;
  }
  return p;
}

}  // namespace sdss
