#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "sdss/graph.hpp"
#include "sdss/types.hpp"

namespace sdss {

/// Two-layer GCN backbone shared by a classification head and a pretext head.
struct ModelParams {
  Matrix w0;     // f x h, feature extractor
  Matrix w1;     // h x m, classification head
  Matrix w_hat;  // h x p, pretext head
  double dropout = 0.5;

  Index num_features() const { return w0.rows(); }
  Index hidden() const { return w0.cols(); }
  Index num_classes() const { return w1.cols(); }
  Index pretext_dim() const { return w_hat.cols(); }
};

ModelParams init_params(Index num_features, Index hidden, Index num_classes, Index pretext_dim,
                        double dropout, std::uint64_t seed);

/// L·X (and L·X̂ when the pretext task replaces the inputs). Constant over a
/// training run, so computed once.
struct PropagatedInputs {
  Matrix lx;
  std::optional<Matrix> lx_hat;
};

PropagatedInputs propagate_inputs(const NormalizedAdjacency& L, const Matrix& X,
                                  const std::optional<Matrix>& X_hat = std::nullopt);

/// Intermediates of one forward pass through the extractor
/// H = L · dropout(ReLU(L·X·W0)).
struct BranchTrace {
  Matrix pre;     // L·X·W0
  Matrix keep;    // inverted-dropout scale per entry; empty in eval mode
  Matrix active;  // dropout(ReLU(pre))
  Matrix hidden;  // L·active
};

struct ForwardTrace {
  BranchTrace main;
  /// Present only when the pretext inputs differ from the classification
  /// inputs; otherwise the pretext head reads `main.hidden`.
  std::optional<BranchTrace> pretext;
  Matrix logits;          // Z = H·W1
  Matrix pretext_logits;  // Ẑ = Ĥ·Θ̂

  const Matrix& hidden() const { return main.hidden; }
  const Matrix& pretext_hidden() const { return pretext ? pretext->hidden : main.hidden; }
};

struct Gradients {
  Matrix w0;
  Matrix w1;
  Matrix w_hat;

  static Gradients zeros_like(const ModelParams& p);
};

ForwardTrace forward(const ModelParams& params, const NormalizedAdjacency& L,
                     const PropagatedInputs& inputs, bool train_mode, std::uint64_t seed);
ForwardTrace forward(const ModelParams& params, const NormalizedAdjacency& L, const Matrix& X,
                     const std::optional<Matrix>& X_hat, bool train_mode, std::uint64_t seed);

/// Exact gradients of a loss whose partial derivatives with respect to Z, Ẑ
/// and the main hidden H are `d_logits`, `d_pretext_logits` and `d_hidden`.
/// Empty matrices stand for zero.
Gradients backward(const ModelParams& params, const NormalizedAdjacency& L,
                   const PropagatedInputs& inputs, const ForwardTrace& trace,
                   const Matrix& d_logits, const Matrix& d_pretext_logits,
                   const Matrix& d_hidden);

struct CheckpointMeta {
  std::uint64_t seed = 0;
  std::string config_hash;
};

void write_checkpoint(const std::filesystem::path& path, const ModelParams& params,
                      const CheckpointMeta& meta);
ModelParams read_checkpoint(const std::filesystem::path& path, CheckpointMeta* meta = nullptr);

}  // namespace sdss
