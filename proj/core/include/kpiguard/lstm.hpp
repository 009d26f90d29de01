#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <utility>
#include <vector>

#include "kpiguard/kpi.hpp"
#include "kpiguard/rng.hpp"
#include "kpiguard/window.hpp"

namespace kpiguard {

struct ClassifierArch {
  int input_dim = kNumKpiFeatures;
  std::vector<int> hidden_units = {256, 128, 64};
  int n_classes = 2;
  double dropout_rate = 0.2;

  bool operator==(const ClassifierArch&) const = default;
  void validate() const;  // throws ConfigError
};

std::size_t param_count(const ClassifierArch& arch);

// Inverted-dropout masks for one batch: masks[layer][t] is batch x H with
// entries 0 or 1/keep_prob. Applied to each recurrent layer's output sequence
// (feed-forward connections only, never the recurrence).
struct DropoutMasks {
  std::vector<std::vector<Eigen::MatrixXd>> masks;
};
DropoutMasks sample_dropout_masks(const ClassifierArch& arch, int length,
                                  int batch, Rng& rng);

// Stacked gated recurrent (LSTM) layers followed by an affine softmax head.
// All parameters live in one flat vector so the optimizer, the checkpoint
// codec and the finite-difference harness can address them uniformly; layer
// matrices are Eigen maps into that vector. Gate column order is
// [input | forget | cell | output].
class RecurrentClassifier {
public:
  RecurrentClassifier(ClassifierArch arch, int window_length);

  const ClassifierArch& arch() const { return arch_; }
  int window_length() const { return window_length_; }

  Eigen::VectorXd& params() { return params_; }
  const Eigen::VectorXd& params() const { return params_; }

  // Glorot-uniform weights, zero biases except the forget gate bias at 1.
  void init_params(Rng& rng);

  struct LayerView {
    Eigen::Map<const Eigen::MatrixXd> w_in;    // input_dim x 4H
    Eigen::Map<const Eigen::MatrixXd> w_rec;   // H x 4H
    Eigen::Map<const Eigen::RowVectorXd> bias; // 1 x 4H
  };
  struct HeadView {
    Eigen::Map<const Eigen::MatrixXd> w;       // H_last x n_classes
    Eigen::Map<const Eigen::RowVectorXd> b;    // 1 x n_classes
  };
  LayerView layer(int index) const;
  HeadView head() const;

  int n_layers() const { return static_cast<int>(arch_.hidden_units.size()); }

  // Batched forward pass on normalized inputs; xs[t] is batch x input_dim.
  // Dropout is never applied here. Returns batch x n_classes probabilities.
  Eigen::MatrixXd forward_probs(const std::vector<Eigen::MatrixXd>& xs) const;

private:
  friend double loss_and_gradients(const RecurrentClassifier&,
                                   const std::vector<Eigen::MatrixXd>&,
                                   const std::vector<int>&,
                                   const std::vector<double>&,
                                   const DropoutMasks*, Eigen::VectorXd&);

  ClassifierArch arch_;
  int window_length_;
  Eigen::VectorXd params_;
  std::vector<std::size_t> layer_offsets_;  // start of each layer block
  std::size_t head_offset_ = 0;
};

// Mean weighted categorical cross-entropy over the batch plus gradients for
// every parameter, computed by backpropagation through time. Dropout is
// applied only when masks is non-null. Empty class_weights means uniform
// weighting; otherwise class_weights[c] weights samples of class c and the
// loss is normalized by the total weight.
double loss_and_gradients(const RecurrentClassifier& model,
                          const std::vector<Eigen::MatrixXd>& xs,
                          const std::vector<int>& targets,
                          const std::vector<double>& class_weights,
                          const DropoutMasks* masks, Eigen::VectorXd& grads);

// Builds the per-timestep batch tensor from normalized windows.
std::vector<Eigen::MatrixXd> make_batch_tensor(
    const std::vector<Window>& windows, const std::vector<std::size_t>& index);

// Normalizes one raw window and classifies it. Returns (p_benign,
// p_poisoned); callers flag poisoned at p_poisoned >= 0.5. Throws ShapeError
// when the window length does not match the model's trained length.
std::pair<double, double> infer(const RecurrentClassifier& model,
                                const Window& window,
                                const NormalizationStats& stats);

// Batched variant over raw windows; one row per window.
Eigen::MatrixXd infer_batch(const RecurrentClassifier& model,
                            const std::vector<Window>& windows,
                            const NormalizationStats& stats);

}  // namespace kpiguard
