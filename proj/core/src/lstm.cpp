#include "kpiguard/lstm.hpp"

#include <cmath>

#include "kpiguard/error.hpp"

namespace kpiguard {

namespace {

using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using Eigen::VectorXd;

inline MatrixXd sigmoid(const MatrixXd& x) {
  return ((-x.array()).exp() + 1.0).inverse().matrix();
}

struct LayerDims {
  int in;
  int h;
  std::size_t w_in_size() const { return static_cast<std::size_t>(in) * 4 * h; }
  std::size_t w_rec_size() const { return static_cast<std::size_t>(h) * 4 * h; }
  std::size_t bias_size() const { return static_cast<std::size_t>(4) * h; }
  std::size_t total() const { return w_in_size() + w_rec_size() + bias_size(); }
};

LayerDims dims_of(const ClassifierArch& arch, int layer) {
  const int in = layer == 0 ? arch.input_dim : arch.hidden_units[layer - 1];
  return LayerDims{in, arch.hidden_units[layer]};
}

// Caches of one layer's forward pass, kept for backpropagation.
struct LayerTrace {
  std::vector<MatrixXd> gates;   // B x 4H post-activation [i f g o]
  std::vector<MatrixXd> c;       // B x H cell state
  std::vector<MatrixXd> tanh_c;  // B x H
  std::vector<MatrixXd> h;       // B x H raw output (pre-dropout)
};

// Runs the stacked layers over the sequence. When masks is non-null the
// output sequence of every layer is multiplied by its dropout mask before
// feeding the next layer (and the head). Returns the head input (batch x
// H_last at the final step).
MatrixXd run_layers(const RecurrentClassifier& model,
                    const std::vector<MatrixXd>& xs, const DropoutMasks* masks,
                    std::vector<LayerTrace>* traces,
                    std::vector<std::vector<MatrixXd>>* layer_inputs) {
  const auto& arch = model.arch();
  const int steps = static_cast<int>(xs.size());
  const auto batch = xs.front().rows();

  std::vector<MatrixXd> current = xs;
  for (int l = 0; l < model.n_layers(); ++l) {
    const auto view = model.layer(l);
    const int h_dim = arch.hidden_units[l];
    LayerTrace trace;
    if (traces != nullptr) {
      trace.gates.resize(steps);
      trace.c.resize(steps);
      trace.tanh_c.resize(steps);
      trace.h.resize(steps);
    }
    if (layer_inputs != nullptr) (*layer_inputs)[l] = current;

    MatrixXd h_prev = MatrixXd::Zero(batch, h_dim);
    MatrixXd c_prev = MatrixXd::Zero(batch, h_dim);
    std::vector<MatrixXd> outputs(steps);
    for (int t = 0; t < steps; ++t) {
      MatrixXd pre = current[t] * view.w_in;
      pre.noalias() += h_prev * view.w_rec;
      pre.rowwise() += view.bias;

      MatrixXd gates(batch, 4 * h_dim);
      gates.leftCols(2 * h_dim) = sigmoid(pre.leftCols(2 * h_dim));
      gates.middleCols(2 * h_dim, h_dim) =
          pre.middleCols(2 * h_dim, h_dim).array().tanh().matrix();
      gates.rightCols(h_dim) = sigmoid(pre.rightCols(h_dim));

      auto gi = gates.middleCols(0, h_dim);
      auto gf = gates.middleCols(h_dim, h_dim);
      auto gg = gates.middleCols(2 * h_dim, h_dim);
      auto go = gates.middleCols(3 * h_dim, h_dim);

      MatrixXd c = gf.cwiseProduct(c_prev) + gi.cwiseProduct(gg);
      MatrixXd tanh_c = c.array().tanh().matrix();
      MatrixXd h = go.cwiseProduct(tanh_c);

      if (traces != nullptr) {
        trace.gates[t] = gates;
        trace.c[t] = c;
        trace.tanh_c[t] = tanh_c;
        trace.h[t] = h;
      }
      outputs[t] = std::move(h);
      h_prev = outputs[t];
      c_prev = std::move(c);
    }
    if (masks != nullptr) {
      for (int t = 0; t < steps; ++t) {
        outputs[t] = outputs[t].cwiseProduct(masks->masks[l][t]);
      }
    }
    if (traces != nullptr) (*traces)[l] = std::move(trace);
    current = std::move(outputs);
  }
  return current.back();
}

MatrixXd logits_from_head(const RecurrentClassifier& model,
                          const MatrixXd& head_input) {
  const auto head = model.head();
  MatrixXd logits = head_input * head.w;
  logits.rowwise() += head.b;
  return logits;
}

MatrixXd softmax_rows(const MatrixXd& logits) {
  MatrixXd shifted =
      logits.colwise() - logits.rowwise().maxCoeff();
  MatrixXd e = shifted.array().exp().matrix();
  return e.array().colwise() / e.rowwise().sum().array();
}

}  // namespace

void ClassifierArch::validate() const {
  if (input_dim < 1) throw ConfigError("input_dim must be positive");
  if (hidden_units.empty()) throw ConfigError("at least one recurrent layer");
  for (int h : hidden_units) {
    if (h < 1) throw ConfigError("hidden unit counts must be positive");
  }
  if (n_classes < 2) throw ConfigError("need at least two classes");
  if (dropout_rate < 0.0 || dropout_rate >= 1.0) {
    throw ConfigError("dropout rate must be in [0, 1)");
  }
}

std::size_t param_count(const ClassifierArch& arch) {
  std::size_t total = 0;
  for (std::size_t l = 0; l < arch.hidden_units.size(); ++l) {
    total += dims_of(arch, static_cast<int>(l)).total();
  }
  total += static_cast<std::size_t>(arch.hidden_units.back()) * arch.n_classes;
  total += static_cast<std::size_t>(arch.n_classes);
  return total;
}

DropoutMasks sample_dropout_masks(const ClassifierArch& arch, int length,
                                  int batch, Rng& rng) {
  const double keep = 1.0 - arch.dropout_rate;
  DropoutMasks out;
  out.masks.resize(arch.hidden_units.size());
  for (std::size_t l = 0; l < arch.hidden_units.size(); ++l) {
    out.masks[l].resize(length);
    for (int t = 0; t < length; ++t) {
      MatrixXd m(batch, arch.hidden_units[l]);
      for (Eigen::Index k = 0; k < m.size(); ++k) {
        m.data()[k] = rng.uniform() < keep ? 1.0 / keep : 0.0;
      }
      out.masks[l][t] = std::move(m);
    }
  }
  return out;
}

RecurrentClassifier::RecurrentClassifier(ClassifierArch arch,
                                         int window_length)
    : arch_(std::move(arch)), window_length_(window_length) {
  arch_.validate();
  if (window_length_ < 1) throw ConfigError("window length must be positive");
  std::size_t offset = 0;
  for (int l = 0; l < n_layers(); ++l) {
    layer_offsets_.push_back(offset);
    offset += dims_of(arch_, l).total();
  }
  head_offset_ = offset;
  params_ = VectorXd::Zero(static_cast<Eigen::Index>(param_count(arch_)));
}

RecurrentClassifier::LayerView RecurrentClassifier::layer(int index) const {
  const LayerDims d = dims_of(arch_, index);
  const double* base = params_.data() + layer_offsets_[index];
  return LayerView{
      Eigen::Map<const MatrixXd>(base, d.in, 4 * d.h),
      Eigen::Map<const MatrixXd>(base + d.w_in_size(), d.h, 4 * d.h),
      Eigen::Map<const RowVectorXd>(base + d.w_in_size() + d.w_rec_size(),
                                    4 * d.h)};
}

RecurrentClassifier::HeadView RecurrentClassifier::head() const {
  const int h_last = arch_.hidden_units.back();
  const double* base = params_.data() + head_offset_;
  return HeadView{
      Eigen::Map<const MatrixXd>(base, h_last, arch_.n_classes),
      Eigen::Map<const RowVectorXd>(
          base + static_cast<std::size_t>(h_last) * arch_.n_classes,
          arch_.n_classes)};
}

void RecurrentClassifier::init_params(Rng& rng) {
  params_.setZero();
  for (int l = 0; l < n_layers(); ++l) {
    const LayerDims d = dims_of(arch_, l);
    double* base = params_.data() + layer_offsets_[l];
    const double lim_in = std::sqrt(6.0 / (d.in + 4.0 * d.h));
    for (std::size_t k = 0; k < d.w_in_size(); ++k) {
      base[k] = rng.uniform(-lim_in, lim_in);
    }
    const double lim_rec = std::sqrt(6.0 / (d.h + 4.0 * d.h));
    for (std::size_t k = 0; k < d.w_rec_size(); ++k) {
      base[d.w_in_size() + k] = rng.uniform(-lim_rec, lim_rec);
    }
    // biases stay zero except the forget gate block
    double* bias = base + d.w_in_size() + d.w_rec_size();
    for (int k = 0; k < d.h; ++k) bias[d.h + k] = 1.0;
  }
  const int h_last = arch_.hidden_units.back();
  double* base = params_.data() + head_offset_;
  const double lim = std::sqrt(6.0 / (h_last + arch_.n_classes));
  const std::size_t w_size =
      static_cast<std::size_t>(h_last) * arch_.n_classes;
  for (std::size_t k = 0; k < w_size; ++k) base[k] = rng.uniform(-lim, lim);
}

MatrixXd RecurrentClassifier::forward_probs(
    const std::vector<MatrixXd>& xs) const {
  if (xs.empty()) throw ShapeError("empty input sequence");
  if (static_cast<int>(xs.size()) != window_length_) {
    throw ShapeError("sequence length " + std::to_string(xs.size()) +
                     " does not match trained length " +
                     std::to_string(window_length_));
  }
  if (xs.front().cols() != arch_.input_dim) {
    throw ShapeError("input feature dimension mismatch");
  }
  const MatrixXd head_input = run_layers(*this, xs, nullptr, nullptr, nullptr);
  return softmax_rows(logits_from_head(*this, head_input));
}

double loss_and_gradients(const RecurrentClassifier& model,
                          const std::vector<MatrixXd>& xs,
                          const std::vector<int>& targets,
                          const std::vector<double>& class_weights,
                          const DropoutMasks* masks, VectorXd& grads) {
  const auto& arch = model.arch();
  if (xs.empty()) throw ShapeError("empty batch");
  const int steps = static_cast<int>(xs.size());
  const auto batch = xs.front().rows();
  if (static_cast<Eigen::Index>(targets.size()) != batch) {
    throw ShapeError("target count does not match batch size");
  }

  const int n_layers = model.n_layers();
  std::vector<LayerTrace> traces(n_layers);
  std::vector<std::vector<MatrixXd>> layer_inputs(n_layers);
  const MatrixXd head_input =
      run_layers(model, xs, masks, &traces, &layer_inputs);
  const MatrixXd logits = logits_from_head(model, head_input);

  // Weighted cross-entropy through a log-sum-exp.
  const VectorXd row_max = logits.rowwise().maxCoeff();
  const MatrixXd shifted = logits.colwise() - row_max;
  const VectorXd log_norm =
      shifted.array().exp().rowwise().sum().log().matrix();
  MatrixXd probs = shifted.array().exp().matrix();
  probs.array().colwise() /= probs.rowwise().sum().array();

  double total_weight = 0.0;
  double loss = 0.0;
  VectorXd sample_weight(batch);
  for (Eigen::Index b = 0; b < batch; ++b) {
    const int y = targets[static_cast<std::size_t>(b)];
    if (y < 0 || y >= arch.n_classes) throw ShapeError("target out of range");
    const double w =
        class_weights.empty() ? 1.0 : class_weights[static_cast<std::size_t>(y)];
    sample_weight[b] = w;
    total_weight += w;
    loss -= w * (shifted(b, y) - log_norm[b]);
  }
  loss /= total_weight;

  grads = VectorXd::Zero(model.params().size());

  MatrixXd dlogits = probs;
  for (Eigen::Index b = 0; b < batch; ++b) {
    dlogits(b, targets[static_cast<std::size_t>(b)]) -= 1.0;
    dlogits.row(b) *= sample_weight[b] / total_weight;
  }

  // Head gradients.
  const auto head = model.head();
  const int h_last = arch.hidden_units.back();
  {
    double* base = grads.data() + model.head_offset_;
    Eigen::Map<MatrixXd> d_w(base, h_last, arch.n_classes);
    Eigen::Map<RowVectorXd> d_b(
        base + static_cast<std::size_t>(h_last) * arch.n_classes,
        arch.n_classes);
    d_w.noalias() = head_input.transpose() * dlogits;
    d_b = dlogits.colwise().sum();
  }

  // Gradient wrt each layer's post-dropout output sequence; only the last
  // step receives a head contribution at the top layer.
  std::vector<MatrixXd> d_out(steps,
                              MatrixXd::Zero(batch, h_last));
  d_out[steps - 1] = dlogits * head.w.transpose();

  for (int l = n_layers - 1; l >= 0; --l) {
    const LayerDims d = dims_of(arch, l);
    const auto view = model.layer(l);
    const LayerTrace& trace = traces[l];
    const std::vector<MatrixXd>& inputs = layer_inputs[l];

    double* gbase = grads.data() + model.layer_offsets_[l];
    Eigen::Map<MatrixXd> d_w_in(gbase, d.in, 4 * d.h);
    Eigen::Map<MatrixXd> d_w_rec(gbase + d.w_in_size(), d.h, 4 * d.h);
    Eigen::Map<RowVectorXd> d_bias(gbase + d.w_in_size() + d.w_rec_size(),
                                   4 * d.h);

    std::vector<MatrixXd> d_below;
    if (l > 0) {
      d_below.assign(steps, MatrixXd::Zero(batch, dims_of(arch, l - 1).h));
    }

    MatrixXd dh_rec = MatrixXd::Zero(batch, d.h);
    MatrixXd dc_rec = MatrixXd::Zero(batch, d.h);
    MatrixXd dpre(batch, 4 * d.h);
    for (int t = steps - 1; t >= 0; --t) {
      // Inter-layer gradient passes through this layer's dropout mask.
      MatrixXd dh = d_out[t];
      if (masks != nullptr) dh = dh.cwiseProduct(masks->masks[l][t]);
      dh += dh_rec;

      const auto gi = trace.gates[t].middleCols(0, d.h);
      const auto gf = trace.gates[t].middleCols(d.h, d.h);
      const auto gg = trace.gates[t].middleCols(2 * d.h, d.h);
      const auto go = trace.gates[t].middleCols(3 * d.h, d.h);
      const MatrixXd& tanh_c = trace.tanh_c[t];

      const MatrixXd d_o = dh.cwiseProduct(tanh_c);
      MatrixXd dc = dh.cwiseProduct(go)
                        .cwiseProduct((1.0 - tanh_c.array().square()).matrix());
      dc += dc_rec;

      const MatrixXd c_prev =
          t > 0 ? trace.c[t - 1] : MatrixXd::Zero(batch, d.h);
      const MatrixXd h_prev =
          t > 0 ? trace.h[t - 1] : MatrixXd::Zero(batch, d.h);

      dpre.middleCols(0, d.h) =
          dc.cwiseProduct(gg).cwiseProduct(gi.cwiseProduct((1.0 - gi.array()).matrix()));
      dpre.middleCols(d.h, d.h) =
          dc.cwiseProduct(c_prev).cwiseProduct(gf.cwiseProduct((1.0 - gf.array()).matrix()));
      dpre.middleCols(2 * d.h, d.h) =
          dc.cwiseProduct(gi).cwiseProduct((1.0 - gg.array().square()).matrix());
      dpre.middleCols(3 * d.h, d.h) =
          d_o.cwiseProduct(go.cwiseProduct((1.0 - go.array()).matrix()));

      d_w_in.noalias() += inputs[t].transpose() * dpre;
      d_w_rec.noalias() += h_prev.transpose() * dpre;
      d_bias += dpre.colwise().sum();

      if (l > 0) d_below[t].noalias() = dpre * view.w_in.transpose();
      dh_rec.noalias() = dpre * view.w_rec.transpose();
      dc_rec = dc.cwiseProduct(gf);
    }
    if (l > 0) d_out = std::move(d_below);
  }
  return loss;
}

std::vector<MatrixXd> make_batch_tensor(const std::vector<Window>& windows,
                                        const std::vector<std::size_t>& index) {
  if (index.empty()) throw ShapeError("empty batch");
  const auto length = windows[index.front()].features.rows();
  const auto n_feat = windows[index.front()].features.cols();
  std::vector<MatrixXd> xs(
      static_cast<std::size_t>(length),
      MatrixXd(static_cast<Eigen::Index>(index.size()), n_feat));
  for (std::size_t b = 0; b < index.size(); ++b) {
    const Window& w = windows[index[b]];
    if (w.features.rows() != length || w.features.cols() != n_feat) {
      throw ShapeError("windows in a batch must share one shape");
    }
    for (Eigen::Index t = 0; t < length; ++t) {
      xs[static_cast<std::size_t>(t)].row(static_cast<Eigen::Index>(b)) =
          w.features.row(t);
    }
  }
  return xs;
}

std::pair<double, double> infer(const RecurrentClassifier& model,
                                const Window& window,
                                const NormalizationStats& stats) {
  if (window.features.rows() != model.window_length()) {
    throw ShapeError("window length " +
                     std::to_string(window.features.rows()) +
                     " does not match trained length " +
                     std::to_string(model.window_length()));
  }
  const Eigen::MatrixXd norm = normalize(window.features, stats);
  std::vector<MatrixXd> xs(static_cast<std::size_t>(norm.rows()));
  for (Eigen::Index t = 0; t < norm.rows(); ++t) {
    xs[static_cast<std::size_t>(t)] = norm.row(t);
  }
  const MatrixXd probs = model.forward_probs(xs);
  return {probs(0, 0), probs(0, 1)};
}

MatrixXd infer_batch(const RecurrentClassifier& model,
                     const std::vector<Window>& windows,
                     const NormalizationStats& stats) {
  if (windows.empty()) return MatrixXd(0, model.arch().n_classes);
  const int length = model.window_length();
  std::vector<MatrixXd> xs(
      static_cast<std::size_t>(length),
      MatrixXd(static_cast<Eigen::Index>(windows.size()),
               model.arch().input_dim));
  for (std::size_t b = 0; b < windows.size(); ++b) {
    if (windows[b].features.rows() != length) {
      throw ShapeError("window length does not match trained length");
    }
    const MatrixXd norm = normalize(windows[b].features, stats);
    for (int t = 0; t < length; ++t) {
      xs[static_cast<std::size_t>(t)].row(static_cast<Eigen::Index>(b)) =
          norm.row(t);
    }
  }
  return model.forward_probs(xs);
}

}  // namespace kpiguard
