#include "kpiguard/train.hpp"

#include <cmath>
#include <numeric>

#include "kpiguard/error.hpp"

namespace kpiguard {

namespace {

constexpr std::uint64_t kInitStream = 0x21;
constexpr std::uint64_t kBatchStream = 0x22;

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be > 0");
  if (batch_size < 1) throw ConfigError("batch size must be positive");
  if (epochs < 0) throw ConfigError("epoch count must be non-negative");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("Adam betas must be in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw ConfigError("Adam epsilon must be positive");
}

RecurrentClassifier train(const std::vector<Window>& windows,
                          const ClassifierArch& arch, const TrainConfig& config,
                          TrainReport* report) {
  config.validate();
  if (windows.empty()) throw TrainError("no training windows");

  const auto length = windows.front().features.rows();
  std::size_t n_poisoned = 0;
  for (const Window& w : windows) {
    if (w.features.rows() != length) {
      throw TrainError("training windows must share one sequence length");
    }
    if (w.label == Label::kPoisoned) ++n_poisoned;
  }
  if (n_poisoned == 0 || n_poisoned == windows.size()) {
    throw TrainError("training requires both classes, got " +
                     std::to_string(n_poisoned) + " poisoned of " +
                     std::to_string(windows.size()) + " windows");
  }

  std::vector<double> class_weights;
  if (config.class_weighting) {
    const double n = static_cast<double>(windows.size());
    const double n_benign = n - static_cast<double>(n_poisoned);
    class_weights = {n / (2.0 * n_benign),
                     n / (2.0 * static_cast<double>(n_poisoned))};
  }

  RecurrentClassifier model(arch, static_cast<int>(length));
  Rng init_rng(derive_seed(config.seed, kInitStream));
  model.init_params(init_rng);

  if (report != nullptr) {
    report->epoch_mean_loss.clear();
    report->n_windows = windows.size();
    report->n_poisoned = n_poisoned;
  }
  if (config.epochs == 0) return model;

  Eigen::VectorXd m = Eigen::VectorXd::Zero(model.params().size());
  Eigen::VectorXd v = Eigen::VectorXd::Zero(model.params().size());
  Eigen::VectorXd grads;
  std::uint64_t adam_step = 0;

  Rng batch_rng(derive_seed(config.seed, kBatchStream));
  std::vector<std::size_t> order(windows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  std::size_t batch_index = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    batch_rng.shuffle(order);
    double epoch_loss = 0.0;
    std::size_t epoch_batches = 0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t stop =
          std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      std::vector<std::size_t> index(order.begin() + static_cast<std::ptrdiff_t>(start),
                                     order.begin() + static_cast<std::ptrdiff_t>(stop));
      const auto xs = make_batch_tensor(windows, index);
      std::vector<int> targets(index.size());
      for (std::size_t b = 0; b < index.size(); ++b) {
        targets[b] = windows[index[b]].label == Label::kPoisoned ? 1 : 0;
      }
      const DropoutMasks masks = sample_dropout_masks(
          arch, static_cast<int>(length), static_cast<int>(index.size()),
          batch_rng);

      const double loss = loss_and_gradients(model, xs, targets, class_weights,
                                             arch.dropout_rate > 0.0 ? &masks : nullptr,
                                             grads);
      if (!std::isfinite(loss)) {
        throw DivergenceError(batch_index, "training loss is not finite");
      }

      ++adam_step;
      const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(adam_step));
      const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(adam_step));
      m = config.beta1 * m + (1.0 - config.beta1) * grads;
      v = config.beta2 * v.array().matrix() +
          (1.0 - config.beta2) * grads.array().square().matrix();
      model.params().array() -=
          config.learning_rate * (m.array() / bc1) /
          ((v.array() / bc2).sqrt() + config.epsilon);

      epoch_loss += loss;
      ++epoch_batches;
      ++batch_index;
    }
    if (report != nullptr) {
      report->epoch_mean_loss.push_back(epoch_loss /
                                        static_cast<double>(epoch_batches));
    }
  }
  return model;
}

}  // namespace kpiguard
