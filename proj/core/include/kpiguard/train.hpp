#pragma once

#include <cstdint>
#include <vector>

#include "kpiguard/lstm.hpp"
#include "kpiguard/window.hpp"

namespace kpiguard {

struct TrainConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int batch_size = 64;
  int epochs = 10;
  std::uint64_t seed = 0;
  bool class_weighting = true;  // inverse-frequency weights per class

  void validate() const;
};

struct TrainReport {
  std::vector<double> epoch_mean_loss;
  std::size_t n_windows = 0;
  std::size_t n_poisoned = 0;
};

// Mini-batch Adam over labeled, already-normalized windows. Dropout is active
// during training only. Throws TrainError when only one class is present or
// the windows disagree on length, DivergenceError (with the batch index) when
// the loss stops being finite. epochs == 0 returns the freshly initialized
// model untouched.
RecurrentClassifier train(const std::vector<Window>& windows,
                          const ClassifierArch& arch, const TrainConfig& config,
                          TrainReport* report = nullptr);

}  // namespace kpiguard
