#pragma once

#include <filesystem>

#include "kpiguard/lstm.hpp"
#include "kpiguard/train.hpp"
#include "kpiguard/window.hpp"

namespace kpiguard {

// Self-describing model container: a JSON header (architecture, trained
// window length, normalization stats, training config) followed by the flat
// parameter vector as little-endian 64-bit floats.
struct ModelCheckpoint {
  RecurrentClassifier model;
  NormalizationStats stats;
  TrainConfig train_config;
};

void save_checkpoint(const std::filesystem::path& path,
                     const RecurrentClassifier& model,
                     const NormalizationStats& stats,
                     const TrainConfig& train_config);

// Throws FormatError on a malformed container and ShapeError when the header
// dimensions disagree with the parameter payload.
ModelCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace kpiguard
