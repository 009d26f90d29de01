#include "kpiguard/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

#include "json.hpp"

#include "kpiguard/error.hpp"

namespace kpiguard {

namespace {

constexpr char kMagic[8] = {'K', 'P', 'G', 'M', 'D', 'L', '0', '1'};

static_assert(std::endian::native == std::endian::little,
              "checkpoint writer assumes a little-endian host");

nlohmann::json stats_to_json(const NormalizationStats& stats) {
  nlohmann::json j;
  for (int f = 0; f < kNumKpiFeatures; ++f) {
    j["mean"].push_back(stats.mean[f]);
    j["std"].push_back(stats.std[f]);
  }
  return j;
}

NormalizationStats stats_from_json(const nlohmann::json& j) {
  NormalizationStats stats;
  for (int f = 0; f < kNumKpiFeatures; ++f) {
    stats.mean[f] = j.at("mean").at(f).get<double>();
    stats.std[f] = j.at("std").at(f).get<double>();
  }
  return stats;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path,
                     const RecurrentClassifier& model,
                     const NormalizationStats& stats,
                     const TrainConfig& train_config) {
  nlohmann::json header;
  header["input_dim"] = model.arch().input_dim;
  header["hidden_units"] = model.arch().hidden_units;
  header["n_classes"] = model.arch().n_classes;
  header["dropout_rate"] = model.arch().dropout_rate;
  header["window_length"] = model.window_length();
  header["normalization"] = stats_to_json(stats);
  header["train"] = {{"learning_rate", train_config.learning_rate},
                     {"beta1", train_config.beta1},
                     {"beta2", train_config.beta2},
                     {"epsilon", train_config.epsilon},
                     {"batch_size", train_config.batch_size},
                     {"epochs", train_config.epochs},
                     {"seed", train_config.seed},
                     {"class_weighting", train_config.class_weighting}};
  header["param_count"] = model.params().size();
  const std::string header_text = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(kMagic, sizeof(kMagic));
  const std::uint64_t header_len = header_text.size();
  out.write(reinterpret_cast<const char*>(&header_len), sizeof(header_len));
  out.write(header_text.data(),
            static_cast<std::streamsize>(header_text.size()));
  out.write(reinterpret_cast<const char*>(model.params().data()),
            static_cast<std::streamsize>(model.params().size() *
                                         sizeof(double)));
  if (!out) throw Error("failed writing checkpoint " + path.string());
}

ModelCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());

  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw FormatError("not a model checkpoint: " + path.string());
  }
  std::uint64_t header_len = 0;
  in.read(reinterpret_cast<char*>(&header_len), sizeof(header_len));
  if (!in || header_len > (1u << 20)) {
    throw FormatError("corrupt checkpoint header length");
  }
  std::string header_text(header_len, '\0');
  in.read(header_text.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw FormatError("truncated checkpoint header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("invalid checkpoint header: ") + e.what());
  }

  try {
    ClassifierArch arch;
    arch.input_dim = header.at("input_dim").get<int>();
    arch.hidden_units = header.at("hidden_units").get<std::vector<int>>();
    arch.n_classes = header.at("n_classes").get<int>();
    arch.dropout_rate = header.at("dropout_rate").get<double>();
    const int window_length = header.at("window_length").get<int>();

    const auto declared =
        header.at("param_count").get<std::uint64_t>();
    if (declared != param_count(arch)) {
      throw ShapeError("checkpoint parameter count " +
                       std::to_string(declared) +
                       " does not match its architecture (" +
                       std::to_string(param_count(arch)) + ")");
    }

    ModelCheckpoint out{RecurrentClassifier(arch, window_length),
                        stats_from_json(header.at("normalization")),
                        TrainConfig{}};
    const auto& t = header.at("train");
    out.train_config.learning_rate = t.at("learning_rate").get<double>();
    out.train_config.beta1 = t.at("beta1").get<double>();
    out.train_config.beta2 = t.at("beta2").get<double>();
    out.train_config.epsilon = t.at("epsilon").get<double>();
    out.train_config.batch_size = t.at("batch_size").get<int>();
    out.train_config.epochs = t.at("epochs").get<int>();
    out.train_config.seed = t.at("seed").get<std::uint64_t>();
    out.train_config.class_weighting = t.at("class_weighting").get<bool>();

    in.read(reinterpret_cast<char*>(out.model.params().data()),
            static_cast<std::streamsize>(out.model.params().size() *
                                         sizeof(double)));
    if (!in || in.gcount() !=
                   static_cast<std::streamsize>(out.model.params().size() *
                                                sizeof(double))) {
      throw ShapeError("checkpoint parameter payload is truncated");
    }
    char extra;
    if (in.read(&extra, 1); in.gcount() != 0) {
      throw FormatError("trailing bytes after checkpoint payload");
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("invalid checkpoint header: ") + e.what());
  }
}

}  // namespace kpiguard
