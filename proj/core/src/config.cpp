#include "kpiguard/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

#include "kpiguard/error.hpp"

namespace kpiguard {

namespace {

using nlohmann::json;

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& section) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed) ok = ok || it.key() == k;
    if (!ok) {
      throw ConfigError("unknown key '" + it.key() + "' in " + section);
    }
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("bad value for '" + std::string(key) + "': " + e.what());
  }
}

void parse_emulation(const json& j, EmulationConfig& out) {
  check_keys(j, {"n_ues", "duration_s", "report_period_s", "slice_split",
                 "n_gnbs", "seed"},
             "emulation");
  read(j, "n_ues", out.n_ues);
  read(j, "duration_s", out.duration_s);
  read(j, "report_period_s", out.report_period_s);
  if (j.contains("slice_split")) {
    const auto v = j.at("slice_split").get<std::vector<std::uint32_t>>();
    if (v.size() != 2) {
      throw ConfigError("slice_split must list exactly two counts");
    }
    out.slice_split = {v[0], v[1]};
  }
  read(j, "n_gnbs", out.n_gnbs);
  read(j, "seed", out.seed);
}

void parse_attack(const json& j, PlanParams& out) {
  check_keys(j, {"victims_per_slice", "amplification_factor", "n_intervals",
                 "min_interval_s", "max_interval_s", "injection_point"},
             "attack");
  read(j, "victims_per_slice", out.victims_per_slice);
  read(j, "amplification_factor", out.amplification_factor);
  read(j, "n_intervals", out.n_intervals);
  read(j, "min_interval_s", out.min_interval_s);
  read(j, "max_interval_s", out.max_interval_s);
  if (j.contains("injection_point")) {
    const auto s = j.at("injection_point").get<std::string>();
    if (s == "E2_INTERFACE_MITM") {
      out.injection_point = InjectionPoint::kE2InterfaceMitm;
    } else if (s == "COMPROMISED_E2_NODE") {
      out.injection_point = InjectionPoint::kCompromisedE2Node;
    } else {
      throw ConfigError("unknown injection_point: " + s);
    }
  }
}

void parse_train(const json& j, TrainConfig& out) {
  check_keys(j, {"learning_rate", "beta1", "beta2", "epsilon", "batch_size",
                 "epochs", "seed", "class_weighting"},
             "train");
  read(j, "learning_rate", out.learning_rate);
  read(j, "beta1", out.beta1);
  read(j, "beta2", out.beta2);
  read(j, "epsilon", out.epsilon);
  read(j, "batch_size", out.batch_size);
  read(j, "epochs", out.epochs);
  read(j, "seed", out.seed);
  read(j, "class_weighting", out.class_weighting);
}

void parse_arch(const json& j, ClassifierArch& out) {
  check_keys(j, {"input_dim", "hidden_units", "n_classes", "dropout_rate"},
             "arch");
  read(j, "input_dim", out.input_dim);
  read(j, "hidden_units", out.hidden_units);
  read(j, "n_classes", out.n_classes);
  read(j, "dropout_rate", out.dropout_rate);
}

void parse_gate(const json& j, GateConfig& out) {
  check_keys(j, {"policy", "cold_start"}, "gate");
  if (j.contains("policy")) {
    const auto s = j.at("policy").get<std::string>();
    if (s == "TAG_AND_FORWARD") {
      out.policy = GatePolicy::kTagAndForward;
    } else if (s == "DISCARD_POISONED_AND_NOTIFY") {
      out.policy = GatePolicy::kDiscardPoisonedAndNotify;
    } else {
      throw ConfigError("unknown gate policy: " + s);
    }
  }
  if (j.contains("cold_start")) {
    const auto s = j.at("cold_start").get<std::string>();
    if (s == "benign") {
      out.cold_start = ColdStartPolicy::kBenignByDefault;
    } else if (s == "suppress") {
      out.cold_start = ColdStartPolicy::kSuppressUntilWarm;
    } else {
      throw ConfigError("unknown cold_start policy: " + s);
    }
  }
}

}  // namespace

const char* library_version() {
#ifdef KPIGUARD_VERSION
  return KPIGUARD_VERSION;
#else
  return "0.0.0";
#endif
}

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid config JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  check_keys(j,
             {"emulation", "attack", "train", "arch", "window",
              "sequence_lengths", "amplification_factors", "split_fraction",
              "max_train_windows", "baseline_quantile", "gate",
              "replay_speedup", "xapp_mbps_per_prb", "seed"},
             "config");

  ExperimentConfig config;
  if (j.contains("emulation")) parse_emulation(j.at("emulation"), config.emulation);
  if (j.contains("attack")) parse_attack(j.at("attack"), config.attack);
  if (j.contains("train")) parse_train(j.at("train"), config.train);
  if (j.contains("arch")) parse_arch(j.at("arch"), config.arch);
  if (j.contains("window")) {
    check_keys(j.at("window"), {"length", "stride"}, "window");
    read(j.at("window"), "length", config.window.length);
    read(j.at("window"), "stride", config.window.stride);
  }
  read(j, "sequence_lengths", config.sequence_lengths);
  read(j, "amplification_factors", config.amplification_factors);
  read(j, "split_fraction", config.split_fraction);
  read(j, "max_train_windows", config.max_train_windows);
  read(j, "baseline_quantile", config.baseline_quantile);
  if (j.contains("gate")) parse_gate(j.at("gate"), config.gate);
  if (j.contains("replay_speedup")) {
    // accept a number or the string "inf"
    const auto& v = j.at("replay_speedup");
    if (v.is_string() && v.get<std::string>() == "inf") {
      config.replay_speedup = std::numeric_limits<double>::infinity();
    } else {
      config.replay_speedup = v.get<double>();
    }
  }
  read(j, "xapp_mbps_per_prb", config.xapp_mbps_per_prb);
  read(j, "seed", config.seed);
  config.validate();
  return config;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_experiment_config(buf.str());
}

std::string experiment_config_to_json(const ExperimentConfig& config) {
  json j;
  j["emulation"] = {{"n_ues", config.emulation.n_ues},
                    {"duration_s", config.emulation.duration_s},
                    {"report_period_s", config.emulation.report_period_s},
                    {"slice_split", {config.emulation.slice_split[0],
                                     config.emulation.slice_split[1]}},
                    {"n_gnbs", config.emulation.n_gnbs},
                    {"seed", config.emulation.seed}};
  j["attack"] = {{"victims_per_slice", config.attack.victims_per_slice},
                 {"amplification_factor", config.attack.amplification_factor},
                 {"n_intervals", config.attack.n_intervals},
                 {"min_interval_s", config.attack.min_interval_s},
                 {"max_interval_s", config.attack.max_interval_s},
                 {"injection_point", to_string(config.attack.injection_point)}};
  j["train"] = {{"learning_rate", config.train.learning_rate},
                {"beta1", config.train.beta1},
                {"beta2", config.train.beta2},
                {"epsilon", config.train.epsilon},
                {"batch_size", config.train.batch_size},
                {"epochs", config.train.epochs},
                {"seed", config.train.seed},
                {"class_weighting", config.train.class_weighting}};
  j["arch"] = {{"input_dim", config.arch.input_dim},
               {"hidden_units", config.arch.hidden_units},
               {"n_classes", config.arch.n_classes},
               {"dropout_rate", config.arch.dropout_rate}};
  j["window"] = {{"length", config.window.length},
                 {"stride", config.window.stride}};
  j["sequence_lengths"] = config.sequence_lengths;
  j["amplification_factors"] = config.amplification_factors;
  j["split_fraction"] = config.split_fraction;
  j["max_train_windows"] = config.max_train_windows;
  j["baseline_quantile"] = config.baseline_quantile;
  j["gate"] = {{"policy", config.gate.policy == GatePolicy::kTagAndForward
                              ? "TAG_AND_FORWARD"
                              : "DISCARD_POISONED_AND_NOTIFY"},
               {"cold_start",
                config.gate.cold_start == ColdStartPolicy::kBenignByDefault
                    ? "benign"
                    : "suppress"}};
  if (std::isfinite(config.replay_speedup)) {
    j["replay_speedup"] = config.replay_speedup;
  } else {
    j["replay_speedup"] = "inf";
  }
  j["xapp_mbps_per_prb"] = config.xapp_mbps_per_prb;
  j["seed"] = config.seed;
  return j.dump(2) + "\n";
}

std::uint64_t config_hash(const ExperimentConfig& config) {
  const std::string text = experiment_config_to_json(config);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace kpiguard
