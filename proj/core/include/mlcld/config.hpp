#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "mlcld/model.hpp"
#include "mlcld/objectives.hpp"

namespace mlcld::config {

struct DataConfig {
  std::string train;
  std::string test;
  std::string labels;
  bool standardize = false;
};

struct ModelConfig {
  std::size_t hidden_dim = 512;
  std::size_t embed_dim = 128;
  double dropout = 0.2;
  model::HeadInput dist_head_input = model::HeadInput::backbone;
};

struct ScheduleConfig {
  std::uint64_t t0 = 50;
  std::uint64_t t_mult = 2;
  double eta_min = 1e-5;
};

struct PretrainConfig {
  std::size_t epochs = 400;
  std::size_t batch_size = 128;
  double lr = 4e-5;
  double weight_decay = 1e-4;
  double momentum = 0.999;
  double tau = 0.1;
  double sigma = 0.01;
  double alpha = 0.01;
  double beta = 0.01;
  std::size_t queue_size = 256;
  double mask_rate = 0.5;
  ScheduleConfig schedule{50, 2, 1e-5};
  objectives::LossMode loss_mode = objectives::LossMode::cld;
};

struct LossConfig {
  objectives::PositiveMode positive_mode = objectives::PositiveMode::any;
  bool cld_raw_log_weight = false;
  bool w_penalty_per_anchor = false;
  objectives::Reduction reduction = objectives::Reduction::sum;
};

struct FinetuneConfig {
  std::size_t epochs = 100;
  std::size_t batch_size = 128;
  double lr = 4e-4;
  double weight_decay = 1e-5;
  double mask_rate = 0.4;
  ScheduleConfig schedule{25, 2, 1e-4};
  model::ScoreActivation head_activation = model::ScoreActivation::sigmoid;
};

struct EvalConfig {
  double threshold = 0.5;
};

/// Everything one experiment needs. Flat text form: one `section.key=value`
/// per line, '#' comments, blank lines ignored.
struct RunConfig {
  std::uint64_t seed = 0;
  std::string out_dir = "runs/default";
  DataConfig data;
  ModelConfig model;
  PretrainConfig pretrain;
  LossConfig loss;
  FinetuneConfig finetune;
  EvalConfig eval;

  /// Throws ConfigError naming the first key out of range.
  void validate() const;

  objectives::Hyper hyper() const;
};

/// Applies `key=value` lines on top of `base`. Unknown keys, malformed
/// values and bad lines throw ConfigError.
RunConfig parse_config_text(std::string_view text, RunConfig base = {});

/// Reads a config file; relative data.* paths are taken relative to the
/// file's directory.
RunConfig parse_config(const std::filesystem::path& path);

/// One `key=value` assignment (CLI override).
void apply_override(RunConfig& cfg, std::string_view assignment);

/// Canonical text: every key, sorted, shortest round-trip numbers. Parsing
/// it back yields the same config.
std::string to_text(const RunConfig& cfg);

/// Hex FNV-1a digest of to_text(cfg).
std::string fingerprint(const RunConfig& cfg);

std::vector<std::string> known_keys();

const char* to_string(objectives::LossMode mode);
const char* to_string(objectives::PositiveMode mode);

}  // namespace mlcld::config
