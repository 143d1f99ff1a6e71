#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mlcld/config.hpp"
#include "mlcld/dataio.hpp"
#include "mlcld/metrics.hpp"
#include "mlcld/model.hpp"
#include "mlcld/trainer.hpp"

namespace mlcld::pipeline {

inline constexpr const char* kPretrainLogHeader = "epoch,total,contrastive,g,h,w_penalty";
inline constexpr const char* kFinetuneLogHeader = "epoch,bce";
inline constexpr const char* kSweepHeader = "alpha,beta,seed,status,ha,ebf1,mif1,maf1,p_at_1,map,message";

// File names inside a run directory.
inline constexpr const char* kResolvedConfig = "resolved.cfg";
inline constexpr const char* kPretrainLog = "pretrain_log.csv";
inline constexpr const char* kPretrainedCkpt = "pretrained.ckpt";
inline constexpr const char* kFinetuneLog = "finetune_log.csv";
inline constexpr const char* kFinetunedCkpt = "finetuned.ckpt";
inline constexpr const char* kMetricsCsv = "metrics.csv";
inline constexpr const char* kMetricsTxt = "metrics.txt";

/// Loads one ARFF split with the config's label file; standardizes with
/// `stats` when given.
dataio::MulanDataset load_split(const std::string& arff, const std::string& labels_xml,
                                const dataio::Standardizer* stats = nullptr);

struct Splits {
  dataio::MulanDataset train;
  std::optional<dataio::MulanDataset> test;
  std::optional<dataio::Standardizer> stats;
};

/// Train split (and test split if configured), z-scored with train
/// statistics when data.standardize is set.
Splits load_data(const config::RunConfig& cfg, bool with_test);

model::EncoderConfig encoder_config(const config::RunConfig& cfg, std::size_t input_dim,
                                    std::size_t num_labels);

// ---- in-memory stages -------------------------------------------------

struct PretrainResult {
  model::ModelPair model;
  std::vector<train::EpochRecord> log;
};

/// Initializes a model from the seed and runs pretrain.epochs epochs.
PretrainResult pretrain(const config::RunConfig& cfg, const dataio::MulanDataset& train,
                        std::ostream* progress = nullptr);

/// Runs finetune.epochs epochs of BCE on `model` in place.
std::vector<train::FinetuneRecord> finetune(model::ModelPair& model, const config::RunConfig& cfg,
                                            const dataio::MulanDataset& train,
                                            std::ostream* progress = nullptr);

/// Eval-mode scores on `test`, then all six metrics.
metrics::MetricsReport evaluate(const model::ModelPair& model, const dataio::MulanDataset& test,
                                double threshold, model::ScoreActivation activation);

// ---- commands writing a run directory ---------------------------------

std::string pretrain_log_csv(const std::vector<train::EpochRecord>& log);
std::string finetune_log_csv(const std::vector<train::FinetuneRecord>& log);

/// Writes resolved.cfg, pretrain_log.csv and pretrained.ckpt under
/// cfg.out_dir; returns the checkpoint path.
std::filesystem::path cmd_pretrain(const config::RunConfig& cfg, std::ostream* progress = nullptr);

/// Loads a checkpoint, fine-tunes it on data.train and writes
/// finetune_log.csv and finetuned.ckpt under cfg.out_dir.
std::filesystem::path cmd_finetune(const config::RunConfig& cfg, const std::filesystem::path& from,
                                   std::ostream* progress = nullptr,
                                   std::ostream* warnings = nullptr);

struct EvaluateRequest {
  std::filesystem::path checkpoint;
  std::string test_arff;
  std::string labels_xml;
  std::optional<double> threshold;
  /// Run config; when absent, resolved.cfg beside the checkpoint is used
  /// if it exists.
  std::optional<config::RunConfig> config;
  std::filesystem::path out_dir;  ///< defaults to the checkpoint's directory
};

/// Writes metrics.csv (header + one row) and metrics.txt.
metrics::MetricsReport cmd_evaluate(const EvaluateRequest& request);

/// Pretrain, finetune and evaluate in one go, writing every artifact.
metrics::MetricsReport run_pipeline(const config::RunConfig& cfg, std::ostream* progress = nullptr);

struct SweepRequest {
  config::RunConfig base;
  std::vector<double> alphas;
  std::vector<double> betas;
  std::vector<std::uint64_t> seeds;
  std::filesystem::path out_csv;  ///< defaults to <base.out_dir>/sweep.csv
};

/// One run_pipeline per (alpha, beta, seed) in a sub-directory of
/// base.out_dir. Failed cells become error rows. Returns the row count.
std::size_t cmd_sweep(const SweepRequest& request, std::ostream* progress = nullptr);

std::string metrics_text(const metrics::MetricsReport& report, const std::string& fingerprint,
                         std::uint64_t seed, double threshold);

}  // namespace mlcld::pipeline
