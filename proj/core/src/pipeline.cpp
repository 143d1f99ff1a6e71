#include "mlcld/pipeline.hpp"

#include <charconv>
#include <fstream>
#include <ostream>
#include <sstream>

#include "mlcld/errors.hpp"

namespace mlcld::pipeline {
namespace fs = std::filesystem;
namespace {

std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw DataError("cannot write " + path.string());
}

bool report_epoch(std::size_t epoch, std::size_t total) {
  return epoch == 0 || (epoch + 1) % 10 == 0 || epoch + 1 == total;
}

// Commas and newlines would break the sweep CSV.
std::string csv_safe(std::string s) {
  for (char& ch : s)
    if (ch == ',' || ch == '\n' || ch == '\r') ch = ' ';
  return s;
}

}  // namespace

dataio::MulanDataset load_split(const std::string& arff, const std::string& labels_xml,
                                const dataio::Standardizer* stats) {
  if (arff.empty()) throw ConfigError("data: ARFF path is empty");
  if (labels_xml.empty()) throw ConfigError("data.labels: path is empty");
  auto data = dataio::load_mulan_pair(arff, labels_xml);
  if (stats) stats->apply(data.features);
  return data;
}

Splits load_data(const config::RunConfig& cfg, bool with_test) {
  Splits out;
  out.train = load_split(cfg.data.train, cfg.data.labels);
  if (cfg.data.standardize) {
    out.stats = dataio::Standardizer::fit(out.train.features);
    out.stats->apply(out.train.features);
  }
  if (with_test) {
    out.test = load_split(cfg.data.test, cfg.data.labels, out.stats ? &*out.stats : nullptr);
    if (out.test->f() != out.train.f()) {
      throw DimensionError("test split has " + std::to_string(out.test->f()) +
                           " features, train has " + std::to_string(out.train.f()));
    }
  }
  return out;
}

model::EncoderConfig encoder_config(const config::RunConfig& cfg, std::size_t input_dim,
                                    std::size_t num_labels) {
  model::EncoderConfig ec;
  ec.input_dim = input_dim;
  ec.hidden_dim = cfg.model.hidden_dim;
  ec.embed_dim = cfg.model.embed_dim;
  ec.num_labels = num_labels;
  ec.dropout = cfg.model.dropout;
  ec.head_input = cfg.model.dist_head_input;
  ec.validate();
  return ec;
}

PretrainResult pretrain(const config::RunConfig& cfg, const dataio::MulanDataset& train,
                        std::ostream* progress) {
  cfg.validate();
  Rng init_rng(cfg.seed, train::kInitStream);
  PretrainResult out{model::init_model(encoder_config(cfg, train.f(), train.c()), init_rng), {}};
  train::Pretrainer trainer(out.model, cfg);
  for (std::size_t e = 0; e < cfg.pretrain.epochs; ++e) {
    out.log.push_back(trainer.run_epoch(train));
    if (progress && report_epoch(e, cfg.pretrain.epochs)) {
      const auto& r = out.log.back();
      *progress << "pretrain epoch " << e + 1 << "/" << cfg.pretrain.epochs << " lr " << r.lr
                << " loss " << r.mean.total << "\n";
    }
  }
  return out;
}

std::vector<train::FinetuneRecord> finetune(model::ModelPair& model, const config::RunConfig& cfg,
                                            const dataio::MulanDataset& train,
                                            std::ostream* progress) {
  if (model.config.input_dim != train.f() || model.config.num_labels != train.c()) {
    throw DimensionError("checkpoint expects " + std::to_string(model.config.input_dim) +
                         " features and " + std::to_string(model.config.num_labels) +
                         " labels, data has " + std::to_string(train.f()) + " and " +
                         std::to_string(train.c()));
  }
  std::vector<train::FinetuneRecord> log;
  if (cfg.finetune.epochs == 0) return log;
  train::Finetuner tuner(model, cfg);
  for (std::size_t e = 0; e < cfg.finetune.epochs; ++e) {
    log.push_back(tuner.run_epoch(train));
    if (progress && report_epoch(e, cfg.finetune.epochs)) {
      *progress << "finetune epoch " << e + 1 << "/" << cfg.finetune.epochs << " lr "
                << log.back().lr << " bce " << log.back().bce << "\n";
    }
  }
  return log;
}

metrics::MetricsReport evaluate(const model::ModelPair& model, const dataio::MulanDataset& test,
                                double threshold, model::ScoreActivation activation) {
  if (model.config.input_dim != test.f() || model.config.num_labels != test.c()) {
    throw DimensionError("model is " + std::to_string(model.config.input_dim) + "->" +
                         std::to_string(model.config.num_labels) + ", test data is " +
                         std::to_string(test.f()) + "->" + std::to_string(test.c()));
  }
  const Matrix scores = model::predict_scores(model, test.features, activation);
  return metrics::evaluate_all(scores, threshold, test.labels);
}

std::string pretrain_log_csv(const std::vector<train::EpochRecord>& log) {
  std::string out = std::string(kPretrainLogHeader) + "\n";
  for (const auto& r : log) {
    out += std::to_string(r.epoch) + "," + fmt(r.mean.total) + "," + fmt(r.mean.contrastive) + "," +
           fmt(r.mean.g) + "," + fmt(r.mean.h) + "," + fmt(r.mean.w_penalty) + "\n";
  }
  return out;
}

std::string finetune_log_csv(const std::vector<train::FinetuneRecord>& log) {
  std::string out = std::string(kFinetuneLogHeader) + "\n";
  for (const auto& r : log) out += std::to_string(r.epoch) + "," + fmt(r.bce) + "\n";
  return out;
}

std::string metrics_text(const metrics::MetricsReport& r, const std::string& fingerprint,
                         std::uint64_t seed, double threshold) {
  std::ostringstream os;
  os << "config_fingerprint: " << fingerprint << "\n"
     << "seed: " << seed << "\n"
     << "threshold: " << fmt(threshold) << "\n"
     << "hamming_accuracy: " << fmt(r.ha) << "\n"
     << "example_f1: " << fmt(r.ebf1) << "\n"
     << "micro_f1: " << fmt(r.mif1) << "\n"
     << "macro_f1: " << fmt(r.maf1) << "\n"
     << "precision_at_1: " << fmt(r.p_at_1) << "\n"
     << "mean_average_precision: " << fmt(r.map) << "\n"
     << "conventions: " << metrics::kConventions << "\n";
  return os.str();
}

fs::path cmd_pretrain(const config::RunConfig& cfg, std::ostream* progress) {
  cfg.validate();
  const auto data = load_data(cfg, false);
  const fs::path dir = cfg.out_dir;
  write_file(dir / kResolvedConfig, config::to_text(cfg));
  const auto result = pretrain(cfg, data.train, progress);
  write_file(dir / kPretrainLog, pretrain_log_csv(result.log));
  const fs::path ckpt = dir / kPretrainedCkpt;
  model::save_checkpoint(result.model, {data.train.label_names, model::Phase::pretrained, cfg.seed},
                         ckpt);
  return ckpt;
}

fs::path cmd_finetune(const config::RunConfig& cfg, const fs::path& from, std::ostream* progress,
                      std::ostream* warnings) {
  cfg.validate();
  auto ckpt = model::load_checkpoint(from);
  if (warnings && ckpt.meta.phase != model::Phase::pretrained) {
    *warnings << "warning: " << from.string() << " is already fine-tuned\n";
  }
  const auto data = load_data(cfg, false);
  if (ckpt.meta.label_names != data.train.label_names) {
    throw DataError("checkpoint label names do not match " + cfg.data.labels);
  }
  // Dropout and head input are run settings, not stored weights.
  ckpt.model.config.dropout = cfg.model.dropout;
  ckpt.model.config.head_input = cfg.model.dist_head_input;

  const fs::path dir = cfg.out_dir;
  write_file(dir / kResolvedConfig, config::to_text(cfg));
  const auto log = finetune(ckpt.model, cfg, data.train, progress);
  write_file(dir / kFinetuneLog, finetune_log_csv(log));
  ckpt.meta.phase = model::Phase::finetuned;
  const fs::path out = dir / kFinetunedCkpt;
  model::save_checkpoint(ckpt.model, ckpt.meta, out);
  return out;
}

metrics::MetricsReport cmd_evaluate(const EvaluateRequest& req) {
  const auto ckpt = model::load_checkpoint(req.checkpoint);

  std::optional<config::RunConfig> cfg = req.config;
  const fs::path beside = req.checkpoint.parent_path() / kResolvedConfig;
  if (!cfg && fs::exists(beside)) cfg = config::parse_config(beside);

  std::optional<dataio::Standardizer> stats;
  if (cfg && cfg->data.standardize) {
    stats = dataio::Standardizer::fit(load_split(cfg->data.train, cfg->data.labels).features);
  }
  const auto test = load_split(req.test_arff, req.labels_xml, stats ? &*stats : nullptr);
  if (ckpt.meta.label_names != test.label_names) {
    throw DataError("checkpoint label names do not match " + req.labels_xml);
  }

  const double threshold = req.threshold.value_or(cfg ? cfg->eval.threshold : 0.5);
  const auto activation = cfg ? cfg->finetune.head_activation : model::ScoreActivation::sigmoid;
  const auto report = evaluate(ckpt.model, test, threshold, activation);

  const fs::path dir = req.out_dir.empty() ? req.checkpoint.parent_path() : req.out_dir;
  write_file(dir / kMetricsCsv,
             std::string(metrics::kCsvHeader) + "\n" + metrics::to_csv_row(report) + "\n");
  write_file(dir / kMetricsTxt, metrics_text(report, cfg ? config::fingerprint(*cfg) : "none",
                                             ckpt.meta.seed, threshold));
  return report;
}

metrics::MetricsReport run_pipeline(const config::RunConfig& cfg, std::ostream* progress) {
  cfg.validate();
  const auto data = load_data(cfg, true);
  const fs::path dir = cfg.out_dir;
  write_file(dir / kResolvedConfig, config::to_text(cfg));

  auto pre = pretrain(cfg, data.train, progress);
  write_file(dir / kPretrainLog, pretrain_log_csv(pre.log));
  model::CheckpointMeta meta{data.train.label_names, model::Phase::pretrained, cfg.seed};
  model::save_checkpoint(pre.model, meta, dir / kPretrainedCkpt);

  const auto ft = finetune(pre.model, cfg, data.train, progress);
  write_file(dir / kFinetuneLog, finetune_log_csv(ft));
  meta.phase = model::Phase::finetuned;
  model::save_checkpoint(pre.model, meta, dir / kFinetunedCkpt);

  const auto report =
      evaluate(pre.model, *data.test, cfg.eval.threshold, cfg.finetune.head_activation);
  write_file(dir / kMetricsCsv,
             std::string(metrics::kCsvHeader) + "\n" + metrics::to_csv_row(report) + "\n");
  write_file(dir / kMetricsTxt,
             metrics_text(report, config::fingerprint(cfg), cfg.seed, cfg.eval.threshold));
  return report;
}

std::size_t cmd_sweep(const SweepRequest& req, std::ostream* progress) {
  if (req.alphas.empty() || req.betas.empty() || req.seeds.empty()) {
    throw ConfigError("sweep: alpha, beta and seed lists must be nonempty");
  }
  const fs::path base_dir = req.base.out_dir;
  const fs::path csv_path = req.out_csv.empty() ? base_dir / "sweep.csv" : req.out_csv;

  std::string csv = std::string(kSweepHeader) + "\n";
  std::size_t rows = 0;
  for (const double alpha : req.alphas) {
    for (const double beta : req.betas) {
      for (const auto seed : req.seeds) {
        config::RunConfig cfg = req.base;
        cfg.pretrain.alpha = alpha;
        cfg.pretrain.beta = beta;
        cfg.seed = seed;
        cfg.out_dir = (base_dir / ("a" + fmt(alpha) + "_b" + fmt(beta) + "_s" +
                                   std::to_string(seed)))
                          .string();
        std::string row = fmt(alpha) + "," + fmt(beta) + "," + std::to_string(seed) + ",";
        if (progress) *progress << "sweep cell " << cfg.out_dir << "\n";
        try {
          const auto report = run_pipeline(cfg, nullptr);
          row += "ok," + metrics::to_csv_row(report) + ",";
        } catch (const std::exception& e) {
          row += "error,,,,,,," + csv_safe(e.what());
          if (progress) *progress << "  failed: " << e.what() << "\n";
        }
        csv += row + "\n";
        ++rows;
        write_file(csv_path, csv);  // keep partial results if interrupted
      }
    }
  }
  return rows;
}

}  // namespace mlcld::pipeline
