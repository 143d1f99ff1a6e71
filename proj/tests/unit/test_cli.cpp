#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "mlcld/config.hpp"
#include "mlcld/errors.hpp"
#include "mlcld/pipeline.hpp"

using namespace mlcld;
namespace fs = std::filesystem;

namespace {

const std::string kFixtures = MLCLD_FIXTURE_DIR;

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("mlcld_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

config::RunConfig synth_config(const std::string& name) {
  auto cfg = config::parse_config(kFixtures + "/synth.cfg");
  cfg.out_dir = scratch(name).string();
  return cfg;
}

std::string config_error(std::string_view text) {
  try {
    config::parse_config_text(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(MLCLD_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config parsing") {
  CHECK(config::parse_config_text("pretrain.tau=0.1").pretrain.tau == 0.1);
  CHECK(config::parse_config_text("pretrain.queue_size=256").pretrain.queue_size == 256);
  const auto cfg = config::parse_config_text(
      "# comment\n\n  pretrain.loss_mode = rld  # trailing\nloss.positive_mode=all\n"
      "model.dist_head_input=normalized\nfinetune.head_activation=softmax\nloss.reduction=mean\n"
      "data.standardize=true\nseed=9\n");
  CHECK(cfg.pretrain.loss_mode == objectives::LossMode::rld);
  CHECK(cfg.loss.positive_mode == objectives::PositiveMode::all);
  CHECK(cfg.model.dist_head_input == model::HeadInput::normalized);
  CHECK(cfg.finetune.head_activation == model::ScoreActivation::softmax);
  CHECK(cfg.loss.reduction == objectives::Reduction::mean);
  CHECK(cfg.data.standardize);
  CHECK(cfg.seed == 9);
  // untouched keys keep their defaults
  CHECK(cfg.pretrain.momentum == 0.999);
  CHECK(cfg.pretrain.epochs == 400);

  CHECK(config_error("pretrain.tau=-1").find("pretrain.tau") != std::string::npos);
  CHECK(config_error("pretrain.tau=abc").find("pretrain.tau") != std::string::npos);
  CHECK(config_error("pretrain.epochs=1.5").find("pretrain.epochs") != std::string::npos);
  CHECK(config_error("pretrain.loss_mode=foo").find("pretrain.loss_mode") != std::string::npos);
  CHECK(config_error("pretrain.nonsense=1").find("pretrain.nonsense") != std::string::npos);
  CHECK(config_error("pretrain.queue_size=64").find("pretrain.queue_size") != std::string::npos);
  CHECK(config_error("model.dropout=1").find("model.dropout") != std::string::npos);
  CHECK(config_error("eval.threshold=1").find("eval.threshold") != std::string::npos);
  CHECK(config_error("just words").size() > 0);
  CHECK_THROWS_AS(config::parse_config(kFixtures + "/missing.cfg"), ConfigError);
}

TEST_CASE("config text round trip, fingerprint and overrides") {
  auto cfg = config::parse_config_text("pretrain.alpha=0.125\nseed=3\npretrain.loss_mode=mulsupcon");
  const auto text = config::to_text(cfg);
  const auto again = config::parse_config_text(text);
  CHECK(config::to_text(again) == text);
  CHECK(config::fingerprint(again) == config::fingerprint(cfg));
  CHECK(config::fingerprint(cfg).size() == 16);

  config::apply_override(cfg, "pretrain.alpha=0.5");
  CHECK(cfg.pretrain.alpha == 0.5);
  CHECK(config::fingerprint(cfg) != config::fingerprint(again));
  CHECK_THROWS_AS(config::apply_override(cfg, "nope=1"), ConfigError);

  const auto keys = config::known_keys();
  CHECK(std::find(keys.begin(), keys.end(), "pretrain.tau") != keys.end());
  CHECK(std::is_sorted(keys.begin(), keys.end()));
}

TEST_CASE("config file paths are relative to the file") {
  const auto cfg = config::parse_config(kFixtures + "/synth.cfg");
  CHECK(fs::path(cfg.data.train).is_absolute());
  CHECK(fs::exists(cfg.data.train));
  CHECK(fs::exists(cfg.data.labels));
}

TEST_CASE("pretrain smoke, determinism and log layout") {
  auto cfg = synth_config("pretrain_a");
  cfg.data.train = kFixtures + "/synth-16.arff";
  cfg.pretrain.epochs = 1;
  cfg.pretrain.batch_size = 4;
  cfg.pretrain.queue_size = 8;
  const auto ckpt = pipeline::cmd_pretrain(cfg);
  const auto loaded = model::load_checkpoint(ckpt);
  CHECK(loaded.meta.phase == model::Phase::pretrained);
  CHECK(loaded.meta.label_names.size() == 5);

  const auto log = slurp(fs::path(cfg.out_dir) / pipeline::kPretrainLog);
  CHECK(log.rfind("epoch,total,contrastive,g,h,w_penalty\n", 0) == 0);
  CHECK(std::count(log.begin(), log.end(), '\n') == 2);
  CHECK(fs::exists(fs::path(cfg.out_dir) / pipeline::kResolvedConfig));

  auto cfg2 = cfg;
  cfg2.out_dir = scratch("pretrain_b").string();
  const auto ckpt2 = pipeline::cmd_pretrain(cfg2);
  CHECK(slurp(ckpt) == slurp(ckpt2));

  auto cfg3 = cfg;
  cfg3.seed = 1;
  cfg3.out_dir = scratch("pretrain_c").string();
  CHECK(slurp(pipeline::cmd_pretrain(cfg3)) != slurp(ckpt));
}

TEST_CASE("pretrain loop: iterations, enqueues and mulsupcon components") {
  auto cfg = synth_config("loop");
  cfg.data.train = kFixtures + "/synth-16.arff";
  cfg.pretrain.batch_size = 5;
  cfg.pretrain.queue_size = 10;
  const auto data = pipeline::load_data(cfg, false);
  Rng init(cfg.seed, train::kInitStream);
  auto pair = model::init_model(pipeline::encoder_config(cfg, data.train.f(), data.train.c()), init);

  for (const auto mode : {objectives::LossMode::mulsupcon, objectives::LossMode::cld}) {
    cfg.pretrain.loss_mode = mode;
    train::Pretrainer trainer(pair, cfg);
    std::size_t steps = 0, last_queue = 0;
    trainer.set_observer([&](const train::StepView& v) {
      ++steps;
      CHECK(v.queue.size() == std::min<std::size_t>(last_queue + v.batch.size(), 10));
      last_queue = v.queue.size();
    });
    const auto rec = trainer.run_epoch(data.train);
    CHECK(rec.iterations == 4);  // ⌈16/5⌉
    CHECK(steps == 4);
    if (mode == objectives::LossMode::mulsupcon) {
      CHECK(rec.mean.g == 0.0);
      CHECK(rec.mean.h == 0.0);
      CHECK(rec.mean.w_penalty == 0.0);
      CHECK(rec.mean.total == rec.mean.contrastive);
    } else {
      CHECK(rec.mean.h > 0.0);
    }
  }
}

TEST_CASE("finetune with zero epochs only changes the phase tag") {
  auto cfg = synth_config("ft0");
  cfg.pretrain.epochs = 1;
  const auto pre = pipeline::cmd_pretrain(cfg);
  cfg.finetune.epochs = 0;
  const auto fin = pipeline::cmd_finetune(cfg, pre);
  const auto a = model::load_checkpoint(pre), b = model::load_checkpoint(fin);
  CHECK(a.model.query == b.model.query);
  CHECK(a.model.key == b.model.key);
  CHECK(a.model.head.w.value == b.model.head.w.value);
  CHECK(a.model.head.b.value == b.model.head.b.value);
  CHECK(a.meta.phase == model::Phase::pretrained);
  CHECK(b.meta.phase == model::Phase::finetuned);

  auto other = cfg;
  other.data.labels = kFixtures + "/dense.xml";
  other.data.train = kFixtures + "/dense.arff";
  CHECK_THROWS_AS(pipeline::cmd_finetune(other, pre), DataError);
}

// 96 rows is too few for the masking/dropout noise to average out, so the
// trend is checked with both switched off.
TEST_CASE("finetune BCE trends down on the synthetic fixture") {
  auto cfg = synth_config("ft_trend");
  cfg.pretrain.epochs = 2;
  cfg.finetune.mask_rate = 0.0;
  cfg.model.dropout = 0.0;
  const auto data = pipeline::load_data(cfg, false);
  auto pre = pipeline::pretrain(cfg, data.train);
  cfg.finetune.epochs = 10;
  const auto log = pipeline::finetune(pre.model, cfg, data.train);
  REQUIRE(log.size() == 10);
  int violations = 0;
  for (std::size_t e = 1; e < log.size(); ++e) violations += log[e].bce > log[e - 1].bce;
  CHECK(violations <= 2);
  CHECK(log.back().bce < log.front().bce);
}

TEST_CASE("memorizing a tiny dataset scores perfectly") {
  auto cfg = config::parse_config_text("");
  cfg.data.train = kFixtures + "/dense.arff";
  cfg.data.test = kFixtures + "/dense.arff";
  cfg.data.labels = kFixtures + "/dense.xml";
  cfg.out_dir = scratch("memorize").string();
  cfg.model.hidden_dim = 16;
  cfg.model.embed_dim = 8;
  cfg.model.dropout = 0.0;
  cfg.pretrain.epochs = 0;
  cfg.pretrain.batch_size = 4;
  cfg.pretrain.queue_size = 4;
  cfg.finetune.epochs = 300;
  cfg.finetune.batch_size = 4;
  cfg.finetune.mask_rate = 0.0;
  cfg.finetune.lr = 1e-2;
  cfg.finetune.schedule.eta_min = 1e-3;
  const auto r = pipeline::run_pipeline(cfg);
  for (double v : {r.ha, r.ebf1, r.mif1, r.maf1, r.p_at_1, r.map}) CHECK(v == 1.0);
}

TEST_CASE("evaluate writes stable reports") {
  auto cfg = synth_config("eval");
  cfg.pretrain.epochs = 1;
  cfg.finetune.epochs = 2;
  const auto report = pipeline::run_pipeline(cfg);
  const fs::path dir = cfg.out_dir;
  const auto csv = slurp(dir / pipeline::kMetricsCsv);
  CHECK(csv.substr(0, csv.find('\n')) == "ha,ebf1,mif1,maf1,p_at_1,map");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
  const auto txt = slurp(dir / pipeline::kMetricsTxt);
  CHECK(txt.find("config_fingerprint: " + config::fingerprint(cfg)) != std::string::npos);
  CHECK(txt.find("seed: 0") != std::string::npos);

  pipeline::EvaluateRequest req;
  req.checkpoint = dir / pipeline::kFinetunedCkpt;
  req.test_arff = cfg.data.test;
  req.labels_xml = cfg.data.labels;
  const auto first = scratch("eval_1"), second = scratch("eval_2");
  req.out_dir = first;
  const auto r1 = pipeline::cmd_evaluate(req);
  req.out_dir = second;
  pipeline::cmd_evaluate(req);
  CHECK(slurp(first / pipeline::kMetricsCsv) == slurp(second / pipeline::kMetricsCsv));
  CHECK(slurp(first / pipeline::kMetricsTxt) == slurp(second / pipeline::kMetricsTxt));
  // evaluated via resolved.cfg beside the checkpoint: same numbers as the run
  CHECK(metrics::to_csv_row(r1) == metrics::to_csv_row(report));

  req.test_arff = kFixtures + "/dense.arff";
  req.labels_xml = kFixtures + "/dense.xml";
  CHECK_THROWS(pipeline::cmd_evaluate(req));
}

TEST_CASE("sweep rows") {
  pipeline::SweepRequest req;
  req.base = synth_config("sweep");
  req.base.pretrain.epochs = 1;
  req.base.finetune.epochs = 1;
  req.alphas = {0.0};
  req.betas = {0.0};
  req.seeds = {5};
  CHECK(pipeline::cmd_sweep(req) == 1);
  const auto csv = slurp(fs::path(req.base.out_dir) / "sweep.csv");
  CHECK(csv.rfind(std::string(pipeline::kSweepHeader) + "\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
  CHECK(csv.find("0,0,5,ok,") != std::string::npos);

  // the α=0, β=0 cell is the same run as configuring those values directly
  auto direct = req.base;
  direct.pretrain.alpha = 0.0;
  direct.pretrain.beta = 0.0;
  direct.seed = 5;
  direct.out_dir = scratch("sweep_direct").string();
  const auto r = pipeline::run_pipeline(direct);
  CHECK(csv.find(metrics::to_csv_row(r)) != std::string::npos);

  req.alphas = {-1.0, 0.01};
  req.out_csv = scratch("sweep_err") / "out.csv";
  CHECK(pipeline::cmd_sweep(req) == 2);
  const auto err = slurp(req.out_csv);
  CHECK(err.find(",error,") != std::string::npos);
  CHECK(err.find(",ok,") != std::string::npos);

  req.seeds.clear();
  CHECK_THROWS_AS(pipeline::cmd_sweep(req), ConfigError);
}

TEST_CASE("command-line exit codes") {
  const std::string cfg = kFixtures + "/synth.cfg";
  const std::string out = scratch("exit").string();
  CHECK(run_cli("--help") == 0);
  CHECK(run_cli("pretrain") == 1);
  CHECK(run_cli("pretrain --config " + cfg + " pretrain.tau=-1 run.out_dir=" + out) == 1);
  CHECK(run_cli("pretrain --config " + cfg + " bogus.key=1") == 1);
  CHECK(run_cli("pretrain --config " + cfg + " data.train=" + kFixtures +
                "/nope.arff run.out_dir=" + out) == 2);
  // A huge learning rate drives the loss to inf/nan.
  CHECK(run_cli("pretrain --config " + cfg + " pretrain.lr=1e300 pretrain.eta_min=0 run.out_dir=" + out) == 3);
  CHECK(run_cli("pretrain --config " + cfg + " --seed 4 pretrain.epochs=1 run.out_dir=" + out) == 0);
  CHECK(model::load_checkpoint(fs::path(out) / "pretrained.ckpt").meta.seed == 4);
  CHECK(run_cli("evaluate --from " + out + "/pretrained.ckpt --test " + kFixtures +
                "/synth-test.arff --labels " + kFixtures + "/synth.xml --threshold 0.4") == 0);
  CHECK(fs::exists(fs::path(out) / "metrics.csv"));
  CHECK(run_cli("finetune --config " + cfg + " --from " + out +
                "/pretrained.ckpt finetune.epochs=1 run.out_dir=" + out) == 0);
  CHECK(run_cli("sweep --config " + cfg + " --alpha 0.01,0.1 --beta 0.01 --seeds 1 pretrain.epochs=1 "
                "finetune.epochs=1 run.out_dir=" + out + "/sw") == 0);
  const auto sweep = slurp(out + "/sw/sweep.csv");
  CHECK(std::count(sweep.begin(), sweep.end(), '\n') == 3);
}
