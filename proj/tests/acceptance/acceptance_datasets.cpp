// Acceptance gates on the Yeast and Scene benchmarks: end-to-end scores,
// method ordering, the alpha/beta ablation, full-size determinism and the
// dataset shape checks. Each full run takes minutes, so this binary is
// slow. When the data files are absent it prints BLOCKED lines and exits
// with 77, which ctest reports as skipped.
//
// Data location: $MLCLD_DATA_DIR, or data/ in the source tree. Expected
// layout: <dir>/yeast/{yeast-train.arff,yeast-test.arff,yeast.xml} and the
// same for scene. Presets come from $MLCLD_CONFIG_DIR, or configs/.

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mlcld/config.hpp"
#include "mlcld/dataio.hpp"
#include "mlcld/pipeline.hpp"

using namespace mlcld;
namespace fs = std::filesystem;

namespace {

constexpr std::array<std::uint64_t, 3> kSeeds = {0, 1, 2};
constexpr double kSecondsPerSeed = 20 * 60;
constexpr double kBaselineMargin = 0.01;
constexpr double kMeanLabelTol = 0.01;

struct Soft {
  double ha, mif1, map;  // HA, miF1, mAP floors (Scene has no mAP floor)
};
constexpr Soft kYeastSoft{0.78, 0.64, 0.48};
constexpr Soft kSceneSoft{0.90, 0.76, 0.0};

struct Shape {
  std::size_t n_train, n_test, c;
  double mean_train, mean_test;
};
constexpr Shape kYeastShape{1500, 917, 14, 4.23, 4.25};
constexpr Shape kSceneShape{1210, 1195, 6, 1.06, 1.09};

int g_failures = 0;

void report(int id, const std::string& name, bool ok, const std::string& detail) {
  std::printf("%s [%d] %s: %s\n", ok ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[200];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

fs::path data_root() {
  if (const char* env = std::getenv("MLCLD_DATA_DIR")) return env;
  return MLCLD_DATA_DIR;
}

struct Dataset {
  std::string name;
  fs::path train, test, labels;

  bool present() const { return fs::exists(train) && fs::exists(test) && fs::exists(labels); }
};

Dataset dataset(const std::string& name) {
  const auto dir = data_root() / name;
  return {name, dir / (name + "-train.arff"), dir / (name + "-test.arff"), dir / (name + ".xml")};
}

config::RunConfig preset(const Dataset& ds) {
  const char* env = std::getenv("MLCLD_CONFIG_DIR");
  const fs::path dir = env ? env : MLCLD_CONFIG_DIR;
  auto cfg = config::parse_config(dir / (ds.name + ".cfg"));
  cfg.data.train = ds.train.string();
  cfg.data.test = ds.test.string();
  cfg.data.labels = ds.labels.string();
  return cfg;
}

struct Run {
  metrics::MetricsReport report;
  double seconds;
  fs::path dir;
};

Run run(config::RunConfig cfg, const std::string& tag, std::uint64_t seed) {
  cfg.seed = seed;
  cfg.out_dir = (fs::path(MLCLD_RUN_DIR) / (tag + "_s" + std::to_string(seed))).string();
  fs::remove_all(cfg.out_dir);
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = pipeline::run_pipeline(cfg);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("  run %s seed %llu: %s (%.0fs)\n", tag.c_str(), static_cast<unsigned long long>(seed),
              metrics::to_csv_row(r).c_str(), secs);
  std::fflush(stdout);
  return {r, secs, cfg.out_dir};
}

struct SeedRuns {
  std::vector<Run> runs;

  double med(double metrics::MetricsReport::*field) const {
    std::vector<double> v;
    for (const auto& r : runs) v.push_back(r.report.*field);
    return median(v);
  }
  double slowest() const {
    double s = 0.0;
    for (const auto& r : runs) s = std::max(s, r.seconds);
    return s;
  }
};

SeedRuns runs_over_seeds(const config::RunConfig& cfg, const std::string& tag) {
  SeedRuns out;
  for (auto seed : kSeeds) out.runs.push_back(run(cfg, tag, seed));
  return out;
}

void gate_shapes(const Dataset& ds, const Shape& want, std::string& detail, bool& ok) {
  const auto train = dataio::load_mulan_pair(ds.train, ds.labels);
  const auto test = dataio::load_mulan_pair(ds.test, ds.labels);
  const bool good = train.n() == want.n_train && test.n() == want.n_test && train.c() == want.c &&
                    std::abs(train.mean_labels_per_sample() - want.mean_train) <= kMeanLabelTol &&
                    std::abs(test.mean_labels_per_sample() - want.mean_test) <= kMeanLabelTol;
  ok &= good;
  char buf[200];
  std::snprintf(buf, sizeof buf, "%s n=%zu/%zu c=%zu mean=%.3f/%.3f (want %zu/%zu, %zu, %.2f/%.2f); ",
                ds.name.c_str(), train.n(), test.n(), train.c(), train.mean_labels_per_sample(),
                test.mean_labels_per_sample(), want.n_train, want.n_test, want.c, want.mean_train,
                want.mean_test);
  detail += buf;
}

// End-to-end gate: the hard part is CLD beating a BCE-only baseline by the
// margin on median mAP within the time budget; soft targets are reported.
void gate_end_to_end(int id, const std::string& name, const SeedRuns& cld, const SeedRuns& base,
                     const Soft& soft) {
  const double ha = cld.med(&metrics::MetricsReport::ha);
  const double mif1 = cld.med(&metrics::MetricsReport::mif1);
  const double map = cld.med(&metrics::MetricsReport::map);
  const double base_map = base.med(&metrics::MetricsReport::map);
  const bool soft_ok = ha >= soft.ha && mif1 >= soft.mif1 && map >= soft.map;
  const bool hard_ok = map - base_map >= kBaselineMargin;
  const bool time_ok = cld.slowest() <= kSecondsPerSeed;
  report(id, name, hard_ok && time_ok,
         fmt("median HA %.4f miF1 %.4f mAP %.4f", ha, mif1, map) +
             (soft_ok ? "; soft targets met" : "; soft targets missed") +
             fmt("; baseline mAP %.4f, margin %.4f (>= 0.01)", base_map, map - base_map) +
             fmt("; slowest seed %.0fs (<= 1200s)", cld.slowest()));
}

}  // namespace

int main() {
  const auto yeast = dataset("yeast"), scene = dataset("scene");
  if (!yeast.present() || !scene.present()) {
    const std::string where = " (need " + data_root().string() + "/{yeast,scene}/)";
    const char* names[] = {"Yeast end-to-end", "Scene end-to-end", "method ordering on Yeast",
                           "alpha/beta ablation on Scene", "determinism (Yeast full run)",
                           "parser gate (Yeast/Scene shapes)"};
    const int ids[] = {5, 6, 7, 8, 9, 10};
    for (int k = 0; k < 6; ++k)
      std::printf("BLOCKED [%d] %s: dataset files missing%s\n", ids[k], names[k],
                  k == 0 ? where.c_str() : "");
    return 77;
  }

  {
    std::string detail;
    bool ok = true;
    gate_shapes(yeast, kYeastShape, detail, ok);
    gate_shapes(scene, kSceneShape, detail, ok);
    report(10, "parser gate (Yeast/Scene shapes)", ok, detail);
  }

  const auto yeast_cfg = preset(yeast), scene_cfg = preset(scene);
  auto baseline = [](config::RunConfig cfg) {
    cfg.pretrain.epochs = 0;
    return cfg;
  };
  auto with_mode = [](config::RunConfig cfg, objectives::LossMode mode) {
    cfg.pretrain.loss_mode = mode;
    return cfg;
  };

  const auto yeast_cld = runs_over_seeds(yeast_cfg, "yeast_cld");
  const auto yeast_base = runs_over_seeds(baseline(yeast_cfg), "yeast_bce");
  gate_end_to_end(5, "Yeast end-to-end", yeast_cld, yeast_base, kYeastSoft);

  const auto yeast_sup =
      runs_over_seeds(with_mode(yeast_cfg, objectives::LossMode::mulsupcon), "yeast_mulsupcon");
  {
    const double a = yeast_cld.med(&metrics::MetricsReport::map);
    const double b = yeast_sup.med(&metrics::MetricsReport::map);
    report(7, "method ordering on Yeast", a >= b,
           fmt("median mAP CLD %.4f vs MulSupCon %.4f", a, b));
  }

  {
    const auto again = run(yeast_cfg, "yeast_cld_repeat", kSeeds[0]);
    const auto& first = yeast_cld.runs[0];
    bool same = true;
    for (const char* f : {pipeline::kPretrainedCkpt, pipeline::kFinetunedCkpt, pipeline::kMetricsCsv}) {
      const auto a = slurp(first.dir / f), b = slurp(again.dir / f);
      same &= !a.empty() && a == b;
    }
    report(9, "determinism (Yeast full run)", same,
           same ? "byte-identical checkpoints and metrics.csv" : "outputs differ");
  }

  const auto scene_cld = runs_over_seeds(scene_cfg, "scene_cld");
  const auto scene_base = runs_over_seeds(baseline(scene_cfg), "scene_bce");
  gate_end_to_end(6, "Scene end-to-end", scene_cld, scene_base, kSceneSoft);

  {
    pipeline::SweepRequest req;
    req.base = scene_cfg;
    req.base.out_dir = (fs::path(MLCLD_RUN_DIR) / "scene_ablation").string();
    req.alphas = {0.0};
    req.betas = {0.0};
    req.seeds.assign(kSeeds.begin(), kSeeds.end());
    pipeline::cmd_sweep(req);

    // alpha,beta,seed,status,ha,ebf1,mif1,maf1,p_at_1,map,message
    std::vector<double> ha, mif1, map;
    std::istringstream csv(slurp(fs::path(req.base.out_dir) / "sweep.csv"));
    std::string line;
    std::getline(csv, line);
    while (std::getline(csv, line)) {
      std::vector<std::string> cells;
      std::stringstream ss(line);
      for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
      if (cells.size() < 10 || cells[3] != "ok") continue;
      ha.push_back(std::stod(cells[4]));
      mif1.push_back(std::stod(cells[6]));
      map.push_back(std::stod(cells[9]));
    }
    if (ha.size() != kSeeds.size()) {
      report(8, "alpha/beta ablation on Scene", false, "sweep produced error rows");
    } else {
      const double full[] = {scene_cld.med(&metrics::MetricsReport::ha),
                             scene_cld.med(&metrics::MetricsReport::mif1),
                             scene_cld.med(&metrics::MetricsReport::map)};
      const double abl[] = {median(ha), median(mif1), median(map)};
      int not_better = 0;
      for (int k = 0; k < 3; ++k) not_better += abl[k] <= full[k];
      report(8, "alpha/beta ablation on Scene", not_better >= 2,
             fmt("ablation HA %.4f miF1 %.4f mAP %.4f", abl[0], abl[1], abl[2]) +
                 fmt(" vs full %.4f %.4f %.4f", full[0], full[1], full[2]) +
                 fmt("; not better on %g of 3 (need 2)", not_better));
    }
  }

  std::printf("%d gate(s) failed\n", g_failures);
  return g_failures == 0 ? 0 : 1;
}
