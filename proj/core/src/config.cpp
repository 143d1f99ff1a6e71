#include "mlcld/config.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>

#include "mlcld/dataio.hpp"
#include "mlcld/errors.hpp"

namespace mlcld::config {
namespace {

using objectives::LossMode;
using objectives::PositiveMode;
using objectives::Reduction;

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, const char* expected) {
  throw ConfigError("config key '" + std::string(key) + "': expected " + expected + ", got '" +
                    std::string(value) + "'");
}

double to_double(std::string_view key, std::string_view v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v, "a number");
  return out;
}

std::uint64_t to_uint(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) {
    bad_value(key, v, "a non-negative integer");
  }
  return out;
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad_value(key, v, "true or false");
}

std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

struct Field {
  std::function<void(RunConfig&, std::string_view key, std::string_view value)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename T>
Field number(T RunConfig::*section, double T::*member) {
  return {[=](RunConfig& c, std::string_view k, std::string_view v) { c.*section.*member = to_double(k, v); },
          [=](const RunConfig& c) { return fmt(c.*section.*member); }};
}

template <typename T, typename U>
Field count(T RunConfig::*section, U T::*member) {
  return {[=](RunConfig& c, std::string_view k, std::string_view v) {
            c.*section.*member = static_cast<U>(to_uint(k, v));
          },
          [=](const RunConfig& c) { return std::to_string(c.*section.*member); }};
}

template <typename T>
Field flag(T RunConfig::*section, bool T::*member) {
  return {[=](RunConfig& c, std::string_view k, std::string_view v) { c.*section.*member = to_bool(k, v); },
          [=](const RunConfig& c) { return std::string(c.*section.*member ? "true" : "false"); }};
}

template <typename T>
Field text(T RunConfig::*section, std::string T::*member) {
  return {[=](RunConfig& c, std::string_view, std::string_view v) { c.*section.*member = std::string(v); },
          [=](const RunConfig& c) { return c.*section.*member; }};
}

template <typename T, typename E>
Field choice(T RunConfig::*section, E T::*member, std::vector<std::pair<std::string, E>> options) {
  return {[=](RunConfig& c, std::string_view k, std::string_view v) {
            for (const auto& [name, value] : options) {
              if (name == v) {
                c.*section.*member = value;
                return;
              }
            }
            std::string expected = "one of";
            for (const auto& o : options) expected += " " + o.first;
            bad_value(k, v, expected.c_str());
          },
          [=](const RunConfig& c) {
            for (const auto& [name, value] : options)
              if (value == c.*section.*member) return name;
            return std::string("?");
          }};
}

template <typename T>
Field schedule_number(T RunConfig::*section, double ScheduleConfig::*member) {
  return {[=](RunConfig& c, std::string_view k, std::string_view v) {
            (c.*section).schedule.*member = to_double(k, v);
          },
          [=](const RunConfig& c) { return fmt((c.*section).schedule.*member); }};
}

template <typename T>
Field schedule_count(T RunConfig::*section, std::uint64_t ScheduleConfig::*member) {
  return {[=](RunConfig& c, std::string_view k, std::string_view v) {
            (c.*section).schedule.*member = to_uint(k, v);
          },
          [=](const RunConfig& c) { return std::to_string((c.*section).schedule.*member); }};
}

const std::map<std::string, Field>& fields() {
  using RC = RunConfig;
  static const std::map<std::string, Field> table = [] {
    std::map<std::string, Field> t;
    t["seed"] = {[](RC& c, std::string_view k, std::string_view v) { c.seed = to_uint(k, v); },
                 [](const RC& c) { return std::to_string(c.seed); }};
    t["run.out_dir"] = {[](RC& c, std::string_view, std::string_view v) { c.out_dir = std::string(v); },
                        [](const RC& c) { return c.out_dir; }};

    t["data.train"] = text(&RC::data, &DataConfig::train);
    t["data.test"] = text(&RC::data, &DataConfig::test);
    t["data.labels"] = text(&RC::data, &DataConfig::labels);
    t["data.standardize"] = flag(&RC::data, &DataConfig::standardize);

    t["model.hidden_dim"] = count(&RC::model, &ModelConfig::hidden_dim);
    t["model.embed_dim"] = count(&RC::model, &ModelConfig::embed_dim);
    t["model.dropout"] = number(&RC::model, &ModelConfig::dropout);
    t["model.dist_head_input"] =
        choice(&RC::model, &ModelConfig::dist_head_input,
               {{"backbone", model::HeadInput::backbone}, {"normalized", model::HeadInput::normalized}});

    t["pretrain.epochs"] = count(&RC::pretrain, &PretrainConfig::epochs);
    t["pretrain.batch_size"] = count(&RC::pretrain, &PretrainConfig::batch_size);
    t["pretrain.lr"] = number(&RC::pretrain, &PretrainConfig::lr);
    t["pretrain.weight_decay"] = number(&RC::pretrain, &PretrainConfig::weight_decay);
    t["pretrain.momentum"] = number(&RC::pretrain, &PretrainConfig::momentum);
    t["pretrain.tau"] = number(&RC::pretrain, &PretrainConfig::tau);
    t["pretrain.sigma"] = number(&RC::pretrain, &PretrainConfig::sigma);
    t["pretrain.alpha"] = number(&RC::pretrain, &PretrainConfig::alpha);
    t["pretrain.beta"] = number(&RC::pretrain, &PretrainConfig::beta);
    t["pretrain.queue_size"] = count(&RC::pretrain, &PretrainConfig::queue_size);
    t["pretrain.mask_rate"] = number(&RC::pretrain, &PretrainConfig::mask_rate);
    t["pretrain.t0"] = schedule_count(&RC::pretrain, &ScheduleConfig::t0);
    t["pretrain.t_mult"] = schedule_count(&RC::pretrain, &ScheduleConfig::t_mult);
    t["pretrain.eta_min"] = schedule_number(&RC::pretrain, &ScheduleConfig::eta_min);
    t["pretrain.loss_mode"] =
        choice(&RC::pretrain, &PretrainConfig::loss_mode,
               {{"mulsupcon", LossMode::mulsupcon}, {"rld", LossMode::rld}, {"cld", LossMode::cld}});

    t["loss.positive_mode"] = choice(&RC::loss, &LossConfig::positive_mode,
                                     {{"any", PositiveMode::any}, {"all", PositiveMode::all}});
    t["loss.cld_raw_log_weight"] = flag(&RC::loss, &LossConfig::cld_raw_log_weight);
    t["loss.w_penalty_per_anchor"] = flag(&RC::loss, &LossConfig::w_penalty_per_anchor);
    t["loss.reduction"] =
        choice(&RC::loss, &LossConfig::reduction, {{"sum", Reduction::sum}, {"mean", Reduction::mean}});

    t["finetune.epochs"] = count(&RC::finetune, &FinetuneConfig::epochs);
    t["finetune.batch_size"] = count(&RC::finetune, &FinetuneConfig::batch_size);
    t["finetune.lr"] = number(&RC::finetune, &FinetuneConfig::lr);
    t["finetune.weight_decay"] = number(&RC::finetune, &FinetuneConfig::weight_decay);
    t["finetune.mask_rate"] = number(&RC::finetune, &FinetuneConfig::mask_rate);
    t["finetune.t0"] = schedule_count(&RC::finetune, &ScheduleConfig::t0);
    t["finetune.t_mult"] = schedule_count(&RC::finetune, &ScheduleConfig::t_mult);
    t["finetune.eta_min"] = schedule_number(&RC::finetune, &ScheduleConfig::eta_min);
    t["finetune.head_activation"] =
        choice(&RC::finetune, &FinetuneConfig::head_activation,
               {{"sigmoid", model::ScoreActivation::sigmoid}, {"softmax", model::ScoreActivation::softmax}});

    t["eval.threshold"] = number(&RC::eval, &EvalConfig::threshold);
    return t;
  }();
  return table;
}

void assign(RunConfig& cfg, std::string_view line, std::size_t line_no) {
  const auto eq = line.find('=');
  auto where = [&] { return line_no ? " (line " + std::to_string(line_no) + ")" : std::string(); };
  if (eq == std::string_view::npos) {
    throw ConfigError("expected key=value, got '" + std::string(line) + "'" + where());
  }
  const auto key = trim(line.substr(0, eq));
  const auto value = trim(line.substr(eq + 1));
  const auto it = fields().find(std::string(key));
  if (it == fields().end()) throw ConfigError("unknown config key '" + std::string(key) + "'" + where());
  it->second.set(cfg, key, value);
}

void require(bool ok, const char* key, const char* rule) {
  if (!ok) throw ConfigError(std::string("config key '") + key + "' out of range: " + rule);
}

}  // namespace

void RunConfig::validate() const {
  require(model.hidden_dim >= 1, "model.hidden_dim", "must be >= 1");
  require(model.embed_dim >= 1, "model.embed_dim", "must be >= 1");
  require(model.dropout >= 0.0 && model.dropout < 1.0, "model.dropout", "must lie in [0, 1)");

  require(pretrain.batch_size >= 1, "pretrain.batch_size", "must be >= 1");
  require(pretrain.lr > 0.0, "pretrain.lr", "must be > 0");
  require(pretrain.weight_decay >= 0.0, "pretrain.weight_decay", "must be >= 0");
  require(pretrain.momentum >= 0.0 && pretrain.momentum <= 1.0, "pretrain.momentum", "must lie in [0, 1]");
  require(pretrain.tau > 0.0, "pretrain.tau", "must be > 0");
  require(pretrain.sigma > 0.0, "pretrain.sigma", "must be > 0");
  require(pretrain.alpha >= 0.0, "pretrain.alpha", "must be >= 0");
  require(pretrain.beta >= 0.0, "pretrain.beta", "must be >= 0");
  require(pretrain.queue_size >= pretrain.batch_size, "pretrain.queue_size", "must be >= pretrain.batch_size");
  require(pretrain.mask_rate >= 0.0 && pretrain.mask_rate <= 1.0, "pretrain.mask_rate", "must lie in [0, 1]");
  require(pretrain.schedule.t0 >= 1, "pretrain.t0", "must be >= 1");
  require(pretrain.schedule.t_mult >= 1, "pretrain.t_mult", "must be >= 1");
  require(pretrain.schedule.eta_min >= 0.0 && pretrain.schedule.eta_min <= pretrain.lr, "pretrain.eta_min",
          "must lie in [0, pretrain.lr]");

  require(finetune.batch_size >= 1, "finetune.batch_size", "must be >= 1");
  require(finetune.lr > 0.0, "finetune.lr", "must be > 0");
  require(finetune.weight_decay >= 0.0, "finetune.weight_decay", "must be >= 0");
  require(finetune.mask_rate >= 0.0 && finetune.mask_rate <= 1.0, "finetune.mask_rate", "must lie in [0, 1]");
  require(finetune.schedule.t0 >= 1, "finetune.t0", "must be >= 1");
  require(finetune.schedule.t_mult >= 1, "finetune.t_mult", "must be >= 1");
  require(finetune.schedule.eta_min >= 0.0 && finetune.schedule.eta_min <= finetune.lr, "finetune.eta_min",
          "must lie in [0, finetune.lr]");

  require(eval.threshold > 0.0 && eval.threshold < 1.0, "eval.threshold", "must lie in (0, 1)");
}

objectives::Hyper RunConfig::hyper() const {
  objectives::Hyper h;
  h.tau = pretrain.tau;
  h.sigma = pretrain.sigma;
  h.alpha = pretrain.alpha;
  h.beta = pretrain.beta;
  h.positive_mode = loss.positive_mode;
  h.cld_raw_log_weight = loss.cld_raw_log_weight;
  h.w_penalty_per_anchor = loss.w_penalty_per_anchor;
  h.reduction = loss.reduction;
  return h;
}

RunConfig parse_config_text(std::string_view text, RunConfig base) {
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find('\n', start);
    auto line = text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (!line.empty()) assign(base, line, line_no);
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  base.validate();
  return base;
}

RunConfig parse_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = dataio::read_text_file(path);
  } catch (const DataError&) {
    throw ConfigError("cannot read config file '" + path.string() + "'");
  }
  RunConfig cfg = parse_config_text(text);
  // Data paths in a file are relative to that file.
  const auto base = std::filesystem::absolute(path).parent_path();
  for (std::string* p : {&cfg.data.train, &cfg.data.test, &cfg.data.labels}) {
    if (!p->empty() && std::filesystem::path(*p).is_relative()) {
      *p = (base / *p).lexically_normal().string();
    }
  }
  return cfg;
}

void apply_override(RunConfig& cfg, std::string_view assignment) {
  assign(cfg, trim(assignment), 0);
}

std::string to_text(const RunConfig& cfg) {
  std::ostringstream os;
  for (const auto& [key, field] : fields()) os << key << '=' << field.get(cfg) << '\n';
  return os.str();
}

std::string fingerprint(const RunConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : to_text(cfg)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<std::string> known_keys() {
  std::vector<std::string> keys;
  for (const auto& [key, field] : fields()) keys.push_back(key);
  return keys;
}

const char* to_string(objectives::LossMode mode) {
  switch (mode) {
    case LossMode::mulsupcon: return "mulsupcon";
    case LossMode::rld: return "rld";
    case LossMode::cld: return "cld";
  }
  return "?";
}

const char* to_string(objectives::PositiveMode mode) {
  return mode == PositiveMode::any ? "any" : "all";
}

}  // namespace mlcld::config
