// grnorder: data generation, training, evaluation, prediction, ablations and
// step sweeps for the graph-recurrent sentence ordering model.
//
// Exit codes: 0 success, 1 user/config/checkpoint error, 2 data error,
// 3 internal invariant violation.

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "grn/checkpoint.hpp"
#include "grn/config.hpp"
#include "grn/error.hpp"
#include "grn/experiments.hpp"
#include "grn/metrics.hpp"
#include "grn/trainer.hpp"

namespace {

using namespace grn;

struct Settings {
  std::string config_file;
  std::vector<std::string> sets;          // --set key=value
  std::map<std::string, std::string> flags;  // --<key> value
  std::map<std::string, CLI::Option*> flag_options;

  KeyValues user_values() const {
    KeyValues out;
    if (!config_file.empty()) out = load_key_values(config_file);
    for (const auto& [key, opt] : flag_options) {
      if (opt->count() > 0) out[key] = flags.at(key);
    }
    for (const auto& s : sets) {
      auto eq = s.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
      out[s.substr(0, eq)] = s.substr(eq + 1);
    }
    return out;
  }
  RunConfig resolve() const { return resolve_config(user_values()); }
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << text;
}

void warn_all(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string metrics_table(const std::string& label, const MetricsReport& r) {
  return render_table({"split", "tau", "acc", "pmr", "head", "tail", "paragraphs"},
                      {{label, fixed(r.tau), fixed(r.acc), fixed(r.pmr), fixed(r.head_acc),
                        fixed(r.tail_acc), std::to_string(r.paragraphs)}});
}

const std::vector<Paragraph>& pick_split(const Corpus& c, const std::string& split) {
  if (split == "train") return c.train;
  if (split == "valid") return c.valid;
  if (split == "test") return c.test;
  if (split.empty()) return c.held_out();
  throw ConfigError("unknown split '" + split + "'");
}

// Checkpoint metadata supplies defaults that the user's file and flags override.
RunConfig config_for_checkpoint(const Settings& s, const CheckpointInfo& info) {
  KeyValues base;
  std::map<std::string, bool> known;
  for (const auto& [k, d] : config_defaults()) known[k] = true;
  for (const auto& [k, v] : info.metadata) {
    if (known.count(k) && k != "checkpoint") base[k] = v;
  }
  base["precision"] = std::to_string(info.precision_bits);
  return resolve_config(std::vector<KeyValues>{base, s.user_values()});
}

template <typename T>
Model<T> restore(const RunConfig& cfg, const CheckpointInfo& info, const std::string& path) {
  if (cfg.precision != info.precision_bits) {
    throw CheckpointError("'" + path + "' stores " + std::to_string(info.precision_bits) +
                          "-bit parameters but precision " + std::to_string(cfg.precision) +
                          " was requested");
  }
  Model<T> model(cfg.model, Vocabulary::from_words(info.vocab));
  load_parameters(path, model.params());
  return model;
}

// ---------------------------------------------------------------------------

int cmd_gen_data(const Settings& s, const std::string& out) {
  auto cfg = s.resolve();
  auto corpus = generate_synthetic(cfg.synthetic);
  write_dataset(out, corpus);
  std::size_t counts[3] = {0, 0, 0};
  for (const auto& p : corpus) ++counts[static_cast<int>(p.split)];
  std::cout << render_table({"split", "paragraphs"}, {{"train", std::to_string(counts[0])},
                                                      {"valid", std::to_string(counts[1])},
                                                      {"test", std::to_string(counts[2])}});
  nlohmann::ordered_json j{{"output", out},
                           {"paragraphs", corpus.size()},
                           {"train", counts[0]},
                           {"valid", counts[1]},
                           {"test", counts[2]}};
  std::cout << j.dump() << "\n";
  return 0;
}

template <typename T>
int cmd_train(const Settings& s, const std::string& out, const std::string& log_path) {
  auto cfg = s.resolve();
  if (!out.empty()) cfg.train.checkpoint = out;
  if (cfg.train.checkpoint.empty()) throw ConfigError("train needs --out or a 'checkpoint' key");
  auto corpus = load_corpus(cfg);
  warn_all(corpus.warnings);
  auto model = build_model<T>(cfg, corpus.train);
  cfg.train.checkpoint_metadata = to_key_values(cfg);
  cfg.train.checkpoint_metadata.erase("checkpoint");

  std::ofstream log;
  if (!log_path.empty()) {
    log.open(log_path);
    if (!log) throw ConfigError("cannot write '" + log_path + "'");
  }
  std::cout << "config " << config_digest(cfg) << "  parameters "
            << model.count_parameters().total << "  train " << corpus.train.size() << "  valid "
            << corpus.valid.size() << "\n";
  auto result = train(model, corpus.train, corpus.valid, cfg.train, [&](const EpochLog& e) {
    std::cout << e.line() << std::endl;
    if (log) log << e.line() << "\n";
  });
  const auto summary = "best epoch " + std::to_string(result.best_epoch) +
                       (result.stopped_early ? " (early stop)" : "");
  std::cout << summary << "\n" << metrics_table("valid", result.best_valid);
  std::cout << metrics_json(result.best_valid, config_digest(cfg)) << "\n";
  if (log) log << summary << "\n";
  return 0;
}

template <typename T>
int cmd_eval(const Settings& s, const std::string& ckpt, const std::string& split,
             const std::string& report) {
  auto info = read_checkpoint_info(ckpt);
  auto cfg = config_for_checkpoint(s, info);
  auto model = restore<T>(cfg, info, ckpt);
  auto corpus = load_corpus(cfg);
  warn_all(corpus.warnings);
  const auto& data = pick_split(corpus, split);
  if (data.empty()) throw DataError("the selected split has no paragraphs");
  auto predictions = predict_corpus(model, data, cfg.beam_size, cfg.seed);
  auto pairs = order_pairs(predictions);
  auto metrics = evaluate(pairs);
  BootstrapReport ci;
  if (cfg.bootstrap > 0) ci = bootstrap(pairs, cfg.bootstrap, cfg.seed);
  const auto json = metrics_json(metrics, config_digest(cfg), cfg.bootstrap > 0 ? &ci : nullptr);
  std::cout << metrics_table(split.empty() ? "held-out" : split, metrics) << json << "\n";
  if (!report.empty()) write_text(report, json + "\n");
  return 0;
}

template <typename T>
int cmd_order(const Settings& s, const std::string& ckpt, const std::string& input,
              const std::string& output) {
  auto info = read_checkpoint_info(ckpt);
  auto cfg = config_for_checkpoint(s, info);
  auto model = restore<T>(cfg, info, ckpt);
  LoadReport report;
  const std::string path = input.empty() ? cfg.data : input;
  if (path.empty()) throw ConfigError("order needs --input or a 'data' key");
  auto paragraphs = load_dataset(path, DatasetFormat::JsonLines, &report);
  warn_all(report.warnings);
  for (const auto& r : report.rejected) std::cerr << "warning: rejected " << r << "\n";

  std::ostringstream out;
  for (const auto& pr : predict_corpus(model, paragraphs, cfg.beam_size, cfg.seed)) {
    nlohmann::ordered_json j;
    j["id"] = pr.id;
    j["predicted-order"] = pr.order;
    j["log-prob"] = pr.slots.log_prob;
    out << j.dump() << "\n";
  }
  if (output.empty()) {
    std::cout << out.str();
  } else {
    write_text(output, out.str());
  }
  return 0;
}

template <typename T>
int cmd_ablate(const Settings& s, const std::string& variants_arg, const std::string& settings_arg,
               const std::string& report) {
  auto cfg = s.resolve();
  std::vector<GraphVariant> variants;
  for (const auto& v : split_list(variants_arg)) {
    auto parsed = parse_variant(v);
    if (!parsed) throw ConfigError("unknown variant '" + v + "'");
    variants.push_back(*parsed);
  }
  std::vector<AblationSetting> settings;
  for (const auto& x : split_list(settings_arg)) {
    auto parsed = parse_setting(x);
    if (!parsed) throw ConfigError("unknown ablation setting '" + x + "'");
    settings.push_back(*parsed);
  }
  for (auto x : settings) {
    for (auto v : variants) {
      if (auto why = inapplicable_reason(v, x); !why.empty()) {
        std::cerr << ContractError("cannot run " + setting_name(x) + " on " + variant_name(v) + ": " + why).what()
                  << "\n";
        return 1;
      }
    }
  }
  auto corpus = load_corpus(cfg);
  warn_all(corpus.warnings);
  auto rows = run_ablate<T>(cfg, corpus, variants, settings,
                            [](const std::string& line) { std::cerr << line << std::endl; });
  const auto json = ablation_json(rows);
  std::cout << ablation_table(rows) << json;
  if (!report.empty()) write_text(report, json);
  return 0;
}

template <typename T>
int cmd_sweep(const Settings& s, const std::string& t_arg, const std::string& report) {
  auto cfg = s.resolve();
  auto corpus = load_corpus(cfg);
  warn_all(corpus.warnings);
  std::vector<std::size_t> ts;
  for (const auto& x : split_list(t_arg)) {
    try {
      std::size_t pos = 0;
      long long v = std::stoll(x, &pos);
      if (pos != x.size() || v < 0) throw std::invalid_argument(x);
      ts.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw ConfigError("t-values must be non-negative integers, got '" + x + "'");
    }
  }
  auto rows = run_sweep_t<T>(cfg, corpus, ts,
                             [](const std::string& line) { std::cerr << line << std::endl; });
  const auto json = sweep_json(rows);
  std::cout << sweep_table(rows) << json;
  if (!report.empty()) write_text(report, json);
  return 0;
}

template <typename T>
int cmd_count(const Settings& s, bool breakdown, bool compare) {
  auto cfg = s.resolve();
  auto corpus = load_corpus(cfg);
  std::vector<GraphVariant> variants{cfg.model.variant};
  if (compare) variants = {GraphVariant::SE, GraphVariant::S, GraphVariant::F};
  std::vector<std::vector<std::string>> rows;
  std::string json;
  for (auto v : variants) {
    RunConfig c = cfg;
    c.model.variant = v;
    if (v != GraphVariant::SE) c.model.share_params = false;
    auto model = build_model<T>(c, corpus.train);
    auto count = model.count_parameters();
    nlohmann::ordered_json j{{"variant", variant_name(v)}, {"total", count.total}};
    rows.push_back({variant_name(v), "total", std::to_string(count.total)});
    if (breakdown) {
      for (const auto& [group, n] : count.groups) {
        rows.push_back({variant_name(v), group, std::to_string(n)});
        j["groups"][group] = n;
      }
    }
    json += j.dump() + "\n";
  }
  std::cout << render_table({"variant", "group", "parameters"}, rows) << json;
  return 0;
}

template <typename F>
int dispatch(unsigned precision, F&& f) {
  return precision == 32 ? f(float{}) : f(double{});
}

int exit_code(const Error& e) {
  switch (e.kind()) {
    case Error::Kind::Config:
    case Error::Kind::Checkpoint: return 1;
    case Error::Kind::Data: return 2;
    default: return 3;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph-recurrent sentence ordering: data, training, evaluation and experiments"};
  app.require_subcommand(1, 1);
  app.fallthrough();

  Settings s;
  app.add_option("-c,--config", s.config_file, "Key-value config file");
  app.add_option("--set", s.sets, "Override any config key: --set key=value");
  for (const auto& [key, def] : config_defaults()) {
    std::string desc = "Config key '" + key + "'";
    if (!def.empty()) desc += " (default " + def + ")";
    s.flag_options[key] = app.add_option("--" + key, s.flags[key], desc);
  }

  std::string out, log_path, ckpt, split, report, input, output, variants = "SE,S,F", settings,
                                                                  t_values = "0,1,2,3";
  bool breakdown = false, compare = false;

  auto* gen = app.add_subcommand("gen-data", "Write a synthetic corpus");
  gen->add_option("-o,--out", out, "Output dataset path")->required();

  auto* trn = app.add_subcommand("train", "Train a model and keep the best checkpoint");
  trn->add_option("-o,--out", out, "Checkpoint path");
  trn->add_option("--log", log_path, "Training log path");

  auto* evl = app.add_subcommand("eval", "Evaluate a checkpoint");
  evl->add_option("--checkpoint", ckpt, "Checkpoint path")->required();
  evl->add_option("--split", split, "train, valid or test (default: test, else valid)");
  evl->add_option("--report", report, "Write the JSON record here");

  auto* ord = app.add_subcommand("order", "Predict sentence orders");
  ord->add_option("--checkpoint", ckpt, "Checkpoint path")->required();
  ord->add_option("-i,--input", input, "Dataset to order (default: data key)");
  ord->add_option("-o,--output", output, "Prediction file (default: stdout)");

  auto* abl = app.add_subcommand("ablate", "Train and evaluate the graph ablation grid");
  abl->add_option("--variants", variants, "Comma-separated variants")->capture_default_str();
  abl->add_option("--settings", settings, "Comma-separated settings (default: full grid)");
  abl->add_option("--report", report, "Write JSON records here");

  auto* swp = app.add_subcommand("sweep-t", "Train one model per recurrent step count");
  swp->add_option("--t-values", t_values, "Comma-separated step counts")->capture_default_str();
  swp->add_option("--report", report, "Write JSON records here");

  auto* cnt = app.add_subcommand("count-params", "Count trainable parameters");
  cnt->add_flag("--breakdown", breakdown, "Per sub-model counts");
  cnt->add_flag("--compare", compare, "Report SE, S and F side by side");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*gen) return cmd_gen_data(s, out);
    const unsigned precision = s.resolve().precision;
    if (*trn) return dispatch(precision, [&](auto t) { return cmd_train<decltype(t)>(s, out, log_path); });
    if (*swp) return dispatch(precision, [&](auto t) { return cmd_sweep<decltype(t)>(s, t_values, report); });
    if (*abl) {
      return dispatch(precision, [&](auto t) { return cmd_ablate<decltype(t)>(s, variants, settings, report); });
    }
    if (*cnt) return dispatch(precision, [&](auto t) { return cmd_count<decltype(t)>(s, breakdown, compare); });
    // eval and order take their precision from the checkpoint unless overridden.
    const auto info = read_checkpoint_info(ckpt);
    const unsigned stored = config_for_checkpoint(s, info).precision;
    if (*evl) return dispatch(stored, [&](auto t) { return cmd_eval<decltype(t)>(s, ckpt, split, report); });
    if (*ord) return dispatch(stored, [&](auto t) { return cmd_order<decltype(t)>(s, ckpt, input, output); });
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
