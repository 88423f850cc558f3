#include "grn/experiments.hpp"

#include <algorithm>

#include <json.hpp>

#include "grn/error.hpp"

namespace grn {

Corpus load_corpus(const RunConfig& config) {
  std::vector<Paragraph> all;
  Corpus c;
  if (config.data.empty()) {
    all = generate_synthetic(config.synthetic);
  } else {
    LoadReport report;
    all = load_dataset(config.data, DatasetFormat::JsonLines, &report);
    c.warnings = report.warnings;
    for (const auto& r : report.rejected) c.warnings.push_back("rejected " + r);
  }
  c.train = filter_split(all, Split::Train);
  c.valid = filter_split(all, Split::Valid);
  c.test = filter_split(all, Split::Test);
  return c;
}

template <typename T>
Model<T> build_model(const RunConfig& config, const std::vector<Paragraph>& train_set) {
  auto vocab = Vocabulary::build(train_set, config.min_count);
  if (config.embeddings.empty()) return Model<T>(config.model, std::move(vocab));
  auto table = load_embeddings(config.embeddings, config.model.word_dim);
  return Model<T>(config.model, std::move(vocab), &table);
}

std::string setting_name(AblationSetting s) {
  switch (s) {
    case AblationSetting::Original: return "original";
    case AblationSetting::ShuffleEdges: return "shuffle-edges";
    case AblationSetting::RemoveEdgeLabels: return "remove-edge-labels";
    case AblationSetting::RemoveEntities50: return "remove-50%-entities";
    case AblationSetting::RemoveEntities10: return "remove-10%-entities";
    case AblationSetting::ShareParameters: return "share-parameters";
  }
  return "?";
}

std::vector<AblationSetting> all_settings() {
  return {AblationSetting::Original,         AblationSetting::ShuffleEdges,
          AblationSetting::RemoveEdgeLabels, AblationSetting::RemoveEntities50,
          AblationSetting::RemoveEntities10, AblationSetting::ShareParameters};
}

std::optional<AblationSetting> parse_setting(const std::string& s) {
  for (auto x : all_settings())
    if (setting_name(x) == s) return x;
  if (s == "remove-50-entities") return AblationSetting::RemoveEntities50;
  if (s == "remove-10-entities") return AblationSetting::RemoveEntities10;
  return std::nullopt;
}

std::string inapplicable_reason(GraphVariant v, AblationSetting s) {
  if (s == AblationSetting::Original) return "";
  if (v == GraphVariant::F) return "graph ablations are defined for entity-bearing graphs (SE, S), not F";
  if (v == GraphVariant::S &&
      (s == AblationSetting::RemoveEdgeLabels || s == AblationSetting::ShareParameters)) {
    return setting_name(s) + " applies to SE graphs only";
  }
  return "";
}

ModelConfig apply_setting(ModelConfig m, AblationSetting s) {
  m.ablation.kind = Ablation::Kind::None;
  m.ablation.fraction = 0.0;
  m.share_params = false;
  switch (s) {
    case AblationSetting::Original: break;
    case AblationSetting::ShuffleEdges: m.ablation.kind = Ablation::Kind::ShuffleEdges; break;
    case AblationSetting::RemoveEdgeLabels: m.ablation.kind = Ablation::Kind::RemoveEdgeLabels; break;
    case AblationSetting::RemoveEntities50:
      m.ablation.kind = Ablation::Kind::RemoveEntities;
      m.ablation.fraction = 0.5;
      break;
    case AblationSetting::RemoveEntities10:
      m.ablation.kind = Ablation::Kind::RemoveEntities;
      m.ablation.fraction = 0.1;
      break;
    case AblationSetting::ShareParameters:
      m.share_params = true;
      m.entity_dim = m.sentence_dim;
      break;
  }
  return m;
}

template <typename T>
std::vector<AblationRow> run_ablate(const RunConfig& base, const Corpus& corpus,
                                    const std::vector<GraphVariant>& variants,
                                    const std::vector<AblationSetting>& settings,
                                    const std::function<void(const std::string&)>& progress) {
  const bool explicit_settings = !settings.empty();
  const auto grid = explicit_settings ? settings : all_settings();
  std::vector<std::pair<GraphVariant, AblationSetting>> cells;
  for (auto s : grid) {
    for (auto v : variants) {
      auto reason = inapplicable_reason(v, s);
      if (reason.empty()) {
        cells.emplace_back(v, s);
      } else if (explicit_settings) {
        throw ContractError("cannot run " + setting_name(s) + " on " + variant_name(v) + ": " + reason);
      }
    }
  }

  std::vector<AblationRow> rows;
  for (auto [v, s] : cells) {
    RunConfig cfg = base;
    cfg.model.variant = v;
    cfg.model = apply_setting(cfg.model, s);
    cfg.train.checkpoint.clear();
    auto model = build_model<T>(cfg, corpus.train);
    auto result = train(model, corpus.train, corpus.valid, cfg.train);
    AblationRow row;
    row.variant = v;
    row.setting = s;
    row.metrics = evaluate_model(model, corpus.held_out(), cfg.beam_size, cfg.seed);
    row.parameters = model.count_parameters().total;
    row.best_epoch = result.best_epoch;
    if (progress) {
      progress(variant_name(v) + " " + setting_name(s) + ": tau " + fixed(row.metrics.tau) +
               " acc " + fixed(row.metrics.acc) + " pmr " + fixed(row.metrics.pmr));
    }
    rows.push_back(row);
  }
  return rows;
}

std::string ablation_table(const std::vector<AblationRow>& rows) {
  std::vector<GraphVariant> variants;
  std::vector<AblationSetting> settings;
  for (const auto& r : rows) {
    if (std::find(variants.begin(), variants.end(), r.variant) == variants.end()) variants.push_back(r.variant);
    if (std::find(settings.begin(), settings.end(), r.setting) == settings.end()) settings.push_back(r.setting);
  }
  std::vector<std::string> header{"Model"};
  for (auto v : variants) {
    const auto n = variant_name(v) + "-Graph";
    header.insert(header.end(), {n + " Acc", n + " PMR", n + " tau"});
  }
  std::vector<std::vector<std::string>> body;
  for (auto s : settings) {
    std::vector<std::string> line{s == AblationSetting::Original ? "Original" : "  " + setting_name(s)};
    for (auto v : variants) {
      auto it = std::find_if(rows.begin(), rows.end(),
                             [&](const AblationRow& r) { return r.variant == v && r.setting == s; });
      if (it == rows.end()) {
        line.insert(line.end(), {"---", "---", "---"});
      } else {
        line.insert(line.end(), {fixed(100 * it->metrics.acc, 2), fixed(100 * it->metrics.pmr, 2),
                                 fixed(it->metrics.tau, 4)});
      }
    }
    body.push_back(std::move(line));
  }
  return render_table(header, body);
}

std::string ablation_json(const std::vector<AblationRow>& rows) {
  std::string out;
  for (const auto& r : rows) {
    nlohmann::ordered_json j;
    j["variant"] = variant_name(r.variant);
    j["setting"] = setting_name(r.setting);
    j["tau"] = r.metrics.tau;
    j["acc"] = r.metrics.acc;
    j["pmr"] = r.metrics.pmr;
    j["head-acc"] = r.metrics.head_acc;
    j["tail-acc"] = r.metrics.tail_acc;
    j["paragraphs"] = r.metrics.paragraphs;
    j["parameters"] = r.parameters;
    j["best-epoch"] = r.best_epoch;
    out += j.dump() + "\n";
  }
  return out;
}

template <typename T>
std::vector<SweepRow> run_sweep_t(const RunConfig& base, const Corpus& corpus,
                                  const std::vector<std::size_t>& t_values,
                                  const std::function<void(const std::string&)>& progress) {
  if (t_values.empty()) throw ContractError("sweep-t needs at least one step count");
  std::vector<SweepRow> rows;
  for (auto t : t_values) {
    RunConfig cfg = base;
    cfg.model.steps = t;
    cfg.train.checkpoint.clear();
    auto model = build_model<T>(cfg, corpus.train);
    auto result = train(model, corpus.train, corpus.valid, cfg.train);
    rows.push_back({t, result.best_valid, result.best_epoch});
    if (progress) {
      progress("t=" + std::to_string(t) + ": valid tau " + fixed(result.best_valid.tau) + " acc " +
               fixed(result.best_valid.acc) + " pmr " + fixed(result.best_valid.pmr));
    }
  }
  return rows;
}

std::string sweep_table(const std::vector<SweepRow>& rows) {
  std::vector<std::vector<std::string>> body;
  for (const auto& r : rows) {
    body.push_back({std::to_string(r.steps), fixed(r.valid.tau), fixed(r.valid.acc),
                    fixed(r.valid.pmr), std::to_string(r.best_epoch)});
  }
  return render_table({"t", "tau", "acc", "pmr", "best-epoch"}, body);
}

std::string sweep_json(const std::vector<SweepRow>& rows) {
  std::string out;
  for (const auto& r : rows) {
    nlohmann::ordered_json j;
    j["t"] = r.steps;
    j["tau"] = r.valid.tau;
    j["acc"] = r.valid.acc;
    j["pmr"] = r.valid.pmr;
    j["head-acc"] = r.valid.head_acc;
    j["tail-acc"] = r.valid.tail_acc;
    j["best-epoch"] = r.best_epoch;
    out += j.dump() + "\n";
  }
  return out;
}

template Model<float> build_model(const RunConfig&, const std::vector<Paragraph>&);
template Model<double> build_model(const RunConfig&, const std::vector<Paragraph>&);
template std::vector<AblationRow> run_ablate<float>(const RunConfig&, const Corpus&,
                                                    const std::vector<GraphVariant>&,
                                                    const std::vector<AblationSetting>&,
                                                    const std::function<void(const std::string&)>&);
template std::vector<AblationRow> run_ablate<double>(const RunConfig&, const Corpus&,
                                                     const std::vector<GraphVariant>&,
                                                     const std::vector<AblationSetting>&,
                                                     const std::function<void(const std::string&)>&);
template std::vector<SweepRow> run_sweep_t<float>(const RunConfig&, const Corpus&,
                                                  const std::vector<std::size_t>&,
                                                  const std::function<void(const std::string&)>&);
template std::vector<SweepRow> run_sweep_t<double>(const RunConfig&, const Corpus&,
                                                   const std::vector<std::size_t>&,
                                                   const std::function<void(const std::string&)>&);

}  // namespace grn
