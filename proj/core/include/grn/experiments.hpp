#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "grn/config.hpp"
#include "grn/data.hpp"
#include "grn/metrics.hpp"
#include "grn/model.hpp"
#include "grn/trainer.hpp"

namespace grn {

struct Corpus {
  std::vector<Paragraph> train, valid, test;
  std::vector<std::string> warnings;

  /// Test split when present, otherwise validation.
  const std::vector<Paragraph>& held_out() const { return test.empty() ? valid : test; }
};

/// Reads `config.data`, or generates the synthetic corpus when it is empty.
Corpus load_corpus(const RunConfig& config);

/// Vocabulary from the training split plus pretrained vectors when
/// `config.embeddings` is set.
template <typename T>
Model<T> build_model(const RunConfig& config, const std::vector<Paragraph>& train_set);

// ---------------------------------------------------------------------------

enum class AblationSetting {
  Original,
  ShuffleEdges,
  RemoveEdgeLabels,
  RemoveEntities50,
  RemoveEntities10,
  ShareParameters,
};

std::string setting_name(AblationSetting s);
std::optional<AblationSetting> parse_setting(const std::string& s);
std::vector<AblationSetting> all_settings();

/// Empty when the setting applies to the variant, else the rule it breaks.
std::string inapplicable_reason(GraphVariant v, AblationSetting s);
/// The model configuration for one grid cell.
ModelConfig apply_setting(ModelConfig base, AblationSetting s);

struct AblationRow {
  GraphVariant variant = GraphVariant::SE;
  AblationSetting setting = AblationSetting::Original;
  MetricsReport metrics;
  std::size_t parameters = 0;
  std::size_t best_epoch = 0;
};

/// Trains and evaluates every requested cell. With `settings` empty the full
/// grid is run and inapplicable cells are skipped; explicitly requested
/// inapplicable cells raise a contract error naming the rule.
template <typename T>
std::vector<AblationRow> run_ablate(const RunConfig& base, const Corpus& corpus,
                                    const std::vector<GraphVariant>& variants,
                                    const std::vector<AblationSetting>& settings,
                                    const std::function<void(const std::string&)>& progress = {});

std::string ablation_table(const std::vector<AblationRow>& rows);
std::string ablation_json(const std::vector<AblationRow>& rows);

// ---------------------------------------------------------------------------

struct SweepRow {
  std::size_t steps = 0;
  MetricsReport valid;
  std::size_t best_epoch = 0;
};

/// One model per step count, identical seed and settings otherwise.
template <typename T>
std::vector<SweepRow> run_sweep_t(const RunConfig& base, const Corpus& corpus,
                                  const std::vector<std::size_t>& t_values,
                                  const std::function<void(const std::string&)>& progress = {});

std::string sweep_table(const std::vector<SweepRow>& rows);
std::string sweep_json(const std::vector<SweepRow>& rows);

}  // namespace grn
