#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "grn/config.hpp"
#include "grn/metrics.hpp"
#include "grn/model.hpp"
#include "grn/params.hpp"

namespace grn {

/// Adadelta with a learning-rate multiplier:
///   E[g^2]  <- rho E[g^2] + (1 - rho) g^2
///   dx       = -sqrt(E[dx^2] + eps) / sqrt(E[g^2] + eps) * g
///   theta   += lr * dx
///   E[dx^2] <- rho E[dx^2] + (1 - rho) dx^2
/// Parameters without a gradient are treated as having a zero gradient;
/// parameters that do not require gradients are skipped.
template <typename T>
class Adadelta {
 public:
  struct Slot {
    std::vector<T> sq_grad;
    std::vector<T> sq_update;
  };

  Adadelta(double rho, double epsilon, double learning_rate);
  void step(ParamStore<T>& store);
  const std::map<std::string, Slot>& slots() const { return slots_; }

 private:
  T rho_, eps_, lr_;
  std::map<std::string, Slot> slots_;
};

/// lambda * sum of squared trainable parameters.
template <typename T>
double l2_penalty(const ParamStore<T>& store, double lambda);
/// Adds 2 * lambda * theta to every trainable gradient.
template <typename T>
void add_l2_gradient(ParamStore<T>& store, double lambda);

/// Fixed presentation used for evaluation: seeded per paragraph id, so it
/// does not depend on corpus order.
std::vector<std::size_t> eval_presentation(const Paragraph& p, std::uint64_t seed);

struct Prediction {
  std::string id;
  std::vector<std::size_t> presentation;
  OrderPrediction slots;
  std::vector<std::size_t> order;  // gold sentence indices
};

template <typename T>
std::vector<Prediction> predict_corpus(const Model<T>& model, const std::vector<Paragraph>& corpus,
                                       std::size_t beam, std::uint64_t seed);
MetricsReport score_predictions(const std::vector<Prediction>& predictions);
std::vector<OrderPair> order_pairs(const std::vector<Prediction>& predictions);

template <typename T>
MetricsReport evaluate_model(const Model<T>& model, const std::vector<Paragraph>& corpus,
                             std::size_t beam, std::uint64_t seed);

struct EpochLog {
  std::size_t epoch = 0;
  double train_nll = 0.0;  // mean per paragraph, without the L2 term
  MetricsReport valid;
  double seconds = 0.0;

  std::string line() const;
  /// Everything but wall time.
  bool same_result(const EpochLog& other) const;
};

struct TrainResult {
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;
  MetricsReport best_valid;
  bool stopped_early = false;
};

/// Mean NLL of `batch` under fresh presentations drawn from `rng`, with
/// parameter gradients of mean NLL accumulated into the store.
template <typename T>
double accumulate_batch(Model<T>& model, const std::vector<const Paragraph*>& batch,
                        double dropout, ad::Rng& order_rng, ad::Rng& dropout_rng);

/// Trains in place and leaves the best validation parameters in `model`.
template <typename T>
TrainResult train(Model<T>& model, const std::vector<Paragraph>& train_set,
                  const std::vector<Paragraph>& valid_set, const TrainConfig& config,
                  const std::function<void(const EpochLog&)>& on_epoch = {});

}  // namespace grn
