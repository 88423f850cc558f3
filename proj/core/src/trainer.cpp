#include "grn/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>

#include "grn/checkpoint.hpp"
#include "grn/error.hpp"

namespace grn {

template <typename T>
Adadelta<T>::Adadelta(double rho, double epsilon, double learning_rate)
    : rho_(static_cast<T>(rho)), eps_(static_cast<T>(epsilon)), lr_(static_cast<T>(learning_rate)) {
  if (rho < 0.0 || rho >= 1.0) throw ConfigError("adadelta.rho must lie in [0, 1)");
  if (epsilon <= 0.0) throw ConfigError("adadelta.epsilon must be positive");
  if (learning_rate <= 0.0) throw ConfigError("learning-rate must be positive");
}

template <typename T>
void Adadelta<T>::step(ParamStore<T>& store) {
  for (auto& [name, p] : store) {
    if (!p.requires_grad()) continue;
    auto& slot = slots_[name];
    if (slot.sq_grad.empty()) {
      slot.sq_grad.assign(p.size(), T(0));
      slot.sq_update.assign(p.size(), T(0));
    }
    auto theta = p.mutable_values();
    auto grad = p.grad();
    const bool has = p.has_grad();
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const T g = has ? grad[i] : T(0);
      slot.sq_grad[i] = rho_ * slot.sq_grad[i] + (T(1) - rho_) * g * g;
      const T dx = -std::sqrt(slot.sq_update[i] + eps_) / std::sqrt(slot.sq_grad[i] + eps_) * g;
      theta[i] += lr_ * dx;
      slot.sq_update[i] = rho_ * slot.sq_update[i] + (T(1) - rho_) * dx * dx;
    }
  }
}

template <typename T>
double l2_penalty(const ParamStore<T>& store, double lambda) {
  double acc = 0.0;
  for (const auto& [name, p] : store) {
    if (!p.requires_grad()) continue;
    for (auto v : p.values()) acc += static_cast<double>(v) * static_cast<double>(v);
  }
  return lambda * acc;
}

template <typename T>
void add_l2_gradient(ParamStore<T>& store, double lambda) {
  if (lambda == 0.0) return;
  const T two_lambda = static_cast<T>(2.0 * lambda);
  for (auto& [name, p] : store) {
    if (!p.requires_grad()) continue;
    auto g = p.mutable_grad();
    auto v = p.values();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += two_lambda * v[i];
  }
}

std::vector<std::size_t> eval_presentation(const Paragraph& p, std::uint64_t seed) {
  ad::Rng rng(seed ^ fnv1a(p.id));
  return random_permutation(p.sentences.size(), rng);
}

template <typename T>
std::vector<Prediction> predict_corpus(const Model<T>& model, const std::vector<Paragraph>& corpus,
                                       std::size_t beam, std::uint64_t seed) {
  std::vector<Prediction> out;
  out.reserve(corpus.size());
  for (const auto& p : corpus) {
    Prediction pr;
    pr.id = p.id;
    pr.presentation = eval_presentation(p, seed);
    pr.slots = model.predict(p, pr.presentation, beam);
    for (auto slot : pr.slots.order) pr.order.push_back(pr.presentation[slot]);
    out.push_back(std::move(pr));
  }
  return out;
}

std::vector<OrderPair> order_pairs(const std::vector<Prediction>& predictions) {
  std::vector<OrderPair> pairs;
  pairs.reserve(predictions.size());
  for (const auto& p : predictions) pairs.push_back({p.order, identity_permutation(p.order.size())});
  return pairs;
}

MetricsReport score_predictions(const std::vector<Prediction>& predictions) {
  return evaluate(order_pairs(predictions));
}

template <typename T>
MetricsReport evaluate_model(const Model<T>& model, const std::vector<Paragraph>& corpus,
                             std::size_t beam, std::uint64_t seed) {
  return score_predictions(predict_corpus(model, corpus, beam, seed));
}

std::string EpochLog::line() const {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "epoch %3zu  train-nll %.6f  valid tau %.4f acc %.4f pmr %.4f  time %.2fs", epoch,
                train_nll, valid.tau, valid.acc, valid.pmr, seconds);
  return buf;
}

bool EpochLog::same_result(const EpochLog& other) const {
  return epoch == other.epoch && train_nll == other.train_nll && valid == other.valid;
}

template <typename T>
double accumulate_batch(Model<T>& model, const std::vector<const Paragraph*>& batch,
                        double dropout, ad::Rng& order_rng, ad::Rng& dropout_rng) {
  if (batch.empty()) throw ContractError("empty batch");
  const T inv = T(1) / static_cast<T>(batch.size());
  double total = 0.0;
  for (const Paragraph* p : batch) {
    auto perm = random_permutation(p->sentences.size(), order_rng);
    ad::Tape<T> tape;
    auto loss = model.nll(tape, *p, perm, Mode::Train, dropout, dropout_rng);
    total += static_cast<double>(loss.item());
    tape.backward(ad::scale(loss, inv));
  }
  return total / static_cast<double>(batch.size());
}

template <typename T>
TrainResult train(Model<T>& model, const std::vector<Paragraph>& train_set,
                  const std::vector<Paragraph>& valid_set, const TrainConfig& config,
                  const std::function<void(const EpochLog&)>& on_epoch) {
  if (train_set.empty()) throw ConfigError("the training split is empty");
  if (valid_set.empty()) throw ConfigError("the validation split is empty");
  if (config.batch_size == 0) throw ConfigError("batch-size must be at least 1");
  if (config.dropout < 0.0 || config.dropout >= 1.0) throw ConfigError("dropout must lie in [0, 1)");

  auto& store = model.params();
  Adadelta<T> opt(config.rho, config.epsilon, config.learning_rate);
  ad::Rng order_rng(config.seed);
  ad::Rng dropout_rng(config.seed ^ 0x9e3779b97f4a7c15ull);

  TrainResult result;
  std::map<std::string, std::vector<T>> best;
  auto snapshot = [&] {
    for (const auto& [name, p] : store) best[name].assign(p.values().begin(), p.values().end());
  };
  double best_tau = -2.0;
  std::size_t stale = 0;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    auto order = random_permutation(train_set.size(), order_rng);
    double nll_sum = 0.0;
    for (std::size_t b = 0; b < order.size(); b += config.batch_size) {
      std::vector<const Paragraph*> batch;
      for (std::size_t k = b; k < std::min(order.size(), b + config.batch_size); ++k) {
        batch.push_back(&train_set[order[k]]);
      }
      store.zero_grad();
      nll_sum += accumulate_batch(model, batch, config.dropout, order_rng, dropout_rng) *
                 static_cast<double>(batch.size());
      add_l2_gradient(store, config.l2);
      opt.step(store);
    }
    store.zero_grad();

    EpochLog log;
    log.epoch = epoch;
    log.train_nll = nll_sum / static_cast<double>(train_set.size());
    log.valid = evaluate_model(model, valid_set, config.valid_beam_size, config.seed);
    log.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.log.push_back(log);
    if (on_epoch) on_epoch(log);

    if (log.valid.tau > best_tau) {
      best_tau = log.valid.tau;
      result.best_epoch = epoch;
      result.best_valid = log.valid;
      stale = 0;
      snapshot();
      if (!config.checkpoint.empty()) {
        Metadata meta = config.checkpoint_metadata;
        meta["best-epoch"] = std::to_string(epoch);
        meta["valid-tau"] = fixed(log.valid.tau, 6);
        save_checkpoint(config.checkpoint, model, meta);
      }
    } else if (config.patience > 0 && ++stale >= config.patience) {
      result.stopped_early = true;
      break;
    }
  }

  for (auto& [name, p] : store) {
    auto it = best.find(name);
    if (it != best.end()) std::copy(it->second.begin(), it->second.end(), p.mutable_values().begin());
  }
  return result;
}

#define GRN_INSTANTIATE_TRAINER(T)                                                              \
  template class Adadelta<T>;                                                                   \
  template double l2_penalty(const ParamStore<T>&, double);                                     \
  template void add_l2_gradient(ParamStore<T>&, double);                                        \
  template std::vector<Prediction> predict_corpus(const Model<T>&, const std::vector<Paragraph>&, \
                                                  std::size_t, std::uint64_t);                  \
  template MetricsReport evaluate_model(const Model<T>&, const std::vector<Paragraph>&,          \
                                        std::size_t, std::uint64_t);                            \
  template double accumulate_batch(Model<T>&, const std::vector<const Paragraph*>&, double,      \
                                   ad::Rng&, ad::Rng&);                                         \
  template TrainResult train(Model<T>&, const std::vector<Paragraph>&,                          \
                             const std::vector<Paragraph>&, const TrainConfig&,                 \
                             const std::function<void(const EpochLog&)>&);

GRN_INSTANTIATE_TRAINER(float)
GRN_INSTANTIATE_TRAINER(double)

}  // namespace grn
