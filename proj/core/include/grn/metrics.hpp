#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace grn {

// Orders are sequences of sentence identities; `pred` and `gold` must be
// permutations of the same elements.

/// 1 - 2 * inversions / (M choose 2), inversions counted by merge sort.
/// Defined as 1 for M = 1.
double kendall_tau(std::span<const std::size_t> pred, std::span<const std::size_t> gold);
std::size_t count_inversions(std::span<const std::size_t> pred, std::span<const std::size_t> gold);
/// Fraction of positions holding the gold sentence.
double accuracy(std::span<const std::size_t> pred, std::span<const std::size_t> gold);

struct OrderPair {
  std::vector<std::size_t> pred;
  std::vector<std::size_t> gold;
};

double pmr(std::span<const OrderPair> batch);
struct HeadTail {
  double head = 0.0;
  double tail = 0.0;
};
HeadTail head_tail_accuracy(std::span<const OrderPair> batch);

struct MetricsReport {
  double tau = 0.0;
  double acc = 0.0;
  double pmr = 0.0;
  double head_acc = 0.0;
  double tail_acc = 0.0;
  std::size_t paragraphs = 0;

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

/// Per-paragraph means of tau and acc, plus batch pmr and head/tail accuracy.
MetricsReport evaluate(std::span<const OrderPair> batch);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};
struct BootstrapReport {
  Interval tau, acc, pmr;
  std::size_t samples = 0;
};
/// Percentile bootstrap (2.5%, 97.5%) over paragraphs.
BootstrapReport bootstrap(std::span<const OrderPair> batch, std::size_t samples,
                          std::uint64_t seed);

std::string metrics_json(const MetricsReport& r, const std::string& config_digest,
                         const BootstrapReport* ci = nullptr);

/// Left-aligned first column, right-aligned others, columns padded to width.
std::string render_table(const std::vector<std::string>& header,
                         const std::vector<std::vector<std::string>>& rows);
std::string fixed(double v, int digits = 4);

}  // namespace grn
