#include "grn/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <random>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "grn/autodiff.hpp"
#include "grn/error.hpp"

namespace grn {

namespace {

// pred re-expressed as gold positions.
std::vector<std::size_t> gold_positions(std::span<const std::size_t> pred,
                                        std::span<const std::size_t> gold) {
  if (pred.size() != gold.size()) {
    throw ContractError("order lengths differ: " + std::to_string(pred.size()) + " vs " +
                        std::to_string(gold.size()));
  }
  if (gold.empty()) throw ContractError("empty order");
  std::unordered_map<std::size_t, std::size_t> pos;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (!pos.emplace(gold[i], i).second) throw ContractError("gold order repeats an element");
  }
  std::vector<std::size_t> seq;
  std::vector<bool> used(gold.size(), false);
  seq.reserve(pred.size());
  for (auto x : pred) {
    auto it = pos.find(x);
    if (it == pos.end() || used[it->second]) {
      throw ContractError("predicted order is not a permutation of the gold order");
    }
    used[it->second] = true;
    seq.push_back(it->second);
  }
  return seq;
}

std::size_t merge_count(std::vector<std::size_t>& v, std::vector<std::size_t>& buf, std::size_t lo,
                        std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::size_t n = merge_count(v, buf, lo, mid) + merge_count(v, buf, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[i] <= v[j]) {
      buf[k++] = v[i++];
    } else {
      n += mid - i;
      buf[k++] = v[j++];
    }
  }
  while (i < mid) buf[k++] = v[i++];
  while (j < hi) buf[k++] = v[j++];
  std::copy(buf.begin() + lo, buf.begin() + hi, v.begin() + lo);
  return n;
}

void require_batch(std::span<const OrderPair> batch) {
  if (batch.empty()) throw ContractError("metrics over an empty batch");
}

double percentile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double idx = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(idx);
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (idx - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

std::size_t count_inversions(std::span<const std::size_t> pred, std::span<const std::size_t> gold) {
  auto seq = gold_positions(pred, gold);
  std::vector<std::size_t> buf(seq.size());
  return merge_count(seq, buf, 0, seq.size());
}

double kendall_tau(std::span<const std::size_t> pred, std::span<const std::size_t> gold) {
  const std::size_t inv = count_inversions(pred, gold);
  const std::size_t m = gold.size();
  if (m == 1) return 1.0;
  const double pairs = static_cast<double>(m * (m - 1) / 2);
  return 1.0 - 2.0 * static_cast<double>(inv) / pairs;
}

double accuracy(std::span<const std::size_t> pred, std::span<const std::size_t> gold) {
  gold_positions(pred, gold);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) hits += pred[i] == gold[i];
  return static_cast<double>(hits) / static_cast<double>(gold.size());
}

double pmr(std::span<const OrderPair> batch) {
  require_batch(batch);
  std::size_t exact = 0;
  for (const auto& p : batch) {
    gold_positions(p.pred, p.gold);
    exact += p.pred == p.gold;
  }
  return static_cast<double>(exact) / static_cast<double>(batch.size());
}

HeadTail head_tail_accuracy(std::span<const OrderPair> batch) {
  require_batch(batch);
  std::size_t head = 0, tail = 0;
  for (const auto& p : batch) {
    gold_positions(p.pred, p.gold);
    head += p.pred.front() == p.gold.front();
    tail += p.pred.back() == p.gold.back();
  }
  const auto n = static_cast<double>(batch.size());
  return {static_cast<double>(head) / n, static_cast<double>(tail) / n};
}

MetricsReport evaluate(std::span<const OrderPair> batch) {
  require_batch(batch);
  MetricsReport r;
  for (const auto& p : batch) {
    r.tau += kendall_tau(p.pred, p.gold);
    r.acc += accuracy(p.pred, p.gold);
  }
  const auto n = static_cast<double>(batch.size());
  r.tau /= n;
  r.acc /= n;
  r.pmr = pmr(batch);
  auto ht = head_tail_accuracy(batch);
  r.head_acc = ht.head;
  r.tail_acc = ht.tail;
  r.paragraphs = batch.size();
  return r;
}

BootstrapReport bootstrap(std::span<const OrderPair> batch, std::size_t samples,
                          std::uint64_t seed) {
  require_batch(batch);
  if (samples == 0) throw ContractError("bootstrap needs at least one sample");
  const std::size_t n = batch.size();
  std::vector<double> tau(n), acc(n), exact(n);
  for (std::size_t i = 0; i < n; ++i) {
    tau[i] = kendall_tau(batch[i].pred, batch[i].gold);
    acc[i] = accuracy(batch[i].pred, batch[i].gold);
    exact[i] = batch[i].pred == batch[i].gold ? 1.0 : 0.0;
  }
  ad::Rng rng(seed);
  std::vector<double> st, sa, sp;
  for (std::size_t s = 0; s < samples; ++s) {
    double t = 0, a = 0, p = 0;
    for (std::size_t k = 0; k < n; ++k) {
      auto i = std::min(n - 1, static_cast<std::size_t>(ad::uniform01(rng) * static_cast<double>(n)));
      t += tau[i];
      a += acc[i];
      p += exact[i];
    }
    st.push_back(t / static_cast<double>(n));
    sa.push_back(a / static_cast<double>(n));
    sp.push_back(p / static_cast<double>(n));
  }
  BootstrapReport out;
  out.samples = samples;
  out.tau = {percentile(st, 0.025), percentile(st, 0.975)};
  out.acc = {percentile(sa, 0.025), percentile(sa, 0.975)};
  out.pmr = {percentile(sp, 0.025), percentile(sp, 0.975)};
  return out;
}

std::string metrics_json(const MetricsReport& r, const std::string& config_digest,
                         const BootstrapReport* ci) {
  nlohmann::ordered_json j;
  j["tau"] = r.tau;
  j["acc"] = r.acc;
  j["pmr"] = r.pmr;
  j["head-acc"] = r.head_acc;
  j["tail-acc"] = r.tail_acc;
  j["paragraphs"] = r.paragraphs;
  j["config-digest"] = config_digest;
  if (ci) {
    auto pair = [](const Interval& i) { return nlohmann::json::array({i.lo, i.hi}); };
    j["bootstrap"] = {{"samples", ci->samples},
                      {"tau", pair(ci->tau)},
                      {"acc", pair(ci->acc)},
                      {"pmr", pair(ci->pmr)}};
  }
  return j.dump();
}

std::string render_table(const std::vector<std::string>& header,
                         const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size(), 0);
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& r : rows)
    for (std::size_t c = 0; c < r.size() && c < width.size(); ++c)
      width[c] = std::max(width[c], r[c].size());

  std::ostringstream out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < width.size(); ++c) {
      const std::string cell = c < cells.size() ? cells[c] : "";
      const std::string pad(width[c] - cell.size(), ' ');
      if (c) out << "  ";
      out << (c == 0 ? cell + pad : pad + cell);
    }
    out << '\n';
  };
  line(header);
  std::size_t total = 0;
  for (auto w : width) total += w;
  out << std::string(total + 2 * (width.size() - 1), '-') << '\n';
  for (const auto& r : rows) line(r);
  return out.str();
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace grn
