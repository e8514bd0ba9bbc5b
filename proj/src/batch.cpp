#include "vqa/batch.hpp"

#include <cmath>
#include <map>
#include <string>

#include "vqa/errors.hpp"
#include "vqa/rng.hpp"

namespace vqa {

int ContrastiveBatch::group_a_count() const {
  return static_cast<int>(std::lround(p * static_cast<double>(n)));
}

ContrastiveBatch build_contrastive_batch(const std::vector<VideoRecord>& records, int n, double p,
                                         std::uint64_t seed) {
  if (n < 2) throw ConfigError("batch", "batch size must be >= 2");
  if (!(p > 0.0 && p < 1.0)) throw ConfigError("batch", "p must be in (0, 1)");
  const double pn = p * static_cast<double>(n);
  const int a_count = static_cast<int>(std::lround(pn));
  if (std::abs(pn - static_cast<double>(a_count)) > 1e-9) {
    throw ConfigError("batch", "p*N must be integral (p=" + std::to_string(p) +
                                   ", N=" + std::to_string(n) + ")");
  }
  const int b_count = n - a_count;

  // ordered map keeps tier enumeration deterministic
  std::map<int, std::vector<std::size_t>> by_tier;
  for (std::size_t i = 0; i < records.size(); ++i) by_tier[records[i].bitrate_tier].push_back(i);

  // eligible (low, high) tier pairs: low feeds group A, high feeds group B
  std::vector<std::pair<int, int>> eligible;
  for (auto lo = by_tier.begin(); lo != by_tier.end(); ++lo) {
    if (static_cast<int>(lo->second.size()) < a_count) continue;
    for (auto hi = std::next(lo); hi != by_tier.end(); ++hi) {
      if (static_cast<int>(hi->second.size()) >= b_count) eligible.emplace_back(lo->first, hi->first);
    }
  }
  if (eligible.empty()) {
    std::string detail = "no tier pair can fill a batch of " + std::to_string(a_count) + "+" +
                         std::to_string(b_count) + "; tier sizes:";
    for (const auto& [tier, members] : by_tier) {
      detail += " tier" + std::to_string(tier) + "=" + std::to_string(members.size());
    }
    throw CompositionError("batch", detail);
  }

  Rng rng(Rng::mix(seed, 0x9a7c));
  const auto [tier_a, tier_b] = eligible[rng.bounded(eligible.size())];

  auto draw = [&rng](std::vector<std::size_t> pool, int count) {
    rng.shuffle(pool);
    pool.resize(static_cast<std::size_t>(count));
    return pool;
  };

  ContrastiveBatch batch;
  batch.n = n;
  batch.p = p;
  batch.group_a_tier = tier_a;
  batch.group_b_tier = tier_b;
  batch.samples.reserve(static_cast<std::size_t>(n));
  for (std::size_t idx : draw(by_tier[tier_a], a_count)) {
    batch.samples.push_back(BatchSample{records[idx], {}, false});
  }
  for (std::size_t idx : draw(by_tier[tier_b], b_count)) {
    batch.samples.push_back(BatchSample{records[idx], {}, false});
  }
  return batch;
}

}  // namespace vqa
