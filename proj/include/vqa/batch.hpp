#pragma once

#include <cstdint>
#include <vector>

#include "vqa/frames.hpp"
#include "vqa/manifest.hpp"

namespace vqa {

struct BatchSample {
  VideoRecord record;
  std::vector<FrameTensor> frames;  // filled lazily by the training loop
  bool padded = false;
};

// An ordered two-tier batch: positions [0, pN) hold the lower tier (group A),
// positions [pN, N) the higher tier (group B).
struct ContrastiveBatch {
  std::vector<BatchSample> samples;
  int n = 0;
  double p = 0.5;
  int group_a_tier = 0;
  int group_b_tier = 0;

  int group_a_count() const;
};

// Seeded uniform choice of an eligible tier pair and of members without
// replacement. Identical inputs and seed produce the identical batch.
ContrastiveBatch build_contrastive_batch(const std::vector<VideoRecord>& records, int n, double p,
                                         std::uint64_t seed);

}  // namespace vqa
