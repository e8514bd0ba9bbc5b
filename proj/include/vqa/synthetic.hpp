#pragma once

#include <filesystem>

#include "vqa/manifest.hpp"

namespace vqa::synthetic {

// A self-contained two-tier corpus for demos and end-to-end tests: Y4M clips
// whose low-frequency contrast decays with a per-video distortion level, a
// manifest, and a VMAF-style scores file. Labels decrease monotonically in
// the distortion level, so tiers are separable and within-tier order is
// meaningful.
struct CorpusSpec {
  std::filesystem::path dir;
  int videos_per_tier = 6;
  int frames = 12;
  int size = 32;  // square frames
  double fps = 24.0;
  std::uint64_t seed = 9;
  double pixel_noise = 0.01;
};

struct Corpus {
  std::filesystem::path manifest_path;
  std::filesystem::path scores_path;
  Manifest manifest;
};

Corpus generate(const CorpusSpec& spec);

}  // namespace vqa::synthetic
