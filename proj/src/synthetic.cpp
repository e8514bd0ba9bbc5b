#include "vqa/synthetic.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <json.hpp>

#include "vqa/errors.hpp"
#include "vqa/frames.hpp"
#include "vqa/rng.hpp"
#include "vqa/y4m.hpp"

namespace vqa::synthetic {

namespace {

float clamp01(double v) { return static_cast<float>(std::min(1.0, std::max(0.0, v))); }

// Moving sinusoid pattern; the "compressed" rendition is its blockwise mean
// pulled toward gray, so heavier blending erases local detail the way strong
// quantization does.
FrameTensor render_frame(int size, int t, double alpha, double fx, double fy, double phase,
                         double noise, Rng& rng) {
  const int block = std::max(2, size / 4);
  FrameTensor f;
  f.height = f.width = size;
  f.rgb.resize(static_cast<std::size_t>(size) * size * 3);
  f.frame_index = t;

  std::vector<double> clean(static_cast<std::size_t>(size) * size * 3);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      for (int c = 0; c < 3; ++c) {
        const double arg = 2.0 * M_PI * (fx * x + fy * y) / size + phase + 0.25 * t + 0.7 * c;
        clean[static_cast<std::size_t>((y * size + x) * 3 + c)] = 0.5 + 0.45 * std::sin(arg);
      }
    }
  }

  for (int by = 0; by < size; by += block) {
    for (int bx = 0; bx < size; bx += block) {
      double mean[3] = {0, 0, 0};
      for (int y = by; y < by + block; ++y) {
        for (int x = bx; x < bx + block; ++x) {
          for (int c = 0; c < 3; ++c) mean[c] += clean[static_cast<std::size_t>((y * size + x) * 3 + c)];
        }
      }
      for (double& m : mean) m /= block * block;
      for (int y = by; y < by + block; ++y) {
        for (int x = bx; x < bx + block; ++x) {
          for (int c = 0; c < 3; ++c) {
            const double cv = clean[static_cast<std::size_t>((y * size + x) * 3 + c)];
            const double degraded = 0.5 + 0.5 * (mean[c] - 0.5);
            const double v = (1.0 - alpha) * cv + alpha * degraded + noise * rng.normal();
            f.at(y, x, c) = clamp01(v);
          }
        }
      }
    }
  }
  return f;
}

}  // namespace

Corpus generate(const CorpusSpec& spec) {
  if (spec.videos_per_tier < 1 || spec.frames < 1 || spec.size < 8) {
    throw ConfigError("synthetic", "corpus needs >= 1 video per tier, >= 1 frame, size >= 8");
  }
  std::filesystem::create_directories(spec.dir / "clips");

  std::ostringstream manifest;
  manifest << "#scale: vmaf\n#tiers: 100,2000\n";
  manifest << "video_id,source_path,bitrate_kbps,bitrate_tier,label\n";
  nlohmann::json scores = nlohmann::json::object();

  Rng corpus_rng(spec.seed);
  for (int tier = 0; tier < 2; ++tier) {
    for (int i = 0; i < spec.videos_per_tier; ++i) {
      const double spread =
          spec.videos_per_tier > 1 ? static_cast<double>(i) / (spec.videos_per_tier - 1) : 0.5;
      // low tier: alpha in [0.55, 0.95]; high tier: [0.05, 0.45]
      const double alpha = (tier == 0 ? 0.55 : 0.05) + 0.40 * spread;
      const double label = 96.0 - 60.0 * alpha;
      const int bitrate = tier == 0 ? 400 + 37 * i : 4000 + 211 * i;

      const double fx = 1.0 + static_cast<double>(corpus_rng.bounded(3));
      const double fy = 1.0 + static_cast<double>(corpus_rng.bounded(3));
      const double phase = 2.0 * M_PI * corpus_rng.uniform();

      char id[32];
      std::snprintf(id, sizeof(id), "tier%d_v%02d", tier, i);
      const std::string rel = std::string("clips/") + id + ".y4m";

      Rng frame_rng(Rng::mix(spec.seed, static_cast<std::uint64_t>(tier * 1000 + i)));
      std::vector<FrameTensor> frames;
      frames.reserve(static_cast<std::size_t>(spec.frames));
      for (int t = 0; t < spec.frames; ++t) {
        frames.push_back(
            render_frame(spec.size, t, alpha, fx, fy, phase, spec.pixel_noise, frame_rng));
      }
      y4m::write_video(spec.dir / rel, frames, spec.fps);

      manifest << id << "," << rel << "," << bitrate << "," << tier << "," << label << "\n";
      scores[id] = label;
    }
  }

  Corpus corpus;
  corpus.manifest_path = spec.dir / "manifest.csv";
  corpus.scores_path = spec.dir / "vmaf_scores.json";
  {
    std::ofstream m(corpus.manifest_path);
    m << manifest.str();
    std::ofstream s(corpus.scores_path);
    s << scores.dump(2) << "\n";
    if (!m || !s) throw IoError("synthetic", "cannot write corpus files under " + spec.dir.string());
  }
  corpus.manifest = load_manifest(corpus.manifest_path);
  return corpus;
}

}  // namespace vqa::synthetic
