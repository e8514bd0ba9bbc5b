#include <CLI11.hpp>

#include <iostream>

#include "vqa/errors.hpp"
#include "vqa/synthetic.hpp"

// Generates a small synthetic two-tier corpus (clips, manifest, VMAF-style
// scores file) for demos and smoke runs.
int main(int argc, char** argv) {
  CLI::App app{"synthetic corpus generator"};
  vqa::synthetic::CorpusSpec spec;
  std::string dir = "corpus";
  app.add_option("--out", dir, "output directory")->required();
  app.add_option("--videos-per-tier", spec.videos_per_tier, "videos per bitrate tier");
  app.add_option("--frames", spec.frames, "frames per video");
  app.add_option("--size", spec.size, "square frame size");
  app.add_option("--fps", spec.fps, "frame rate");
  app.add_option("--seed", spec.seed, "corpus seed");
  app.add_option("--noise", spec.pixel_noise, "per-pixel noise amplitude");
  CLI11_PARSE(app, argc, argv);

  try {
    spec.dir = dir;
    const auto corpus = vqa::synthetic::generate(spec);
    std::cout << "manifest: " << corpus.manifest_path.string() << "\n"
              << "scores:   " << corpus.scores_path.string() << "\n"
              << "videos:   " << corpus.manifest.records.size() << "\n";
    return 0;
  } catch (const vqa::Error& e) {
    std::cerr << "vqa-synth: " << e.what() << "\n";
    return static_cast<int>(e.category());
  }
}
