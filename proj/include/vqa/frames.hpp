#pragma once

#include <vector>

#include "vqa/manifest.hpp"

namespace vqa {

// One decoded frame: row-major H x W x 3 RGB, values in [0, 1].
struct FrameTensor {
  int height = 0;
  int width = 0;
  std::vector<float> rgb;
  int frame_index = 0;
  double timestamp_s = 0.0;

  float& at(int y, int x, int c) { return rgb[static_cast<std::size_t>((y * width + x) * 3 + c)]; }
  float at(int y, int x, int c) const {
    return rgb[static_cast<std::size_t>((y * width + x) * 3 + c)];
  }
};

// Uniform temporal sampling with inclusive endpoints:
// k -> round(k * (total - 1) / (count - 1)). Nondecreasing; {0} for count 1.
// Short videos return all their frames (padding is the caller's concern).
std::vector<int> uniform_frame_indices(int total_frames, int frame_count);

FrameTensor resize_bilinear(const FrameTensor& src, int out_h, int out_w);

struct SampledFrames {
  std::vector<FrameTensor> frames;
  bool padded = false;  // the video was shorter than frame_count
};

// Decodes, samples uniformly in time, resizes to target_size x target_size.
// Deterministic for a given (record, frame_count, target_size).
SampledFrames sample_frames(const VideoRecord& record, int frame_count, int target_size);

}  // namespace vqa
