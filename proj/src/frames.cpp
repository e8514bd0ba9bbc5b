#include "vqa/frames.hpp"

#include <algorithm>
#include <cmath>

#include "vqa/errors.hpp"
#include "vqa/y4m.hpp"

namespace vqa {

std::vector<int> uniform_frame_indices(int total_frames, int frame_count) {
  if (total_frames < 1) throw DecodeError("frames", "video has no frames");
  if (frame_count < 1) throw ConfigError("frames", "frame_count must be >= 1");

  std::vector<int> idx;
  idx.reserve(static_cast<std::size_t>(frame_count));
  if (total_frames <= frame_count) {
    for (int i = 0; i < total_frames; ++i) idx.push_back(i);
    return idx;
  }
  if (frame_count == 1) {
    idx.push_back(0);
    return idx;
  }
  const double step = static_cast<double>(total_frames - 1) / (frame_count - 1);
  for (int k = 0; k < frame_count; ++k) {
    idx.push_back(static_cast<int>(std::lround(k * step)));
  }
  return idx;
}

FrameTensor resize_bilinear(const FrameTensor& src, int out_h, int out_w) {
  if (src.height == out_h && src.width == out_w) return src;
  FrameTensor dst;
  dst.height = out_h;
  dst.width = out_w;
  dst.rgb.resize(static_cast<std::size_t>(out_h) * out_w * 3);
  dst.frame_index = src.frame_index;
  dst.timestamp_s = src.timestamp_s;

  const double sy = static_cast<double>(src.height) / out_h;
  const double sx = static_cast<double>(src.width) / out_w;
  for (int y = 0; y < out_h; ++y) {
    const double fy = std::max(0.0, (y + 0.5) * sy - 0.5);
    const int y0 = std::min(static_cast<int>(fy), src.height - 1);
    const int y1 = std::min(y0 + 1, src.height - 1);
    const double wy = fy - y0;
    for (int x = 0; x < out_w; ++x) {
      const double fx = std::max(0.0, (x + 0.5) * sx - 0.5);
      const int x0 = std::min(static_cast<int>(fx), src.width - 1);
      const int x1 = std::min(x0 + 1, src.width - 1);
      const double wx = fx - x0;
      for (int c = 0; c < 3; ++c) {
        const double top = (1.0 - wx) * src.at(y0, x0, c) + wx * src.at(y0, x1, c);
        const double bot = (1.0 - wx) * src.at(y1, x0, c) + wx * src.at(y1, x1, c);
        dst.at(y, x, c) = static_cast<float>((1.0 - wy) * top + wy * bot);
      }
    }
  }
  return dst;
}

SampledFrames sample_frames(const VideoRecord& record, int frame_count, int target_size) {
  if (target_size < 1) throw ConfigError("frames", "target_size must be >= 1");
  const y4m::Reader reader(record.source_path);
  const int total = reader.info().frame_count;

  SampledFrames out;
  for (int idx : uniform_frame_indices(total, frame_count)) {
    out.frames.push_back(resize_bilinear(reader.decode(idx), target_size, target_size));
  }
  while (static_cast<int>(out.frames.size()) < frame_count) {
    out.frames.push_back(out.frames.back());  // repeat the last frame
    out.padded = true;
  }
  return out;
}

}  // namespace vqa
