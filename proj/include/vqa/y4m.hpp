#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "vqa/frames.hpp"

namespace vqa::y4m {

struct VideoInfo {
  int width = 0;
  int height = 0;
  double fps = 30.0;
  int frame_count = 0;
  std::string colorspace;  // as declared, e.g. "C420jpeg"
};

// Reader for YUV4MPEG2 streams (the container the VMAF toolchain consumes).
// The constructor scans the frame index; decode() is random-access and
// reentrant.
class Reader {
 public:
  explicit Reader(const std::filesystem::path& path);

  const VideoInfo& info() const { return info_; }

  // Decoded RGB frame in [0, 1] (BT.601 limited range).
  FrameTensor decode(int frame_index) const;

 private:
  std::filesystem::path path_;
  VideoInfo info_;
  std::vector<std::streamoff> frame_offsets_;
  int chroma_sx_ = 2, chroma_sy_ = 2;  // subsampling factors; 0 = no chroma
  std::size_t frame_bytes_ = 0;
};

// Writes a C444 stream from RGB frames in [0, 1]. Frames must share the
// given dimensions.
void write_video(const std::filesystem::path& path, const std::vector<FrameTensor>& frames,
                 double fps = 30.0);

}  // namespace vqa::y4m
