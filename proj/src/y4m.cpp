#include "vqa/y4m.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>

#include "vqa/errors.hpp"

namespace vqa::y4m {

namespace {

constexpr const char* kMagic = "YUV4MPEG2";

float clamp01(float v) { return std::min(1.0f, std::max(0.0f, v)); }

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::min(255.0, std::max(0.0, v))));
}

}  // namespace

Reader::Reader(const std::filesystem::path& path) : path_(path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("y4m", "cannot open " + path.string());

  std::string header;
  if (!std::getline(in, header)) throw DecodeError("y4m", path.string() + ": empty file");
  std::istringstream hs(header);
  std::string tag;
  hs >> tag;
  if (tag != kMagic) throw DecodeError("y4m", path.string() + ": not a YUV4MPEG2 stream");

  info_.colorspace = "C420";
  std::string field;
  while (hs >> field) {
    if (field.empty()) continue;
    const char key = field[0];
    const std::string value = field.substr(1);
    try {
      switch (key) {
        case 'W': info_.width = std::stoi(value); break;
        case 'H': info_.height = std::stoi(value); break;
        case 'F': {
          const auto colon = value.find(':');
          if (colon == std::string::npos) throw std::invalid_argument(value);
          const double num = std::stod(value.substr(0, colon));
          const double den = std::stod(value.substr(colon + 1));
          if (den > 0) info_.fps = num / den;
          break;
        }
        case 'C': info_.colorspace = field; break;
        default: break;  // I, A, X tags are irrelevant here
      }
    } catch (const std::exception&) {
      throw DecodeError("y4m", path.string() + ": bad header field '" + field + "'");
    }
  }
  if (info_.width <= 0 || info_.height <= 0) {
    throw DecodeError("y4m", path.string() + ": missing or invalid dimensions");
  }

  const std::string& cs = info_.colorspace;
  if (cs.rfind("C420", 0) == 0) {
    chroma_sx_ = 2;
    chroma_sy_ = 2;
    if (info_.width % 2 || info_.height % 2) {
      throw DecodeError("y4m", path.string() + ": 4:2:0 needs even dimensions");
    }
  } else if (cs.rfind("C422", 0) == 0) {
    chroma_sx_ = 2;
    chroma_sy_ = 1;
    if (info_.width % 2) throw DecodeError("y4m", path.string() + ": 4:2:2 needs even width");
  } else if (cs == "C444") {
    chroma_sx_ = 1;
    chroma_sy_ = 1;
  } else if (cs == "Cmono") {
    chroma_sx_ = 0;
    chroma_sy_ = 0;
  } else {
    throw DecodeError("y4m", path.string() + ": unsupported colorspace " + cs);
  }

  const std::size_t y_bytes = static_cast<std::size_t>(info_.width) * info_.height;
  const std::size_t c_bytes =
      chroma_sx_ == 0 ? 0
                      : static_cast<std::size_t>(info_.width / chroma_sx_) * (info_.height / chroma_sy_);
  frame_bytes_ = y_bytes + 2 * c_bytes;

  // index the FRAME markers
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("FRAME", 0) != 0) {
      throw DecodeError("y4m", path.string() + ": expected FRAME marker at frame " +
                                   std::to_string(frame_offsets_.size()));
    }
    frame_offsets_.push_back(in.tellg());
    in.seekg(static_cast<std::streamoff>(frame_bytes_), std::ios::cur);
    // verify the frame payload is fully present
    in.peek();
    if (in.eof()) {
      std::ifstream probe(path, std::ios::binary);
      probe.seekg(0, std::ios::end);
      const std::streamoff end = probe.tellg();
      if (end < frame_offsets_.back() + static_cast<std::streamoff>(frame_bytes_)) {
        throw DecodeError("y4m", path.string() + ": truncated frame " +
                                     std::to_string(frame_offsets_.size() - 1));
      }
      break;
    }
  }
  info_.frame_count = static_cast<int>(frame_offsets_.size());
  if (info_.frame_count == 0) throw DecodeError("y4m", path.string() + ": no frames");
}

FrameTensor Reader::decode(int frame_index) const {
  if (frame_index < 0 || frame_index >= info_.frame_count) {
    throw DecodeError("y4m", path_.string() + ": frame " + std::to_string(frame_index) +
                                 " out of range (have " + std::to_string(info_.frame_count) + ")");
  }
  std::ifstream in(path_, std::ios::binary);
  if (!in) throw IoError("y4m", "cannot open " + path_.string());
  in.seekg(frame_offsets_[static_cast<std::size_t>(frame_index)]);

  std::vector<std::uint8_t> buf(frame_bytes_);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(frame_bytes_));
  if (in.gcount() != static_cast<std::streamsize>(frame_bytes_)) {
    throw DecodeError("y4m", path_.string() + ": truncated frame " + std::to_string(frame_index));
  }

  const int w = info_.width, h = info_.height;
  FrameTensor f;
  f.height = h;
  f.width = w;
  f.rgb.resize(static_cast<std::size_t>(w) * h * 3);
  f.frame_index = frame_index;
  f.timestamp_s = info_.fps > 0 ? frame_index / info_.fps : 0.0;

  const std::uint8_t* yp = buf.data();
  const int cw = chroma_sx_ ? w / chroma_sx_ : 0;
  const int ch = chroma_sy_ ? h / chroma_sy_ : 0;
  const std::uint8_t* up = yp + static_cast<std::size_t>(w) * h;
  const std::uint8_t* vp = up + static_cast<std::size_t>(cw) * ch;

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double Y = 1.164383 * (yp[y * w + x] - 16.0);
      double r, g, b;
      if (chroma_sx_ == 0) {
        r = g = b = Y;
      } else {
        const int cx = x / chroma_sx_, cy = y / chroma_sy_;
        const double U = up[cy * cw + cx] - 128.0;
        const double V = vp[cy * cw + cx] - 128.0;
        r = Y + 1.596027 * V;
        g = Y - 0.391762 * U - 0.812968 * V;
        b = Y + 2.017232 * U;
      }
      f.at(y, x, 0) = clamp01(static_cast<float>(r / 255.0));
      f.at(y, x, 1) = clamp01(static_cast<float>(g / 255.0));
      f.at(y, x, 2) = clamp01(static_cast<float>(b / 255.0));
    }
  }
  return f;
}

void write_video(const std::filesystem::path& path, const std::vector<FrameTensor>& frames,
                 double fps) {
  if (frames.empty()) throw IoError("y4m", "refusing to write an empty stream");
  const int w = frames.front().width, h = frames.front().height;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("y4m", "cannot write " + path.string());

  const int fps_num = static_cast<int>(std::lround(fps * 1000.0));
  out << kMagic << " W" << w << " H" << h << " F" << fps_num << ":1000 Ip A1:1 C444\n";

  std::vector<std::uint8_t> yplane(static_cast<std::size_t>(w) * h);
  std::vector<std::uint8_t> uplane(yplane.size()), vplane(yplane.size());
  for (const auto& f : frames) {
    if (f.width != w || f.height != h) throw IoError("y4m", "mixed frame sizes in one stream");
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double r = f.at(y, x, 0), g = f.at(y, x, 1), b = f.at(y, x, 2);
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        yplane[i] = to_byte(16.0 + 65.481 * r + 128.553 * g + 24.966 * b);
        uplane[i] = to_byte(128.0 - 37.797 * r - 74.203 * g + 112.0 * b);
        vplane[i] = to_byte(128.0 + 112.0 * r - 93.786 * g - 18.214 * b);
      }
    }
    out << "FRAME\n";
    out.write(reinterpret_cast<const char*>(yplane.data()), static_cast<std::streamsize>(yplane.size()));
    out.write(reinterpret_cast<const char*>(uplane.data()), static_cast<std::streamsize>(uplane.size()));
    out.write(reinterpret_cast<const char*>(vplane.data()), static_cast<std::streamsize>(vplane.size()));
  }
  if (!out) throw IoError("y4m", "write failed for " + path.string());
}

}  // namespace vqa::y4m
