#include "vqa/backbone.hpp"

#include <cmath>

#include "vqa/errors.hpp"
#include "vqa/params.hpp"
#include "vqa/tensorfile.hpp"

namespace vqa {

void BackboneSpec::validate() const {
  if (kind == BackboneKind::pretrained_hierarchical_attention) {
    if (weights_path.empty()) {
      throw ConfigError("backbone", "pretrained backbone requires a weights path");
    }
    return;
  }
  if (stage_dims.empty()) throw ConfigError("backbone", "stub backbone requires stage dims");
  for (std::size_t s = 0; s < stage_dims.size(); ++s) {
    const auto& d = stage_dims[s];
    if (d.grid_h < 1 || d.grid_w < 1 || d.channels < 1) {
      throw ConfigError("backbone", "stage " + std::to_string(s) + " has non-positive dims");
    }
    if (s > 0 && (d.grid_h > stage_dims[s - 1].grid_h || d.grid_w > stage_dims[s - 1].grid_w)) {
      throw ConfigError("backbone", "stage grids must shrink (or stay equal) with depth");
    }
  }
}

LocalBackbone::LocalBackbone(const BackboneSpec& spec, int input_size)
    : spec_(spec), input_size_(input_size) {
  spec_.validate();
  if (input_size < 1) throw ConfigError("backbone", "input size must be positive");

  if (spec_.kind == BackboneKind::deterministic_stub) {
    identifier_ = "stub-" + std::to_string(spec_.stub_seed);
    dims_ = spec_.stage_dims;
    for (std::size_t s = 0; s < dims_.size(); ++s) {
      const int plen = (input_size_ / dims_[s].grid_h) * (input_size_ / dims_[s].grid_w) * 3;
      Rng rng(Rng::mix(spec_.stub_seed, s));
      Eigen::MatrixXd w(plen, dims_[s].channels);
      init_normal(w, rng, 1.0 / std::sqrt(static_cast<double>(plen)));
      projections_.push_back(std::move(w));
    }
  } else {
    tensorfile::Contents file;
    try {
      file = tensorfile::load(spec_.weights_path);
    } catch (const IntegrityError&) {
      throw;
    }
    const auto& meta = file.meta;
    if (meta.value("kind", "") != std::string("backbone")) {
      throw IntegrityError("backbone", spec_.weights_path + ": not a backbone container");
    }
    identifier_ = meta.value("identifier", "pretrained");
    const int file_input = meta.value("input_size", 0);
    if (file_input != input_size_) {
      throw CompatibilityError("backbone", "weights expect input size " + std::to_string(file_input) +
                                               ", configured " + std::to_string(input_size_));
    }
    for (const auto& stage : meta.value("stages", nlohmann::json::array())) {
      dims_.push_back(StageDims{stage.at(0).get<int>(), stage.at(1).get<int>(), stage.at(2).get<int>()});
    }
    if (dims_.empty()) throw IntegrityError("backbone", spec_.weights_path + ": no stages declared");
    for (std::size_t s = 0; s < dims_.size(); ++s) {
      const auto& w = file.require("stage" + std::to_string(s) + ".weight");
      const int plen = (input_size_ / dims_[s].grid_h) * (input_size_ / dims_[s].grid_w) * 3;
      if (w.rows() != plen || w.cols() != dims_[s].channels) {
        throw IntegrityError("backbone", spec_.weights_path + ": stage " + std::to_string(s) +
                                             " weight shape mismatch");
      }
      projections_.push_back(w);
    }
  }

  for (const auto& d : dims_) {
    if (input_size_ % d.grid_h != 0 || input_size_ % d.grid_w != 0) {
      throw ConfigError("backbone", "input size " + std::to_string(input_size_) +
                                        " is not divisible by a stage grid");
    }
  }
}

LocalFeatureSet LocalBackbone::extract(const FrameTensor& frame) const {
  if (frame.height != input_size_ || frame.width != input_size_) {
    throw ConfigError("backbone", "frame is " + std::to_string(frame.height) + "x" +
                                      std::to_string(frame.width) + ", backbone expects " +
                                      std::to_string(input_size_) + "x" + std::to_string(input_size_));
  }

  LocalFeatureSet out;
  out.dims = dims_;
  for (std::size_t s = 0; s < dims_.size(); ++s) {
    const auto& d = dims_[s];
    const int ph = input_size_ / d.grid_h;
    const int pw = input_size_ / d.grid_w;
    Eigen::MatrixXd patches(d.grid_h * d.grid_w, ph * pw * 3);
    for (int gy = 0; gy < d.grid_h; ++gy) {
      for (int gx = 0; gx < d.grid_w; ++gx) {
        int col = 0;
        for (int py = 0; py < ph; ++py) {
          for (int px = 0; px < pw; ++px) {
            for (int c = 0; c < 3; ++c) {
              patches(gy * d.grid_w + gx, col++) =
                  static_cast<double>(frame.at(gy * ph + py, gx * pw + px, c));
            }
          }
        }
      }
    }
    out.stages.push_back(patches * projections_[s]);
    if (!out.stages.back().allFinite()) {
      throw NumericError("backbone", "non-finite stage features (bad input frame?)");
    }
  }
  return out;
}

}  // namespace vqa
