#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "vqa/frames.hpp"

namespace vqa {

struct StageDims {
  int grid_h = 0;
  int grid_w = 0;
  int channels = 0;

  bool operator==(const StageDims&) const = default;
};

enum class BackboneKind { pretrained_hierarchical_attention, deterministic_stub };

struct BackboneSpec {
  BackboneKind kind = BackboneKind::deterministic_stub;
  std::string weights_path;  // pretrained kind
  // stub kind; the default is a desk-scale two-stage pyramid
  std::vector<StageDims> stage_dims = {{8, 8, 32}, {4, 4, 64}};
  std::uint64_t stub_seed = 101;

  void validate() const;
};

// Multi-stage local features of one frame. Stage s is a (grid_h*grid_w) x
// channels matrix, cells in row-major grid order; grids shrink (or stay
// equal) with stage depth.
struct LocalFeatureSet {
  std::vector<Eigen::MatrixXd> stages;
  std::vector<StageDims> dims;
};

// Frozen patchwise feature extractor. The stub generates its projection
// weights from a seed so the whole pipeline runs without downloads; the
// pretrained kind reads the same projection structure from a tensor
// container exported elsewhere.
class LocalBackbone {
 public:
  LocalBackbone(const BackboneSpec& spec, int input_size);

  const std::vector<StageDims>& stage_dims() const { return dims_; }
  int input_size() const { return input_size_; }
  const std::string& identifier() const { return identifier_; }

  LocalFeatureSet extract(const FrameTensor& frame) const;

 private:
  BackboneSpec spec_;
  int input_size_ = 0;
  std::string identifier_;
  std::vector<StageDims> dims_;
  std::vector<Eigen::MatrixXd> projections_;  // per stage: (ph*pw*3) x channels
};

}  // namespace vqa
