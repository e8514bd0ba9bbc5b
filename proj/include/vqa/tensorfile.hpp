#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <json.hpp>
#include <string>
#include <utility>
#include <vector>

namespace vqa::tensorfile {

// Versioned key -> tensor container: a JSON header (free-form metadata plus a
// tensor index) followed by raw little-endian float64 payloads.
struct Contents {
  nlohmann::json meta;
  std::vector<std::pair<std::string, Eigen::MatrixXd>> tensors;

  const Eigen::MatrixXd* find(const std::string& name) const;
  const Eigen::MatrixXd& require(const std::string& name) const;  // IntegrityError when absent
};

void save(const std::filesystem::path& path, const Contents& contents);
Contents load(const std::filesystem::path& path);

}  // namespace vqa::tensorfile
