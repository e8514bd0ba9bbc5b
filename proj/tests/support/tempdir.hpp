#pragma once

#include <filesystem>
#include <fstream>
#include <string>

namespace vqa::testsupport {

struct TempDir {
  std::filesystem::path path;

  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() / ("vqa_" + tag + "_" + std::to_string(counter()++));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::filesystem::path write(const std::string& name, const std::string& contents) const {
    const auto p = path / name;
    std::ofstream out(p, std::ios::binary);
    out << contents;
    return p;
  }

 private:
  static int& counter() {
    static int c = 0;
    return c;
  }
};

}  // namespace vqa::testsupport
