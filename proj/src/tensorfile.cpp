#include "vqa/tensorfile.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "vqa/errors.hpp"

namespace vqa::tensorfile {

namespace {

constexpr char kMagic[4] = {'V', 'Q', 'T', 'F'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in, const std::string& path) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (in.gcount() != sizeof(T)) throw IntegrityError("tensorfile", path + ": unexpected end of file");
  return v;
}

}  // namespace

const Eigen::MatrixXd* Contents::find(const std::string& name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return &t;
  }
  return nullptr;
}

const Eigen::MatrixXd& Contents::require(const std::string& name) const {
  const auto* t = find(name);
  if (!t) throw IntegrityError("tensorfile", "missing tensor '" + name + "'");
  return *t;
}

void save(const std::filesystem::path& path, const Contents& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("tensorfile", "cannot write " + path.string());

  nlohmann::json header;
  header["meta"] = contents.meta;
  auto& index = header["tensors"] = nlohmann::json::array();
  for (const auto& [name, tensor] : contents.tensors) {
    index.push_back({{"name", name}, {"rows", tensor.rows()}, {"cols", tensor.cols()}});
  }
  const std::string header_str = header.dump();

  out.write(kMagic, 4);
  write_pod(out, kVersion);
  write_pod(out, static_cast<std::uint64_t>(header_str.size()));
  out.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
  for (const auto& [name, tensor] : contents.tensors) {
    // Eigen default storage is column-major; stream the coefficients directly
    out.write(reinterpret_cast<const char*>(tensor.data()),
              static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(tensor.size())));
  }
  if (!out) throw IoError("tensorfile", "write failed for " + path.string());
}

Contents load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("tensorfile", "cannot open " + path.string());
  const std::string p = path.string();

  char magic[4];
  in.read(magic, 4);
  if (in.gcount() != 4 || std::memcmp(magic, kMagic, 4) != 0) {
    throw IntegrityError("tensorfile", p + ": bad magic");
  }
  const auto version = read_pod<std::uint32_t>(in, p);
  if (version != kVersion) {
    throw IntegrityError("tensorfile", p + ": unsupported version " + std::to_string(version));
  }
  const auto header_len = read_pod<std::uint64_t>(in, p);
  if (header_len > (1ULL << 30)) throw IntegrityError("tensorfile", p + ": implausible header size");
  std::string header_str(header_len, '\0');
  in.read(header_str.data(), static_cast<std::streamsize>(header_len));
  if (in.gcount() != static_cast<std::streamsize>(header_len)) {
    throw IntegrityError("tensorfile", p + ": truncated header");
  }

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_str);
  } catch (const nlohmann::json::exception& e) {
    throw IntegrityError("tensorfile", p + ": corrupt header: " + e.what());
  }

  Contents contents;
  contents.meta = header.value("meta", nlohmann::json::object());
  if (!header.contains("tensors") || !header["tensors"].is_array()) {
    throw IntegrityError("tensorfile", p + ": missing tensor index");
  }
  for (const auto& entry : header["tensors"]) {
    if (!entry.contains("name") || !entry.contains("rows") || !entry.contains("cols")) {
      throw IntegrityError("tensorfile", p + ": malformed tensor index entry");
    }
    const auto rows = entry["rows"].get<long>();
    const auto cols = entry["cols"].get<long>();
    if (rows < 0 || cols < 0 || rows * cols > (1L << 28)) {
      throw IntegrityError("tensorfile", p + ": implausible tensor shape");
    }
    Eigen::MatrixXd t(rows, cols);
    in.read(reinterpret_cast<char*>(t.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(t.size())));
    if (in.gcount() != static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(t.size()))) {
      throw IntegrityError("tensorfile", p + ": truncated tensor '" + entry["name"].get<std::string>() + "'");
    }
    contents.tensors.emplace_back(entry["name"].get<std::string>(), std::move(t));
  }
  in.peek();
  if (!in.eof()) throw IntegrityError("tensorfile", p + ": trailing bytes after payload");
  return contents;
}

}  // namespace vqa::tensorfile
