#pragma once

#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>

namespace testutil {

inline std::filesystem::path repo_dir() { return std::filesystem::path(POLLMSTER_REPO_DIR); }
inline std::filesystem::path data_dir() { return std::filesystem::path(POLLMSTER_DATA_DIR); }
inline std::filesystem::path asset_dir() { return std::filesystem::path(POLLMSTER_ASSET_DIR); }

// Fresh scratch directory per call, removed eagerly by the caller when needed;
// everything lands under the build tree's temp area.
inline std::filesystem::path scratch_dir(const std::string& tag) {
  static std::mt19937_64 rng{std::random_device{}()};
  auto base = std::filesystem::temp_directory_path() / "pollmster-tests";
  std::filesystem::create_directories(base);
  std::filesystem::path dir;
  do {
    dir = base / (tag + "-" + std::to_string(rng()));
  } while (std::filesystem::exists(dir));
  std::filesystem::create_directories(dir);
  return dir;
}

struct ScratchDir {
  std::filesystem::path path;
  explicit ScratchDir(const std::string& tag) : path(scratch_dir(tag)) {}
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;
};

}  // namespace testutil
