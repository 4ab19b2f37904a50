#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "latent/embeddings.hpp"
#include "latent/nnindex.hpp"
#include "latent/random.hpp"

namespace fixture {

// tests/fixtures/<name>
std::string Path(const std::string& name);

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

std::string ReadFile(const std::filesystem::path& path);
void WriteFile(const std::filesystem::path& path, const std::string& text);

// n points from N(shift * e_0, I_d), ids first_id, first_id + 1, ...
latent::PointSet Gaussian(std::size_t n, std::size_t d, double shift, latent::Rng& rng,
                          latent::PointId first_id = 0);

// The fixture corpus with the fixture stopword list attached.
latent::Corpus Corpus();
latent::EmbeddingTable Vectors();

struct CliRun {
  int code = 0;
  std::string out;
  std::string err;
};

CliRun RunCli(const std::vector<std::string>& args);

// Rebuilds the argument list of a CLI output from its comment header:
// "# latent <cmd>" then one "# key=value" per parameter. Keys map to --key
// with '_' spelled '-'; "true"/"false" values become bare flags.
std::vector<std::string> ReplayArgs(const std::string& output);

// One invocation of every output-producing subcommand on the fixture files,
// each with a non-default seed.
std::vector<std::vector<std::string>> SeededPipelines();

}  // namespace fixture
