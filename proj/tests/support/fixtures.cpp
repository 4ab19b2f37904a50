#include "fixtures.hpp"

#include <unistd.h>

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "latent/cli.hpp"
#include "latent/output.hpp"

namespace fixture {

std::string Path(const std::string& name) {
  return std::string(LATENT_FIXTURE_DIR) + "/" + name;
}

TempDir::TempDir() {
  static int counter = 0;
  const auto base = std::filesystem::temp_directory_path();
  for (;;) {
    path_ = base / ("latent-test-" + std::to_string(::getpid()) + "-" +
                    std::to_string(counter++));
    if (std::filesystem::create_directory(path_)) break;
  }
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteFile(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

latent::PointSet Gaussian(std::size_t n, std::size_t d, double shift, latent::Rng& rng,
                          latent::PointId first_id) {
  latent::PointSet set(d);
  set.Reserve(n);
  std::vector<double> row(d);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& v : row) v = rng.Normal();
    row[0] += shift;
    set.Add(first_id + static_cast<latent::PointId>(i), row);
  }
  return set;
}

latent::Corpus Corpus() {
  latent::Corpus corpus = latent::LoadCorpus(Path("corpus.jsonl"));
  corpus.stopwords = latent::LoadStopwords(Path("stopwords.txt"));
  return corpus;
}

latent::EmbeddingTable Vectors() { return latent::LoadVectors(Path("vectors.txt")); }

CliRun RunCli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  CliRun run;
  run.code = latent::RunCli(args, out, err);
  run.out = out.str();
  run.err = err.str();
  return run;
}

std::vector<std::string> ReplayArgs(const std::string& output) {
  std::istringstream in(output);
  std::string line;
  std::vector<std::string> args;
  if (!std::getline(in, line) || line.rfind("# latent ", 0) != 0) {
    throw std::runtime_error("output has no latent header");
  }
  args.push_back(line.substr(9));
  while (std::getline(in, line)) {
    if (line.rfind("# ", 0) != 0) break;
    const auto eq = line.find('=');
    if (eq == std::string::npos) break;
    const std::string key = line.substr(2, eq - 2);
    if (key.find(' ') != std::string::npos) break;  // e.g. "# fit slope=..."
    const std::string value = latent::UnescapeTsv(line.substr(eq + 1));
    std::string flag = "--" + key;
    for (auto& c : flag) {
      if (c == '_') c = '-';
    }
    if (value == "false") continue;
    args.push_back(flag);
    if (value != "true") args.push_back(value);
  }
  return args;
}

std::vector<std::vector<std::string>> SeededPipelines() {
  const std::string v = Path("vectors.txt");
  const std::string c = Path("corpus.jsonl");
  const std::string s = Path("stopwords.txt");
  const std::string p = Path("pos.tsv");
  return {
      {"embed-info", "--vectors", v, "--corpus", c, "--seed", "7"},
      {"kl", "--vectors", v, "--corpus", c, "--stopwords", s, "--size", "25", "--k", "1,3",
       "--docs", "doc_sea,doc_city", "--seed", "7"},
      {"kl-classify", "--vectors", v, "--corpus", c, "--stopwords", s, "--size", "30", "--k",
       "3,5", "--label", "genre", "--baseline", "--smoothing", "laplace", "--seed", "7"},
      {"zipf-words", "--corpus", c, "--min-rank", "2", "--seed", "7"},
      {"zipf-clusters", "--vectors", v, "--corpus", c, "--k", "6", "--seed", "7"},
      {"zipf-clusters", "--vectors", v, "--corpus", c, "--k", "4", "--inspect", "2", "--seed",
       "7"},
      {"k-sweep", "--vectors", v, "--corpus", c, "--k-center", "12", "--seed", "7"},
      {"pos-neighbors", "--vectors", v, "--pos", p, "--k", "1,3,5", "--seed", "7"},
      {"pos-neighbors", "--pos", p, "--corpus", c, "--stats", "--seed", "7"},
      {"suggest", "--vectors", v, "--corpus", c, "--stopwords", s, "--algorithm", "wmd",
       "--t", "4", "--query", "Storm over the harbor", "--query-id", "doc_city-03", "--seed",
       "7"},
      {"suggest", "--vectors", v, "--corpus", c, "--stopwords", s, "--no-query-words",
       "--fill-zero-rounds", "--r", "2", "--query", "owl", "--seed", "7"},
      {"variety", "--vectors", v, "--corpus", c, "--stopwords", s, "--queries", "20", "--t",
       "3", "--seed", "7"},
  };
}

}  // namespace fixture
