// Reference feature plugin: reads image paths (one per line) on stdin and
// writes an IDSF file to the path given as the first argument, using the
// toy random-projection embedder. Any program honoring the same contract can
// stand in for a pretrained network.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ids/errors.hpp"
#include "ids/feature_store.hpp"

int main(int argc, char** argv) {
  CLI::App app{"toy feature plugin"};
  std::string out;
  std::uint64_t seed = 0;
  std::size_t dim = ids::kDefaultFeatureDim;
  app.add_option("out", out, "Output IDSF path")->required();
  app.add_option("--seed", seed, "Projection seed");
  app.add_option("--dim", dim, "Feature dimension");
  CLI11_PARSE(app, argc, argv);

  try {
    std::vector<std::filesystem::path> paths;
    std::string line;
    while (std::getline(std::cin, line))
      if (!line.empty()) paths.emplace_back(line);
    ids::ToyEmbedder embedder(seed, dim);
    ids::write_features(embedder.extract(paths), out);
  } catch (const ids::Error& e) {
    std::cerr << "ids-toy-plugin: " << e.what() << '\n';
    return static_cast<int>(e.exit_code());
  }
  return 0;
}
