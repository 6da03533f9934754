#include "templens/select.hpp"

#include <numeric>

#include "templens/hashing.hpp"

namespace templens {

DemonstrationSet select_random(const Dataset& dataset, std::size_t n,
                               std::uint64_t seed) {
  if (n > dataset.size()) {
    throw DatasetError("select_random: n=" + std::to_string(n) +
                       " exceeds dataset size " +
                       std::to_string(dataset.size()));
  }
  DemonstrationSet out;
  out.seed = static_cast<std::int64_t>(seed);
  out.source = DemonstrationSet::Source::kRandom;
  if (n == 0) return out;

  std::vector<std::size_t> indices(dataset.size());
  std::iota(indices.begin(), indices.end(), 0);
  SplitMix64 rng(named_stream(dataset.digest, "select_random", seed));
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j =
        i + static_cast<std::size_t>(rng.next_below(indices.size() - i));
    std::swap(indices[i], indices[j]);
  }
  out.demos.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Example& example = dataset.examples[indices[i]];
    out.demos.push_back(Demonstration{example.text, example.label});
  }
  return out;
}

DemonstrationSet load_demonstrations(const std::filesystem::path& path,
                                     int num_classes) {
  const Dataset parsed = load_dataset(path, num_classes);
  DemonstrationSet out;
  out.seed = DemonstrationSet::kExternalSeed;
  out.source = DemonstrationSet::Source::kFile;
  out.demos.reserve(parsed.size());
  for (const Example& example : parsed.examples) {
    out.demos.push_back(Demonstration{example.text, example.label});
  }
  return out;
}

}  // namespace templens
