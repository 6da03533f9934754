#pragma once

// Demonstration selection: the seeded random baseline plus ingestion of
// externally computed demonstration sets. Order is data here - draws keep
// their draw order, files keep their line order, nothing is re-sorted.

#include <cstdint>
#include <filesystem>
#include <vector>

#include "templens/dataset.hpp"
#include "templens/render.hpp"

namespace templens {

struct DemonstrationSet {
  std::vector<Demonstration> demos;
  std::int64_t seed = 0;  // kExternalSeed when loaded from a file
  enum class Source { kRandom, kFile } source = Source::kRandom;

  static constexpr std::int64_t kExternalSeed = -1;
};

/// n examples drawn uniformly without replacement, in draw order. The draw
/// stream is keyed by (dataset digest, seed) so reproducibility follows the
/// dataset content, not its path. No class balancing.
DemonstrationSet select_random(const Dataset& dataset, std::size_t n,
                               std::uint64_t seed);

/// Reads a demonstration file (dataset schema) preserving record order.
DemonstrationSet load_demonstrations(const std::filesystem::path& path,
                                     int num_classes);

}  // namespace templens
