#pragma once

#include <cstdint>
#include <vector>

namespace gccg::harness {

struct Quantization {
  std::vector<int> symbols;                  // one per row
  std::vector<std::vector<double>> centroids;  // k rows
};

/// Lloyd's k-means with a seeded farthest-point start and a fixed cap of
/// `iterations`. Assignment ties go to the lowest centroid. Throws
/// DimensionMismatch for ragged rows, DataError for no rows or k < 1.
Quantization quantize_features(const std::vector<std::vector<double>>& rows, int k, std::uint64_t seed,
                               int iterations = 50);

/// Nearest centroid, ties to the lowest index.
int nearest_centroid(const std::vector<std::vector<double>>& centroids, const std::vector<double>& row);

}  // namespace gccg::harness
