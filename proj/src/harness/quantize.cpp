#include "gccg/harness/quantize.hpp"

#include <limits>
#include <string>

#include "gccg/errors.hpp"
#include "gccg/random.hpp"

namespace gccg::harness {

namespace {

double dist2(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

}  // namespace

int nearest_centroid(const std::vector<std::vector<double>>& centroids, const std::vector<double>& row) {
  int best = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    if (centroids[c].size() != row.size())
      throw DimensionMismatch("feature has " + std::to_string(row.size()) + " dimensions, centroids " +
                              std::to_string(centroids[c].size()));
    const double d = dist2(centroids[c], row);
    if (d < bd) {
      bd = d;
      best = static_cast<int>(c);
    }
  }
  return best;
}

Quantization quantize_features(const std::vector<std::vector<double>>& rows, int k, std::uint64_t seed,
                               int iterations) {
  if (rows.empty()) throw DataError("no feature rows to quantize");
  if (k < 1) throw DataError("quantization needs k >= 1");
  const std::size_t dim = rows[0].size();
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (rows[i].size() != dim)
      throw DimensionMismatch("feature row " + std::to_string(i) + " has " + std::to_string(rows[i].size()) +
                              " dimensions, expected " + std::to_string(dim));

  Quantization q;
  Rng rng = make_rng(seed);
  q.centroids.push_back(rows[uniform_index(rng, rows.size())]);
  std::vector<double> d(rows.size(), std::numeric_limits<double>::infinity());
  while (q.centroids.size() < static_cast<std::size_t>(k)) {
    std::size_t far = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      d[i] = std::min(d[i], dist2(rows[i], q.centroids.back()));
      if (d[i] > d[far]) far = i;
    }
    q.centroids.push_back(rows[far]);
  }

  q.symbols.assign(rows.size(), -1);
  for (int it = 0; it < iterations; ++it) {
    bool changed = false;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const int c = nearest_centroid(q.centroids, rows[i]);
      changed |= c != q.symbols[i];
      q.symbols[i] = c;
    }
    if (!changed) break;
    std::vector<std::vector<double>> sum(static_cast<std::size_t>(k), std::vector<double>(dim, 0.0));
    std::vector<std::size_t> n(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto c = static_cast<std::size_t>(q.symbols[i]);
      ++n[c];
      for (std::size_t j = 0; j < dim; ++j) sum[c][j] += rows[i][j];
    }
    for (std::size_t c = 0; c < n.size(); ++c)
      if (n[c] > 0)  // an empty cluster keeps its centroid
        for (std::size_t j = 0; j < dim; ++j) q.centroids[c][j] = sum[c][j] / static_cast<double>(n[c]);
  }
  // assignments must match the returned centroids when the cap was hit
  for (std::size_t i = 0; i < rows.size(); ++i) q.symbols[i] = nearest_centroid(q.centroids, rows[i]);
  return q;
}

}  // namespace gccg::harness
