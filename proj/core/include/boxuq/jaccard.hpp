#pragma once

#include "boxuq/spatial.hpp"

namespace boxuq {

// Masses on a shared support lattice; zero entries are outside the support.
struct DiscreteDistribution {
  std::vector<double> masses;

  void validate() const;  // throws unless finite, >= 0, at least one positive
};

struct JiouResult {
  double value = 0.0;
  int intersection_cells = 0;
  int union_cells = 0;
};

// Probabilistic Jaccard index: sum over cells i in both supports of
// 1 / sum_j max(p_j/p_i, q_j/q_i), j over the union support. Quadratic
// reference implementation.
JiouResult jaccard_naive(const DiscreteDistribution& p,
                         const DiscreteDistribution& q);

// Same value via one sort of the union support by the ratio q_j/p_j
// (p_j = 0 sorts last, q_j = 0 first, ties by cell index) and prefix/suffix
// sums; O(n log n).
JiouResult jaccard_fast(const DiscreteDistribution& p,
                        const DiscreteDistribution& q);

struct JiouGridOptions {
  // Cells below support_floor * peak count as zero mass.
  double support_floor = 1e-6;
};

// Resamples both grids onto their union lattice at the finer resolution
// (nearest cell), applies the support floor, and runs jaccard_fast.
JiouResult jiou_grids(const SpatialGrid& a, const SpatialGrid& b,
                      const JiouGridOptions& opts = {});

// JIoU between a deterministic box (uniform density) and the posterior's
// spatial density, rasterized on a shared grid.
JiouResult jiou_box_vs_posterior(const BoxParams& box,
                                 const LabelPosterior& posterior,
                                 const GridSpec& spec,
                                 const RasterOptions& opts = {});
// Same, on a lattice-aligned grid sized to hold both supports.
JiouResult jiou_box_vs_posterior(const BoxParams& box,
                                 const LabelPosterior& posterior,
                                 double resolution,
                                 const RasterOptions& opts = {});

}  // namespace boxuq
