#include "boxuq/jaccard.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace boxuq {

namespace {

void check_pair(const DiscreteDistribution& p, const DiscreteDistribution& q) {
  p.validate();
  q.validate();
  if (p.masses.size() != q.masses.size()) {
    throw std::invalid_argument("distributions use different supports");
  }
}

int count_cells(const DiscreteDistribution& p, const DiscreteDistribution& q,
                bool intersect) {
  int n = 0;
  for (size_t i = 0; i < p.masses.size(); ++i) {
    const bool in_p = p.masses[i] > 0.0;
    const bool in_q = q.masses[i] > 0.0;
    n += intersect ? (in_p && in_q) : (in_p || in_q);
  }
  return n;
}

}  // namespace

void DiscreteDistribution::validate() const {
  bool any = false;
  for (double m : masses) {
    if (!(m >= 0.0) || !std::isfinite(m)) {
      throw std::invalid_argument("masses must be finite and non-negative");
    }
    any = any || m > 0.0;
  }
  if (!any) throw std::invalid_argument("distribution has no positive mass");
}

JiouResult jaccard_naive(const DiscreteDistribution& p,
                         const DiscreteDistribution& q) {
  check_pair(p, q);
  const size_t n = p.masses.size();
  JiouResult out;
  out.intersection_cells = count_cells(p, q, true);
  out.union_cells = count_cells(p, q, false);
  long double value = 0.0L;
  for (size_t i = 0; i < n; ++i) {
    const double pi = p.masses[i];
    const double qi = q.masses[i];
    if (pi <= 0.0 || qi <= 0.0) continue;
    long double denom = 0.0L;
    for (size_t j = 0; j < n; ++j) {
      const double pj = p.masses[j];
      const double qj = q.masses[j];
      if (pj <= 0.0 && qj <= 0.0) continue;
      denom += std::max(static_cast<long double>(pj) / pi,
                        static_cast<long double>(qj) / qi);
    }
    value += 1.0L / denom;
  }
  out.value = static_cast<double>(value);
  return out;
}

JiouResult jaccard_fast(const DiscreteDistribution& p,
                        const DiscreteDistribution& q) {
  check_pair(p, q);
  JiouResult out;
  std::vector<int> support;
  support.reserve(p.masses.size());
  for (size_t i = 0; i < p.masses.size(); ++i) {
    if (p.masses[i] > 0.0 || q.masses[i] > 0.0) {
      support.push_back(static_cast<int>(i));
    }
  }
  out.union_cells = static_cast<int>(support.size());

  // Ascending by q_i/p_i without forming the quotient: q_a/p_a < q_b/p_b
  // iff q_a*p_b < q_b*p_a for non-negative masses, with p = 0 reading as
  // an infinite ratio. Ties keep cell-index order.
  std::sort(support.begin(), support.end(), [&](int a, int b) {
    const double lhs = q.masses[a] * p.masses[b];
    const double rhs = q.masses[b] * p.masses[a];
    if (lhs != rhs) return lhs < rhs;
    return a < b;
  });

  const size_t n = support.size();
  std::vector<long double> prefix_p(n + 1, 0.0L), suffix_q(n + 1, 0.0L);
  for (size_t t = 0; t < n; ++t) {
    prefix_p[t + 1] = prefix_p[t] + p.masses[support[t]];
  }
  for (size_t t = n; t-- > 0;) {
    suffix_q[t] = suffix_q[t + 1] + q.masses[support[t]];
  }

  long double value = 0.0L;
  for (size_t t = 0; t < n; ++t) {
    const double pi = p.masses[support[t]];
    const double qi = q.masses[support[t]];
    if (pi <= 0.0 || qi <= 0.0) continue;
    ++out.intersection_cells;
    const long double denom = prefix_p[t + 1] / pi + suffix_q[t + 1] / qi;
    value += 1.0L / denom;
  }
  out.value = static_cast<double>(value);
  return out;
}

JiouResult jiou_grids(const SpatialGrid& a, const SpatialGrid& b,
                      const JiouGridOptions& opts) {
  a.spec.validate();
  b.spec.validate();
  const double res = std::min(a.spec.resolution, b.spec.resolution);
  const Eigen::Vector2d lo = a.spec.origin.cwiseMin(b.spec.origin);
  const Eigen::Vector2d hi = a.spec.max_corner().cwiseMax(b.spec.max_corner());
  GridSpec target;
  target.resolution = res;
  target.origin = lo;
  target.width = static_cast<int>(std::ceil((hi.x() - lo.x()) / res - 1e-9));
  target.height = static_cast<int>(std::ceil((hi.y() - lo.y()) / res - 1e-9));
  target.validate();

  const auto resample = [&](const SpatialGrid& g) {
    DiscreteDistribution d;
    d.masses.assign(static_cast<size_t>(target.cell_count()), 0.0);
    const double floor_mass = opts.support_floor * g.peak();
    for (int iy = 0; iy < target.height; ++iy) {
      for (int ix = 0; ix < target.width; ++ix) {
        const Eigen::Vector2d c = target.cell_center(ix, iy);
        const int sx = static_cast<int>(
            std::floor((c.x() - g.spec.origin.x()) / g.spec.resolution));
        const int sy = static_cast<int>(
            std::floor((c.y() - g.spec.origin.y()) / g.spec.resolution));
        if (sx < 0 || sy < 0 || sx >= g.spec.width || sy >= g.spec.height) {
          continue;
        }
        const double v = g.at(sx, sy);
        if (v > floor_mass) {
          d.masses[static_cast<size_t>(iy) * target.width + ix] = v;
        }
      }
    }
    return d;
  };

  const DiscreteDistribution pa = resample(a);
  const DiscreteDistribution pb = resample(b);
  // Disjoint positive supports are a valid zero, not an input error.
  JiouResult probe;
  for (size_t i = 0; i < pa.masses.size(); ++i) {
    if (pa.masses[i] > 0.0 && pb.masses[i] > 0.0) {
      ++probe.intersection_cells;
    }
    if (pa.masses[i] > 0.0 || pb.masses[i] > 0.0) ++probe.union_cells;
  }
  if (probe.intersection_cells == 0) return probe;
  return jaccard_fast(pa, pb);
}

JiouResult jiou_box_vs_posterior(const BoxParams& box,
                                 const LabelPosterior& posterior,
                                 const GridSpec& spec,
                                 const RasterOptions& opts) {
  const SpatialGrid box_grid =
      rasterize_pg(LabelPosterior::delta(box), spec, opts);
  const SpatialGrid post_grid = rasterize_pg(posterior, spec, opts);
  return jiou_grids(box_grid, post_grid);
}

JiouResult jiou_box_vs_posterior(const BoxParams& box,
                                 const LabelPosterior& posterior,
                                 double resolution,
                                 const RasterOptions& opts) {
  const GridSpec post_spec =
      default_grid_spec(posterior, resolution, opts.samples, opts.seed);
  Eigen::AlignedBox2d rect(post_spec.origin, post_spec.max_corner());
  for (const auto& corner : box_corners_bev(box)) rect.extend(corner);
  return jiou_box_vs_posterior(
      box, posterior, GridSpec::cover(rect.min(), rect.max(), resolution),
      opts);
}

}  // namespace boxuq
