#pragma once

// Front post-processing: exact bi-objective hypervolume, exclusive
// contributions, knee-and-boundary selection and normalized HV series.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "cgpnas/pareto.hpp"

namespace cgpnas {

// Area dominated by `points` and bounded by `reference` (minimization).
// Points that do not strictly dominate the reference are ignored.
inline double hypervolume_2d(std::span<const ObjectiveVector> points, const ObjectiveVector& reference) {
  std::vector<ObjectiveVector> p;
  for (const auto& q : points)
    if (q.error < reference.error && q.madds < reference.madds) p.push_back(q);
  std::sort(p.begin(), p.end(), [](const ObjectiveVector& a, const ObjectiveVector& b) {
    return a.error != b.error ? a.error < b.error : a.madds < b.madds;
  });
  double area = 0.0;
  double ceiling = reference.madds;
  for (const auto& q : p) {
    if (q.madds >= ceiling) continue;
    area += (reference.error - q.error) * (ceiling - q.madds);
    ceiling = q.madds;
  }
  return area;
}

// Exclusive hypervolume contribution of each point of a mutually
// non-dominated set.
inline std::vector<double> hypervolume_contributions(std::span<const ObjectiveVector> front,
                                                     const ObjectiveVector& reference) {
  const std::size_t n = front.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (front[a].error != front[b].error) return front[a].error < front[b].error;
    if (front[a].madds != front[b].madds) return front[a].madds < front[b].madds;
    return a < b;
  });
  std::vector<double> contrib(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const auto& p = front[order[k]];
    const double right = k + 1 < n ? front[order[k + 1]].error : reference.error;
    const double top = k > 0 ? front[order[k - 1]].madds : reference.madds;
    contrib[order[k]] = std::max(0.0, right - p.error) * std::max(0.0, top - p.madds);
  }
  return contrib;
}

// Index of the member with the smallest exclusive contribution; ties go to
// the lowest index.
inline std::size_t least_contributor(std::span<const ObjectiveVector> front, const ObjectiveVector& reference) {
  const auto c = hypervolume_contributions(front, reference);
  return static_cast<std::size_t>(std::min_element(c.begin(), c.end()) - c.begin());
}

struct KneeSelection {
  std::size_t boundary_light = 0;  // lowest MAdds
  std::size_t boundary_heavy = 0;  // lowest error
  std::size_t knee = 0;
  double knee_distance = 0.0;  // in normalized space
};

// Knee-and-boundary selection over one front. Objectives are min-max
// normalized over the front; the knee is the member nearest to the point
// (error of the heavy boundary, MAdds of the light boundary). Distance ties
// go to lower error, then lower `ids` entry (index when ids are absent).
inline KneeSelection knee_and_boundary(std::span<const ObjectiveVector> front,
                                       std::span<const std::uint64_t> ids = {}) {
  if (front.empty()) throw std::invalid_argument("knee_and_boundary: empty front");
  const std::size_t n = front.size();
  auto key = [&](std::size_t i) { return ids.empty() ? static_cast<std::uint64_t>(i) : ids[i]; };
  double lo[2], hi[2];
  for (std::size_t m = 0; m < 2; ++m) {
    lo[m] = hi[m] = front[0][m];
    for (const auto& p : front) {
      lo[m] = std::min(lo[m], p[m]);
      hi[m] = std::max(hi[m], p[m]);
    }
  }
  auto norm = [&](std::size_t i, std::size_t m) {
    return hi[m] > lo[m] ? (front[i][m] - lo[m]) / (hi[m] - lo[m]) : 0.0;
  };
  KneeSelection s;
  for (std::size_t i = 1; i < n; ++i) {
    const auto& p = front[i];
    const auto& l = front[s.boundary_light];
    if (p.madds < l.madds || (p.madds == l.madds && (p.error < l.error || (p.error == l.error && key(i) < key(s.boundary_light)))))
      s.boundary_light = i;
    const auto& h = front[s.boundary_heavy];
    if (p.error < h.error || (p.error == h.error && (p.madds < h.madds || (p.madds == h.madds && key(i) < key(s.boundary_heavy)))))
      s.boundary_heavy = i;
  }
  const double ix = norm(s.boundary_heavy, 0);
  const double iy = norm(s.boundary_light, 1);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double d = std::hypot(norm(i, 0) - ix, norm(i, 1) - iy);
    const bool better = d < best ||
                        (d == best && (front[i].error < front[s.knee].error ||
                                       (front[i].error == front[s.knee].error && key(i) < key(s.knee))));
    if (better) {
      best = d;
      s.knee = i;
    }
  }
  s.knee_distance = best;
  return s;
}

struct NormalizationBounds {
  ObjectiveVector ideal;
  ObjectiveVector nadir;
};

// Component-wise best and worst over a set of evaluated points.
inline NormalizationBounds bounds_of(std::span<const ObjectiveVector> points) {
  if (points.empty()) return {};
  NormalizationBounds b{points[0], points[0]};
  for (const auto& p : points) {
    b.ideal.error = std::min(b.ideal.error, p.error);
    b.ideal.madds = std::min(b.ideal.madds, p.madds);
    b.nadir.error = std::max(b.nadir.error, p.error);
    b.nadir.madds = std::max(b.nadir.madds, p.madds);
  }
  return b;
}

// Hypervolume of a front w.r.t. the nadir, divided by the ideal-nadir box
// area so that the value lies in [0, 1].
inline double normalized_hypervolume(std::span<const ObjectiveVector> front, const NormalizationBounds& b) {
  const double box = (b.nadir.error - b.ideal.error) * (b.nadir.madds - b.ideal.madds);
  if (!(box > 0.0)) return 0.0;
  return hypervolume_2d(front, b.nadir) / box;
}

// One normalized hypervolume per archive snapshot, all against the same
// run-wide bounds.
inline std::vector<double> normalized_hv_series(const std::vector<std::vector<ObjectiveVector>>& snapshots,
                                                const NormalizationBounds& b) {
  std::vector<double> out;
  out.reserve(snapshots.size());
  for (const auto& s : snapshots) out.push_back(normalized_hypervolume(s, b));
  return out;
}

}  // namespace cgpnas
