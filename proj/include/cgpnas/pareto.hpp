#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

namespace cgpnas {

// (classification error, MAdds); both minimized.
struct ObjectiveVector {
  double error = 1.0;
  double madds = 0.0;

  double operator[](std::size_t i) const { return i == 0 ? error : madds; }
  friend bool operator==(const ObjectiveVector&, const ObjectiveVector&) = default;
};

inline bool dominates(const ObjectiveVector& a, const ObjectiveVector& b) {
  return a.error <= b.error && a.madds <= b.madds && (a.error < b.error || a.madds < b.madds);
}

inline bool weakly_dominates(const ObjectiveVector& a, const ObjectiveVector& b) {
  return a.error <= b.error && a.madds <= b.madds;
}

// Fast non-dominated sorting. Fronts list indices in ascending order.
inline std::vector<std::vector<std::size_t>> nondominated_sort(std::span<const ObjectiveVector> points) {
  const std::size_t n = points.size();
  std::vector<std::vector<std::size_t>> dominated(n);
  std::vector<std::size_t> dom_count(n, 0);
  std::vector<std::vector<std::size_t>> fronts;
  std::vector<std::size_t> current;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (dominates(points[i], points[j])) {
        dominated[i].push_back(j);
        ++dom_count[j];
      } else if (dominates(points[j], points[i])) {
        dominated[j].push_back(i);
        ++dom_count[i];
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    if (dom_count[i] == 0) current.push_back(i);
  while (!current.empty()) {
    std::vector<std::size_t> next;
    for (std::size_t i : current)
      for (std::size_t j : dominated[i])
        if (--dom_count[j] == 0) next.push_back(j);
    std::sort(next.begin(), next.end());
    fronts.push_back(std::move(current));
    current = std::move(next);
  }
  return fronts;
}

// Crowding distance of each member of one front. Extremes per objective get
// +infinity; interior members sum neighbour gaps normalized by the objective
// range over the front.
inline std::vector<double> crowding_distance(std::span<const ObjectiveVector> front) {
  const std::size_t n = front.size();
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(n, 0.0);
  if (n <= 2) {
    std::fill(dist.begin(), dist.end(), inf);
    return dist;
  }
  std::vector<std::size_t> order(n);
  for (std::size_t m = 0; m < 2; ++m) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    // secondary keys make the order independent of the input permutation
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (front[a][m] != front[b][m]) return front[a][m] < front[b][m];
      return front[a][1 - m] > front[b][1 - m];
    });
    const double lo = front[order.front()][m];
    const double hi = front[order.back()][m];
    dist[order.front()] = inf;
    dist[order.back()] = inf;
    if (hi <= lo) continue;
    for (std::size_t k = 1; k + 1 < n; ++k)
      dist[order[k]] += (front[order[k + 1]][m] - front[order[k - 1]][m]) / (hi - lo);
  }
  return dist;
}

struct ArchiveEntry {
  std::uint64_t id = 0;
  ObjectiveVector objectives;
  std::uint64_t params = 0;
  int generation = 0;
  bool failed = false;

  friend bool operator==(const ArchiveEntry&, const ArchiveEntry&) = default;
};

// Every non-dominated solution seen so far. Members are kept ordered by
// ascending error (so by descending MAdds).
class ElitistArchive {
 public:
  // Returns true when the entry entered the archive. Entries weakly
  // dominated by a member, including exact duplicates, are rejected.
  bool insert(const ArchiveEntry& e) {
    for (const auto& m : members_)
      if (weakly_dominates(m.objectives, e.objectives)) return false;
    std::erase_if(members_, [&](const ArchiveEntry& m) { return dominates(e.objectives, m.objectives); });
    auto pos = std::lower_bound(members_.begin(), members_.end(), e, [](const ArchiveEntry& a, const ArchiveEntry& b) {
      return a.objectives.error < b.objectives.error;
    });
    members_.insert(pos, e);
    return true;
  }

  const std::vector<ArchiveEntry>& members() const { return members_; }
  std::size_t size() const { return members_.size(); }

  std::vector<ObjectiveVector> objectives() const {
    std::vector<ObjectiveVector> out;
    for (const auto& m : members_) out.push_back(m.objectives);
    return out;
  }

 private:
  std::vector<ArchiveEntry> members_;
};

}  // namespace cgpnas
