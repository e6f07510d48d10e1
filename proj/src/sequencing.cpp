#include "dsmplan/sequencing.hpp"

#include <algorithm>

namespace dsmplan {

BoolMatrix transitive_closure(const BoolMatrix& adjacency) {
  const std::size_t n = adjacency.size();
  BoolMatrix r = adjacency;
  for (std::size_t i = 0; i < n; ++i) r.set(i, i);
  // Warshall: r(i, j) |= r(i, k) && r(k, j), reading r(i, j) as "j reaches i".
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!r(i, k)) continue;
      for (std::size_t j = 0; j < n; ++j) {
        if (r(k, j)) r.set(i, j);
      }
    }
  }
  return r;
}

BoolMatrix reachability(const Dsm& dsm) {
  const std::size_t n = dsm.size();
  BoolMatrix adjacency(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (dsm(i, j) != 0) adjacency.set(i, j);
    }
  }
  return transitive_closure(adjacency);
}

std::vector<std::string> SequencingResult::ordered_ids(const Dsm& dsm) const {
  std::vector<std::string> ids;
  ids.reserve(order.order.size());
  for (auto i : order.order) ids.push_back(dsm.id(i));
  return ids;
}

SequencingResult level_partition(const Dsm& dsm) {
  const std::size_t n = dsm.size();
  const BoolMatrix r = reachability(dsm);

  // Component representative: lowest index among mutually reachable elements.
  std::vector<std::size_t> component(n);
  for (std::size_t i = 0; i < n; ++i) {
    component[i] = i;
    for (std::size_t j = 0; j < i; ++j) {
      if (r(i, j) && r(j, i)) {
        component[i] = component[j];
        break;
      }
    }
  }

  SequencingResult result;
  result.level_of.assign(n, 0);
  result.order.order.reserve(n);
  std::vector<bool> remaining(n, true);
  std::size_t left = n;
  for (std::size_t level = 0; left > 0; ++level) {
    // An element enters this level when every remaining antecedent is also
    // reachable from it, i.e. its antecedent set within the remaining
    // elements equals its intersection with its reachable set.
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < n; ++i) {
      if (!remaining[i]) continue;
      bool top = true;
      for (std::size_t j = 0; j < n && top; ++j) {
        if (remaining[j] && r(i, j) && !r(j, i)) top = false;
      }
      if (top) members.push_back(i);
    }
    // Keep each cycle contiguous, ordered by its first member.
    std::stable_sort(members.begin(), members.end(),
                     [&](std::size_t a, std::size_t b) { return component[a] < component[b]; });

    std::vector<std::string> ids;
    for (auto i : members) {
      remaining[i] = false;
      result.level_of[i] = level;
      result.order.order.push_back(i);
      ids.push_back(dsm.id(i));
    }
    left -= members.size();
    result.levels.push_back(std::move(ids));
  }

  for (std::size_t rep = 0; rep < n; ++rep) {
    if (component[rep] != rep) continue;
    std::vector<std::string> group;
    for (std::size_t i = rep; i < n; ++i) {
      if (component[i] == rep) group.push_back(dsm.id(i));
    }
    if (group.size() > 1) result.cycles.push_back(std::move(group));
  }
  return result;
}

SequencingResult sequence(const Dsm& dsm) { return level_partition(dsm); }

}  // namespace dsmplan
