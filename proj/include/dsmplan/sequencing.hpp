#pragma once

#include <string>
#include <vector>

#include "dsmplan/dsm.hpp"

namespace dsmplan {

// Dense square boolean matrix.
class BoolMatrix {
 public:
  BoolMatrix() = default;
  explicit BoolMatrix(std::size_t n) : n_(n), cells_(n * n, 0) {}

  std::size_t size() const noexcept { return n_; }
  bool operator()(std::size_t i, std::size_t j) const noexcept { return cells_[i * n_ + j] != 0; }
  void set(std::size_t i, std::size_t j, bool v = true) noexcept { cells_[i * n_ + j] = v ? 1 : 0; }

  friend bool operator==(const BoolMatrix&, const BoolMatrix&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<unsigned char> cells_;
};

// R(i, j) is true iff i == j or information flows from j to i along a chain
// of dependencies (edge j -> i whenever w(i, j) != 0).
BoolMatrix reachability(const Dsm& dsm);

// Reflexive-transitive closure of an arbitrary relation, using the same
// orientation as reachability().
BoolMatrix transitive_closure(const BoolMatrix& adjacency);

struct SequencingResult {
  // Element ids per level; level k only depends on levels before it, except
  // within its own cycles.
  std::vector<std::vector<std::string>> levels;
  // Original matrix indices in sequenced order.
  Permutation order;
  // Groups of mutually dependent elements (size >= 2), in manifest order.
  std::vector<std::vector<std::string>> cycles;

  std::vector<std::string> ordered_ids(const Dsm& dsm) const;
  // 0-based level of each original index.
  std::vector<std::size_t> level_of;
};

// Warfield-style level extraction over the reachability matrix.
SequencingResult level_partition(const Dsm& dsm);

SequencingResult sequence(const Dsm& dsm);

}  // namespace dsmplan
