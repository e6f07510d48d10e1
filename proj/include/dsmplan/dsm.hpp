#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "dsmplan/element.hpp"

namespace dsmplan {

using Weight = std::uint64_t;

enum class DsmKind { Binary, Numerical };

// A bijection on 0..N-1. order[k] is the original index placed at position k.
struct Permutation {
  std::vector<std::size_t> order;

  static Permutation identity(std::size_t n);
  Permutation inverse() const;
  bool is_valid(std::size_t n) const;
};

// Square dependency matrix read row-to-column: a nonzero w(i, j) means
// element i consumes information produced by element j.
class Dsm {
 public:
  Dsm() = default;

  // Validates every invariant; throws Error on violation. `element_tokens`
  // may be empty, in which case it is inferred from column values.
  Dsm(std::vector<std::string> ids, std::vector<Weight> weights, DsmKind kind,
      std::vector<std::uint64_t> element_tokens = {});

  std::size_t size() const noexcept { return ids_.size(); }
  bool empty() const noexcept { return ids_.empty(); }
  DsmKind kind() const noexcept { return kind_; }

  const std::vector<std::string>& ids() const noexcept { return ids_; }
  const std::string& id(std::size_t i) const { return ids_.at(i); }
  std::size_t index_of(const std::string& id) const;

  Weight operator()(std::size_t row, std::size_t col) const noexcept {
    return weights_[row * ids_.size() + col];
  }
  std::span<const Weight> row(std::size_t i) const {
    return {weights_.data() + i * ids_.size(), ids_.size()};
  }
  const std::vector<Weight>& weights() const noexcept { return weights_; }

  // Token count of each element. For a matrix from build_dsm these are the
  // element counts; for a parsed CSV they are recovered from the columns
  // (0 for elements nothing depends on).
  const std::vector<std::uint64_t>& element_tokens() const noexcept { return element_tokens_; }

  std::size_t nonzero_count() const;
  // Marks strictly above the diagonal (feedback marks under row-to-column reading).
  std::size_t above_diagonal_count() const;

  friend bool operator==(const Dsm&, const Dsm&) = default;

 private:
  std::vector<std::string> ids_;
  std::vector<Weight> weights_;
  DsmKind kind_ = DsmKind::Numerical;
  std::vector<std::uint64_t> element_tokens_;
};

// w(i, j) = token_count(j) when element i depends on j.
Dsm build_dsm(std::span<const ConversationElement> elements);

Dsm to_binary(const Dsm& dsm);

Dsm permute(const Dsm& dsm, const Permutation& p);

// Canonical CSV form: ",A,B\nA,,\nB,5,\n". Zero cells are written empty.
void write_csv(std::ostream& out, const Dsm& dsm);
std::string to_csv(const Dsm& dsm);

}  // namespace dsmplan
