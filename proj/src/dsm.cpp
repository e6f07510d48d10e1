#include "dsmplan/dsm.hpp"

#include <algorithm>
#include <ostream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "dsmplan/error.hpp"

namespace dsmplan {

Permutation Permutation::identity(std::size_t n) {
  Permutation p;
  p.order.resize(n);
  for (std::size_t i = 0; i < n; ++i) p.order[i] = i;
  return p;
}

Permutation Permutation::inverse() const {
  Permutation inv;
  inv.order.resize(order.size());
  for (std::size_t k = 0; k < order.size(); ++k) inv.order[order[k]] = k;
  return inv;
}

bool Permutation::is_valid(std::size_t n) const {
  if (order.size() != n) return false;
  std::vector<bool> seen(n, false);
  for (auto i : order) {
    if (i >= n || seen[i]) return false;
    seen[i] = true;
  }
  return true;
}

Dsm::Dsm(std::vector<std::string> ids, std::vector<Weight> weights, DsmKind kind,
         std::vector<std::uint64_t> element_tokens)
    : ids_(std::move(ids)),
      weights_(std::move(weights)),
      kind_(kind),
      element_tokens_(std::move(element_tokens)) {
  const std::size_t n = ids_.size();
  if (weights_.size() != n * n) {
    throw Error(ErrorCode::NonSquare, "",
                "matrix has " + std::to_string(weights_.size()) + " cells for " +
                    std::to_string(n) + " elements");
  }
  std::unordered_set<std::string> seen;
  for (const auto& id : ids_) {
    if (!seen.insert(id).second) throw Error(ErrorCode::DuplicateId, id, "duplicate element id '" + id + "'");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if ((*this)(i, i) != 0) {
      throw Error(ErrorCode::NonzeroDiagonal, ids_[i], "nonzero diagonal entry for '" + ids_[i] + "'");
    }
  }
  if (kind_ == DsmKind::Binary) {
    for (auto w : weights_) {
      if (w > 1) throw Error(ErrorCode::InvalidParameter, "", "binary matrix holds a weight other than 0 or 1");
    }
  }
  if (element_tokens_.empty()) {
    element_tokens_.assign(n, 0);
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t i = 0; i < n; ++i) element_tokens_[j] = std::max(element_tokens_[j], (*this)(i, j));
    }
  } else if (element_tokens_.size() != n) {
    throw Error(ErrorCode::LengthMismatch, "", "token vector length differs from element count");
  }
}

std::size_t Dsm::index_of(const std::string& id) const {
  auto it = std::find(ids_.begin(), ids_.end(), id);
  if (it == ids_.end()) throw Error(ErrorCode::UnknownDependency, id, "unknown element id '" + id + "'");
  return static_cast<std::size_t>(it - ids_.begin());
}

std::size_t Dsm::nonzero_count() const {
  return static_cast<std::size_t>(std::count_if(weights_.begin(), weights_.end(), [](Weight w) { return w != 0; }));
}

std::size_t Dsm::above_diagonal_count() const {
  std::size_t count = 0;
  for (std::size_t i = 0; i < size(); ++i) {
    for (std::size_t j = i + 1; j < size(); ++j) count += (*this)(i, j) != 0;
  }
  return count;
}

Dsm build_dsm(std::span<const ConversationElement> elements) {
  const std::size_t n = elements.size();
  std::unordered_map<std::string, std::size_t> index;
  std::vector<std::string> ids;
  std::vector<std::uint64_t> tokens;
  ids.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& id = elements[i].id;
    if (!index.emplace(id, i).second) throw Error(ErrorCode::DuplicateId, id, "duplicate element id '" + id + "'");
    ids.push_back(id);
    tokens.push_back(elements[i].token_count);
  }

  std::vector<Weight> weights(n * n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& dep : elements[i].dependencies) {
      if (dep == elements[i].id) {
        throw Error(ErrorCode::SelfDependency, dep, "element '" + dep + "' depends on itself");
      }
      auto it = index.find(dep);
      if (it == index.end()) {
        throw Error(ErrorCode::UnknownDependency, dep,
                    "element '" + elements[i].id + "' depends on unknown element '" + dep + "'");
      }
      // A zero-token provider still has to leave a mark.
      weights[i * n + it->second] = std::max<Weight>(1, tokens[it->second]);
    }
  }
  return Dsm(std::move(ids), std::move(weights), DsmKind::Numerical, std::move(tokens));
}

Dsm to_binary(const Dsm& dsm) {
  std::vector<Weight> weights = dsm.weights();
  for (auto& w : weights) w = w != 0 ? 1 : 0;
  return Dsm(dsm.ids(), std::move(weights), DsmKind::Binary, dsm.element_tokens());
}

Dsm permute(const Dsm& dsm, const Permutation& p) {
  const std::size_t n = dsm.size();
  if (p.order.size() != n) {
    throw Error(ErrorCode::LengthMismatch, "",
                "permutation length " + std::to_string(p.order.size()) + " differs from matrix size " +
                    std::to_string(n));
  }
  if (!p.is_valid(n)) throw Error(ErrorCode::InvalidParameter, "", "permutation is not a bijection");

  std::vector<std::string> ids(n);
  std::vector<std::uint64_t> tokens(n);
  std::vector<Weight> weights(n * n);
  for (std::size_t a = 0; a < n; ++a) {
    ids[a] = dsm.id(p.order[a]);
    tokens[a] = dsm.element_tokens()[p.order[a]];
    for (std::size_t b = 0; b < n; ++b) weights[a * n + b] = dsm(p.order[a], p.order[b]);
  }
  return Dsm(std::move(ids), std::move(weights), dsm.kind(), std::move(tokens));
}

void write_csv(std::ostream& out, const Dsm& dsm) {
  for (const auto& id : dsm.ids()) out << ',' << id;
  out << '\n';
  for (std::size_t i = 0; i < dsm.size(); ++i) {
    out << dsm.id(i);
    for (std::size_t j = 0; j < dsm.size(); ++j) {
      out << ',';
      if (dsm(i, j) != 0) out << dsm(i, j);
    }
    out << '\n';
  }
}

std::string to_csv(const Dsm& dsm) {
  std::ostringstream out;
  write_csv(out, dsm);
  return out.str();
}

}  // namespace dsmplan
