#include "dsmplan/element.hpp"

#include <numeric>

#include "dsmplan/error.hpp"

namespace dsmplan {

std::uint64_t ConversationModel::total_element_tokens() const {
  return std::accumulate(elements.begin(), elements.end(), std::uint64_t{0},
                         [](std::uint64_t acc, const ConversationElement& e) { return acc + e.token_count; });
}

const ConversationElement& ConversationModel::element(const std::string& id) const {
  for (const auto& e : elements) {
    if (e.id == id) return e;
  }
  throw Error(ErrorCode::UnknownDependency, id, "unknown element id '" + id + "'");
}

}  // namespace dsmplan
