#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dsmplan {

// One design activity of the conversation.
struct ConversationElement {
  std::string id;
  std::string label;
  std::string text;
  std::vector<std::string> dependencies;
  std::uint64_t token_count = 0;
};

struct ConversationModel {
  std::vector<ConversationElement> elements;
  std::uint64_t user_statement_tokens = 0;  // USt
  std::uint64_t instruction_tokens = 0;     // IntLLM

  std::uint64_t total_element_tokens() const;
  const ConversationElement& element(const std::string& id) const;
};

}  // namespace dsmplan
