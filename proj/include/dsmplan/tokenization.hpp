#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "dsmplan/element.hpp"

namespace dsmplan {

// Maximal runs of alphanumeric code points plus one per remaining
// non-whitespace code point. Letters, combining marks and numbers (Unicode
// general categories L, M, N) are alphanumeric. Each invalid UTF-8 sequence
// counts as one symbol.
std::uint64_t count_tokens_approx(std::string_view text);

using TokenTable = std::map<std::string, std::uint64_t>;

class TokenCountProvider {
 public:
  enum class Mode { Approximate, Table };

  static TokenCountProvider approximate() { return TokenCountProvider(); }
  static TokenCountProvider from_table(TokenTable table) { return TokenCountProvider(std::move(table)); }
  // Loads an `id,tokens` CSV.
  static TokenCountProvider from_table_file(const std::string& path);

  Mode mode() const noexcept { return table_ ? Mode::Table : Mode::Approximate; }
  const std::optional<TokenTable>& table() const noexcept { return table_; }

  std::optional<std::uint64_t> lookup(const std::string& id) const;

 private:
  TokenCountProvider() = default;
  explicit TokenCountProvider(TokenTable table) : table_(std::move(table)) {}

  std::optional<TokenTable> table_;
};

// Table mode returns the table entry (MissingTableEntry if absent);
// approximate mode counts the element text.
std::uint64_t count_for_element(const ConversationElement& element, const TokenCountProvider& provider);

TokenTable parse_token_table(std::string_view csv);

}  // namespace dsmplan
