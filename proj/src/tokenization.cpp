#include "dsmplan/tokenization.hpp"

#include <unicode/uchar.h>
#include <unicode/utf8.h>

#include "dsmplan/error.hpp"
#include "text_io.hpp"

namespace dsmplan {

namespace {

bool is_alphanumeric(UChar32 c) {
  return (U_GET_GC_MASK(c) & (U_GC_L_MASK | U_GC_M_MASK | U_GC_N_MASK)) != 0;
}

}  // namespace

std::uint64_t count_tokens_approx(std::string_view text) {
  const auto* bytes = reinterpret_cast<const std::uint8_t*>(text.data());
  const auto length = static_cast<std::int32_t>(text.size());
  std::uint64_t count = 0;
  bool in_run = false;
  std::int32_t offset = 0;
  while (offset < length) {
    UChar32 c;
    U8_NEXT(bytes, offset, length, c);
    if (c >= 0 && is_alphanumeric(c)) {
      if (!in_run) ++count;
      in_run = true;
      continue;
    }
    in_run = false;
    if (c < 0 || !u_isUWhiteSpace(c)) ++count;
  }
  return count;
}

TokenCountProvider TokenCountProvider::from_table_file(const std::string& path) {
  return from_table(parse_token_table(detail::read_file(path)));
}

std::optional<std::uint64_t> TokenCountProvider::lookup(const std::string& id) const {
  if (!table_) return std::nullopt;
  auto it = table_->find(id);
  if (it == table_->end()) return std::nullopt;
  return it->second;
}

std::uint64_t count_for_element(const ConversationElement& element, const TokenCountProvider& provider) {
  if (provider.mode() == TokenCountProvider::Mode::Approximate) return count_tokens_approx(element.text);
  if (auto n = provider.lookup(element.id)) return *n;
  throw Error(ErrorCode::MissingTableEntry, element.id, "token table has no entry for '" + element.id + "'");
}

TokenTable parse_token_table(std::string_view csv) {
  const auto lines = detail::split_lines(csv);
  if (lines.empty() || detail::split_csv_row(lines[0]) != std::vector<std::string>{"id", "tokens"}) {
    throw Error(ErrorCode::ParseError, "1", "line 1: token table header must be 'id,tokens'");
  }
  TokenTable table;
  for (std::size_t n = 1; n < lines.size(); ++n) {
    const std::string line_no = std::to_string(n + 1);
    if (lines[n].empty()) continue;
    const auto cells = detail::split_csv_row(lines[n]);
    if (cells.size() != 2 || cells[0].empty()) {
      throw Error(ErrorCode::ParseError, line_no, "line " + line_no + ": expected 'id,tokens'");
    }
    auto value = detail::parse_count(cells[1]);
    if (!value) throw Error(ErrorCode::ParseError, line_no, "line " + line_no + ": invalid token count '" + cells[1] + "'");
    if (!table.emplace(cells[0], *value).second) {
      throw Error(ErrorCode::DuplicateId, cells[0], "line " + line_no + ": duplicate id '" + cells[0] + "'");
    }
  }
  return table;
}

}  // namespace dsmplan
