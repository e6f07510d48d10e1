#pragma once

#include <string>
#include <string_view>

#include "dsmplan/dsm.hpp"
#include "dsmplan/element.hpp"
#include "dsmplan/tokenization.hpp"

namespace dsmplan {

// JSON manifest:
//   { "user_statement": "text" | {"tokens": n, "text"?: "..."},
//     "instructions":   "text" | {"tokens": n, "text"?: "..."},
//     "elements": [ {"id", "label"?, "text"?, "tokens"?, "deps"?: [ids]} ] }
//
// Element counts come from the provider. In table mode the table wins and a
// literal "tokens" is the fallback; in approximate mode a literal "tokens"
// wins over counting "text". The user statement and instructions resolve the
// same way, using the reserved table ids "user_statement" and "instructions".
ConversationModel parse_manifest(const std::string& path,
                                 const TokenCountProvider& provider = TokenCountProvider::approximate());
ConversationModel parse_manifest_text(std::string_view json,
                                      const TokenCountProvider& provider = TokenCountProvider::approximate());

Dsm parse_dsm_csv(const std::string& path);
Dsm parse_dsm_csv_text(std::string_view csv);

// Ids must match [A-Za-z0-9_-]+ so the CSV format needs no quoting.
bool is_valid_element_id(std::string_view id);

}  // namespace dsmplan
