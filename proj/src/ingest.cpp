#include "dsmplan/ingest.hpp"

#include <algorithm>
#include <json.hpp>
#include <unordered_set>

#include "dsmplan/error.hpp"
#include "text_io.hpp"

namespace dsmplan {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw Error(ErrorCode::ParseError, where, where + ": " + what);
}

[[noreturn]] void fail_line(const std::string& line, const std::string& what) {
  throw Error(ErrorCode::ParseError, line, "line " + line + ": " + what);
}

std::uint64_t read_count(const json& value, const std::string& where) {
  if (!value.is_number_integer() || value.get<std::int64_t>() < 0) fail(where, "expected a non-negative integer");
  return value.get<std::uint64_t>();
}

std::string read_string(const json& value, const std::string& where) {
  if (!value.is_string()) fail(where, "expected a string");
  return value.get<std::string>();
}

// user_statement / instructions
std::uint64_t resolve_side_text(const json& root, const char* key, const TokenCountProvider& provider) {
  if (!root.contains(key) || root[key].is_null()) return 0;
  const json& value = root[key];
  std::optional<std::uint64_t> literal;
  std::string text;
  if (value.is_string()) {
    text = value.get<std::string>();
  } else if (value.is_object()) {
    if (value.contains("tokens")) literal = read_count(value["tokens"], std::string(key) + ".tokens");
    if (value.contains("text")) text = read_string(value["text"], std::string(key) + ".text");
  } else {
    fail(key, "expected a string or an object with 'tokens'");
  }
  if (literal) return *literal;
  if (auto n = provider.lookup(key)) return *n;
  return count_tokens_approx(text);
}

}  // namespace

bool is_valid_element_id(std::string_view id) {
  return !id.empty() && std::all_of(id.begin(), id.end(), [](char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
  });
}

ConversationModel parse_manifest(const std::string& path, const TokenCountProvider& provider) {
  return parse_manifest_text(detail::read_file(path), provider);
}

ConversationModel parse_manifest_text(std::string_view text, const TokenCountProvider& provider) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto upto = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
    const auto line_no = std::to_string(line);
    throw Error(ErrorCode::ParseError, line_no, "line " + line_no + ": malformed JSON (" + e.what() + ")");
  }
  if (!root.is_object()) fail("manifest", "top level must be an object");
  if (!root.contains("elements") || !root["elements"].is_array()) fail("elements", "missing 'elements' array");

  ConversationModel model;
  model.user_statement_tokens = resolve_side_text(root, "user_statement", provider);
  model.instruction_tokens = resolve_side_text(root, "instructions", provider);

  std::unordered_set<std::string> ids;
  const auto& elements = root["elements"];
  for (std::size_t i = 0; i < elements.size(); ++i) {
    const std::string where = "elements[" + std::to_string(i) + "]";
    const json& item = elements[i];
    if (!item.is_object()) fail(where, "expected an object");
    if (!item.contains("id")) fail(where + ".id", "missing");

    ConversationElement element;
    element.id = read_string(item["id"], where + ".id");
    if (!is_valid_element_id(element.id)) fail(where + ".id", "id '" + element.id + "' must match [A-Za-z0-9_-]+");
    if (!ids.insert(element.id).second) {
      throw Error(ErrorCode::DuplicateId, element.id, where + ": duplicate element id '" + element.id + "'");
    }
    element.label = item.contains("label") ? read_string(item["label"], where + ".label") : element.id;
    if (item.contains("text")) element.text = read_string(item["text"], where + ".text");
    if (item.contains("deps")) {
      if (!item["deps"].is_array()) fail(where + ".deps", "expected an array of ids");
      for (std::size_t d = 0; d < item["deps"].size(); ++d) {
        element.dependencies.push_back(read_string(item["deps"][d], where + ".deps[" + std::to_string(d) + "]"));
      }
    }

    std::optional<std::uint64_t> literal;
    if (item.contains("tokens")) literal = read_count(item["tokens"], where + ".tokens");
    if (provider.mode() == TokenCountProvider::Mode::Table) {
      auto tabled = provider.lookup(element.id);
      if (!tabled && !literal) {
        throw Error(ErrorCode::MissingTokenCount, element.id,
                    where + ": no token count for '" + element.id + "' in the table or manifest");
      }
      element.token_count = tabled ? *tabled : *literal;
    } else if (literal) {
      element.token_count = *literal;
    } else if (item.contains("text")) {
      element.token_count = count_tokens_approx(element.text);
    } else {
      throw Error(ErrorCode::MissingTokenCount, element.id, where + ": element '" + element.id + "' has neither text nor tokens");
    }
    model.elements.push_back(std::move(element));
  }

  for (const auto& element : model.elements) {
    for (const auto& dep : element.dependencies) {
      if (dep == element.id) {
        throw Error(ErrorCode::SelfDependency, dep, "element '" + dep + "' depends on itself");
      }
      if (!ids.contains(dep)) {
        throw Error(ErrorCode::UnknownDependency, dep,
                    "element '" + element.id + "' depends on unknown element '" + dep + "'");
      }
    }
  }
  return model;
}

Dsm parse_dsm_csv(const std::string& path) { return parse_dsm_csv_text(detail::read_file(path)); }

Dsm parse_dsm_csv_text(std::string_view csv) {
  auto lines = detail::split_lines(csv);
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty()) fail_line("1", "empty matrix file");

  const auto header = detail::split_csv_row(lines[0]);
  if (!header.front().empty()) fail_line("1", "first header cell must be empty");
  std::vector<std::string> ids(header.begin() + 1, header.end());
  const std::size_t n = ids.size();
  std::unordered_set<std::string> seen;
  for (const auto& id : ids) {
    if (!is_valid_element_id(id)) fail_line("1", "invalid element id '" + id + "'");
    if (!seen.insert(id).second) throw Error(ErrorCode::DuplicateId, id, "line 1: duplicate element id '" + id + "'");
  }
  if (lines.size() - 1 != n) {
    throw Error(ErrorCode::NonSquare, "",
                "matrix has " + std::to_string(n) + " columns but " + std::to_string(lines.size() - 1) + " rows");
  }

  std::vector<Weight> weights(n * n, 0);
  bool binary = true;
  for (std::size_t r = 0; r < n; ++r) {
    const std::string line_no = std::to_string(r + 2);
    const auto cells = detail::split_csv_row(lines[r + 1]);
    if (cells.size() != n + 1) {
      throw Error(ErrorCode::NonSquare, line_no,
                  "line " + line_no + ": expected " + std::to_string(n + 1) + " cells, found " + std::to_string(cells.size()));
    }
    if (cells[0] != ids[r]) fail_line(line_no, "row id '" + cells[0] + "' does not match column id '" + ids[r] + "'");
    for (std::size_t c = 0; c < n; ++c) {
      const auto& cell = cells[c + 1];
      if (cell.empty()) continue;
      if (cell.front() == '-') {
        throw Error(ErrorCode::NegativeWeight, line_no, "line " + line_no + ": negative weight '" + cell + "'");
      }
      auto value = detail::parse_count(cell);
      if (!value) fail_line(line_no, "invalid weight '" + cell + "'");
      if (r == c && *value != 0) {
        throw Error(ErrorCode::NonzeroDiagonal, ids[r], "line " + line_no + ": nonzero diagonal entry for '" + ids[r] + "'");
      }
      weights[r * n + c] = *value;
      if (*value > 1) binary = false;
    }
  }
  return Dsm(std::move(ids), std::move(weights), binary ? DsmKind::Binary : DsmKind::Numerical);
}

}  // namespace dsmplan
