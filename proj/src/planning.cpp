#include "dsmplan/planning.hpp"

#include <cmath>
#include <json.hpp>
#include <numeric>
#include <tuple>
#include <unordered_set>

#include "dsmplan/error.hpp"
#include "text_io.hpp"

namespace dsmplan {

namespace {

constexpr std::uint64_t kPpm = 1'000'000;

// Context windows and output limits of widely used models; entries without a
// published output limit are left out.
constexpr std::string_view kDefaultCatalog =
    "name,context_window,max_output_tokens\n"
    "gpt-4-turbo,128000,4096\n"
    "gpt-4-32k,32768,4096\n"
    "gpt-4,8192,4096\n"
    "gpt-3.5-turbo,16385,4096\n"
    "gemini-1.5-pro,128000,8192\n"
    "gemini-1.0,32000,2048\n"
    "claude-3,200000,4096\n"
    "claude-2,100000,4096\n"
    "llama-2,4096,4096\n"
    "mistral-7b,32000,8192\n"
    "falcon,2048,2048\n";

ConversationPiece make_piece(std::vector<std::string> ids, std::uint64_t gm, const BudgetConfig& config) {
  ConversationPiece piece;
  piece.element_ids = std::move(ids);
  piece.gm_tokens = gm;
  piece.fm_tokens = filled_tokens(gm, config);
  return piece;
}

}  // namespace

void ModelSpec::validate() const {
  if (context_window == 0) throw Error(ErrorCode::InvalidParameter, name, "context window of '" + name + "' must be positive");
  if (max_output_tokens == 0) {
    throw Error(ErrorCode::InvalidParameter, name, "output limit of '" + name + "' must be positive");
  }
  if (max_output_tokens > context_window) {
    throw Error(ErrorCode::InvalidParameter, name, "output limit of '" + name + "' exceeds its context window");
  }
}

void BudgetConfig::validate() const {
  if (!(margin >= 0.0) || !(margin < 1.0)) throw Error(ErrorCode::InvalidParameter, "margin", "margin must be in [0, 1)");
  if (!(fm_ratio > 0.0) || !std::isfinite(fm_ratio)) {
    throw Error(ErrorCode::InvalidParameter, "fm_ratio", "fm_ratio must be positive and finite");
  }
}

std::uint64_t BudgetConfig::margin_ppm() const { return static_cast<std::uint64_t>(std::llround(margin * kPpm)); }

std::uint64_t inflate(std::uint64_t value, const BudgetConfig& config) {
  const unsigned __int128 scaled = static_cast<unsigned __int128>(value) * (kPpm + config.margin_ppm());
  return static_cast<std::uint64_t>((scaled + kPpm - 1) / kPpm);
}

std::uint64_t filled_tokens(std::uint64_t gm, const BudgetConfig& config) {
  return static_cast<std::uint64_t>(std::llround(static_cast<double>(gm) * config.fm_ratio));
}

std::uint64_t max_piece_tokens(const BudgetConfig& config, const ModelSpec& spec) {
  auto fits = [&](std::uint64_t gm) { return inflate(filled_tokens(gm, config), config) <= spec.max_output_tokens; };
  std::uint64_t lo = 0;
  std::uint64_t hi = spec.max_output_tokens + 1;
  while (fits(hi)) hi *= 2;
  // fits(lo) holds, fits(hi) does not.
  while (hi - lo > 1) {
    const auto mid = lo + (hi - lo) / 2;
    (fits(mid) ? lo : hi) = mid;
  }
  return lo;
}

ConversationPlan make_pieces(const ConversationModel& model, const SequencingResult& seq,
                             const ClusterAssignment& clusters, const BudgetConfig& config, const ModelSpec& spec) {
  config.validate();
  spec.validate();
  const std::size_t n = model.elements.size();
  if (seq.order.order.size() != n || clusters.cluster_of.size() != n || !seq.order.is_valid(n)) {
    throw Error(ErrorCode::LengthMismatch, "", "sequencing and clustering must cover the model's elements");
  }

  std::vector<std::size_t> cluster_size(clusters.cluster_count, 0);
  for (auto c : clusters.cluster_of) ++cluster_size.at(c);
  constexpr auto kSingletonRun = static_cast<std::size_t>(-1);
  auto run_key = [&](std::size_t e) {
    const auto c = clusters.cluster_of[e];
    return cluster_size[c] > 1 ? c : kSingletonRun;
  };

  ConversationPlan plan;
  plan.model = spec;
  plan.config = config;
  plan.user_statement_tokens = model.user_statement_tokens;

  const auto cap = spec.max_output_tokens;
  std::vector<std::string> ids;
  std::uint64_t gm = 0;
  std::size_t current_key = kSingletonRun;
  auto flush = [&] {
    if (ids.empty()) return;
    plan.pieces.push_back(make_piece(std::move(ids), gm, config));
    ids.clear();
    gm = 0;
  };

  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t e = seq.order.order[k];
    const auto& element = model.elements[e];
    if (inflate(filled_tokens(element.token_count, config), config) > cap) {
      throw Error(ErrorCode::UnsplittablePiece, element.id,
                  "element '" + element.id + "' alone exceeds the output limit of " + spec.name);
    }
    const auto key = run_key(e);
    if (!ids.empty() && key != current_key) flush();
    if (!ids.empty() && inflate(filled_tokens(gm + element.token_count, config), config) > cap) flush();
    current_key = key;
    ids.push_back(element.id);
    gm += element.token_count;
  }
  flush();
  if (!plan.pieces.empty()) plan.pieces.front().includes_user_statement = true;
  return plan;
}

ConversationPlan naive_plan(const ConversationModel& model, const BudgetConfig& config, const ModelSpec& spec) {
  config.validate();
  spec.validate();
  ConversationPlan plan;
  plan.model = spec;
  plan.config = config;
  plan.user_statement_tokens = model.user_statement_tokens;
  if (model.elements.empty()) return plan;
  std::vector<std::string> ids;
  for (const auto& e : model.elements) ids.push_back(e.id);
  plan.pieces.push_back(make_piece(std::move(ids), model.total_element_tokens(), config));
  plan.pieces.front().includes_user_statement = true;
  return plan;
}

PieceBudget output_budget(const ConversationPiece& piece, const BudgetConfig& config, const ModelSpec& spec) {
  PieceBudget b;
  b.ob = inflate(piece.fm_tokens, config);
  b.ol_headroom = static_cast<std::int64_t>(spec.max_output_tokens) - static_cast<std::int64_t>(b.ob);
  return b;
}

std::pair<std::uint64_t, std::int64_t> window_budget(const ConversationPlan& plan) {
  std::uint64_t sum = plan.user_statement_tokens;
  for (const auto& piece : plan.pieces) sum += plan.config.instructions_per_piece + piece.gm_tokens + piece.fm_tokens;
  const auto wb = inflate(sum, plan.config);
  return {wb, static_cast<std::int64_t>(plan.model.context_window) - static_cast<std::int64_t>(wb)};
}

TokenBudgetReport budget_report(const ConversationPlan& plan) {
  TokenBudgetReport report;
  for (const auto& piece : plan.pieces) {
    report.pieces.push_back(output_budget(piece, plan.config, plan.model));
    if (report.pieces.back().ol_headroom < 0) report.feasible = false;
  }
  std::tie(report.wb, report.cw_headroom) = window_budget(plan);
  if (report.cw_headroom < 0) report.feasible = false;
  return report;
}

std::vector<ModelSpec> parse_model_catalog(std::string_view csv) {
  const auto lines = detail::split_lines(csv);
  if (lines.empty() ||
      detail::split_csv_row(lines[0]) != std::vector<std::string>{"name", "context_window", "max_output_tokens"}) {
    throw Error(ErrorCode::ParseError, "1", "line 1: catalog header must be 'name,context_window,max_output_tokens'");
  }
  std::vector<ModelSpec> specs;
  std::unordered_set<std::string> names;
  for (std::size_t n = 1; n < lines.size(); ++n) {
    if (lines[n].empty()) continue;
    const auto line_no = std::to_string(n + 1);
    const auto cells = detail::split_csv_row(lines[n]);
    if (cells.size() != 3 || cells[0].empty()) {
      throw Error(ErrorCode::ParseError, line_no, "line " + line_no + ": expected 3 cells");
    }
    const auto cw = detail::parse_count(cells[1]);
    const auto ol = detail::parse_count(cells[2]);
    if (!cw || !ol || *cw == 0 || *ol == 0 || *ol > *cw) {
      throw Error(ErrorCode::ParseError, line_no, "line " + line_no + ": invalid context window or output limit");
    }
    if (!names.insert(cells[0]).second) {
      throw Error(ErrorCode::DuplicateModelName, cells[0], "line " + line_no + ": duplicate model '" + cells[0] + "'");
    }
    specs.push_back({cells[0], *cw, *ol});
  }
  return specs;
}

std::vector<ModelSpec> load_model_catalog(const std::string& path) {
  return parse_model_catalog(detail::read_file(path));
}

std::string_view default_model_catalog_csv() { return kDefaultCatalog; }

const std::vector<ModelSpec>& default_model_catalog() {
  static const std::vector<ModelSpec> catalog = parse_model_catalog(kDefaultCatalog);
  return catalog;
}

const ModelSpec& find_model(const std::vector<ModelSpec>& catalog, const std::string& name) {
  for (const auto& spec : catalog) {
    if (spec.name == name) return spec;
  }
  std::string names;
  for (const auto& spec : catalog) names += (names.empty() ? "" : ", ") + spec.name;
  throw Error(ErrorCode::UnknownModel, name, "unknown model '" + name + "'; available: " + names);
}

ConversationPlan parse_plan_fixture(std::string_view text, const std::vector<ModelSpec>& catalog) {
  using nlohmann::json;
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, std::to_string(e.byte), std::string("malformed plan JSON: ") + e.what());
  }
  try {
    ConversationPlan plan;
    const auto& model = root.at("model");
    if (model.is_string()) {
      plan.model = find_model(catalog, model.get<std::string>());
    } else {
      plan.model = {model.at("name").get<std::string>(), model.at("context_window").get<std::uint64_t>(),
                    model.at("max_output_tokens").get<std::uint64_t>()};
    }
    plan.model.validate();
    plan.config.margin = root.value("margin", 0.0);
    plan.config.fm_ratio = root.value("fm_ratio", 1.0);
    plan.config.instructions_per_piece = root.value("instructions_per_piece", std::uint64_t{0});
    plan.config.validate();
    plan.user_statement_tokens = root.value("user_statement_tokens", std::uint64_t{0});
    for (const auto& item : root.at("pieces")) {
      ConversationPiece piece;
      if (item.contains("elements")) piece.element_ids = item["elements"].get<std::vector<std::string>>();
      piece.gm_tokens = item.at("gm").get<std::uint64_t>();
      piece.fm_tokens = item.contains("fm") ? item["fm"].get<std::uint64_t>() : filled_tokens(piece.gm_tokens, plan.config);
      plan.pieces.push_back(std::move(piece));
    }
    if (!plan.pieces.empty()) plan.pieces.front().includes_user_statement = true;
    return plan;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, "", std::string("invalid plan fixture: ") + e.what());
  }
}

ConversationPlan load_plan_fixture(const std::string& path, const std::vector<ModelSpec>& catalog) {
  return parse_plan_fixture(detail::read_file(path), catalog);
}

}  // namespace dsmplan
