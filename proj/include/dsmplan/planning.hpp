#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dsmplan/clustering.hpp"
#include "dsmplan/element.hpp"
#include "dsmplan/sequencing.hpp"

namespace dsmplan {

struct ModelSpec {
  std::string name;
  std::uint64_t context_window = 0;     // CW
  std::uint64_t max_output_tokens = 0;  // OL

  void validate() const;
  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

struct BudgetConfig {
  double margin = 0.05;    // MG
  double fm_ratio = 1.0;   // information-filled size / generic size
  std::uint64_t instructions_per_piece = 0;  // IntLLM, charged once per piece

  void validate() const;
  // Margin in parts per million; budget rounding is done in integers.
  std::uint64_t margin_ppm() const;
};

struct ConversationPiece {
  std::vector<std::string> element_ids;
  std::uint64_t gm_tokens = 0;  // generic model text sent
  std::uint64_t fm_tokens = 0;  // information-filled text expected back
  bool includes_user_statement = false;
};

struct ConversationPlan {
  std::vector<ConversationPiece> pieces;
  ModelSpec model;
  BudgetConfig config;
  std::uint64_t user_statement_tokens = 0;
};

struct PieceBudget {
  std::uint64_t ob = 0;
  std::int64_t ol_headroom = 0;  // OL - OB
};

struct TokenBudgetReport {
  std::vector<PieceBudget> pieces;
  std::uint64_t wb = 0;
  std::int64_t cw_headroom = 0;  // CW - WB
  bool feasible = true;
};

// ceil(value * (1 + margin)), exact for margins with up to six decimals.
std::uint64_t inflate(std::uint64_t value, const BudgetConfig& config);

// round(gm * fm_ratio)
std::uint64_t filled_tokens(std::uint64_t gm, const BudgetConfig& config);

// Largest generic size whose output budget still fits OL.
std::uint64_t max_piece_tokens(const BudgetConfig& config, const ModelSpec& spec);

// Walks the sequenced order; consecutive elements sharing a cluster form a
// piece, as does each maximal run of consecutive singleton elements. Pieces
// whose output budget would exceed OL are split greedily in sequence order.
ConversationPlan make_pieces(const ConversationModel& model, const SequencingResult& seq,
                             const ClusterAssignment& clusters, const BudgetConfig& config, const ModelSpec& spec);

// The whole model as one piece in manifest order, never split.
ConversationPlan naive_plan(const ConversationModel& model, const BudgetConfig& config, const ModelSpec& spec);

PieceBudget output_budget(const ConversationPiece& piece, const BudgetConfig& config, const ModelSpec& spec);

// (WB, CW - WB) with WB = ceil((USt + sum IntLLM + sum GM + sum FM) * (1 + MG)).
std::pair<std::uint64_t, std::int64_t> window_budget(const ConversationPlan& plan);

TokenBudgetReport budget_report(const ConversationPlan& plan);

// `name,context_window,max_output_tokens` CSV.
std::vector<ModelSpec> load_model_catalog(const std::string& path);
std::vector<ModelSpec> parse_model_catalog(std::string_view csv);
const std::vector<ModelSpec>& default_model_catalog();
std::string_view default_model_catalog_csv();
const ModelSpec& find_model(const std::vector<ModelSpec>& catalog, const std::string& name);

// Literal plan: pieces with given GM/FM sizes instead of element texts.
//   { "model": "name" | {"name", "context_window", "max_output_tokens"},
//     "margin", "fm_ratio"?, "instructions_per_piece", "user_statement_tokens",
//     "pieces": [ {"elements"?: [ids], "gm", "fm"?} ] }
ConversationPlan parse_plan_fixture(std::string_view json, const std::vector<ModelSpec>& catalog);
ConversationPlan load_plan_fixture(const std::string& path, const std::vector<ModelSpec>& catalog);

}  // namespace dsmplan
