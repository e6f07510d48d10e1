#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "dsmplan/clustering.hpp"
#include "dsmplan/dsm.hpp"
#include "dsmplan/element.hpp"
#include "dsmplan/planning.hpp"
#include "dsmplan/sequencing.hpp"
#include "dsmplan/simulator.hpp"

namespace dsmplan::report {

using nlohmann::json;

// Integral values print without a fraction, others with up to six decimals.
std::string format_number(double value);
// Leading '+' for non-negative values.
std::string format_signed(std::int64_t value);

json dsm_to_json(const Dsm& dsm);
// One row per element; '.' empty, '-' diagonal, binary marks as 'X' and
// numerical weights shaded by magnitude relative to the largest weight.
std::string render_dsm_heat(const Dsm& dsm);

json sequencing_to_json(const Dsm& dsm, const SequencingResult& seq);
std::string render_sequencing(const Dsm& dsm, const SequencingResult& seq,
                              const std::vector<std::string>& labels = {});

struct ClusterSummary {
  ClusterAssignment assignment;
  ClusterParams params;
  double j_singletons = 0.0;
  double j_one_cluster = 0.0;
};
json cluster_to_json(const Dsm& dsm, const ClusterSummary& summary);
std::string render_cluster(const Dsm& dsm, const ClusterSummary& summary);

json plan_to_json(const ConversationPlan& plan, const TokenBudgetReport& budget);
ConversationPlan plan_from_json(const json& doc);
TokenBudgetReport budget_from_json(const json& doc);
// Item / tokens listing in sections: common parameters, one block per piece
// and the complete conversation.
std::string render_budget(const ConversationPlan& plan, const TokenBudgetReport& budget);

json simulation_to_json(const SimulationReport& report);
json comparison_to_json(const ComparisonSummary& summary);

struct SimulationRun {
  std::uint64_t context_window = 0;
  SimulationReport naive;
  SimulationReport optimized;
  ComparisonSummary comparison;
};
std::string render_simulation(const SimulationRun& run);
std::string render_sweep(const std::vector<SimulationRun>& runs);

}  // namespace dsmplan::report
