#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dsmplan/element.hpp"
#include "dsmplan/planning.hpp"

namespace dsmplan {

struct SimulationStep {
  std::uint64_t tokens_in = 0;   // instructions + user statement (first piece) + GM
  std::uint64_t tokens_out = 0;  // FM
  std::vector<std::string> evicted_element_ids;
  std::size_t dependency_misses = 0;
  bool oversized = false;  // input + output exceeded the window on its own
};

struct DependencyMiss {
  std::string consumer;
  std::string provider;
  std::size_t piece = 0;
};

// The window is a FIFO of whole entries:
// instructions, the user statement, then one generic and one reply entry per
// element. Before a piece goes out the oldest entries are evicted until the
// piece's input and output fit; a miss is a dependency whose provider has no
// entry left once the piece's reply is in.
struct SimulationReport {
  ModelSpec model;
  std::vector<SimulationStep> steps;
  std::vector<DependencyMiss> misses;
  std::size_t dependency_misses = 0;
  std::uint64_t lost_tokens = 0;
  std::uint64_t output_overflow_tokens = 0;
  // Dependencies on elements that had not been sent yet (not misses).
  std::size_t forward_dependencies = 0;
  std::size_t oversized_pieces = 0;
};

struct SimulationOptions {
  // When false a piece larger than the window throws PieceExceedsWindow.
  // When true it streams through: each entry evicts the oldest ones (the
  // piece's own included) and an entry larger than the whole window is not
  // retained at all.
  bool stream_oversized = false;
};

SimulationReport simulate(const ConversationModel& model, const ConversationPlan& plan,
                          const SimulationOptions& options = {});

enum class Trend { Improved, Worse, Equal };

struct MetricDelta {
  std::string metric;
  std::int64_t naive = 0;
  std::int64_t optimized = 0;
  std::int64_t delta = 0;  // optimized - naive
  Trend trend = Trend::Equal;
};

struct ComparisonSummary {
  std::vector<MetricDelta> metrics;
};

ComparisonSummary compare(const SimulationReport& naive, const SimulationReport& optimized);

std::string_view to_string(Trend trend);

}  // namespace dsmplan
