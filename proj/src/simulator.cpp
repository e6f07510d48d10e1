#include "dsmplan/simulator.hpp"

#include <algorithm>
#include <deque>
#include <unordered_map>
#include <unordered_set>

#include "dsmplan/error.hpp"

namespace dsmplan {

namespace {

struct Entry {
  std::string element;  // empty for instructions and the user statement
  std::uint64_t tokens = 0;
};

// Splits a piece's reply across its elements in proportion to their generic
// size; the last element absorbs the rounding remainder.
std::vector<std::uint64_t> reply_shares(const std::vector<std::uint64_t>& sizes, std::uint64_t gm, std::uint64_t fm) {
  std::vector<std::uint64_t> shares(sizes.size(), 0);
  if (sizes.empty()) return shares;
  std::uint64_t assigned = 0;
  if (gm > 0) {
    for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
      shares[i] = static_cast<std::uint64_t>(static_cast<unsigned __int128>(fm) * sizes[i] / gm);
      assigned += shares[i];
    }
  }
  shares.back() = fm - assigned;
  return shares;
}

}  // namespace

SimulationReport simulate(const ConversationModel& model, const ConversationPlan& plan,
                          const SimulationOptions& options) {
  std::unordered_map<std::string, const ConversationElement*> by_id;
  for (const auto& e : model.elements) by_id.emplace(e.id, &e);

  SimulationReport report;
  report.model = plan.model;
  const std::uint64_t cw = plan.model.context_window;

  for (std::size_t k = 0; k < plan.pieces.size(); ++k) {
    const auto& piece = plan.pieces[k];
    const std::uint64_t overhead =
        plan.config.instructions_per_piece + (piece.includes_user_statement ? plan.user_statement_tokens : 0);
    if (!options.stream_oversized && overhead + piece.gm_tokens + piece.fm_tokens > cw) {
      throw Error(ErrorCode::PieceExceedsWindow, std::to_string(k + 1),
                  "piece " + std::to_string(k + 1) + " needs " + std::to_string(overhead + piece.gm_tokens + piece.fm_tokens) +
                      " tokens but the context window holds " + std::to_string(cw));
    }
    for (const auto& id : piece.element_ids) {
      if (!by_id.contains(id)) throw Error(ErrorCode::UnknownDependency, id, "plan names unknown element '" + id + "'");
    }
  }

  std::deque<Entry> window;
  std::uint64_t used = 0;
  std::unordered_map<std::string, std::size_t> resident;  // entries per element
  std::unordered_set<std::string> sent;

  for (std::size_t k = 0; k < plan.pieces.size(); ++k) {
    const auto& piece = plan.pieces[k];
    SimulationStep step;
    const std::uint64_t overhead =
        plan.config.instructions_per_piece + (piece.includes_user_statement ? plan.user_statement_tokens : 0);
    step.tokens_in = overhead + piece.gm_tokens;
    step.tokens_out = piece.fm_tokens;
    step.oversized = step.tokens_in + step.tokens_out > cw;

    auto note_evicted = [&](const std::string& element) {
      if (element.empty()) return;
      if (std::find(step.evicted_element_ids.begin(), step.evicted_element_ids.end(), element) ==
          step.evicted_element_ids.end()) {
        step.evicted_element_ids.push_back(element);
      }
    };
    auto make_room = [&](std::uint64_t amount) {
      while (!window.empty() && used + amount > cw) {
        Entry oldest = std::move(window.front());
        window.pop_front();
        used -= oldest.tokens;
        if (!oldest.element.empty() && --resident[oldest.element] == 0) resident.erase(oldest.element);
        note_evicted(oldest.element);
      }
    };
    auto push = [&](std::string element, std::uint64_t tokens) {
      make_room(tokens);
      if (tokens > cw) {
        note_evicted(element);
        return;
      }
      used += tokens;
      if (!element.empty()) ++resident[element];
      window.push_back({std::move(element), tokens});
    };

    make_room(step.tokens_in + step.tokens_out);

    std::vector<std::uint64_t> sizes;
    for (const auto& id : piece.element_ids) sizes.push_back(by_id.at(id)->token_count);
    if (plan.config.instructions_per_piece > 0) push("", plan.config.instructions_per_piece);
    if (piece.includes_user_statement && plan.user_statement_tokens > 0) push("", plan.user_statement_tokens);
    for (std::size_t i = 0; i < piece.element_ids.size(); ++i) push(piece.element_ids[i], sizes[i]);
    const auto shares = reply_shares(sizes, piece.gm_tokens, piece.fm_tokens);
    for (std::size_t i = 0; i < piece.element_ids.size(); ++i) push(piece.element_ids[i], shares[i]);

    const std::unordered_set<std::string> members(piece.element_ids.begin(), piece.element_ids.end());
    for (const auto& id : piece.element_ids) {
      for (const auto& provider : by_id.at(id)->dependencies) {
        if (!members.contains(provider) && !sent.contains(provider)) {
          ++report.forward_dependencies;
        } else if (!resident.contains(provider)) {
          ++step.dependency_misses;
          report.lost_tokens += by_id.at(provider)->token_count;
          report.misses.push_back({id, provider, k});
        }
      }
    }
    for (const auto& id : piece.element_ids) sent.insert(id);

    const auto ob = output_budget(piece, plan.config, plan.model);
    if (ob.ol_headroom < 0) report.output_overflow_tokens += static_cast<std::uint64_t>(-ob.ol_headroom);
    report.dependency_misses += step.dependency_misses;
    report.oversized_pieces += step.oversized;
    report.steps.push_back(std::move(step));
  }
  return report;
}

ComparisonSummary compare(const SimulationReport& naive, const SimulationReport& optimized) {
  if (!(naive.model == optimized.model)) {
    throw Error(ErrorCode::SpecMismatch, optimized.model.name,
                "cannot compare runs against different model specs ('" + naive.model.name + "' vs '" +
                    optimized.model.name + "')");
  }
  ComparisonSummary summary;
  auto add = [&](std::string name, std::uint64_t a, std::uint64_t b) {
    MetricDelta d;
    d.metric = std::move(name);
    d.naive = static_cast<std::int64_t>(a);
    d.optimized = static_cast<std::int64_t>(b);
    d.delta = d.optimized - d.naive;
    d.trend = d.delta < 0 ? Trend::Improved : d.delta > 0 ? Trend::Worse : Trend::Equal;
    summary.metrics.push_back(std::move(d));
  };
  add("dependency_misses", naive.dependency_misses, optimized.dependency_misses);
  add("lost_tokens", naive.lost_tokens, optimized.lost_tokens);
  add("output_overflow_tokens", naive.output_overflow_tokens, optimized.output_overflow_tokens);
  add("forward_dependencies", naive.forward_dependencies, optimized.forward_dependencies);
  return summary;
}

std::string_view to_string(Trend trend) {
  switch (trend) {
    case Trend::Improved: return "improved";
    case Trend::Worse: return "worse";
    case Trend::Equal: return "equal";
  }
  return "equal";
}

}  // namespace dsmplan
