#include "dsmplan/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "dsmplan/error.hpp"

namespace dsmplan::report {

namespace {

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

std::string rpad(const std::string& s, std::size_t width) {
  return s.size() < width ? std::string(width - s.size(), ' ') + s : s;
}

std::string join(const std::vector<std::string>& items, std::string_view sep = " ") {
  std::string out;
  for (const auto& item : items) {
    if (!out.empty()) out += sep;
    out += item;
  }
  return out;
}

// "item ... value" line.
void item(std::ostringstream& out, const std::string& name, const std::string& value) {
  out << "  " << pad(name, 40) << rpad(value, 10) << '\n';
}

std::string percent(double fraction) { return format_number(fraction * 100.0) + "%"; }

char shade(Weight w, Weight max) {
  static constexpr char kLevels[] = {'1', '2', '3', '4'};
  const auto bucket = static_cast<std::size_t>((static_cast<unsigned __int128>(w - 1) * 4) / max);
  return kLevels[std::min<std::size_t>(bucket, 3)];
}

}  // namespace

std::string format_number(double value) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (std::nearbyint(value) == value && std::fabs(value) < 1e15) {
    return std::to_string(static_cast<long long>(value));
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", value);
  std::string s = buf;
  while (s.back() == '0') s.pop_back();
  if (s.back() == '.') s.pop_back();
  return s;
}

std::string format_signed(std::int64_t value) { return (value >= 0 ? "+" : "") + std::to_string(value); }

json dsm_to_json(const Dsm& dsm) {
  json rows = json::array();
  for (std::size_t i = 0; i < dsm.size(); ++i) {
    const auto row = dsm.row(i);
    rows.push_back(std::vector<Weight>(row.begin(), row.end()));
  }
  return {{"ids", dsm.ids()},
          {"kind", dsm.kind() == DsmKind::Binary ? "binary" : "numerical"},
          {"weights", rows},
          {"marks", dsm.nonzero_count()},
          {"above_diagonal", dsm.above_diagonal_count()}};
}

std::string render_dsm_heat(const Dsm& dsm) {
  std::size_t width = 1;
  for (const auto& id : dsm.ids()) width = std::max(width, id.size());
  Weight max = 0;
  for (auto w : dsm.weights()) max = std::max(max, w);

  std::ostringstream out;
  out << pad("", width);
  for (const auto& id : dsm.ids()) out << ' ' << id.front();
  out << '\n';
  for (std::size_t i = 0; i < dsm.size(); ++i) {
    out << pad(dsm.id(i), width);
    for (std::size_t j = 0; j < dsm.size(); ++j) {
      const auto w = dsm(i, j);
      char c = '.';
      if (i == j) {
        c = '-';
      } else if (w != 0) {
        c = dsm.kind() == DsmKind::Binary ? 'X' : shade(w, max);
      }
      out << ' ' << c;
    }
    out << '\n';
  }
  out << "marks " << dsm.nonzero_count() << ", above diagonal " << dsm.above_diagonal_count() << '\n';
  if (dsm.kind() == DsmKind::Numerical && max > 0) out << "shades 1-4 are quarters of the largest weight " << max << '\n';
  return out.str();
}

json sequencing_to_json(const Dsm& dsm, const SequencingResult& seq) {
  const auto permuted = permute(dsm, seq.order);
  return {{"levels", seq.levels},
          {"order", seq.ordered_ids(dsm)},
          {"cycles", seq.cycles},
          {"above_diagonal", {{"before", dsm.above_diagonal_count()}, {"after", permuted.above_diagonal_count()}}}};
}

std::string render_sequencing(const Dsm& dsm, const SequencingResult& seq, const std::vector<std::string>& labels) {
  std::vector<std::size_t> cycle_of(dsm.size(), 0);
  for (std::size_t c = 0; c < seq.cycles.size(); ++c) {
    for (const auto& id : seq.cycles[c]) cycle_of[dsm.index_of(id)] = c + 1;
  }
  std::size_t width = 2;
  for (const auto& id : dsm.ids()) width = std::max(width, id.size());

  std::ostringstream out;
  out << pad("pos", 5) << pad("level", 7) << pad("id", width + 2) << pad("cycle", 7) << "label\n";
  for (std::size_t k = 0; k < seq.order.order.size(); ++k) {
    const auto e = seq.order.order[k];
    std::string line = pad(std::to_string(k + 1), 5) + pad(std::to_string(seq.level_of[e] + 1), 7) +
                       pad(dsm.id(e), width + 2) + pad(cycle_of[e] ? std::to_string(cycle_of[e]) : "", 7) +
                       (e < labels.size() ? labels[e] : "");
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out << line << '\n';
  }
  out << "\norder: " << join(seq.ordered_ids(dsm)) << '\n';
  std::vector<std::string> levels;
  for (const auto& level : seq.levels) levels.push_back("[" + join(level) + "]");
  out << "levels: " << join(levels) << '\n';
  std::vector<std::string> cycles;
  for (const auto& cycle : seq.cycles) cycles.push_back("{" + join(cycle) + "}");
  out << "cycles: " << (cycles.empty() ? "none" : join(cycles)) << '\n';
  out << "above-diagonal marks: " << dsm.above_diagonal_count() << " -> "
      << permute(dsm, seq.order).above_diagonal_count() << '\n';
  return out.str();
}

json cluster_to_json(const Dsm& dsm, const ClusterSummary& s) {
  const auto& p = s.params;
  json params = {{"alpha", p.alpha},
                 {"beta", p.beta},
                 {"size_mode", p.size_mode == SizeMode::ElementCount ? "count" : "tokens"},
                 {"seed", p.seed},
                 {"restarts", p.restarts},
                 {"iterations_per_restart", p.iterations_per_restart}};
  if (p.max_cluster_tokens) params["max_cluster_tokens"] = *p.max_cluster_tokens;
  return {{"params", params},
          {"clusters", s.assignment.clusters(dsm)},
          {"cluster_of", s.assignment.cluster_of},
          {"cluster_count", s.assignment.cluster_count},
          {"j", {{"total", s.assignment.j_total},
                 {"size_term", s.assignment.j_size_term},
                 {"interaction_term", s.assignment.j_interaction_term}}},
          {"baselines", {{"singletons", s.j_singletons}, {"one_cluster", s.j_one_cluster}}}};
}

std::string render_cluster(const Dsm& dsm, const ClusterSummary& s) {
  std::ostringstream out;
  out << pad("cluster", 9) << pad("size", 6) << "elements\n";
  const auto groups = s.assignment.clusters(dsm);
  for (std::size_t c = 0; c < groups.size(); ++c) {
    out << pad(std::to_string(c + 1), 9) << pad(std::to_string(groups[c].size()), 6) << join(groups[c]) << '\n';
  }
  out << "\nJ = " << format_number(s.assignment.j_total) << " (alpha " << format_number(s.params.alpha)
      << " x size " << format_number(s.assignment.j_size_term) << " + beta " << format_number(s.params.beta)
      << " x interaction " << format_number(s.assignment.j_interaction_term) << ")\n";
  out << "baselines: singletons " << format_number(s.j_singletons) << ", one cluster " << format_number(s.j_one_cluster)
      << '\n';
  out << "seed " << s.params.seed << ", restarts " << s.params.restarts << '\n';
  return out.str();
}

json plan_to_json(const ConversationPlan& plan, const TokenBudgetReport& budget) {
  json pieces = json::array();
  for (std::size_t k = 0; k < plan.pieces.size(); ++k) {
    const auto& piece = plan.pieces[k];
    pieces.push_back({{"elements", piece.element_ids},
                      {"gm", piece.gm_tokens},
                      {"fm", piece.fm_tokens},
                      {"includes_user_statement", piece.includes_user_statement},
                      {"ob", budget.pieces.at(k).ob},
                      {"ol_headroom", budget.pieces.at(k).ol_headroom}});
  }
  return {{"model", {{"name", plan.model.name},
                     {"context_window", plan.model.context_window},
                     {"max_output_tokens", plan.model.max_output_tokens}}},
          {"margin", plan.config.margin},
          {"fm_ratio", plan.config.fm_ratio},
          {"instructions_per_piece", plan.config.instructions_per_piece},
          {"user_statement_tokens", plan.user_statement_tokens},
          {"pieces", pieces},
          {"wb", budget.wb},
          {"cw_headroom", budget.cw_headroom},
          {"feasible", budget.feasible}};
}

ConversationPlan plan_from_json(const json& doc) {
  try {
    ConversationPlan plan;
    const auto& m = doc.at("model");
    plan.model = {m.at("name").get<std::string>(), m.at("context_window").get<std::uint64_t>(),
                  m.at("max_output_tokens").get<std::uint64_t>()};
    plan.config.margin = doc.at("margin").get<double>();
    plan.config.fm_ratio = doc.at("fm_ratio").get<double>();
    plan.config.instructions_per_piece = doc.at("instructions_per_piece").get<std::uint64_t>();
    plan.user_statement_tokens = doc.at("user_statement_tokens").get<std::uint64_t>();
    for (const auto& p : doc.at("pieces")) {
      ConversationPiece piece;
      piece.element_ids = p.at("elements").get<std::vector<std::string>>();
      piece.gm_tokens = p.at("gm").get<std::uint64_t>();
      piece.fm_tokens = p.at("fm").get<std::uint64_t>();
      piece.includes_user_statement = p.at("includes_user_statement").get<bool>();
      plan.pieces.push_back(std::move(piece));
    }
    return plan;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, "", std::string("invalid plan report: ") + e.what());
  }
}

TokenBudgetReport budget_from_json(const json& doc) {
  try {
    TokenBudgetReport budget;
    for (const auto& p : doc.at("pieces")) {
      budget.pieces.push_back({p.at("ob").get<std::uint64_t>(), p.at("ol_headroom").get<std::int64_t>()});
    }
    budget.wb = doc.at("wb").get<std::uint64_t>();
    budget.cw_headroom = doc.at("cw_headroom").get<std::int64_t>();
    budget.feasible = doc.at("feasible").get<bool>();
    return budget;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, "", std::string("invalid budget report: ") + e.what());
  }
}

std::string render_budget(const ConversationPlan& plan, const TokenBudgetReport& budget) {
  std::ostringstream out;
  out << pad("Item", 42) << rpad("Tokens", 10) << '\n';
  out << "COMMON CONVERSATION PARAMETERS (" << plan.model.name << ")\n";
  item(out, "Maximum output tokens - OL", std::to_string(plan.model.max_output_tokens));
  item(out, "Context window - CW", std::to_string(plan.model.context_window));
  item(out, "Instructions to the LLM - IntLLM", std::to_string(plan.config.instructions_per_piece));
  item(out, "Variability margin - MG", percent(plan.config.margin));
  for (std::size_t k = 0; k < plan.pieces.size(); ++k) {
    const auto& piece = plan.pieces[k];
    out << "CONVERSATION PIECE " << k + 1;
    if (!piece.element_ids.empty()) out << " (" << join(piece.element_ids, ", ") << ")";
    out << '\n';
    if (piece.includes_user_statement) item(out, "Mission statement - USt", std::to_string(plan.user_statement_tokens));
    item(out, "Generic model - GM", std::to_string(piece.gm_tokens));
    item(out, "Information-filled model - FM", std::to_string(piece.fm_tokens));
    item(out, "Output budget - OB", std::to_string(budget.pieces.at(k).ob));
    item(out, "OL - OB", format_signed(budget.pieces.at(k).ol_headroom));
  }
  out << "COMPLETE CONVERSATION (single context)\n";
  item(out, "Window budget - WB", std::to_string(budget.wb));
  item(out, "CW - WB", format_signed(budget.cw_headroom));
  out << (budget.feasible ? "feasible" : "infeasible") << '\n';
  return out.str();
}

json simulation_to_json(const SimulationReport& r) {
  json steps = json::array();
  for (const auto& s : r.steps) {
    steps.push_back({{"tokens_in", s.tokens_in},
                     {"tokens_out", s.tokens_out},
                     {"evicted", s.evicted_element_ids},
                     {"dependency_misses", s.dependency_misses},
                     {"oversized", s.oversized}});
  }
  json misses = json::array();
  for (const auto& m : r.misses) misses.push_back({{"consumer", m.consumer}, {"provider", m.provider}, {"piece", m.piece + 1}});
  return {{"steps", steps},
          {"misses", misses},
          {"dependency_misses", r.dependency_misses},
          {"lost_tokens", r.lost_tokens},
          {"output_overflow_tokens", r.output_overflow_tokens},
          {"forward_dependencies", r.forward_dependencies},
          {"oversized_pieces", r.oversized_pieces}};
}

json comparison_to_json(const ComparisonSummary& summary) {
  json out = json::array();
  for (const auto& m : summary.metrics) {
    out.push_back({{"metric", m.metric},
                   {"naive", m.naive},
                   {"optimized", m.optimized},
                   {"delta", m.delta},
                   {"trend", std::string(to_string(m.trend))}});
  }
  return out;
}

std::string render_simulation(const SimulationRun& run) {
  std::ostringstream out;
  out << pad("Item", 30) << rpad("Naive", 10) << rpad("Optimized", 11) << "  Trend\n";
  out << "COMMON CONVERSATION PARAMETERS (" << run.optimized.model.name << ")\n";
  out << "  " << pad("Context window - CW", 28) << rpad(std::to_string(run.context_window), 10) << '\n';
  out << "  " << pad("Maximum output tokens - OL", 28) << rpad(std::to_string(run.optimized.model.max_output_tokens), 10)
      << '\n';
  out << "SIMULATED WINDOW\n";
  auto row = [&](const std::string& name, std::uint64_t a, std::uint64_t b, std::string trend) {
    out << "  " << pad(name, 28) << rpad(std::to_string(a), 10) << rpad(std::to_string(b), 11);
    if (!trend.empty()) out << "  " << trend;
    out << '\n';
  };
  row("Pieces", run.naive.steps.size(), run.optimized.steps.size(), "");
  row("Pieces larger than CW", run.naive.oversized_pieces, run.optimized.oversized_pieces, "");
  for (const auto& m : run.comparison.metrics) {
    std::string name = m.metric;
    std::replace(name.begin(), name.end(), '_', ' ');
    name[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(name[0])));
    row(name, static_cast<std::uint64_t>(m.naive), static_cast<std::uint64_t>(m.optimized),
        std::string(to_string(m.trend)));
  }
  return out.str();
}

std::string render_sweep(const std::vector<SimulationRun>& runs) {
  std::ostringstream out;
  out << rpad("CW", 12) << rpad("naive", 8) << rpad("optimized", 11) << rpad("lost naive", 12)
      << rpad("lost opt", 10) << "  trend\n";
  for (const auto& run : runs) {
    out << rpad(std::to_string(run.context_window), 12) << rpad(std::to_string(run.naive.dependency_misses), 8)
        << rpad(std::to_string(run.optimized.dependency_misses), 11) << rpad(std::to_string(run.naive.lost_tokens), 12)
        << rpad(std::to_string(run.optimized.lost_tokens), 10) << "  "
        << to_string(run.comparison.metrics.front().trend) << '\n';
  }
  return out.str();
}

}  // namespace dsmplan::report
