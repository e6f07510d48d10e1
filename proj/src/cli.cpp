#include "dsmplan/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <optional>
#include <sstream>

#include "dsmplan/clustering.hpp"
#include "dsmplan/dsm.hpp"
#include "dsmplan/error.hpp"
#include "dsmplan/ingest.hpp"
#include "dsmplan/planning.hpp"
#include "dsmplan/report.hpp"
#include "dsmplan/sequencing.hpp"
#include "dsmplan/simulator.hpp"
#include "dsmplan/tokenization.hpp"
#include "text_io.hpp"

namespace dsmplan {

namespace {

using report::json;

struct Options {
  std::string manifest;
  std::string dsm_path;
  std::string tokens = "approx";
  std::string format;
  std::string config;

  std::string model = "mistral-7b";
  std::string catalog;
  std::uint64_t cw = 0;
  std::uint64_t ol = 0;

  double alpha = 2.0;
  double beta = 1.0;
  std::string size_mode = "count";
  std::uint64_t seed = 42;
  unsigned restarts = 32;
  std::string clusters;

  double margin = 0.05;
  double fm_ratio = 1.0;
  std::uint64_t instructions = 0;
  bool naive = false;

  bool binary = false;
  std::string permute = "none";
  std::string plan_path;
  std::string sweep;
};

// Options whose presence changes behaviour, not only their value.
struct Given {
  CLI::Option* manifest = nullptr;
  CLI::Option* model = nullptr;
  CLI::Option* cw = nullptr;
  CLI::Option* ol = nullptr;
  CLI::Option* margin = nullptr;
  CLI::Option* fm_ratio = nullptr;
  CLI::Option* instructions = nullptr;

  static bool set(const CLI::Option* opt) { return opt != nullptr && opt->count() > 0; }
};

bool is_infeasibility(ErrorCode code) {
  return code == ErrorCode::UnsplittablePiece || code == ErrorCode::PieceExceedsWindow;
}

template <class F>
auto with_path(const std::string& path, F&& load) {
  try {
    return load();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Io) throw;
    throw Error(e.code(), e.subject(), path + ": " + e.what());
  }
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(text);
  while (std::getline(in, cur, sep)) {
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

class Runner {
 public:
  Runner(const Options& o, const Given& g, std::ostream& out) : o_(o), given_(g), out_(out) {}

  int dsm() {
    Dsm m = load_dsm();
    if (o_.binary) m = to_binary(m);
    if (o_.permute == "sequence") m = permute(m, sequence(m).order);
    const auto fmt = o_.format.empty() ? "csv" : o_.format;
    if (fmt == "csv") {
      write_csv(out_, m);
    } else if (fmt == "json") {
      out_ << report::dsm_to_json(m).dump(2) << '\n';
    } else {
      out_ << report::render_dsm_heat(m);
    }
    return kExitOk;
  }

  int sequence_cmd() {
    const Dsm m = load_dsm();
    const auto seq = sequence(m);
    if (json_output()) {
      out_ << report::sequencing_to_json(m, seq).dump(2) << '\n';
    } else {
      out_ << report::render_sequencing(m, seq, labels());
    }
    return kExitOk;
  }

  int cluster_cmd() {
    const Dsm m = load_dsm();
    report::ClusterSummary summary;
    summary.params = cluster_params();
    summary.assignment = choose_clusters(m, summary.params);
    summary.j_singletons = cost_J(m, ClusterAssignment::singletons(m.size()), summary.params);
    summary.j_one_cluster = cost_J(m, ClusterAssignment::single_cluster(m.size()), summary.params);
    if (json_output()) {
      out_ << report::cluster_to_json(m, summary).dump(2) << '\n';
    } else {
      out_ << report::render_cluster(m, summary);
    }
    return kExitOk;
  }

  int plan_cmd(bool budget_only) {
    ConversationPlan plan;
    std::vector<std::string> order;
    std::vector<std::vector<std::string>> groups;
    if (budget_only && !o_.plan_path.empty()) {
      plan = fixture_plan();
    } else {
      const auto model = load_model();
      const auto spec = resolve_spec(std::nullopt);
      const auto config = budget_config(model);
      if (o_.naive) {
        plan = naive_plan(model, config, spec);
      } else {
        const Dsm m = build_dsm(model.elements);
        const auto seq = sequence(m);
        const auto clusters = choose_clusters(m, planning_params(config, spec));
        plan = make_pieces(model, seq, clusters, config, spec);
        order = seq.ordered_ids(m);
        for (auto& g : clusters.clusters(m)) {
          if (g.size() > 1) groups.push_back(std::move(g));
        }
      }
    }
    const auto budget = budget_report(plan);
    if (json_output()) {
      auto doc = report::plan_to_json(plan, budget);
      if (!budget_only && !o_.naive) {
        doc["order"] = order;
        doc["clusters"] = groups;
      }
      out_ << doc.dump(2) << '\n';
    } else {
      if (!budget_only && !o_.naive) {
        out_ << "order: " << join(order) << '\n';
        std::string text;
        for (const auto& g : groups) text += (text.empty() ? "{" : " {") + join(g) + "}";
        out_ << "clusters: " << (text.empty() ? "none" : text) << "\n\n";
      }
      out_ << report::render_budget(plan, budget);
    }
    return budget.feasible ? kExitOk : kExitInfeasible;
  }

  int simulate_cmd(std::ostream& err) {
    const auto model = load_model();
    auto spec = find_model(catalog(), o_.model);
    if (Given::set(given_.ol)) spec.max_output_tokens = o_.ol;
    const auto config = budget_config(model);

    std::vector<std::uint64_t> windows;
    for (const auto& item : split(o_.sweep, ',')) {
      const auto value = detail::parse_count(item);
      if (!value || *value == 0) throw Error(ErrorCode::InvalidParameter, "sweep", "invalid --sweep value '" + item + "'");
      windows.push_back(*value);
    }
    if (windows.empty()) windows.push_back(Given::set(given_.cw) ? o_.cw : spec.context_window);

    const Dsm m = build_dsm(model.elements);
    const auto seq = sequence(m);
    const auto clusters = choose_clusters(m, planning_params(config, spec));
    // Pieces are sized against the model's output limit; only the simulated
    // window varies.
    ModelSpec planning = spec;
    planning.context_window = std::max(spec.context_window, spec.max_output_tokens);
    const auto naive = naive_plan(model, config, planning);
    const auto optimized = make_pieces(model, seq, clusters, config, planning);

    std::vector<report::SimulationRun> runs;
    const SimulationOptions stream{.stream_oversized = true};
    for (const auto cw : windows) {
      report::SimulationRun run;
      run.context_window = cw;
      auto a = naive;
      auto b = optimized;
      a.model.context_window = b.model.context_window = cw;
      run.naive = simulate(model, a, stream);
      run.optimized = simulate(model, b, stream);
      run.comparison = compare(run.naive, run.optimized);
      runs.push_back(std::move(run));
    }

    if (json_output()) {
      auto doc = report::plan_to_json(optimized, budget_report(optimized));
      json list = json::array();
      for (const auto& run : runs) {
        list.push_back({{"context_window", run.context_window},
                        {"naive", report::simulation_to_json(run.naive)},
                        {"optimized", report::simulation_to_json(run.optimized)},
                        {"comparison", report::comparison_to_json(run.comparison)}});
      }
      doc["simulation"] = {{"runs", list}};
      out_ << doc.dump(2) << '\n';
    } else if (runs.size() == 1) {
      out_ << report::render_simulation(runs.front());
    } else {
      out_ << report::render_sweep(runs);
    }

    int code = kExitOk;
    for (const auto& run : runs) {
      const auto& steps = run.optimized.steps;
      for (std::size_t k = 0; k < steps.size(); ++k) {
        if (!steps[k].oversized) continue;
        err << "PieceExceedsWindow: optimized piece " << k + 1 << " needs " << steps[k].tokens_in + steps[k].tokens_out
            << " tokens but CW is " << run.context_window << '\n';
        code = kExitInfeasible;
      }
    }
    return code;
  }

 private:
  static std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (const auto& s : items) out += (out.empty() ? "" : " ") + s;
    return out;
  }

  bool json_output() const { return o_.format == "json"; }

  TokenCountProvider provider() const {
    if (o_.tokens == "approx") return TokenCountProvider::approximate();
    if (o_.tokens.starts_with("table:")) {
      const auto path = o_.tokens.substr(6);
      return with_path(path, [&] { return TokenCountProvider::from_table_file(path); });
    }
    throw Error(ErrorCode::InvalidParameter, "tokens", "--tokens must be 'approx' or 'table:PATH'");
  }

  const ConversationModel& load_model() {
    if (!model_) {
      if (o_.manifest.empty()) throw Error(ErrorCode::InvalidParameter, "manifest", "--manifest is required");
      const auto p = provider();
      model_ = with_path(o_.manifest, [&] { return parse_manifest(o_.manifest, p); });
    }
    return *model_;
  }

  Dsm load_dsm() {
    if (!o_.dsm_path.empty()) {
      if (Given::set(given_.manifest)) throw Error(ErrorCode::InvalidParameter, "dsm", "give either --manifest or --dsm");
      return with_path(o_.dsm_path, [&] { return parse_dsm_csv(o_.dsm_path); });
    }
    return build_dsm(load_model().elements);
  }

  std::vector<std::string> labels() const {
    std::vector<std::string> out;
    if (model_) {
      for (const auto& e : model_->elements) out.push_back(e.label);
    }
    return out;
  }

  const std::vector<ModelSpec>& catalog() {
    if (!catalog_) {
      catalog_ = o_.catalog.empty() ? default_model_catalog()
                                    : with_path(o_.catalog, [&] { return load_model_catalog(o_.catalog); });
    }
    return *catalog_;
  }

  // Catalog entry (or `base`) with --cw/--ol applied. A smaller window caps
  // the output limit.
  ModelSpec resolve_spec(std::optional<ModelSpec> base) {
    ModelSpec spec = base && !Given::set(given_.model) ? *base : find_model(catalog(), o_.model);
    if (Given::set(given_.cw)) {
      spec.context_window = o_.cw;
      spec.max_output_tokens = std::min(spec.max_output_tokens, o_.cw);
    }
    if (Given::set(given_.ol)) spec.max_output_tokens = o_.ol;
    spec.validate();
    return spec;
  }

  BudgetConfig budget_config(const ConversationModel& model) const {
    BudgetConfig c;
    c.margin = o_.margin;
    c.fm_ratio = o_.fm_ratio;
    c.instructions_per_piece = Given::set(given_.instructions) ? o_.instructions : model.instruction_tokens;
    c.validate();
    return c;
  }

  ClusterParams cluster_params() const {
    ClusterParams p;
    p.alpha = o_.alpha;
    p.beta = o_.beta;
    p.size_mode = o_.size_mode == "tokens" ? SizeMode::TokenSum : SizeMode::ElementCount;
    p.seed = o_.seed;
    p.restarts = o_.restarts;
    p.validate();
    return p;
  }

  // No cluster may outgrow a piece's output budget.
  ClusterParams planning_params(const BudgetConfig& config, const ModelSpec& spec) const {
    auto p = cluster_params();
    p.max_cluster_tokens = max_piece_tokens(config, spec);
    return p;
  }

  // A fixed partition from --clusters "C,F,G,H;D,E" or the annealing result.
  ClusterAssignment choose_clusters(const Dsm& m, const ClusterParams& params) const {
    if (o_.clusters.empty()) return cluster(m, params);
    std::vector<std::vector<std::string>> groups;
    for (const auto& g : split(o_.clusters, ';')) groups.push_back(split(g, ','));
    auto a = ClusterAssignment::from_groups(m, groups);
    const auto cost = cost_breakdown(m, a.cluster_of, params);
    a.j_total = cost.total;
    a.j_size_term = cost.size_term;
    a.j_interaction_term = cost.interaction_term;
    return a;
  }

  ConversationPlan fixture_plan() {
    auto plan = with_path(o_.plan_path, [&] { return load_plan_fixture(o_.plan_path, catalog()); });
    plan.model = resolve_spec(plan.model);
    if (Given::set(given_.margin)) plan.config.margin = o_.margin;
    if (Given::set(given_.instructions)) plan.config.instructions_per_piece = o_.instructions;
    if (Given::set(given_.fm_ratio)) {
      plan.config.fm_ratio = o_.fm_ratio;
      for (auto& piece : plan.pieces) piece.fm_tokens = filled_tokens(piece.gm_tokens, plan.config);
    }
    plan.config.validate();
    return plan;
  }

  const Options& o_;
  const Given& given_;
  std::ostream& out_;
  std::optional<ConversationModel> model_;
  std::optional<std::vector<ModelSpec>> catalog_;
};

enum Groups : unsigned {
  kInput = 1,
  kModel = 2,
  kCluster = 4,
  kBudget = 8,
  kDsm = 16,
  kPlanFile = 32,
  kSweep = 64,
};

void add_options(CLI::App& cmd, unsigned groups, Options& o, Given& g) {
  g.manifest = cmd.add_option("--manifest", o.manifest, "element manifest (JSON)");
  cmd.add_option("--tokens", o.tokens, "token counts: approx or table:PATH");
  cmd.add_option("--config", o.config, "JSON file supplying any flag; command-line flags win");
  if (groups & kDsm) {
    cmd.add_option("--format", o.format, "output format (default csv)")->check(CLI::IsMember({"csv", "text", "json"}));
  } else {
    cmd.add_option("--format", o.format, "output format")->check(CLI::IsMember({"text", "json"}));
  }
  if (groups & kInput) cmd.add_option("--dsm", o.dsm_path, "DSM CSV instead of a manifest");
  if (groups & kModel) {
    g.model = cmd.add_option("--model", o.model, "model name from the catalog")->capture_default_str();
    cmd.add_option("--catalog", o.catalog, "model catalog CSV (name,context_window,max_output_tokens)");
    g.cw = cmd.add_option("--cw", o.cw, "context window override")->check(CLI::PositiveNumber);
    g.ol = cmd.add_option("--ol", o.ol, "output limit override")->check(CLI::PositiveNumber);
  }
  if (groups & kCluster) {
    cmd.add_option("--alpha", o.alpha, "cluster size weight")->capture_default_str();
    cmd.add_option("--beta", o.beta, "interaction weight")->capture_default_str();
    cmd.add_option("--size-mode", o.size_mode, "cluster size measure")
        ->check(CLI::IsMember({"count", "tokens"}))
        ->capture_default_str();
    cmd.add_option("--seed", o.seed, "random seed")->capture_default_str();
    cmd.add_option("--restarts", o.restarts, "annealing restarts")->capture_default_str();
    cmd.add_option("--clusters", o.clusters, "fixed clusters, e.g. \"C,F,G,H;D,E\"");
  }
  if (groups & kBudget) {
    g.margin = cmd.add_option("--margin", o.margin, "variability margin")->capture_default_str();
    g.fm_ratio = cmd.add_option("--fm-ratio", o.fm_ratio, "filled / generic size ratio")->capture_default_str();
    g.instructions = cmd.add_option("--instructions", o.instructions, "instruction tokens per piece");
    cmd.add_flag("--naive", o.naive, "skip the DSM: one piece in manifest order");
  }
  if (groups & kDsm) {
    cmd.add_flag("--binary", o.binary, "emit marks instead of token weights");
    cmd.add_option("--permute", o.permute, "element order")->check(CLI::IsMember({"none", "sequence"}));
  }
  if (groups & kPlanFile) cmd.add_option("--plan", o.plan_path, "literal plan JSON instead of a manifest");
  if (groups & kSweep) cmd.add_option("--sweep", o.sweep, "comma-separated context windows to simulate");
}

// Turns a --config JSON object into flags placed ahead of the user's own, so
// the user's flags override them.
std::vector<std::string> config_flags(const std::string& path) {
  json doc;
  try {
    doc = json::parse(detail::read_file(path));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, path, path + ": malformed config JSON (" + e.what() + ")");
  }
  if (!doc.is_object()) throw Error(ErrorCode::ParseError, path, path + ": config must be a JSON object");
  std::vector<std::string> flags;
  for (const auto& [key, value] : doc.items()) {
    std::string flag = "--" + key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    if (flag == "--config") throw Error(ErrorCode::ParseError, path, path + ": config files cannot nest");
    if (value.is_boolean()) {
      if (value.get<bool>()) flags.push_back(flag);
    } else if (value.is_string()) {
      flags.push_back(flag);
      flags.push_back(value.get<std::string>());
    } else if (value.is_number()) {
      flags.push_back(flag);
      flags.push_back(value.dump());
    } else if (value.is_array()) {
      std::string joined;
      for (const auto& v : value) joined += (joined.empty() ? "" : ",") + (v.is_string() ? v.get<std::string>() : v.dump());
      flags.push_back(flag);
      flags.push_back(joined);
    } else {
      throw Error(ErrorCode::ParseError, path, path + ": unsupported value for '" + key + "'");
    }
  }
  return flags;
}

std::optional<std::string> find_config(const std::vector<std::string>& args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
    if (args[i].starts_with("--config=")) return args[i].substr(9);
  }
  return std::nullopt;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Plan LLM conversations from a design structure matrix", "dsmplan"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);

  struct Command {
    const char* name;
    const char* help;
    unsigned groups;
  };
  const Command commands[] = {
      {"dsm", "emit the dependency matrix as CSV, JSON or a text heat map", kInput | kDsm},
      {"sequence", "order elements so providers come first", kInput},
      {"cluster", "partition elements by minimizing the clustering cost", kInput | kCluster},
      {"plan", "build conversation pieces and their token budget", kModel | kCluster | kBudget},
      {"budget", "token budget of a plan or a literal plan file", kModel | kCluster | kBudget | kPlanFile},
      {"simulate", "replay naive and optimized plans through a FIFO window", kModel | kCluster | kBudget | kSweep},
  };
  std::vector<CLI::App*> subs;
  std::vector<Given> given(std::size(commands));
  for (std::size_t i = 0; i < std::size(commands); ++i) {
    auto* sub = app.add_subcommand(commands[i].name, commands[i].help);
    add_options(*sub, commands[i].groups, o, given[i]);
    subs.push_back(sub);
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitInputError;
  }

  const auto* chosen = app.get_subcommands().front();
  const auto index = static_cast<std::size_t>(std::find(subs.begin(), subs.end(), chosen) - subs.begin());
  Runner runner(o, given.at(index), out);
  const std::string name = chosen->get_name();
  if (name == "dsm") return runner.dsm();
  if (name == "sequence") return runner.sequence_cmd();
  if (name == "cluster") return runner.cluster_cmd();
  if (name == "plan") return runner.plan_cmd(false);
  if (name == "budget") return runner.plan_cmd(true);
  return runner.simulate_cmd(err);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    std::vector<std::string> effective = args;
    if (const auto config = find_config(args); config && !args.empty()) {
      const auto flags = config_flags(*config);
      effective.insert(effective.begin() + 1, flags.begin(), flags.end());
    }
    return run(effective, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return is_infeasibility(e.code()) ? kExitInfeasible : kExitInputError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInputError;
  }
}

}  // namespace dsmplan
