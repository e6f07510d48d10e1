#include <doctest.h>

#include <random>

#include "dsmplan/error.hpp"
#include "dsmplan/ingest.hpp"
#include "dsmplan/planning.hpp"
#include "dsmplan/simulator.hpp"
#include "test_support.hpp"

using namespace dsmplan;
using testsupport::fixture_path;

namespace {

using Groups = std::vector<std::vector<std::string>>;

const SimulationOptions kStream{.stream_oversized = true};

struct Fixture {
  ConversationModel model;
  ConversationPlan naive;
  ConversationPlan optimized;
};

const Fixture& spacecraft() {
  static const Fixture f = [] {
    Fixture out;
    const auto& sim = testsupport::expectations()["simulation"];
    out.model = parse_manifest(fixture_path("spacecraft/manifest.json"),
                               TokenCountProvider::from_table_file(fixture_path("spacecraft/tokens.csv")));
    BudgetConfig config;
    config.margin = sim["margin"].get<double>();
    config.fm_ratio = sim["fm_ratio"].get<double>();
    config.instructions_per_piece = sim["instructions_per_piece"].get<std::uint64_t>();
    ModelSpec spec = find_model(default_model_catalog(), "mistral-7b");
    spec.max_output_tokens = sim["ol"].get<std::uint64_t>();
    const auto m = build_dsm(out.model.elements);
    const auto clusters = ClusterAssignment::from_groups(m, sim["clusters"].get<Groups>());
    out.naive = naive_plan(out.model, config, spec);
    out.optimized = make_pieces(out.model, sequence(m), clusters, config, spec);
    return out;
  }();
  return f;
}

ConversationPlan at_window(ConversationPlan plan, std::uint64_t cw) {
  plan.model.context_window = cw;
  return plan;
}

std::size_t evicted_elements(const SimulationReport& r) {
  std::size_t n = 0;
  for (const auto& s : r.steps) n += s.evicted_element_ids.size();
  return n;
}

void check_against_oracle(const SimulationReport& r, const nlohmann::json& expected) {
  CHECK(r.dependency_misses == expected["dependency_misses"].get<std::size_t>());
  CHECK(r.lost_tokens == expected["lost_tokens"].get<std::uint64_t>());
  CHECK(r.forward_dependencies == expected["forward_dependencies"].get<std::size_t>());
  CHECK(evicted_elements(r) == expected["evicted_elements"].get<std::size_t>());
  CHECK(r.oversized_pieces == expected["oversized_pieces"].get<std::size_t>());
}

// Random model whose dependencies point backwards in manifest order, chopped
// into consecutive pieces.
std::pair<ConversationModel, ConversationPlan> random_case(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::uint64_t> tokens(1, 400);
  std::uniform_int_distribution<std::size_t> count(2, 12), cut(1, 4);
  std::bernoulli_distribution dep(0.3);
  ConversationModel model;
  const auto n = count(rng);
  for (std::size_t i = 0; i < n; ++i) {
    ConversationElement e;
    e.id = "E" + std::to_string(i);
    e.token_count = tokens(rng);
    for (std::size_t j = 0; j < i; ++j) {
      if (dep(rng)) e.dependencies.push_back("E" + std::to_string(j));
    }
    model.elements.push_back(std::move(e));
  }
  model.user_statement_tokens = tokens(rng);
  ConversationPlan plan;
  plan.model = {"m", 1, 1};
  plan.config.instructions_per_piece = tokens(rng) / 4;
  plan.user_statement_tokens = model.user_statement_tokens;
  for (std::size_t i = 0; i < n;) {
    ConversationPiece piece;
    for (auto k = cut(rng); k > 0 && i < n; --k, ++i) {
      piece.element_ids.push_back(model.elements[i].id);
      piece.gm_tokens += model.elements[i].token_count;
    }
    piece.fm_tokens = piece.gm_tokens;
    plan.pieces.push_back(std::move(piece));
  }
  plan.pieces.front().includes_user_statement = true;
  return {model, plan};
}

}  // namespace

TEST_SUITE("simulator") {
  TEST_CASE("infinite window never evicts") {
    const auto& f = spacecraft();
    for (const auto* plan : {&f.naive, &f.optimized}) {
      const auto r = simulate(f.model, at_window(*plan, 1'000'000'000));
      CHECK(r.dependency_misses == 0);
      CHECK(r.lost_tokens == 0);
      CHECK(evicted_elements(r) == 0);
      CHECK(r.oversized_pieces == 0);
    }
  }

  TEST_CASE("single element just fits") {
    ConversationModel model;
    model.elements = {{"A", "", "", {}, 40}};
    ConversationPlan plan;
    plan.model = {"m", 81, 81};
    ConversationPiece piece;
    piece.element_ids = {"A"};
    piece.gm_tokens = piece.fm_tokens = 40;
    piece.includes_user_statement = true;
    plan.pieces = {piece};
    const auto r = simulate(model, plan);
    CHECK(r.dependency_misses == 0);
    CHECK(r.steps.size() == 1);
    CHECK(r.steps[0].tokens_in == 40);
    CHECK(r.steps[0].tokens_out == 40);
    plan.model.context_window = 79;
    CHECK_THROWS_AS(simulate(model, plan), Error);
  }

  TEST_CASE("strict mode reports the oversized piece") {
    const auto& f = spacecraft();
    try {
      simulate(f.model, at_window(f.optimized, 4000));
      FAIL("expected PieceExceedsWindow");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::PieceExceedsWindow);
      CHECK(e.subject() == "2");
    }
  }

  TEST_CASE("fixture plans match the hand-traced oracle") {
    const auto& f = spacecraft();
    const auto& sim = testsupport::expectations()["simulation"];
    std::vector<std::vector<std::string>> pieces;
    for (const auto& p : f.optimized.pieces) pieces.push_back(p.element_ids);
    CHECK(pieces == sim["optimized_pieces"].get<Groups>());
    for (const auto& point : sim["sweep"]) {
      const auto cw = point["cw"].get<std::uint64_t>();
      CAPTURE(cw);
      check_against_oracle(simulate(f.model, at_window(f.naive, cw), kStream), point["naive"]);
      check_against_oracle(simulate(f.model, at_window(f.optimized, cw), kStream), point["optimized"]);
    }
  }

  TEST_CASE("CW = 4000 comparison") {
    const auto& f = spacecraft();
    const auto naive = simulate(f.model, at_window(f.naive, 4000), kStream);
    const auto opt = simulate(f.model, at_window(f.optimized, 4000), kStream);
    CHECK(opt.dependency_misses <= naive.dependency_misses);
    const auto summary = compare(naive, opt);
    for (const auto& m : summary.metrics) {
      if (m.metric == "output_overflow_tokens") {
        CHECK(m.naive > 0);
        CHECK(m.optimized == 0);
        CHECK(-m.delta == m.naive);
      }
    }
  }

  TEST_CASE("misses never grow with the window") {
    const auto& f = spacecraft();
    for (const auto* plan : {&f.naive, &f.optimized}) {
      std::size_t previous = SIZE_MAX;
      for (std::uint64_t cw : {1000, 2000, 4000, 8000, 16000, 32000, 64000}) {
        const auto r = simulate(f.model, at_window(*plan, cw), kStream);
        CHECK(r.dependency_misses <= previous);
        previous = r.dependency_misses;
      }
    }
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 200; ++trial) {
      const auto [model, plan] = random_case(rng);
      std::size_t previous = SIZE_MAX;
      std::uint64_t lost = UINT64_MAX;
      for (std::uint64_t cw = 50; cw <= 12000; cw += 350) {
        const auto r = simulate(model, at_window(plan, cw), kStream);
        REQUIRE(r.dependency_misses <= previous);
        REQUIRE(r.lost_tokens <= lost);
        previous = r.dependency_misses;
        lost = r.lost_tokens;
      }
    }
  }

  TEST_CASE("providers within one window of their consumer are never missed") {
    std::mt19937_64 rng(91);
    for (int trial = 0; trial < 300; ++trial) {
      const auto [model, base] = random_case(rng);
      std::uniform_int_distribution<std::uint64_t> window(100, 6000);
      const auto plan = at_window(base, window(rng));
      const auto r = simulate(model, plan, kStream);

      std::vector<std::uint64_t> piece_total;
      std::unordered_map<std::string, std::size_t> piece_of;
      for (std::size_t k = 0; k < plan.pieces.size(); ++k) {
        const auto& p = plan.pieces[k];
        piece_total.push_back(plan.config.instructions_per_piece + (p.includes_user_statement ? plan.user_statement_tokens : 0) +
                              p.gm_tokens + p.fm_tokens);
        for (const auto& id : p.element_ids) piece_of[id] = k;
      }
      for (const auto& miss : r.misses) {
        // Everything sent from the provider's piece through the consumer's.
        std::uint64_t span = 0;
        for (auto k = piece_of[miss.provider]; k <= miss.piece; ++k) span += piece_total[k];
        CHECK(span > plan.model.context_window);
      }
    }
  }

  TEST_CASE("dependencies inside fitting pieces cost nothing") {
    ConversationModel model;
    model.elements = {{"A", "", "", {}, 10}, {"B", "", "", {}, 10}, {"C", "", "", {}, 15}};
    model.elements[1].dependencies = {"A"};
    model.elements[2].dependencies = {"A"};
    ConversationPlan plan;
    plan.model = {"m", 40, 40};
    plan.pieces = {{{"A", "B"}, 20, 20, true}, {{"C"}, 15, 15, false}};
    // Piece 2 pushes both of A's entries out of a 40-token window.
    auto r = simulate(model, plan);
    CHECK(r.dependency_misses == 1);
    CHECK(r.misses.at(0).consumer == "C");
    CHECK(r.misses.at(0).provider == "A");
    CHECK(r.misses.at(0).piece == 1);
    CHECK(r.lost_tokens == 10);
    plan.pieces = {{{"A", "B", "C"}, 35, 35, true}};
    plan.model = {"m", 70, 45};
    r = simulate(model, plan);
    CHECK(r.dependency_misses == 0);
  }

  TEST_CASE("forward dependencies are counted separately") {
    ConversationModel model;
    model.elements = {{"A", "", "", {"B"}, 10}, {"B", "", "", {}, 10}};
    ConversationPlan plan;
    plan.model = {"m", 1000, 100};
    plan.pieces = {{{"A"}, 10, 10, true}, {{"B"}, 10, 10, false}};
    const auto r = simulate(model, plan);
    CHECK(r.forward_dependencies == 1);
    CHECK(r.dependency_misses == 0);
  }

  TEST_CASE("unknown plan elements are rejected") {
    ConversationModel model;
    ConversationPlan plan;
    plan.model = {"m", 100, 100};
    plan.pieces = {{{"Z"}, 1, 1, true}};
    CHECK_THROWS_AS(simulate(model, plan), Error);
  }

  TEST_CASE("determinism") {
    const auto& f = spacecraft();
    const auto a = simulate(f.model, at_window(f.optimized, 8000), kStream);
    const auto b = simulate(f.model, at_window(f.optimized, 8000), kStream);
    CHECK(a.dependency_misses == b.dependency_misses);
    CHECK(a.lost_tokens == b.lost_tokens);
    CHECK(a.misses.size() == b.misses.size());
  }

  TEST_CASE("compare") {
    const auto& f = spacecraft();
    const auto r = simulate(f.model, at_window(f.optimized, 16000), kStream);
    for (const auto& m : compare(r, r).metrics) {
      CHECK(m.delta == 0);
      CHECK(m.trend == Trend::Equal);
    }

    SimulationReport good, bad;
    good.model = bad.model = r.model;
    good.dependency_misses = 1;
    bad.dependency_misses = 5;
    const auto summary = compare(good, bad);
    CHECK(summary.metrics.front().metric == "dependency_misses");
    CHECK(summary.metrics.front().delta == 4);
    CHECK(summary.metrics.front().trend == Trend::Worse);
    CHECK(to_string(Trend::Worse) == "worse");
    CHECK(to_string(compare(bad, good).metrics.front().trend) == "improved");

    SimulationReport other = good;
    other.model.context_window += 1;
    CHECK_THROWS_AS(compare(good, other), Error);
  }
}
