#include <doctest.h>

#include <cmath>
#include <random>

#include "dsmplan/error.hpp"
#include "dsmplan/ingest.hpp"
#include "dsmplan/planning.hpp"
#include "test_support.hpp"

using namespace dsmplan;
using testsupport::fixture_path;

namespace {

using Groups = std::vector<std::vector<std::string>>;

const ModelSpec& mistral() { return find_model(default_model_catalog(), "mistral-7b"); }

BudgetConfig margin(double mg, std::uint64_t intllm = 0) {
  BudgetConfig c;
  c.margin = mg;
  c.instructions_per_piece = intllm;
  return c;
}

ConversationPiece piece(std::uint64_t gm, std::uint64_t fm) {
  ConversationPiece p;
  p.gm_tokens = gm;
  p.fm_tokens = fm;
  return p;
}

ConversationModel spacecraft_table() {
  return parse_manifest(fixture_path("spacecraft/manifest.json"),
                        TokenCountProvider::from_table_file(fixture_path("spacecraft/tokens.csv")));
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::Io;
}

}  // namespace

TEST_SUITE("planning") {
  TEST_CASE("output budget examples") {
    const auto mg = margin(0.05);
    auto b = output_budget(piece(272, 272), mg, mistral());
    CHECK(b.ob == 286);
    CHECK(b.ol_headroom == 7906);
    b = output_budget(piece(7703, 7703), mg, mistral());
    CHECK(b.ob == 8089);
    CHECK(b.ol_headroom == 103);
    b = output_budget(piece(16, 16), mg, mistral());
    CHECK(b.ob == 17);
    CHECK(b.ol_headroom == 8175);
    b = output_budget(piece(0, 0), mg, mistral());
    CHECK(b.ob == 0);
    CHECK(b.ol_headroom == 8192);
  }

  TEST_CASE("output budget is monotone and exact at zero margin") {
    std::mt19937_64 rng(4);
    std::uniform_int_distribution<std::uint64_t> fm(0, 20000);
    std::uniform_real_distribution<double> mg(0.0, 0.5);
    for (int trial = 0; trial < 500; ++trial) {
      const auto a = fm(rng), bsz = fm(rng);
      const double m1 = mg(rng), m2 = mg(rng);
      const auto lo = std::min(a, bsz), hi = std::max(a, bsz);
      CHECK(output_budget(piece(0, lo), margin(m1), mistral()).ob <= output_budget(piece(0, hi), margin(m1), mistral()).ob);
      CHECK(output_budget(piece(0, a), margin(std::min(m1, m2)), mistral()).ob <=
            output_budget(piece(0, a), margin(std::max(m1, m2)), mistral()).ob);
      CHECK(output_budget(piece(0, a), margin(0.0), mistral()).ob == a);
      CHECK(inflate(a, margin(m1)) >= static_cast<std::uint64_t>(std::floor(a * (1.0 + m1))));
    }
  }

  TEST_CASE("window budget examples") {
    ConversationPlan plan;
    plan.model = mistral();
    plan.config = margin(0.0, 200);
    plan.user_statement_tokens = 200;
    plan.pieces = {piece(9619, 9619)};
    auto [wb, headroom] = window_budget(plan);
    CHECK(wb == 19638);
    CHECK(headroom == 32000 - 19638);
    CHECK(output_budget(plan.pieces[0], plan.config, plan.model).ol_headroom == -1427);

    plan.config.margin = 0.10;
    std::tie(wb, headroom) = window_budget(plan);
    CHECK(wb >= 21600);
    CHECK(wb <= 21602);

    ConversationPlan empty;
    empty.model = mistral();
    empty.config = margin(0.05);
    std::tie(wb, headroom) = window_budget(empty);
    CHECK(wb == 0);
    CHECK(headroom == 32000);
  }

  TEST_CASE("budget report on the literal final and initial plans") {
    const auto t6 = load_plan_fixture(fixture_path("spacecraft/final_plan.json"), default_model_catalog());
    const auto r6 = budget_report(t6);
    const auto& expected = testsupport::expectations()["budget"]["final_ol_headroom"];
    REQUIRE(r6.pieces.size() == 4);
    for (std::size_t k = 0; k < 4; ++k) CHECK(r6.pieces[k].ol_headroom == expected[k].get<std::int64_t>());
    CHECK(r6.feasible);
    for (const auto& p : r6.pieces) CHECK(p.ob <= t6.model.max_output_tokens);
    CHECK(r6.wb <= t6.model.context_window);

    const auto t3 = load_plan_fixture(fixture_path("spacecraft/initial_plan.json"), default_model_catalog());
    const auto r3 = budget_report(t3);
    CHECK_FALSE(r3.feasible);
    CHECK(r3.pieces.at(0).ol_headroom == -1427);
    CHECK(r3.wb == 19638);

    ConversationPlan empty;
    empty.model = mistral();
    const auto re = budget_report(empty);
    CHECK(re.wb == 0);
    CHECK(re.feasible);
  }

  TEST_CASE("make_pieces with the reference clusters") {
    const auto model = spacecraft_table();
    const auto m = build_dsm(model.elements);
    const auto seq = sequence(m);
    const auto clusters =
        ClusterAssignment::from_groups(m, testsupport::expectations()["clustering"]["reference_clusters"].get<Groups>());
    const auto plan = make_pieces(model, seq, clusters, margin(0.05), mistral());
    REQUIRE(plan.pieces.size() == 4);
    CHECK(plan.pieces[0].element_ids == std::vector<std::string>{"A", "B"});
    CHECK(plan.pieces[1].element_ids == std::vector<std::string>{"C", "G", "F", "H"});
    CHECK(plan.pieces[2].element_ids == std::vector<std::string>{"D", "E", "I", "J", "L", "K"});
    CHECK(plan.pieces[3].element_ids == std::vector<std::string>{"M"});
    CHECK(plan.pieces[0].gm_tokens == 462);
    CHECK(plan.pieces[0].includes_user_statement);
    CHECK_FALSE(plan.pieces[1].includes_user_statement);

    std::vector<std::string> flat;
    std::uint64_t gm = 0;
    for (const auto& p : plan.pieces) {
      flat.insert(flat.end(), p.element_ids.begin(), p.element_ids.end());
      gm += p.gm_tokens;
    }
    CHECK(flat == seq.ordered_ids(m));
    CHECK(gm == model.total_element_tokens());
    CHECK(budget_report(plan).feasible);
  }

  TEST_CASE("the naive plan is infeasible on Mistral 7B while the DSM plan is not") {
    const auto model = spacecraft_table();
    CHECK_FALSE(budget_report(naive_plan(model, margin(0.05, 200), mistral())).feasible);
    const auto m = build_dsm(model.elements);
    const auto plan = make_pieces(model, sequence(m), ClusterAssignment::single_cluster(m.size()), margin(0.05, 200), mistral());
    CHECK(budget_report(plan).feasible);
  }

  TEST_CASE("no clusters and a generous cap make one piece") {
    const auto model = spacecraft_table();
    const auto m = build_dsm(model.elements);
    const auto seq = sequence(m);
    const ModelSpec big{"big", 1'000'000, 100'000};
    const auto plan = make_pieces(model, seq, ClusterAssignment::singletons(m.size()), margin(0.05), big);
    REQUIRE(plan.pieces.size() == 1);
    CHECK(plan.pieces[0].element_ids == seq.ordered_ids(m));
  }

  TEST_CASE("oversized runs are split greedily in sequence order") {
    const auto model = spacecraft_table();
    const auto m = build_dsm(model.elements);
    const auto seq = sequence(m);
    const auto plan = make_pieces(model, seq, ClusterAssignment::single_cluster(m.size()), margin(0.05), mistral());
    REQUIRE(plan.pieces.size() == 2);
    CHECK(plan.pieces[0].gm_tokens == 7197);
    CHECK(plan.pieces[1].element_ids.front() == "E");
    const auto cap = max_piece_tokens(margin(0.05), mistral());
    CHECK(cap == 7801);
    for (const auto& p : plan.pieces) CHECK(p.gm_tokens <= cap);
  }

  TEST_CASE("an element above floor(OL / (1 + MG)) cannot be placed") {
    ConversationModel model;
    model.elements = {{"A", "", "", {}, 7802}};
    const auto m = build_dsm(model.elements);
    CHECK(code_of([&] {
            make_pieces(model, sequence(m), ClusterAssignment::singletons(1), margin(0.05), mistral());
          }) == ErrorCode::UnsplittablePiece);
    model.elements[0].token_count = 7801;
    CHECK_NOTHROW(make_pieces(model, sequence(m), ClusterAssignment::singletons(1), margin(0.05), mistral()));
  }

  TEST_CASE("fm_ratio scales the filled model") {
    BudgetConfig c = margin(0.0);
    c.fm_ratio = 1.5;
    CHECK(filled_tokens(100, c) == 150);
    CHECK(max_piece_tokens(c, ModelSpec{"m", 1000, 300}) == 200);
  }

  TEST_CASE("feasible reports satisfy every limit") {
    std::mt19937_64 rng(12);
    std::uniform_int_distribution<std::uint64_t> gm(0, 5000);
    for (int trial = 0; trial < 200; ++trial) {
      ConversationPlan plan;
      plan.model = {"m", 20000, 4000};
      plan.config = margin(0.1, 30);
      plan.user_statement_tokens = 50;
      for (int k = 0; k < 1 + trial % 4; ++k) {
        const auto g = gm(rng);
        plan.pieces.push_back(piece(g, g));
      }
      const auto r = budget_report(plan);
      bool ok = true;
      for (const auto& p : plan.pieces) ok &= inflate(p.fm_tokens, plan.config) <= plan.model.max_output_tokens;
      ok &= window_budget(plan).first <= plan.model.context_window;
      CHECK(r.feasible == ok);
    }
  }

  TEST_CASE("model catalog") {
    const auto& m = find_model(default_model_catalog(), "mistral-7b");
    CHECK(m.context_window == 32000);
    CHECK(m.max_output_tokens == 8192);
    const auto& g = find_model(default_model_catalog(), "gpt-4");
    CHECK(g.context_window == 8192);
    CHECK(g.max_output_tokens == 4096);
    try {
      find_model(default_model_catalog(), "unknown");
      FAIL("expected UnknownModel");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::UnknownModel);
      CHECK(std::string(e.what()).find("mistral-7b") != std::string::npos);
    }
    CHECK(load_model_catalog(std::string(DSMPLAN_DATA) + "/models.csv") == default_model_catalog());
    CHECK(testsupport::read_text(std::string(DSMPLAN_DATA) + "/models.csv") == default_model_catalog_csv());
  }

  TEST_CASE("catalog errors") {
    auto code = [](std::string_view csv) {
      try {
        parse_model_catalog(csv);
      } catch (const Error& e) {
        return e.code();
      }
      return ErrorCode::Io;
    };
    CHECK(code("model,cw\n") == ErrorCode::ParseError);
    CHECK(code("name,context_window,max_output_tokens\na,100\n") == ErrorCode::ParseError);
    CHECK(code("name,context_window,max_output_tokens\na,100,200\n") == ErrorCode::ParseError);
    CHECK(code("name,context_window,max_output_tokens\na,0,0\n") == ErrorCode::ParseError);
    CHECK(code("name,context_window,max_output_tokens\na,100,10\na,200,10\n") == ErrorCode::DuplicateModelName);
  }

  TEST_CASE("parameter validation") {
    CHECK(code_of([] { margin(-0.1).validate(); }) == ErrorCode::InvalidParameter);
    CHECK(code_of([] { margin(1.0).validate(); }) == ErrorCode::InvalidParameter);
    BudgetConfig c;
    c.fm_ratio = 0.0;
    CHECK(code_of([&] { c.validate(); }) == ErrorCode::InvalidParameter);
    CHECK(code_of([] { ModelSpec{"x", 100, 200}.validate(); }) == ErrorCode::InvalidParameter);
    CHECK(code_of([] { ModelSpec{"x", 0, 0}.validate(); }) == ErrorCode::InvalidParameter);
  }

  TEST_CASE("plan fixture parsing") {
    const auto plan = parse_plan_fixture(
        R"({"model": {"name": "tiny", "context_window": 100, "max_output_tokens": 50},
            "margin": 0.1, "user_statement_tokens": 5, "pieces": [{"gm": 10}, {"gm": 20, "fm": 7}]})",
        default_model_catalog());
    CHECK(plan.model == ModelSpec{"tiny", 100, 50});
    CHECK(plan.pieces.size() == 2);
    CHECK(plan.pieces[0].fm_tokens == 10);
    CHECK(plan.pieces[1].fm_tokens == 7);
    CHECK(plan.pieces[0].includes_user_statement);
    CHECK(code_of([] { parse_plan_fixture(R"({"model": "nope", "pieces": []})", default_model_catalog()); }) ==
          ErrorCode::UnknownModel);
    CHECK(code_of([] { parse_plan_fixture("{", default_model_catalog()); }) == ErrorCode::ParseError);
    CHECK(code_of([] { parse_plan_fixture(R"({"model": "gpt-4"})", default_model_catalog()); }) == ErrorCode::ParseError);
  }
}
