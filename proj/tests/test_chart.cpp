#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "gccg/errors.hpp"

using namespace gccg;
using fixtures::make_rules;

namespace {

const oracle::Lexicon kDogLex{{"the", {"NP/N"}}, {"dog", {"N"}}, {"sleeps", {"S\\NP"}}};

CategorySpace with_a() {
  CategorySpace s;
  s.atoms.push_back("A");
  s.max_depth = 4;
  return s;
}

// A/A ... A/A A, so every bracketing has exactly one derivation under App+FwdComp.
struct Ladder {
  std::vector<std::string> tokens;
  oracle::Lexicon lex{{"f", {"A/A"}}, {"a", {"A"}}};
  explicit Ladder(int n) : tokens(static_cast<std::size_t>(n - 1), "f") { tokens.push_back("a"); }
};

fixtures::RuleSetup ladder_rules() {
  return make_rules({"FwdApp", "BwdApp", "FwdComp"}, 1, {"S"}, {"NP", "N"}, with_a());
}

std::map<std::string, int> frequencies(const PackedChart& chart, const Category& goal, int n, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  std::map<std::string, int> out;
  for (int i = 0; i < n; ++i) ++out[to_bracketed(sample_derivation(chart, goal, rng))];
  return out;
}

}  // namespace

TEST_CASE("the dog sleeps") {
  auto setup = make_rules(fixtures::kApp);
  const Lexicon lex = fixtures::to_lexicon(kDogLex);
  const std::vector<std::string> toks{"the", "dog", "sleeps"};
  PackedChart chart = build_chart(toks, lex, setup.cfg, Category::atom("S"));
  CHECK(chart.find(0, 3, Category::atom("S")) != kNoItem);
  const auto count = count_derivations(chart, Category::atom("S"));
  CHECK(count.value == 1);
  CHECK_FALSE(count.saturated);

  oracle::Enumerator en(toks, kDogLex, setup.rules);
  const auto trees = en.goal_trees("S");
  REQUIRE(trees.size() == 1);

  const auto best = viterbi_derivation(chart, UniformScorer{}, Category::atom("S"));
  REQUIRE(best);
  CHECK(to_bracketed(*best) == trees[0].text);
  CHECK(to_bracketed(*best) == "(S (NP (NP/N the) (N dog)) (S\\NP sleeps))");
  CHECK(extract_spans(*best) == std::set<std::pair<std::size_t, std::size_t>>{{0, 2}});
  CHECK(check_derivation(*best, setup.cfg).empty());
}

TEST_CASE("single token") {
  const Lexicon lex = fixtures::to_lexicon({{"dog", {"N"}}});
  PackedChart chart = build_chart({"dog"}, lex, RuleConfig::application_only(), Category::atom("N"));
  CHECK(chart.num_items() == 1);
  CHECK(count_derivations(chart, Category::atom("N")).value == 1);
  const auto d = viterbi_derivation(chart, UniformScorer{}, Category::atom("N"));
  REQUIRE(d);
  CHECK(extract_spans(*d).empty());
}

TEST_CASE("raising adds analyses") {
  auto setup = make_rules({"FwdApp", "BwdApp", "FwdComp", "FwdRaise"});
  const std::vector<std::string> toks{"the", "dog", "sleeps"};
  PackedChart chart = build_chart(toks, fixtures::to_lexicon(kDogLex), setup.cfg, Category::atom("S"));
  oracle::Enumerator en(toks, kDogLex, setup.rules);
  const auto n = en.goal_trees("S").size();
  CHECK(n == 2);
  CHECK(count_derivations(chart, Category::atom("S")).value == n);
}

TEST_CASE("unparseable input") {
  const Lexicon lex = fixtures::to_lexicon({{"dog", {"N"}}});
  PackedChart chart = build_chart({"dog", "dog"}, lex, RuleConfig::application_only(), Category::atom("S"));
  CHECK(count_derivations(chart, Category::atom("S")).value == 0);
  CHECK_FALSE(viterbi_derivation(chart, UniformScorer{}, Category::atom("S")));
  inside_weights(chart, UniformScorer{});
  Rng rng = make_rng(1);
  CHECK_THROWS_AS(sample_derivation(chart, Category::atom("S"), rng), NoParse);
}

TEST_CASE("input errors") {
  const Lexicon lex = fixtures::to_lexicon(kDogLex);
  const auto cfg = RuleConfig::application_only();
  CHECK_THROWS_AS(build_chart({"the", "cat"}, lex, cfg, Category::atom("S")), UnknownToken);
  CHECK_THROWS_AS(build_chart({}, lex, cfg, Category::atom("S")), EmptyInput);
  ChartOptions tight;
  tight.max_length = 2;
  CHECK_THROWS_AS(build_chart({"the", "dog", "sleeps"}, lex, cfg, Category::atom("S"), tight), DataError);
  PackedChart chart = build_chart({"dog"}, lex, cfg, Category::atom("N"));
  Rng rng = make_rng(1);
  CHECK_THROWS_AS(sample_derivation(chart, Category::atom("N"), rng), InvariantError);
}

TEST_CASE("ladder counts are Catalan numbers") {
  auto setup = ladder_rules();
  for (int n = 2; n <= 7; ++n) {
    Ladder l(n);
    PackedChart chart = build_chart(l.tokens, fixtures::to_lexicon(l.lex, with_a()), setup.cfg, Category::atom("A"));
    const auto count = count_derivations(chart, Category::atom("A"));
    CHECK(count.value == oracle::catalan(n - 1));
    oracle::Enumerator en(l.tokens, l.lex, setup.rules);
    CHECK(en.goal_trees("A").size() == oracle::catalan(n - 1));
    inside_weights(chart, UniformScorer{});
    CHECK(std::exp(goal_inside(chart, Category::atom("A"))) == doctest::Approx(count.value).epsilon(1e-12));
  }
  // Application alone admits only the right-branching tree.
  auto app = make_rules(fixtures::kApp, 1, {"S"}, {"NP", "N"}, with_a());
  Ladder l(6);
  PackedChart chart = build_chart(l.tokens, fixtures::to_lexicon(l.lex, with_a()), app.cfg, Category::atom("A"));
  CHECK(count_derivations(chart, Category::atom("A")).value == 1);
}

TEST_CASE("inside matches hand-summed enumeration") {
  const oracle::Lexicon lex{{"the", {"NP/N", "N/N"}}, {"dog", {"N", "NP"}}, {"sleeps", {"S\\NP", "S\\N"}},
                            {"big", {"N/N"}}};
  for (const auto* kinds : {&fixtures::kApp, &fixtures::kAppCompRaise, &fixtures::kEverything}) {
    auto setup = make_rules(*kinds);
    for (const std::vector<std::string>& toks :
         {std::vector<std::string>{"the", "dog", "sleeps"}, {"the", "big", "dog", "sleeps"},
          {"big", "big", "dog", "sleeps"}}) {
      PackedChart chart = build_chart(toks, fixtures::to_lexicon(lex), setup.cfg, Category::atom("S"));
      inside_weights(chart, fixtures::HashScorer{});
      oracle::Enumerator en(toks, lex, setup.rules);
      double total = 0.0, top = 0.0;
      for (const auto& t : en.goal_trees("S")) {
        total += fixtures::tree_weight(t);
        top = std::max(top, fixtures::tree_weight(t));
      }
      REQUIRE(total > 0.0);
      const double inside = goal_inside(chart, Category::atom("S"));
      CHECK(std::exp(inside) == doctest::Approx(total).epsilon(1e-9));
      CHECK(inside >= std::log(top) - 1e-12);

      const auto best = viterbi_derivation(chart, fixtures::HashScorer{}, Category::atom("S"));
      REQUIRE(best);
      CHECK(std::exp(derivation_log_weight(*best, fixtures::HashScorer{})) == doctest::Approx(top).epsilon(1e-12));
    }
  }
}

namespace {

// Favors application: right-branching ladders win.
class AppScorer final : public ExpansionScorer {
 public:
  double w_app = std::log(3.0), w_comp = 0.0;
  double expansion(const Category&, const Combinator& r, const Category&) const override {
    return r.kind == CombinatorKind::FwdComp ? w_comp : w_app;
  }
  double emission(const Category&, std::string_view) const override { return 0.0; }
};

}  // namespace

TEST_CASE("viterbi picks the enumeration argmax") {
  auto setup = ladder_rules();
  Ladder l(5);
  PackedChart chart = build_chart(l.tokens, fixtures::to_lexicon(l.lex, with_a()), setup.cfg, Category::atom("A"));
  const auto best = viterbi_derivation(chart, AppScorer{}, Category::atom("A"));
  REQUIRE(best);
  oracle::Enumerator en(l.tokens, l.lex, setup.rules);
  std::string arg;
  int apps_best = -1;
  for (const auto& t : en.goal_trees("A")) {
    int apps = 0;
    for (const auto& e : t.events) apps += e[1] == "FwdApp";
    if (apps > apps_best) {
      apps_best = apps;
      arg = t.text;
    }
  }
  CHECK(to_bracketed(*best) == arg);
  CHECK(to_bracketed(*best) == "(A (A/A f) (A (A/A f) (A (A/A f) (A (A/A f) (A a)))))");
}

TEST_CASE("viterbi tie order: combinator, argument, split") {
  // Uniform weights over the ladder: FwdApp < FwdComp, so the root is an
  // application; among application roots the earliest split wins.
  auto setup = ladder_rules();
  Ladder l(4);
  PackedChart chart = build_chart(l.tokens, fixtures::to_lexicon(l.lex, with_a()), setup.cfg, Category::atom("A"));
  const auto best = viterbi_derivation(chart, UniformScorer{}, Category::atom("A"));
  REQUIRE(best);
  CHECK(best->nodes[0].rule.kind == CombinatorKind::FwdApp);
  CHECK(best->nodes[static_cast<std::size_t>(best->nodes[0].left)].end == 1);
}

TEST_CASE("sampling the 3:1 fixture") {
  auto setup = ladder_rules();
  Ladder l(3);
  PackedChart chart = build_chart(l.tokens, fixtures::to_lexicon(l.lex, with_a()), setup.cfg, Category::atom("A"));
  REQUIRE(count_derivations(chart, Category::atom("A")).value == 2);
  inside_weights(chart, AppScorer{});
  const auto freq = frequencies(chart, Category::atom("A"), 10000, 42);
  REQUIRE(freq.size() == 2);
  const double p = freq.at("(A (A/A f) (A (A/A f) (A a)))") / 10000.0;
  CHECK(std::abs(p - 0.75) < 0.02);
}

TEST_CASE("uniform sampling over Catalan(4) trees") {
  auto setup = ladder_rules();
  Ladder l(5);
  PackedChart chart = build_chart(l.tokens, fixtures::to_lexicon(l.lex, with_a()), setup.cfg, Category::atom("A"));
  inside_weights(chart, UniformScorer{});
  const int n = 50000;
  const auto freq = frequencies(chart, Category::atom("A"), n, 7);
  oracle::Enumerator en(l.tokens, l.lex, setup.rules);
  const auto trees = en.goal_trees("A");
  REQUIRE(trees.size() == 14);
  double tv = 0.0;
  for (const auto& t : trees) {
    auto it = freq.find(t.text);
    tv += std::abs((it == freq.end() ? 0 : it->second) / double(n) - 1.0 / 14.0);
  }
  CHECK(freq.size() == 14);
  CHECK(tv / 2 < 0.05);
}

TEST_CASE("samples are valid and reproducible") {
  const oracle::Lexicon lex{{"the", {"NP/N"}}, {"dog", {"N", "NP"}}, {"sees", {"(S\\NP)/NP"}}, {"big", {"N/N"}}};
  auto setup = make_rules(fixtures::kEverything, 2);
  const std::vector<std::string> toks{"the", "big", "dog", "sees", "the", "dog"};
  PackedChart chart = build_chart(toks, fixtures::to_lexicon(lex), setup.cfg, Category::atom("S"));
  inside_weights(chart, fixtures::HashScorer{});
  Rng a = make_rng(9), b = make_rng(9);
  for (int i = 0; i < 200; ++i) {
    const Derivation d = sample_derivation(chart, Category::atom("S"), a);
    CHECK(d == sample_derivation(chart, Category::atom("S"), b));
    CHECK(check_derivation(d, setup.cfg).empty());
    CHECK(d.tokens() == toks);
    const Derivation back = read_bracketed(to_bracketed(d), setup.cfg);
    CHECK(to_bracketed(back) == to_bracketed(d));
    CHECK(check_derivation(back, setup.cfg).empty());
  }
}

TEST_CASE("every backpointer recombines") {
  const oracle::Lexicon lex{{"the", {"NP/N"}}, {"dog", {"N", "NP"}}, {"sees", {"(S\\NP)/NP"}}, {"big", {"N/N"}}};
  auto setup = make_rules(fixtures::kEverything, 2);
  PackedChart chart =
      build_chart({"the", "dog", "sees", "the", "big", "dog"}, fixtures::to_lexicon(lex), setup.cfg, Category::atom("S"));
  for (std::size_t i = 0; i < chart.num_items(); ++i) {
    const ParseItem& item = chart.item(static_cast<ItemId>(i));
    for (const auto& bp : item.backpointers) {
      const Combinator& rule = chart.combinator(bp.rule);
      if (rule.kind == CombinatorKind::Lex) continue;
      const Category right = bp.right == kNoItem ? Category() : chart.category(chart.item(bp.right).cat);
      const auto c = combine(rule, chart.category(chart.item(bp.left).cat), right, setup.cfg);
      REQUIRE(c.ok());
      CHECK(c.result == chart.category(item.cat));
      CHECK(c.argument == chart.category(bp.argument));
    }
  }
}

TEST_CASE("charts are deterministic") {
  const oracle::Lexicon lex{{"the", {"NP/N"}}, {"dog", {"N", "NP"}}, {"sees", {"(S\\NP)/NP"}}, {"big", {"N/N"}}};
  auto setup = make_rules(fixtures::kEverything, 2);
  const std::vector<std::string> toks{"the", "dog", "sees", "big", "dog"};
  PackedChart a = build_chart(toks, fixtures::to_lexicon(lex), setup.cfg, Category::atom("S"));
  PackedChart b = build_chart(toks, fixtures::to_lexicon(lex), setup.cfg, Category::atom("S"));
  inside_weights(a, fixtures::HashScorer{});
  inside_weights(b, fixtures::HashScorer{});
  REQUIRE(a.num_items() == b.num_items());
  for (std::size_t i = 0; i < a.num_items(); ++i) {
    const auto& x = a.item(static_cast<ItemId>(i));
    const auto& y = b.item(static_cast<ItemId>(i));
    CHECK(a.category(x.cat) == b.category(y.cat));
    CHECK(x.start == y.start);
    CHECK(std::memcmp(&x.inside, &y.inside, sizeof(double)) == 0);
    CHECK(x.backpointers.size() == y.backpointers.size());
  }
}

TEST_CASE("extract_spans convention") {
  auto setup = make_rules(fixtures::kApp, 1, {"S"}, {"NP", "N"}, with_a());
  const Derivation d = read_bracketed("(A (A/A (A/A/A (A/A/A/A f) (A g)) (A h)) (A i))", setup.cfg);
  // Left-branching over four leaves.
  CHECK(extract_spans(d) == std::set<std::pair<std::size_t, std::size_t>>{{0, 2}, {0, 3}});
}

TEST_CASE("bracketed reader errors") {
  const auto cfg = RuleConfig::application_only();
  CHECK_THROWS_AS(read_bracketed("(S (NP dog)", cfg), SyntaxError);
  CHECK_THROWS_AS(read_bracketed("(S (NP dog) (NP dog))", cfg), SyntaxError);
  CHECK_THROWS_AS(read_bracketed("(Q dog)", cfg), SyntaxError);
}

TEST_CASE("lexicon file") {
  const std::string path = "lexicon_test.tsv";
  {
    std::ofstream out(path);
    out << "# toy\nthe\tNP/N\ndog\tN\t2.5\ndog\tN\t0.5\n\nsleeps\tS\\NP # verb\n";
  }
  const Lexicon lex = Lexicon::load(path, {});
  CHECK(lex.size() == 3);
  CHECK(lex.weight("dog", Category::atom("N")) == 3.0);
  {
    std::ofstream out(path);
    out << "the\tNP/N\ndog\tN/(\n";
  }
  try {
    Lexicon::load(path, {});
    FAIL("expected LineError");
  } catch (const LineError& e) {
    CHECK(e.line() == 2);
  }
  std::remove(path.c_str());
}

TEST_CASE("compiled rule table agrees with filtered enumeration") {
  auto setup = make_rules({"FwdApp", "BwdApp", "FwdComp", "BwdComp", "FwdRaiseComp"});
  std::vector<Category> pool;
  for (const char* c : {"S", "N", "NP", "S/N", "N/N", "S\\N", "NP/N", "(S\\NP)/N"}) pool.push_back(parse_category(c));
  const std::vector<Category> args{Category::atom("N"), Category::atom("NP"), Category::atom("S")};
  const RuleTable table = RuleTable::compile(pool, args, setup.cfg);
  std::set<std::string> pool_names, arg_names;
  for (const auto& c : pool) pool_names.insert(c.str());
  for (const auto& c : args) arg_names.insert(c.str());

  oracle::Lexicon lex;
  for (const auto& c : pool) lex["t"].push_back(c.str());
  for (int n = 1; n <= 4; ++n) {
    const std::vector<std::string> toks(static_cast<std::size_t>(n), "t");
    PackedChart chart = build_chart(toks, table);
    oracle::Enumerator en(toks, lex, setup.rules);
    en.keep = [&](const std::string& c) { return pool_names.count(c) > 0; };
    en.keep_arg = [&](const std::string& c) { return arg_names.count(c) > 0; };
    for (const auto& goal : pool) {
      CHECK(count_derivations(chart, goal).value == en.goal_trees(goal.str()).size());
    }
    inside_weights(chart, fixtures::HashScorer{});
    double total = 0;
    for (const auto& t : en.goal_trees("S")) total += fixtures::tree_weight(t);
    CHECK(std::exp(goal_inside(chart, Category::atom("S"))) == doctest::Approx(total).epsilon(1e-9));
  }
  CHECK_THROWS_AS(RuleTable::compile(pool, args, RuleConfig{}), ConfigError);
}

TEST_CASE("count saturation") {
  // Catalan(36) > 1e18.
  auto setup = ladder_rules();
  Ladder l(37);
  PackedChart chart = build_chart(l.tokens, fixtures::to_lexicon(l.lex, with_a()), setup.cfg, Category::atom("A"));
  const auto c = count_derivations(chart, Category::atom("A"));
  CHECK(c.saturated);
  CHECK(c.value == DerivationCount::kCap);
  Ladder small(20);  // Catalan(19) = 1767263190
  PackedChart ok = build_chart(small.tokens, fixtures::to_lexicon(small.lex, with_a()), setup.cfg, Category::atom("A"));
  CHECK(count_derivations(ok, Category::atom("A")).value == 1767263190ULL);
}
