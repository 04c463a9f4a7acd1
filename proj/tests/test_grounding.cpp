#include <doctest.h>

#include <cmath>
#include <map>

#include "gccg/errors.hpp"
#include "gccg/grounding.hpp"
#include "gccg/harness/synth.hpp"
#include "grounding_fixture.hpp"
#include "oracles.hpp"

using namespace gccg;
using namespace fixtures;

TEST_CASE("init is seeded, consistent and restricted to the scene") {
  std::vector<GroundingPair> pairs{pair_of({"push", "red", "box"}, scene2(1, obj(0, 1), obj(1, 0), 0, 1))};
  Rng a = make_rng(5), b = make_rng(5);
  const auto s1 = ground_init(pairs, kSmall, {}, a);
  const auto s2 = ground_init(pairs, kSmall, {}, b);
  REQUIRE(s1.tokens.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(s1.tokens[i].modality == s2.tokens[i].modality);
    CHECK(s1.tokens[i].symbol == s2.tokens[i].symbol);
  }
  CHECK(ground_audit(s1).empty());
  CHECK(std::isfinite(ground_log_joint(s1)));
}

TEST_CASE("one-object scene drops the spatial modality") {
  Scene s;
  s.action = 0;
  s.objects = {obj(1, 0)};
  GroundingConfig cfg;
  cfg.none_weight = 0.5;
  Rng rng = make_rng(1);
  auto st = ground_init({pair_of({"w"}, s)}, Alphabets{3, 4, 2, 5}, cfg, rng);
  assign(st, {{Modality::None, -1}});
  // remove the token's own counts
  st.mod_counts[0].fill(0);
  st.mod_total[0] = 0;
  const auto opts = ground_conditional(st, 0);
  REQUIRE(opts.size() == 4);
  double total = 0.0;
  for (const auto& o : opts) {
    CHECK(o.modality != Modality::Spatial);
    total += o.weight;
  }
  // by hand: each modality 1/5; symbols 1/|alphabet|; none times 0.5
  const double action = 0.2 / 3, color = 0.2 / 4, geom = 0.2 / 5, none = 0.2 * 0.5;
  const double z = action + color + geom + none;
  CHECK(total == doctest::Approx(z).epsilon(1e-12));
  CHECK(opts[0].modality == Modality::Action);
  CHECK(opts[0].weight / total == doctest::Approx(action / z).epsilon(1e-12));
  CHECK(opts[1].weight / total == doctest::Approx(color / z).epsilon(1e-12));
  CHECK(opts[2].weight / total == doctest::Approx(geom / z).epsilon(1e-12));
  CHECK(opts[3].weight / total == doctest::Approx(none / z).epsilon(1e-12));
}

TEST_CASE("log joint matches the chain-rule oracle") {
  std::vector<GroundingPair> pairs{pair_of({"red", "box"}, scene2(0, obj(0, 1), obj(1, 0), 0, 1)),
                                   pair_of({"red", "cup"}, scene2(1, obj(0, 0), obj(1, 1), 1, 1)),
                                   pair_of({"box"}, scene2(1, obj(1, 1), obj(0, 1), 0, 0))};
  Rng rng = make_rng(11);
  auto st = ground_init(pairs, kSmall, {}, rng);
  for (int sweep = 0; sweep < 20; ++sweep) {
    ground_gibbs_sweep(st, rng);
    std::vector<oracle::GroundTok> toks;
    for (const auto& t : st.tokens) toks.push_back({t.word, static_cast<int>(t.modality), t.symbol});
    const double want = std::log(oracle::grounding_joint(toks, {2, 2, 2, 2}, 1.0, 0.1, 0.5));
    CHECK(ground_log_joint(st) == doctest::Approx(want).epsilon(1e-10));
    CHECK(ground_audit(st).empty());
  }
}

TEST_CASE("Gibbs marginals match enumeration on a 3-pair toy") {
  std::vector<GroundingPair> pairs{pair_of({"red", "box"}, scene2(0, obj(0, 1), obj(1, 0), 0, 1)),
                                   pair_of({"red", "cup"}, scene2(1, obj(0, 0), obj(1, 1), 1, 1)),
                                   pair_of({"box"}, scene2(1, obj(1, 1), obj(0, 1), 0, 0))};
  Rng rng = make_rng(2024);
  auto st = ground_init(pairs, kSmall, {}, rng);
  const auto exact = exact_marginals(st);
  const auto got = sampled_marginals(st, rng, 500, 50000);
  for (std::size_t t = 0; t < exact.size(); ++t) {
    INFO("token " << t);
    CHECK(tv(exact[t], got[t]) < 0.05);
  }
}

TEST_CASE("uniform co-occurrence leaves the modality posterior at the prior") {
  // Every symbol of every modality is present in every scene and nu = 1, so
  // summing out the symbols returns the modality prior exactly.
  const Alphabets alph{1, 2, 1, 2};
  Scene s;
  s.action = 0;
  s.objects = {obj(0, 1), obj(1, 0)};
  s.spatial = {{0, 1, 0}, {1, 0, 0}};
  GroundingConfig cfg;
  cfg.none_weight = 1.0;
  std::vector<GroundingPair> pairs{pair_of({"w"}, s), pair_of({"w"}, s), pair_of({"w"}, s)};
  Rng rng = make_rng(8);
  auto st = ground_init(pairs, alph, cfg, rng);
  const auto exact = exact_marginals(st);
  for (int m = 0; m < 5; ++m) {
    double mass = 0.0;
    for (const auto& [c, p] : exact[0])
      if (c.first == m) mass += p;
    CHECK(mass == doctest::Approx(0.2).epsilon(1e-12));
  }
  const auto got = sampled_marginals(st, rng, 200, 30000);
  for (std::size_t t = 0; t < 3; ++t) {
    std::map<Choice, double> prior, sampled;
    for (const auto& [c, p] : got[t]) sampled[{c.first, 0}] += p;
    for (int m = 0; m < 5; ++m) prior[{m, 0}] = 0.2;
    CHECK(tv(prior, sampled) < 0.1);
    CHECK(tv(exact[t], got[t]) < 0.05);
  }
}

TEST_CASE("deterministic word-color toy concentrates on the right symbol") {
  // "red" always sees a red object and "blue" a blue one; geometry
  // alternates, so color is the only consistent explanation.
  std::vector<GroundingPair> pairs;
  for (int i = 0; i < 40; ++i) {
    Scene a, b;
    a.objects = {obj(0, i % 2)};
    b.objects = {obj(1, (i + 1) % 2)};
    pairs.push_back(pair_of({"red"}, a));
    pairs.push_back(pair_of({"blue"}, b));
  }
  Rng rng = make_rng(3);
  auto st = ground_init(pairs, kSmall, {}, rng);
  for (int i = 0; i < 500; ++i) ground_gibbs_sweep(st, rng);
  double hits = 0.0, total = 0.0;
  for (int i = 0; i < 200; ++i) {
    ground_gibbs_sweep(st, rng);
    for (const auto& t : st.tokens) {
      const int want = st.vocab.word(t.word) == "red" ? 0 : 1;
      hits += t.modality == Modality::Color && t.symbol == want;
      total += 1;
    }
  }
  CHECK(hits / total > 0.9);
  for (const auto& e : grounded_lexicon(st)) CHECK(e.dominant == Modality::Color);
}

TEST_CASE("seeded sweeps repeat exactly") {
  Rng r0 = make_rng(77);
  auto fx = harness::synth_instructions(30, r0);
  Rng a = make_rng(9), b = make_rng(9);
  auto s1 = ground_init(fx.pairs, fx.scenes.alphabets, {}, a);
  auto s2 = ground_init(fx.pairs, fx.scenes.alphabets, {}, b);
  for (int i = 0; i < 10; ++i) CHECK(ground_gibbs_sweep(s1, a) == ground_gibbs_sweep(s2, b));
  for (std::size_t t = 0; t < s1.tokens.size(); ++t) {
    CHECK(s1.tokens[t].modality == s2.tokens[t].modality);
    CHECK(s1.tokens[t].symbol == s2.tokens[t].symbol);
  }
}

TEST_CASE("12-word instruction vocabulary is grounded") {
  Rng rng = make_rng(12);
  auto fx = harness::synth_instructions(200, rng);
  auto st = ground_init(fx.pairs, fx.scenes.alphabets, {}, rng);
  for (int i = 0; i < 300; ++i) {
    ground_gibbs_sweep(st, rng);
    REQUIRE(ground_audit(st).empty());
  }
  const auto lex = grounded_lexicon(st);
  REQUIRE(lex.size() == 12);
  int correct = 0;
  for (const auto& e : lex) {
    INFO(e.word << " -> " << modality_name(e.dominant) << " " << e.confidence);
    correct += e.dominant == fx.truth.at(e.word);
    double sum = 0.0;
    for (double p : e.symbols) sum += p;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    double msum = 0.0;
    for (double p : e.modality_posterior) msum += p;
    CHECK(msum == doctest::Approx(1.0).epsilon(1e-9));
  }
  CHECK(correct >= 11);  // 0.9 of 12, rounded up
  for (std::size_t i = 1; i < lex.size(); ++i) CHECK(lex[i - 1].word < lex[i].word);
}

TEST_CASE("a word seen once stays near its prior") {
  Rng rng = make_rng(13);
  auto fx = harness::synth_instructions(100, rng);
  auto rare = fx.pairs.front();
  rare.tokens[0] = "shove";
  fx.pairs.push_back(rare);
  auto st = ground_init(fx.pairs, fx.scenes.alphabets, {}, rng);
  {
    // init only: confidence is a small-count predictive
    for (const auto& e : grounded_lexicon(st))
      if (e.word == "shove") CHECK(e.confidence <= 2.0 / 6.0 + 1e-12);
  }
  for (int i = 0; i < 200; ++i) ground_gibbs_sweep(st, rng);
  double rare_conf = 0.0, min_trained = 1.0;
  for (const auto& e : grounded_lexicon(st)) {
    if (e.word == "shove")
      rare_conf = e.confidence;
    else
      min_trained = std::min(min_trained, e.confidence);
  }
  // (1 + 1) / (1 + 5) is the most a single observation can give
  CHECK(rare_conf <= 2.0 / 6.0 + 1e-12);
  CHECK(rare_conf < min_trained);
}

TEST_CASE("resolve: push red box near cup") {
  const Alphabets alph{2, 3, 2, 2};
  // action push=0, red=0 blue=1, near=0 on=1, box=0 cup=1
  Scene train = scene2(0, obj(0, 0), obj(1, 1), 0, 1);
  std::vector<GroundingPair> pairs{pair_of({"push", "red", "box", "near", "cup", "blue"}, train)};
  Rng rng = make_rng(1);
  auto st = ground_init(pairs, alph, {}, rng);
  assign(st, {{Modality::Action, 0},
              {Modality::Color, 0},
              {Modality::Geometry, 0},
              {Modality::Spatial, 0},
              {Modality::Geometry, 1},
              {Modality::Color, 1}});
  REQUIRE(ground_audit(st).empty());

  // test scene: object 0 is the red box, object 1 a blue cup
  Scene s = scene2(0, obj(0, 0), obj(1, 1), 0, 1);
  auto r = resolve_instruction({"push", "red", "box", "near", "cup"}, s, st);
  CHECK(r.action == 0);
  CHECK(r.referent == 0);
  CHECK(r.referent_color == 0);
  CHECK(r.landmark == 1);
  CHECK_FALSE(r.referent_ambiguous);
  CHECK_FALSE(r.landmark_ambiguous);

  // swapping the objects moves the answer
  Scene swapped = scene2(0, obj(1, 1), obj(0, 0), 1, 0);
  r = resolve_instruction({"push", "red", "box", "near", "cup"}, swapped, st);
  CHECK(r.referent == 1);
  CHECK(r.landmark == 0);

  SUBCASE("no spatial word, no landmark") {
    r = resolve_instruction({"push", "red", "box"}, s, st);
    CHECK(r.referent == 0);
    CHECK_FALSE(r.landmark.has_value());
  }
  SUBCASE("no descriptor, no referent") {
    r = resolve_instruction({"push", "xyzzy"}, s, st);
    CHECK(r.action == 0);
    CHECK_FALSE(r.referent.has_value());
    CHECK_FALSE(r.referent_color.has_value());
    CHECK_FALSE(r.landmark.has_value());
  }
  SUBCASE("identical objects tie to the lowest index") {
    Scene twins = scene2(0, obj(0, 0), obj(0, 0), 0, 0);
    r = resolve_instruction({"push", "red", "box"}, twins, st);
    CHECK(r.referent == 0);
    CHECK(r.referent_ambiguous);
  }
  SUBCASE("deterministic") {
    const auto again = resolve_instruction({"push", "red", "box", "near", "cup"}, s, st);
    CHECK(again.referent == 0);
    CHECK(again.landmark == 1);
  }
}

TEST_CASE("grounding input errors") {
  Rng rng = make_rng(1);
  auto good = pair_of({"a"}, scene2(0, obj(0, 0), obj(1, 1), 0, 1));
  SUBCASE("tags misaligned") {
    auto p = good;
    p.tags.clear();
    CHECK_THROWS_AS(ground_init({p}, kSmall, {}, rng), MissingScene);
  }
  SUBCASE("empty scene") {
    auto p = good;
    p.scene.objects.clear();
    p.scene.spatial.clear();
    CHECK_THROWS_AS(ground_init({p}, kSmall, {}, rng), EmptyScene);
  }
  SUBCASE("symbol outside alphabet") {
    auto p = good;
    p.scene.objects[0].color = 7;
    CHECK_THROWS_AS(ground_init({p}, kSmall, {}, rng), DataError);
  }
  SUBCASE("no tokens") {
    auto p = good;
    p.tokens.clear();
    p.tags.clear();
    CHECK_THROWS_AS(ground_init({p}, kSmall, {}, rng), EmptyCorpus);
  }
  SUBCASE("bad config") {
    GroundingConfig cfg;
    cfg.theta = 0;
    CHECK_THROWS_AS(ground_init({good}, kSmall, cfg, rng), ConfigError);
  }
  CHECK_THROWS_AS(parse_modality("smell"), DataError);
  CHECK(parse_modality("geometry") == Modality::Geometry);
}
