#include "gccg/harness/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <json.hpp>

#include "gccg/errors.hpp"

namespace gccg::harness {

using nlohmann::json;

namespace {

struct Children {
  Category left, right;
};

Children children_of(const SynthRule& r, const RuleConfig& cfg) {
  RuleConfig one = cfg;
  one.kinds = {r.combinator.kind};
  one.max_comp_degree = std::max(1, r.combinator.degree);
  if (r.combinator.target.valid()) {
    one.raise_targets = {r.combinator.target};
    if (!one.can_raise(r.argument)) one.raisable.push_back(r.argument);
  }
  for (const Expansion& e : enumerate_expansions(r.parent, one, {r.argument}))
    if (e.rule == r.combinator) return {e.left, e.right};
  throw SpecError("rule " + r.parent.str() + " -> " + r.combinator.str() + " " + r.argument.str() +
                  " has no children within the category limits");
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw SpecError(where + " must be an object");
  for (const auto& [k, v] : j.items()) {
    (void)v;
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; }) == allowed.end())
      throw SpecError("unknown key '" + k + "' in " + where);
  }
}

}  // namespace

void SynthGrammarSpec::validate() const {
  std::map<Category, double> mass;
  for (const auto& [c, p] : leaf_prob) {
    if (!(p >= 0.0) || p > 1.0) throw SpecError("leaf probability of " + c.str() + " outside [0, 1]");
    mass[c] += p;
  }
  std::set<Category> needed{root};
  for (const auto& r : expansions) {
    if (!(r.prob >= 0.0)) throw SpecError("negative rule probability");
    if (is_raise(r.combinator.kind) || r.combinator.kind == CombinatorKind::Lex)
      throw SpecError("generator rules must be binary");
    mass[r.parent] += r.prob;
    const Children ch = children_of(r, rules);
    RuleConfig one = rules;
    one.kinds = {r.combinator.kind};
    one.max_comp_degree = std::max(1, r.combinator.degree);
    if (r.combinator.target.valid()) {
      one.raise_targets = {r.combinator.target};
      if (!one.can_raise(r.argument)) one.raisable.push_back(r.argument);
    }
    const Combination back = combine(r.combinator, ch.left, ch.right, one);
    if (!back.ok() || back.result != r.parent || back.argument != r.argument)
      throw SpecError("rule for " + r.parent.str() + " does not satisfy combine");
    needed.insert(ch.left);
    needed.insert(ch.right);
  }
  for (const auto& c : needed)
    if (!mass.count(c)) throw SpecError("category " + c.str() + " can be generated but has no leaf or rule");
  for (const auto& [c, m] : mass)
    if (std::abs(m - 1.0) > 1e-9)
      throw SpecError("probabilities for parent " + c.str() + " sum to " + std::to_string(m) + ", not 1");
  for (const auto& [c, p] : leaf_prob) {
    if (p <= 0.0) continue;
    const bool has = std::any_of(tags.begin(), tags.end(),
                                 [&](const SynthTag& t) { return t.category == c && !t.words.empty() && t.weight > 0; });
    if (!has) throw SpecError("category " + c.str() + " has leaf probability but no tag with words");
  }
  std::set<int> ids;
  for (const auto& t : tags) {
    if (!ids.insert(t.id).second) throw SpecError("duplicate tag id " + std::to_string(t.id));
    if (t.id < 0) throw SpecError("tag ids must be nonnegative");
  }
  if (max_length < 1) throw SpecError("max_length must be positive");

  // Termination: least fixed point of q_c = leaf_c + sum_r p_r q_left q_right.
  std::map<Category, double> q;
  for (const auto& [c, m] : mass) q[c] = 0.0;
  std::vector<std::pair<const SynthRule*, Children>> compiled;
  for (const auto& r : expansions) compiled.emplace_back(&r, children_of(r, rules));
  for (int it = 0; it < 100000; ++it) {
    double delta = 0.0;
    for (auto& [c, v] : q) {
      auto lp = leaf_prob.find(c);
      double nv = lp == leaf_prob.end() ? 0.0 : lp->second;
      for (const auto& [r, ch] : compiled)
        if (r->parent == c) nv += r->prob * q[ch.left] * q[ch.right];
      delta = std::max(delta, std::abs(nv - v));
      v = nv;
    }
    if (delta < 1e-15) break;
  }
  if (q[root] < 1.0 - 1e-6)
    throw SpecError("grammar terminates with probability " + std::to_string(q[root]) + " < 1");
  const double capped = length_cap_mass();
  if (capped < 1e-3)
    throw SpecError("only " + std::to_string(capped) + " of the derivation mass fits the length cap");
}

double SynthGrammarSpec::length_cap_mass() const {
  std::set<Category> cats{root};
  std::vector<std::pair<const SynthRule*, Children>> compiled;
  for (const auto& r : expansions) {
    compiled.emplace_back(&r, children_of(r, rules));
    cats.insert(r.parent);
    cats.insert(compiled.back().second.left);
    cats.insert(compiled.back().second.right);
  }
  const std::size_t L = max_length;
  std::map<Category, std::vector<double>> p;
  for (const auto& c : cats) p[c].assign(L + 1, 0.0);
  for (std::size_t len = 1; len <= L; ++len) {
    for (const auto& c : cats) {
      double v = 0.0;
      if (len == 1) {
        auto it = leaf_prob.find(c);
        if (it != leaf_prob.end()) v += it->second;
      }
      for (const auto& [r, ch] : compiled) {
        if (r->parent != c) continue;
        const auto& pl = p[ch.left];
        const auto& pr = p[ch.right];
        for (std::size_t a = 1; a < len; ++a) v += r->prob * pl[a] * pr[len - a];
      }
      p[c][len] = v;
    }
  }
  const auto& pr = p[root];
  return std::accumulate(pr.begin(), pr.end(), 0.0);
}

SynthGrammarSpec parse_synth_spec(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw SpecError(std::string("synth spec is not valid JSON: ") + e.what());
  }
  check_keys(j, {"format_version", "atoms", "max_depth", "max_arity", "raise_targets", "raisable", "rules", "leaf_prob",
                 "tags", "max_length", "root", "scenes"},
             "synth spec");
  SynthGrammarSpec spec;
  try {
    if (j.contains("atoms")) spec.rules.space.atoms = j.at("atoms").get<std::vector<std::string>>();
    if (j.contains("max_depth")) spec.rules.space.max_depth = j.at("max_depth").get<int>();
    if (j.contains("max_arity")) spec.rules.space.max_arity = j.at("max_arity").get<int>();
    const auto& space = spec.rules.space;
    if (j.contains("raise_targets")) {
      spec.rules.raise_targets.clear();
      for (const auto& t : j.at("raise_targets")) spec.rules.raise_targets.push_back(parse_category(t.get<std::string>(), space));
    }
    if (j.contains("raisable")) {
      spec.rules.raisable.clear();
      for (const auto& t : j.at("raisable")) spec.rules.raisable.push_back(parse_category(t.get<std::string>(), space));
    }
    spec.rules.kinds.clear();
    int degree = 1;
    for (const auto& r : j.at("rules")) {
      check_keys(r, {"parent", "combinator", "argument", "prob"}, "rule");
      SynthRule sr;
      sr.parent = parse_category(r.at("parent").get<std::string>(), space);
      sr.combinator = parse_combinator(r.at("combinator").get<std::string>(), space);
      sr.argument = parse_category(r.at("argument").get<std::string>(), space);
      sr.prob = r.at("prob").get<double>();
      if (!spec.rules.enabled(sr.combinator.kind)) spec.rules.kinds.push_back(sr.combinator.kind);
      degree = std::max(degree, sr.combinator.degree);
      spec.expansions.push_back(sr);
    }
    spec.rules.max_comp_degree = degree;
    if (j.contains("leaf_prob"))
      for (const auto& [k, v] : j.at("leaf_prob").items()) spec.leaf_prob[parse_category(k, space)] = v.get<double>();
    for (const auto& t : j.at("tags")) {
      check_keys(t, {"id", "name", "category", "words", "weight"}, "tag");
      SynthTag tag;
      tag.id = t.at("id").get<int>();
      tag.name = t.value("name", std::to_string(tag.id));
      tag.category = parse_category(t.at("category").get<std::string>(), space);
      tag.words = t.at("words").get<std::vector<std::string>>();
      tag.weight = t.value("weight", 1.0);
      spec.tags.push_back(std::move(tag));
    }
    spec.max_length = j.value("max_length", std::size_t{8});
    if (j.contains("root")) spec.root = parse_category(j.at("root").get<std::string>(), space);
    if (j.contains("scenes")) {
      const auto& s = j.at("scenes");
      check_keys(s, {"alphabets", "objects", "words"}, "scenes");
      SceneTemplate tmpl;
      const auto& a = s.at("alphabets");
      check_keys(a, {"action", "color", "spatial", "geometry"}, "alphabets");
      tmpl.alphabets = {a.at("action").get<int>(), a.at("color").get<int>(), a.at("spatial").get<int>(),
                        a.at("geometry").get<int>()};
      tmpl.objects = s.value("objects", 3);
      for (const auto& [w, b] : s.at("words").items()) {
        check_keys(b, {"modality", "symbol"}, "word binding");
        WordBinding wb{parse_modality(b.at("modality").get<std::string>()), b.at("symbol").get<int>()};
        if (wb.modality == Modality::None || wb.symbol < 0 || wb.symbol >= tmpl.alphabets.size(wb.modality))
          throw SpecError("bad binding for word '" + w + "'");
        tmpl.words[w] = wb;
      }
      if (tmpl.objects < 2) throw SpecError("scenes need at least 2 objects");
      spec.scenes = std::move(tmpl);
    }
  } catch (const json::exception& e) {
    throw SpecError(std::string("bad synth spec: ") + e.what());
  } catch (const ConfigError& e) {
    throw SpecError(std::string("bad synth spec: ") + e.what());
  } catch (const SyntaxError& e) {
    throw SpecError(std::string("bad synth spec: ") + e.what());
  } catch (const LimitError& e) {
    throw SpecError(std::string("bad synth spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

std::string synth_spec_json(const SynthGrammarSpec& spec) {
  json j;
  j["format_version"] = 1;
  j["atoms"] = spec.rules.space.atoms;
  j["max_depth"] = spec.rules.space.max_depth;
  j["max_arity"] = spec.rules.space.max_arity;
  json rules = json::array();
  for (const auto& r : spec.expansions)
    rules.push_back({{"parent", r.parent.str()}, {"combinator", r.combinator.str()}, {"argument", r.argument.str()},
                     {"prob", r.prob}});
  j["rules"] = rules;
  json leaf = json::object();
  for (const auto& [c, p] : spec.leaf_prob) leaf[c.str()] = p;
  j["leaf_prob"] = leaf;
  json tags = json::array();
  for (const auto& t : spec.tags)
    tags.push_back({{"id", t.id}, {"name", t.name}, {"category", t.category.str()}, {"words", t.words}, {"weight", t.weight}});
  j["tags"] = tags;
  j["max_length"] = spec.max_length;
  j["root"] = spec.root.str();
  if (spec.scenes) {
    const auto& s = *spec.scenes;
    json words = json::object();
    for (const auto& [w, b] : s.words)
      words[w] = {{"modality", std::string(modality_name(b.modality))}, {"symbol", b.symbol}};
    j["scenes"] = {{"alphabets",
                    {{"action", s.alphabets.action},
                     {"color", s.alphabets.color},
                     {"spatial", s.alphabets.spatial},
                     {"geometry", s.alphabets.geometry}}},
                   {"objects", s.objects},
                   {"words", words}};
  }
  return j.dump(2);
}

SynthGrammarSpec default_synth_spec() {
  static const char* kSpec = R"({
  "format_version": 1,
  "atoms": ["S", "N"],
  "rules": [
    {"parent": "S",   "combinator": "FwdApp", "argument": "N", "prob": 0.6},
    {"parent": "S",   "combinator": "FwdApp", "argument": "S", "prob": 0.15},
    {"parent": "S",   "combinator": "BwdApp", "argument": "S", "prob": 0.25},
    {"parent": "S/N", "combinator": "FwdApp", "argument": "N", "prob": 0.3},
    {"parent": "S\\S", "combinator": "FwdApp", "argument": "N", "prob": 1.0},
    {"parent": "N",   "combinator": "FwdApp", "argument": "N", "prob": 0.55}
  ],
  "leaf_prob": {"S/N": 0.7, "(S/N)/N": 1.0, "S/S": 1.0, "(S\\S)/N": 1.0, "N/N": 1.0, "N": 0.45},
  "tags": [
    {"id": 0, "name": "verb",    "category": "S/N",     "words": ["push", "grab", "lift"]},
    {"id": 1, "name": "ditrans", "category": "(S/N)/N", "words": ["give", "hand"]},
    {"id": 2, "name": "please",  "category": "S/S",     "words": ["please"]},
    {"id": 3, "name": "prep",    "category": "(S\\S)/N", "words": ["near", "on"]},
    {"id": 4, "name": "det",     "category": "N/N",     "words": ["the", "a"]},
    {"id": 5, "name": "adj",     "category": "N/N",     "words": ["red", "blue", "green", "yellow"]},
    {"id": 6, "name": "noun",    "category": "N",       "words": ["box", "cup", "ball"]}
  ],
  "max_length": 8,
  "root": "S",
  "scenes": {
    "alphabets": {"action": 6, "color": 6, "spatial": 6, "geometry": 5},
    "objects": 3,
    "words": {
      "push": {"modality": "action", "symbol": 0}, "grab": {"modality": "action", "symbol": 1},
      "lift": {"modality": "action", "symbol": 2}, "give": {"modality": "action", "symbol": 3},
      "hand": {"modality": "action", "symbol": 4},
      "red": {"modality": "color", "symbol": 0}, "blue": {"modality": "color", "symbol": 1},
      "green": {"modality": "color", "symbol": 2}, "yellow": {"modality": "color", "symbol": 3},
      "near": {"modality": "spatial", "symbol": 0}, "on": {"modality": "spatial", "symbol": 1},
      "box": {"modality": "geometry", "symbol": 0}, "cup": {"modality": "geometry", "symbol": 1},
      "ball": {"modality": "geometry", "symbol": 2}
    }
  }
})";
  return parse_synth_spec(kSpec);
}

namespace {

class Generator {
 public:
  Generator(const SynthGrammarSpec& spec, Rng& rng) : spec_(spec), rng_(rng) {
    for (const auto& r : spec.expansions) by_parent_[r.parent].push_back({&r, children_of(r, spec.rules)});
  }

  // False when the sentence grew past the length cap.
  bool run(Derivation& d, std::vector<int>& tags) {
    d.nodes.clear();
    tags.clear();
    leaves_ = 0;
    return expand(spec_.root, d, tags);
  }

 private:
  bool expand(const Category& c, Derivation& d, std::vector<int>& tags) {
    const auto self = d.nodes.size();
    d.nodes.emplace_back();
    d.nodes[self].category = c;
    d.nodes[self].start = leaves_;

    std::vector<double> w;
    auto lp = spec_.leaf_prob.find(c);
    w.push_back(lp == spec_.leaf_prob.end() ? 0.0 : lp->second);
    const auto& options = by_parent_[c];
    for (const auto& o : options) w.push_back(o.first->prob);
    const std::size_t k = sample_linear(rng_, w);
    if (k >= w.size()) throw SpecError("no way to expand " + c.str());

    if (k == 0) {
      if (++leaves_ > spec_.max_length) return false;
      std::vector<const SynthTag*> cands;
      std::vector<double> tw;
      for (const auto& t : spec_.tags)
        if (t.category == c && !t.words.empty()) {
          cands.push_back(&t);
          tw.push_back(t.weight);
        }
      const SynthTag* tag = cands[sample_linear(rng_, tw)];
      DerivationNode& n = d.nodes[self];
      n.rule = Combinator::lex();
      n.token = tag->words[uniform_index(rng_, tag->words.size())];
      n.end = leaves_;
      tags.push_back(tag->id);
      return true;
    }
    const auto& [rule, ch] = options[k - 1];
    d.nodes[self].rule = rule->combinator;
    d.nodes[self].argument = rule->argument;
    d.nodes[self].left = static_cast<int>(d.nodes.size());
    if (!expand(ch.left, d, tags)) return false;
    d.nodes[self].right = static_cast<int>(d.nodes.size());
    if (!expand(ch.right, d, tags)) return false;
    d.nodes[self].end = leaves_;
    return true;
  }

  const SynthGrammarSpec& spec_;
  Rng& rng_;
  std::map<Category, std::vector<std::pair<const SynthRule*, Children>>> by_parent_;
  std::size_t leaves_ = 0;
};

}  // namespace

SynthCorpus synth_corpus(const SynthGrammarSpec& spec, std::size_t n, Rng& rng) {
  spec.validate();
  Generator gen(spec, rng);
  SynthCorpus out;
  Derivation d;
  std::vector<int> tags;
  while (out.sentences.size() < n) {
    if (!gen.run(d, tags)) continue;
    out.sentences.push_back(d.tokens());
    out.gold_trees.push_back(d);
    out.gold_tags.push_back(tags);
    if (spec.scenes) out.scenes.push_back(synth_scene(out.sentences.back(), *spec.scenes, rng));
  }
  return out;
}

Scene synth_scene(const Sentence& tokens, const SceneTemplate& tmpl, Rng& rng) {
  const auto& a = tmpl.alphabets;
  const int n = std::max(2, tmpl.objects);
  Scene scene;
  auto rnd = [&](int size) { return static_cast<int>(uniform_index(rng, static_cast<std::size_t>(size))); };
  for (int i = 0; i < n; ++i) {
    SceneObject o;
    o.color = rnd(a.color);
    o.geometry = rnd(a.geometry);
    o.position = {uniform01(rng), uniform01(rng)};
    scene.objects.push_back(std::move(o));
  }
  std::optional<int> action, relation;
  int target = 0;
  for (const auto& w : tokens) {
    auto it = tmpl.words.find(w);
    if (it == tmpl.words.end()) continue;
    const WordBinding& b = it->second;
    switch (b.modality) {
      case Modality::Action:
        if (!action) action = b.symbol;
        break;
      case Modality::Color: scene.objects[static_cast<std::size_t>(target)].color = b.symbol; break;
      case Modality::Geometry: scene.objects[static_cast<std::size_t>(target)].geometry = b.symbol; break;
      case Modality::Spatial:
        if (!relation) relation = b.symbol;
        target = 1;
        break;
      case Modality::None: break;
    }
  }
  scene.action = action ? *action : rnd(a.action);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) scene.spatial.push_back({i, j, (i == 0 && j == 1 && relation) ? *relation : rnd(a.spatial)});

  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  for (int i = n - 1; i > 0; --i) std::swap(perm[static_cast<std::size_t>(i)], perm[uniform_index(rng, static_cast<std::size_t>(i) + 1)]);
  std::vector<SceneObject> shuffled(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) shuffled[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] = scene.objects[static_cast<std::size_t>(i)];
  scene.objects = std::move(shuffled);
  for (auto& r : scene.spatial) {
    r.from = perm[static_cast<std::size_t>(r.from)];
    r.to = perm[static_cast<std::size_t>(r.to)];
  }
  std::sort(scene.spatial.begin(), scene.spatial.end(),
            [](const SpatialRelation& x, const SpatialRelation& y) { return std::tie(x.from, x.to) < std::tie(y.from, y.to); });
  return scene;
}

InstructionFixture synth_instructions(std::size_t n, Rng& rng) {
  InstructionFixture fx;
  // Symbols beyond the named ones act as distractors. With six ordered
  // relations per scene a 2-symbol spatial alphabet would put every spatial
  // symbol in nearly every scene, and any word could hide there.
  fx.scenes.alphabets = {3, 6, 6, 5};
  fx.scenes.objects = 3;
  const std::vector<std::pair<Modality, std::vector<std::string>>> classes{
      {Modality::Action, {"push", "grab", "lift"}},
      {Modality::Color, {"red", "blue", "green", "yellow"}},
      {Modality::Spatial, {"near", "on"}},
      {Modality::Geometry, {"box", "cup", "ball"}}};
  for (const auto& [m, words] : classes)
    for (std::size_t i = 0; i < words.size(); ++i) {
      fx.scenes.words[words[i]] = {m, static_cast<int>(i)};
      fx.truth[words[i]] = m;
    }
  auto pick = [&](std::size_t cls) {
    const auto& words = classes[cls].second;
    return words[uniform_index(rng, words.size())];
  };
  for (std::size_t k = 0; k < n; ++k) {
    GroundingPair p;
    auto push = [&](std::size_t cls) {
      p.tokens.push_back(pick(cls));
      p.tags.push_back(static_cast<int>(cls));
    };
    push(0);
    auto descriptor = [&] {
      const bool color = uniform01(rng) < 0.7;
      const bool geom = !color || uniform01(rng) < 0.8;
      if (color) push(1);
      if (geom) push(3);
    };
    descriptor();
    if (uniform01(rng) < 0.7) {
      push(2);
      descriptor();
    }
    p.scene = synth_scene(p.tokens, fx.scenes, rng);
    fx.pairs.push_back(std::move(p));
  }
  return fx;
}

}  // namespace gccg::harness
