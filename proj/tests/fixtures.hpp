#pragma once

// Shared fixtures for unit and acceptance tests.

#include <map>
#include <string>
#include <vector>

#include "gccg/category.hpp"
#include "gccg/chart.hpp"
#include "gccg/pos.hpp"
#include "gccg/random.hpp"
#include "gccg/rules.hpp"
#include "oracles.hpp"

namespace fixtures {

// Library config and oracle rule list describing the same rule set.
struct RuleSetup {
  gccg::RuleConfig cfg;
  oracle::Rules rules;
};

inline RuleSetup make_rules(const std::vector<std::string>& kinds, int max_degree = 1,
                            std::vector<std::string> targets = {"S"},
                            std::vector<std::string> raisable = {"NP", "N"},
                            gccg::CategorySpace space = {}) {
  RuleSetup s;
  s.cfg.space = space;
  s.cfg.kinds.clear();
  s.cfg.max_comp_degree = max_degree;
  s.cfg.raise_targets.clear();
  s.cfg.raisable.clear();
  for (const auto& t : targets) s.cfg.raise_targets.push_back(gccg::parse_category(t, space));
  for (const auto& r : raisable) s.cfg.raisable.push_back(gccg::parse_category(r, space));
  s.rules.targets = targets;
  s.rules.raisable = raisable;
  s.rules.limits = {space.max_depth, space.max_arity};
  for (const auto& k : kinds) {
    s.cfg.kinds.push_back(gccg::parse_kind(k));
    const bool comp = k.find("Comp") != std::string::npos && k.find("Raise") == std::string::npos;
    const bool raise = k.find("Raise") != std::string::npos;
    if (comp) {
      for (int d = 1; d <= max_degree; ++d) s.rules.instances.push_back({k, d, ""});
    } else if (raise) {
      for (const auto& t : targets) s.rules.instances.push_back({k, 1, t});
    } else {
      s.rules.instances.push_back({k, 1, ""});
    }
  }
  return s;
}

inline const std::vector<std::string> kApp{"FwdApp", "BwdApp"};
inline const std::vector<std::string> kAppComp{"FwdApp", "BwdApp", "FwdComp", "BwdComp"};
inline const std::vector<std::string> kAppCompRaise{"FwdApp",  "BwdApp",   "FwdComp",
                                                    "BwdComp", "FwdRaise", "BwdRaise"};
inline const std::vector<std::string> kEverything{"FwdApp",       "BwdApp",       "FwdComp",
                                                  "BwdComp",      "FwdRaise",     "BwdRaise",
                                                  "FwdCrossComp", "BwdCrossComp", "FwdRaiseComp",
                                                  "BwdRaiseComp"};

// Random category of at most `depth` levels over `atoms`.
inline gccg::Category random_category(gccg::Rng& rng, const std::vector<std::string>& atoms, int depth,
                                      double p_atom = 0.45) {
  if (depth <= 1 || gccg::uniform01(rng) < p_atom)
    return gccg::Category::atom(atoms[gccg::uniform_index(rng, atoms.size())]);
  const auto slash = gccg::uniform01(rng) < 0.5 ? gccg::Slash::Forward : gccg::Slash::Backward;
  auto res = random_category(rng, atoms, depth - 1, p_atom);
  auto arg = random_category(rng, atoms, depth - 1, p_atom);
  return gccg::Category::complex(res, slash, arg);
}

inline oracle::Rule to_rule(const gccg::Combinator& c) {
  return {std::string(gccg::kind_name(c.kind)), c.degree, c.target.valid() ? c.target.str() : ""};
}

inline oracle::TermP to_term(const gccg::Category& c) { return oracle::parse(c.str()); }

// Weight table keyed on event text; deterministic pseudo-random values.
inline double event_weight(const std::string& parent, const std::string& rule, const std::string& arg) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const std::string* s : {&parent, &rule, &arg})
    for (unsigned char ch : *s) h = (h ^ ch) * 1099511628211ULL;
  return 0.25 + static_cast<double>(h % 1000) / 400.0;
}

class HashScorer final : public gccg::ExpansionScorer {
 public:
  double expansion(const gccg::Category& p, const gccg::Combinator& r, const gccg::Category& a) const override {
    return std::log(event_weight(p.str(), r.str(), a.str()));
  }
  double emission(const gccg::Category& c, std::string_view s) const override {
    return std::log(event_weight(c.str(), "Lex", std::string(s)));
  }
};

inline double tree_weight(const oracle::Tree& t) {
  double w = 1.0;
  for (const auto& e : t.events) w *= event_weight(e[0], e[1], e[2]);
  for (const auto& [c, tok] : t.leaves) w *= event_weight(c, "Lex", tok);
  return w;
}

inline gccg::Lexicon to_lexicon(const oracle::Lexicon& lex, const gccg::CategorySpace& space = {}) {
  gccg::Lexicon out;
  for (const auto& [w, cats] : lex)
    for (const auto& c : cats) out.add(w, gccg::parse_category(c, space));
  return out;
}

}  // namespace fixtures

namespace fixtures {

// A K-tag HMM whose tags each emit mostly from their own block of words.
struct HmmCorpus {
  std::vector<gccg::Sentence> sentences;
  std::vector<std::vector<int>> gold;
};

inline HmmCorpus synth_hmm(int K, int V, int tokens, std::uint64_t seed, double own_mass = 0.9) {
  gccg::Rng rng = gccg::make_rng(seed, 99);
  const int block = V / K;
  std::vector<std::vector<double>> trans(static_cast<std::size_t>(K + 1), std::vector<double>(K));
  for (int r = 0; r <= K; ++r)
    for (int k = 0; k < K; ++k) {
      // mostly a cycle r -> r+1, with some noise
      trans[r][k] = (r < K && k == (r + 1) % K) ? 6.0 : 0.2 + gccg::uniform01(rng);
    }
  HmmCorpus out;
  int made = 0;
  while (made < tokens) {
    const int len = 4 + static_cast<int>(gccg::uniform_index(rng, 7));
    gccg::Sentence s;
    std::vector<int> z;
    int prev = K;
    for (int i = 0; i < len && made < tokens; ++i, ++made) {
      const int k = static_cast<int>(gccg::sample_linear(rng, trans[static_cast<std::size_t>(prev)]));
      int w;
      if (gccg::uniform01(rng) < own_mass)
        w = k * block + static_cast<int>(gccg::uniform_index(rng, static_cast<std::size_t>(block)));
      else
        w = static_cast<int>(gccg::uniform_index(rng, static_cast<std::size_t>(V)));
      s.push_back("w" + std::to_string(w));
      z.push_back(k);
      prev = k;
    }
    out.sentences.push_back(std::move(s));
    out.gold.push_back(std::move(z));
  }
  return out;
}

// Many-to-one accuracy, computed directly.
inline double many_to_one(const std::vector<std::vector<int>>& pred, const std::vector<std::vector<int>>& gold) {
  std::map<int, std::map<int, int>> table;
  int n = 0;
  for (std::size_t s = 0; s < pred.size(); ++s)
    for (std::size_t i = 0; i < pred[s].size(); ++i, ++n) ++table[pred[s][i]][gold[s][i]];
  int hit = 0;
  for (const auto& [p, row] : table) {
    int best = 0;
    for (const auto& [g, c] : row) best = std::max(best, c);
    hit += best;
  }
  return n ? double(hit) / n : 0.0;
}

}  // namespace fixtures
