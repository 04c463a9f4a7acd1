#pragma once

// The capped-pool induction fixture shared by the unit tests and the
// acceptance binary: exact posterior over derivation pairs by enumeration,
// compared with the sampler's empirical distribution.

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "gccg/hdp.hpp"
#include "oracles.hpp"

namespace fixtures {

inline gccg::HdpConfig capped_pool_config() {
  gccg::HdpConfig cfg;
  cfg.rules.space.atoms = {"S", "N"};
  cfg.rules.kinds = {gccg::CombinatorKind::FwdApp, gccg::CombinatorKind::BwdApp};
  cfg.rules.raise_targets.clear();
  cfg.rules.raisable.clear();
  cfg.num_tags = 2;
  cfg.fixed_pool_depth = 2;
  return cfg;
}

struct ExactCheck {
  double tv = 1.0;
  std::size_t support = 0;      // derivation pairs with nonzero mass
  std::size_t unmatched = 0;    // sampled pairs outside the enumerated support
  double perplexity = 0.0;      // exp(entropy) of the exact posterior
  double acceptance = 0.0;
  bool audits_ok = true;
};

inline std::map<std::string, double> exact_pair_posterior(const std::vector<std::vector<int>>& sents,
                                                           const gccg::HdpConfig& cfg) {
  std::vector<std::string> pool;
  for (const auto& c : gccg::categories_within(2, cfg.rules.space)) pool.push_back(c.str());
  oracle::Rules rules;
  rules.instances = {{"FwdApp", 1, ""}, {"BwdApp", 1, ""}};
  rules.limits = {cfg.rules.space.max_depth, cfg.rules.space.max_arity};
  oracle::Lexicon lex;
  for (int t = 0; t < cfg.num_tags; ++t) lex[std::to_string(t)] = pool;
  std::vector<std::vector<oracle::Tree>> per;
  for (const auto& s : sents) {
    std::vector<std::string> toks;
    for (int t : s) toks.push_back(std::to_string(t));
    oracle::Enumerator en(toks, lex, rules);
    en.keep = [](const std::string& c) { return oracle::depth(oracle::parse(c)) <= 2; };
    per.push_back(en.goal_trees("S"));
  }
  oracle::HdpParams p;
  p.num_kinds = 3;
  p.kind_prior = cfg.kind_prior;
  p.alpha = cfg.alpha_dp;
  p.alpha_emit = cfg.alpha_emit;
  p.num_tags = cfg.num_tags;
  p.atoms = cfg.rules.space.atoms;
  p.p_slash = cfg.base.p_slash;
  std::map<std::string, double> out;
  double z = 0.0;
  // two sentences
  for (const auto& a : per.at(0))
    for (const auto& b : per.at(1)) {
      const double w = oracle::hdp_joint({&a, &b}, p);
      out[a.text + " | " + b.text] += w;
      z += w;
    }
  for (auto& [k, v] : out) v /= z;
  return out;
}

inline ExactCheck run_exact_check(const std::vector<std::vector<int>>& sents, int iterations, std::uint64_t seed,
                                  int audit_every = 0) {
  const gccg::HdpConfig cfg = capped_pool_config();
  const auto exact = exact_pair_posterior(sents, cfg);
  ExactCheck out;
  out.support = exact.size();
  double h = 0.0;
  for (const auto& [k, v] : exact)
    if (v > 0) h -= v * std::log(v);
  out.perplexity = std::exp(h);

  gccg::Rng rng = gccg::make_rng(seed);
  gccg::HdpState st = gccg::hdp_init(sents, cfg, rng);
  for (int i = 0; i < 200; ++i) gccg::hdp_gibbs_iteration(st, rng);
  std::map<std::string, double> got;
  const std::uint64_t acc0 = st.accepted, prop0 = st.proposed;
  for (int i = 0; i < iterations; ++i) {
    gccg::hdp_gibbs_iteration(st, rng);
    if (audit_every > 0 && i % audit_every == 0 && !gccg::hdp_audit(st).empty()) out.audits_ok = false;
    const std::string key = gccg::to_bracketed(st.derivations[0]) + " | " + gccg::to_bracketed(st.derivations[1]);
    got[key] += 1.0 / iterations;
  }
  out.acceptance = static_cast<double>(st.accepted - acc0) / static_cast<double>(st.proposed - prop0);
  double tv = 0.0;
  for (const auto& [k, v] : exact) {
    auto it = got.find(k);
    tv += std::abs(v - (it == got.end() ? 0.0 : it->second));
  }
  for (const auto& [k, v] : got)
    if (!exact.count(k)) {
      tv += v;
      ++out.unmatched;
    }
  out.tv = tv / 2;
  return out;
}

}  // namespace fixtures
