#include "gccg/hdp.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <set>

#include <json.hpp>

#include "gccg/errors.hpp"
#include "gccg/log_math.hpp"

namespace gccg {

// ---- base distribution ------------------------------------------------------

void BaseDistribution::validate() const {
  if (atoms.empty()) throw ConfigError("base distribution has no atoms");
  if (!(p_slash >= 0.0) || p_slash >= 1.0) throw ConfigError("p_slash must be in [0, 1)");
  if (!(p_forward >= 0.0) || p_forward > 1.0) throw ConfigError("p_forward must be in [0, 1]");
  if (!atom_probs.empty()) {
    if (atom_probs.size() != atoms.size()) throw ConfigError("atom_probs must match atoms");
    double s = 0.0;
    for (double p : atom_probs) {
      if (!(p >= 0.0)) throw ConfigError("atom probabilities must be nonnegative");
      s += p;
    }
    if (std::abs(s - 1.0) > 1e-9) throw ConfigError("atom probabilities must sum to 1");
  }
}

double BaseDistribution::atom_prob(const std::string& name) const {
  for (std::size_t i = 0; i < atoms.size(); ++i)
    if (atoms[i] == name) return atom_probs.empty() ? 1.0 / static_cast<double>(atoms.size()) : atom_probs[i];
  return 0.0;
}

double g0_log_prob(const Category& c, const BaseDistribution& base) {
  if (c.is_atom()) return std::log1p(-base.p_slash) + std::log(base.atom_prob(c.atom_name()));
  const double dir = c.slash() == Slash::Forward ? base.p_forward : 1.0 - base.p_forward;
  return std::log(base.p_slash) + std::log(dir) + g0_log_prob(c.result(), base) + g0_log_prob(c.argument(), base);
}

double g0_mass_within_depth(int d, const BaseDistribution& base) {
  double atoms = 0.0;
  for (const auto& a : base.atoms) atoms += base.atom_prob(a);
  double q = 0.0;
  for (int k = 1; k <= d; ++k) q = (1.0 - base.p_slash) * atoms + base.p_slash * q * q;
  return q;
}

// ---- config -------------------------------------------------------------------

namespace {

RuleConfig fuse_raises(RuleConfig cfg) {
  std::vector<CombinatorKind> kinds;
  auto add = [&](CombinatorKind k) {
    if (std::find(kinds.begin(), kinds.end(), k) == kinds.end()) kinds.push_back(k);
  };
  for (CombinatorKind k : cfg.kinds) {
    if (k == CombinatorKind::FwdRaise)
      add(CombinatorKind::FwdRaiseComp);
    else if (k == CombinatorKind::BwdRaise)
      add(CombinatorKind::BwdRaiseComp);
    else if (k != CombinatorKind::Lex)
      add(k);
  }
  std::sort(kinds.begin(), kinds.end());
  cfg.kinds = kinds;
  return cfg;
}

}  // namespace

void HdpConfig::validate() const {
  rules.validate();
  if (num_tags < 1) throw ConfigError("num_tags must be positive");
  if (!(alpha_dp > 0.0)) throw ConfigError("alpha_dp must be positive");
  if (!(gamma > 0.0)) throw ConfigError("gamma must be positive");
  if (!(kind_prior > 0.0)) throw ConfigError("kind prior must be positive");
  if (!(alpha_emit > 0.0)) throw ConfigError("alpha_emit must be positive");
  if (!root.valid() || !rules.space.within_limits(root)) throw ConfigError("root category outside the space");
  if (fixed_pool_depth && *fixed_pool_depth < 1) throw ConfigError("fixed pool depth must be positive");
  BaseDistribution b = base;
  if (b.atoms.empty()) b.atoms = rules.space.atoms;
  b.validate();
}

// ---- events and counts -------------------------------------------------------

std::vector<ExpansionEvent> derivation_events(const Derivation& d) {
  std::vector<ExpansionEvent> out;
  out.reserve(d.nodes.size());
  for (const auto& n : d.nodes) {
    ExpansionEvent e;
    e.parent = n.category;
    if (n.leaf()) {
      e.leaf = true;
      int tag = -1;
      const auto* b = n.token.data();
      auto [p, ec] = std::from_chars(b, b + n.token.size(), tag);
      if (ec != std::errc() || p != b + n.token.size() || tag < 0)
        throw DataError("leaf token '" + n.token + "' is not a tag id");
      e.tag = tag;
    } else {
      if (n.right < 0) throw DataError("unary node in an induction derivation");
      e.combinator = n.rule;
      e.argument = n.argument;
    }
    out.push_back(std::move(e));
  }
  return out;
}

int HdpState::kind_index(const Combinator& c) const {
  for (std::size_t i = 0; i < kinds.size(); ++i)
    if (kinds[i] == c) return static_cast<int>(i);
  return -1;
}

double HdpState::g0_log(const Category& c) const {
  auto it = g0_cache_.find(c);
  if (it != g0_cache_.end()) return it->second;
  const double v = g0_log_prob(c, config.base);
  g0_cache_.emplace(c, v);
  return v;
}

double HdpState::kind_log_predictive(const Category& parent, int kind) const {
  const double nk = static_cast<double>(kinds.size() + 1);
  auto it = kind_counts.find(parent);
  const double c = it == kind_counts.end() ? 0.0 : static_cast<double>(it->second[static_cast<std::size_t>(kind)]);
  auto t = parent_total.find(parent);
  const double n = t == parent_total.end() ? 0.0 : static_cast<double>(t->second);
  return std::log((c + config.kind_prior) / (n + nk * config.kind_prior));
}

double HdpState::crp_log_predictive(const Category& parent, int kind, const Category& y) const {
  const double a = config.alpha_dp;
  const double g = g0_log(y);
  auto it = restaurants.find({parent, kind});
  if (it == restaurants.end() || it->second.total == 0) return g;
  const Restaurant& r = it->second;
  auto c = r.customers.find(y);
  const double n_y = c == r.customers.end() ? 0.0 : static_cast<double>(c->second);
  return std::log(n_y + a * std::exp(g)) - std::log(static_cast<double>(r.total) + a);
}

double HdpState::emit_log_predictive(const Category& parent, int tag) const {
  if (tag < 0 || tag >= config.num_tags) return kLogZero;
  auto it = emit_counts.find(parent);
  const double c = it == emit_counts.end() ? 0.0 : static_cast<double>(it->second[static_cast<std::size_t>(tag)]);
  auto t = emit_total.find(parent);
  const double n = t == emit_total.end() ? 0.0 : static_cast<double>(t->second);
  return std::log((c + config.alpha_emit) / (n + config.num_tags * config.alpha_emit));
}

double HdpState::event_log_predictive(const ExpansionEvent& e) const {
  if (e.leaf) return kind_log_predictive(e.parent, leaf_kind()) + emit_log_predictive(e.parent, e.tag);
  const int k = kind_index(e.combinator);
  if (k < 0) return kLogZero;
  return kind_log_predictive(e.parent, k) + crp_log_predictive(e.parent, k, e.argument);
}

void HdpState::add(const ExpansionEvent& e, int delta) {
  const int k = e.leaf ? leaf_kind() : kind_index(e.combinator);
  if (k < 0) throw InvariantError("event uses a disabled combinator " + e.combinator.str());
  auto& kc = kind_counts[e.parent];
  if (kc.empty()) kc.assign(kinds.size() + 1, 0);
  kc[static_cast<std::size_t>(k)] += delta;
  parent_total[e.parent] += delta;
  if (kc[static_cast<std::size_t>(k)] < 0) throw InvariantError("negative kind count for " + e.parent.str());
  if (e.leaf) {
    if (e.tag < 0 || e.tag >= config.num_tags) throw DataError("tag id " + std::to_string(e.tag) + " out of range");
    auto& ec = emit_counts[e.parent];
    if (ec.empty()) ec.assign(static_cast<std::size_t>(config.num_tags), 0);
    ec[static_cast<std::size_t>(e.tag)] += delta;
    emit_total[e.parent] += delta;
    if (ec[static_cast<std::size_t>(e.tag)] < 0) throw InvariantError("negative emission count");
  } else {
    Restaurant& r = restaurants[{e.parent, k}];
    auto& n = r.customers[e.argument];
    n += delta;
    r.total += delta;
    if (n < 0) throw InvariantError("negative customer count");
    if (n == 0) r.customers.erase(e.argument);
  }
}

void HdpState::add(const std::vector<ExpansionEvent>& events, int delta) {
  for (const auto& e : events) add(e, delta);
}

HdpState hdp_empty(const HdpConfig& config) {
  HdpState st;
  st.config = config;
  st.config.rules = fuse_raises(config.rules);
  if (st.config.base.atoms.empty()) st.config.base.atoms = st.config.rules.space.atoms;
  st.config.validate();
  for (const auto& c : st.config.rules.instances())
    if (!is_unary(c.kind)) st.kinds.push_back(c);
  return st;
}

double crp_predictive(const HdpState& state, const Category& parent, const Combinator& kind, const Category& y) {
  const int k = state.kind_index(kind);
  if (k < 0) return 0.0;
  return std::exp(state.crp_log_predictive(parent, k, y));
}

double HdpScorer::expansion(const Category& parent, const Combinator& rule, const Category& argument) const {
  ExpansionEvent e;
  e.parent = parent;
  e.combinator = rule;
  e.argument = argument;
  return state_.event_log_predictive(e);
}

double HdpScorer::emission(const Category& cat, std::string_view symbol) const {
  int tag = -1;
  auto [p, ec] = std::from_chars(symbol.data(), symbol.data() + symbol.size(), tag);
  if (ec != std::errc() || p != symbol.data() + symbol.size()) return kLogZero;
  return state_.kind_log_predictive(cat, state_.leaf_kind()) + state_.emit_log_predictive(cat, tag);
}

// ---- candidate pool -----------------------------------------------------------

std::vector<Category> categories_within(int depth, const CategorySpace& space) {
  std::vector<std::vector<Category>> by_depth(static_cast<std::size_t>(std::max(depth, 0)) + 1);
  if (depth < 1) return {};
  for (const auto& a : space.atoms) by_depth[1].push_back(Category::atom(a));
  for (int d = 2; d <= depth; ++d) {
    std::vector<Category> lower;
    for (int k = 1; k < d; ++k) lower.insert(lower.end(), by_depth[k].begin(), by_depth[k].end());
    for (const auto& r : lower)
      for (const auto& a : lower) {
        if (std::max(r.depth(), a.depth()) != d - 1) continue;
        for (Slash s : {Slash::Forward, Slash::Backward}) {
          Category c = Category::complex(r, s, a);
          if (c.arity() <= space.max_arity) by_depth[static_cast<std::size_t>(d)].push_back(std::move(c));
        }
      }
  }
  std::vector<Category> out;
  for (const auto& v : by_depth) out.insert(out.end(), v.begin(), v.end());
  std::sort(out.begin(), out.end());
  return out;
}

CandidatePool candidate_pool(const HdpState& state, const RuleConfig& rules) {
  CandidatePool pool;
  if (state.config.fixed_pool_depth) {
    CategorySpace space = rules.space;
    const int d = std::min(*state.config.fixed_pool_depth, space.max_depth);
    pool.categories = categories_within(d, space);
    pool.arguments = pool.categories;
    return pool;
  }
  std::set<Category> base, args;
  for (const auto& a : rules.space.atoms) {
    base.insert(Category::atom(a));
    args.insert(Category::atom(a));
  }
  for (const auto& d : state.derivations)
    for (const auto& n : d.nodes) {
      if (!rules.space.within_limits(n.category)) continue;
      base.insert(n.category);
      if (n.argument.valid() && rules.space.within_limits(n.argument)) args.insert(n.argument);
    }
  const std::vector<Category> arg_vec(args.begin(), args.end());
  std::set<Category> all = base;
  for (const auto& c : base)
    for (const auto& e : enumerate_expansions(c, rules, arg_vec)) {
      all.insert(e.left);
      if (e.right.valid()) all.insert(e.right);
    }
  pool.categories.assign(all.begin(), all.end());
  pool.arguments = arg_vec;
  return pool;
}

// ---- inference ----------------------------------------------------------------

namespace {

std::vector<std::string> tag_tokens(const std::vector<int>& tags) {
  std::vector<std::string> out;
  out.reserve(tags.size());
  for (int t : tags) out.push_back(std::to_string(t));
  return out;
}

void check_tags(const std::vector<std::vector<int>>& tags, int K) {
  bool any = false;
  for (std::size_t s = 0; s < tags.size(); ++s) {
    if (tags[s].empty()) throw EmptyInput("sentence " + std::to_string(s) + " is empty");
    any = true;
    for (int t : tags[s])
      if (t < 0 || t >= K)
        throw DataError("sentence " + std::to_string(s) + " has tag " + std::to_string(t) + " outside [0, " +
                        std::to_string(K) + ")");
  }
  if (!any) throw EmptyCorpus("induction needs at least one sentence");
}

struct Proposal {
  PackedChart chart;
  bool widened = false;
};

// Chart over the iteration's pool; on NoParse one retry with the depth cap
// raised by one for this sentence.
Proposal propose_chart(const HdpState& st, const RuleTable& table, const std::vector<std::string>& tokens,
                       const ExpansionScorer& scorer) {
  Proposal p{build_chart(tokens, table, st.config.chart), false};
  if (p.chart.find(0, tokens.size(), st.config.root) == kNoItem) {
    RuleConfig wide = st.config.rules;
    wide.space.max_depth += 1;
    const CandidatePool pool = candidate_pool(st, wide);
    const RuleTable t2 = RuleTable::compile(pool.categories, pool.arguments, wide);
    p.chart = build_chart(tokens, t2, st.config.chart);
    p.widened = true;
    if (p.chart.find(0, tokens.size(), st.config.root) == kNoItem)
      throw NoParse("no derivation of " + st.config.root.str() + " even with the depth cap raised");
  }
  inside_weights(p.chart, scorer);
  return p;
}

double alpha_log_density(const HdpState& st, double alpha) {
  double lp = -alpha;  // Gamma(1, 1) prior
  for (const auto& [key, r] : st.restaurants) {
    if (r.total == 0) continue;
    for (const auto& [y, n] : r.customers) {
      const double ag = alpha * std::exp(st.g0_log(y));
      lp += log_gamma(static_cast<double>(n) + ag) - log_gamma(ag);
    }
    lp += log_gamma(alpha) - log_gamma(static_cast<double>(r.total) + alpha);
  }
  return lp;
}

// Stepping-out slice sampler on log alpha.
double slice_alpha(const HdpState& st, double alpha, Rng& rng) {
  auto f = [&](double u) { return alpha_log_density(st, std::exp(u)) + u; };
  const double u0 = std::log(alpha);
  const double level = f(u0) + std::log(1.0 - uniform01(rng));
  const double w = 1.0;
  double lo = u0 - w * uniform01(rng), hi = lo + w;
  for (int i = 0; i < 20 && f(lo) > level; ++i) lo -= w;
  for (int i = 0; i < 20 && f(hi) > level; ++i) hi += w;
  for (int i = 0; i < 200; ++i) {
    const double u = lo + (hi - lo) * uniform01(rng);
    if (f(u) > level) return std::exp(u);
    (u < u0 ? lo : hi) = u;
  }
  return alpha;
}

}  // namespace

HdpState hdp_init(const std::vector<std::vector<int>>& tags, const HdpConfig& config, Rng& rng) {
  HdpState st = hdp_empty(config);
  check_tags(tags, st.config.num_tags);
  st.sentences = tags;
  const CandidatePool pool = candidate_pool(st, st.config.rules);
  const RuleTable table = RuleTable::compile(pool.categories, pool.arguments, st.config.rules);
  const UniformScorer uniform;
  for (const auto& sent : tags) {
    Proposal p = propose_chart(st, table, tag_tokens(sent), uniform);
    Derivation d = sample_derivation(p.chart, st.config.root, rng);
    st.add(derivation_events(d), +1);
    st.derivations.push_back(std::move(d));
    st.escaped.push_back(p.widened);
    st.escapes += p.widened;
  }
  return st;
}

HdpState hdp_from_derivations(const std::vector<std::vector<int>>& tags, std::vector<Derivation> derivations,
                              const HdpConfig& config) {
  HdpState st = hdp_empty(config);
  check_tags(tags, st.config.num_tags);
  if (derivations.size() != tags.size())
    throw LengthMismatch(std::to_string(tags.size()) + " sentences but " + std::to_string(derivations.size()) +
                         " derivations");
  st.sentences = tags;
  for (std::size_t s = 0; s < tags.size(); ++s) {
    if (derivations[s].tokens() != tag_tokens(tags[s]))
      throw DataError("derivation " + std::to_string(s) + " does not yield its sentence");
    bool wide = false;
    for (const auto& n : derivations[s].nodes) wide |= !st.config.rules.space.within_limits(n.category);
    st.escaped.push_back(wide);
    st.add(derivation_events(derivations[s]), +1);
  }
  st.derivations = std::move(derivations);
  return st;
}

double hdp_sequential_log_prob(HdpState& st, const std::vector<ExpansionEvent>& events) {
  double lp = 0.0;
  std::size_t added = 0;
  for (const auto& e : events) {
    lp += st.event_log_predictive(e);
    if (lp == kLogZero) break;
    st.add(e, +1);
    ++added;
  }
  for (std::size_t i = 0; i < added; ++i) st.add(events[i], -1);
  return lp;
}

double hdp_gibbs_iteration(HdpState& st, Rng& rng) {
  const CandidatePool pool = candidate_pool(st, st.config.rules);
  const RuleTable table = RuleTable::compile(pool.categories, pool.arguments, st.config.rules);
  for (std::size_t s = 0; s < st.sentences.size(); ++s) {
    const auto old_events = derivation_events(st.derivations[s]);
    st.add(old_events, -1);
    const HdpScorer scorer(st);
    Proposal p = propose_chart(st, table, tag_tokens(st.sentences[s]), scorer);
    Derivation next = sample_derivation(p.chart, st.config.root, rng);
    ++st.proposed;
    bool accept = next == st.derivations[s];
    std::vector<ExpansionEvent> new_events;
    if (!accept) {
      new_events = derivation_events(next);
      // q terms are the chart weights under the frozen counts; the exact
      // conditional updates counts within the sentence.
      const double q_new = derivation_log_weight(next, scorer);
      const double q_old = derivation_log_weight(st.derivations[s], scorer);
      const double p_new = hdp_sequential_log_prob(st, new_events);
      const double p_old = hdp_sequential_log_prob(st, old_events);
      const double log_a = (p_new - q_new) - (p_old - q_old);
      accept = log_a >= 0.0 || std::log(uniform01(rng)) < log_a;
    }
    if (accept) {
      ++st.accepted;
      if (p.widened) ++st.escapes;
      st.escaped[s] = p.widened;
      if (!new_events.empty()) {
        st.add(new_events, +1);
        st.derivations[s] = std::move(next);
        continue;
      }
    }
    st.add(old_events, +1);
  }
  if (st.config.resample_alpha) st.config.alpha_dp = slice_alpha(st, st.config.alpha_dp, rng);
  ++st.iteration;
  return hdp_log_joint(st);
}

double hdp_log_joint(const HdpState& st) {
  // Terms are summed in canonical key order so the value does not depend on
  // hash-table history.
  std::vector<std::pair<std::string, double>> terms;
  const double nk = static_cast<double>(st.kinds.size() + 1);
  for (const auto& [parent, counts] : st.kind_counts) {
    const auto n = st.parent_total.at(parent);
    if (n == 0) continue;
    double t = log_gamma(nk * st.config.kind_prior) - log_gamma(static_cast<double>(n) + nk * st.config.kind_prior);
    for (auto c : counts)
      if (c > 0) t += log_rising(st.config.kind_prior, static_cast<double>(c));
    terms.emplace_back("k " + parent.str(), t);
  }
  for (const auto& [key, r] : st.restaurants) {
    if (r.total == 0) continue;
    const double a = st.config.alpha_dp;
    std::vector<std::pair<std::string, double>> seats;
    for (const auto& [y, n] : r.customers) seats.emplace_back(y.str(), log_rising(a * std::exp(st.g0_log(y)), static_cast<double>(n)));
    std::sort(seats.begin(), seats.end());
    double t = log_gamma(a) - log_gamma(static_cast<double>(r.total) + a);
    for (const auto& s : seats) t += s.second;
    terms.emplace_back("r " + key.first.str() + " " + std::to_string(key.second), t);
  }
  const double K = st.config.num_tags;
  for (const auto& [parent, counts] : st.emit_counts) {
    const auto n = st.emit_total.at(parent);
    if (n == 0) continue;
    double t = log_gamma(K * st.config.alpha_emit) - log_gamma(static_cast<double>(n) + K * st.config.alpha_emit);
    for (auto c : counts)
      if (c > 0) t += log_rising(st.config.alpha_emit, static_cast<double>(c));
    terms.emplace_back("e " + parent.str(), t);
  }
  std::sort(terms.begin(), terms.end());
  double lp = 0.0;
  for (const auto& t : terms) lp += t.second;
  return lp;
}

// ---- audit --------------------------------------------------------------------

namespace {

std::vector<std::pair<std::string, std::int64_t>> flatten(const HdpState& st) {
  std::vector<std::pair<std::string, std::int64_t>> out;
  for (const auto& [p, v] : st.kind_counts)
    for (std::size_t k = 0; k < v.size(); ++k)
      if (v[k]) out.emplace_back("k " + p.str() + " " + std::to_string(k), v[k]);
  for (const auto& [p, n] : st.parent_total)
    if (n) out.emplace_back("t " + p.str(), n);
  for (const auto& [key, r] : st.restaurants) {
    if (r.total) out.emplace_back("rt " + key.first.str() + " " + std::to_string(key.second), r.total);
    for (const auto& [y, n] : r.customers)
      if (n) out.emplace_back("r " + key.first.str() + " " + std::to_string(key.second) + " " + y.str(), n);
  }
  for (const auto& [p, v] : st.emit_counts)
    for (std::size_t k = 0; k < v.size(); ++k)
      if (v[k]) out.emplace_back("e " + p.str() + " " + std::to_string(k), v[k]);
  for (const auto& [p, n] : st.emit_total)
    if (n) out.emplace_back("et " + p.str(), n);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::string hdp_audit(const HdpState& st) {
  if (st.derivations.size() != st.sentences.size()) return "derivation count differs from sentence count";
  HdpState fresh = hdp_empty(st.config);
  for (std::size_t s = 0; s < st.derivations.size(); ++s) {
    const Derivation& d = st.derivations[s];
    if (d.empty() || d.root().category != st.config.root) return "derivation " + std::to_string(s) + " is not rooted at the goal";
    if (d.tokens() != tag_tokens(st.sentences[s])) return "derivation " + std::to_string(s) + " does not yield its tags";
    CategorySpace space = st.config.rules.space;
    if (st.escaped[s]) space.max_depth += 1;
    RuleConfig cfg = st.config.rules;
    cfg.space = space;
    if (auto err = check_derivation(d, cfg); !err.empty()) return "derivation " + std::to_string(s) + ": " + err;
    for (const auto& n : d.nodes)
      if (!space.within_limits(n.category)) return "seated category " + n.category.str() + " breaks the limits";
    fresh.add(derivation_events(d), +1);
  }
  if (flatten(fresh) != flatten(st)) return "seating counts differ from a rebuild";
  return {};
}

// ---- reporting ----------------------------------------------------------------

Grammar extract_grammar(const HdpState& st, std::int64_t min_count) {
  Grammar g;
  for (const auto& [key, r] : st.restaurants)
    for (const auto& [y, n] : r.customers) {
      if (n < min_count || n == 0) continue;
      const double lp = st.kind_log_predictive(key.first, key.second) + st.crp_log_predictive(key.first, key.second, y);
      g.rules.push_back({key.first, st.kinds[static_cast<std::size_t>(key.second)], y, n, std::exp(lp)});
    }
  std::sort(g.rules.begin(), g.rules.end(), [](const GrammarRule& a, const GrammarRule& b) {
    if (a.parent != b.parent) return a.parent < b.parent;
    if (a.prob != b.prob) return a.prob > b.prob;
    if (a.combinator != b.combinator) return a.combinator < b.combinator;
    return a.argument < b.argument;
  });
  for (const auto& [p, counts] : st.emit_counts)
    for (std::size_t t = 0; t < counts.size(); ++t) {
      if (counts[t] < min_count || counts[t] == 0) continue;
      g.emissions.push_back({p, static_cast<int>(t), counts[t], std::exp(st.emit_log_predictive(p, static_cast<int>(t)))});
    }
  std::sort(g.emissions.begin(), g.emissions.end(), [](const LeafEmission& a, const LeafEmission& b) {
    if (a.parent != b.parent) return a.parent < b.parent;
    if (a.prob != b.prob) return a.prob > b.prob;
    return a.tag < b.tag;
  });
  return g;
}

std::string grammar_table(const Grammar& g) {
  std::string out;
  char buf[64];
  for (const auto& r : g.rules) {
    std::snprintf(buf, sizeof buf, "%.9g", r.prob);
    out += r.parent.str() + "\t" + r.combinator.str() + "\t" + r.argument.str() + "\t" + std::to_string(r.count) + "\t" +
           buf + "\n";
  }
  for (const auto& e : g.emissions) {
    std::snprintf(buf, sizeof buf, "%.9g", e.prob);
    out += e.parent.str() + "\tLex\t" + std::to_string(e.tag) + "\t" + std::to_string(e.count) + "\t" + buf + "\n";
  }
  return out;
}

std::vector<StickReport> stick_weights(const HdpState& st) {
  std::vector<StickReport> out;
  for (const auto& [key, r] : st.restaurants) {
    if (r.total == 0) continue;
    StickReport rep;
    rep.parent = key.first;
    rep.kind = st.kinds[static_cast<std::size_t>(key.second)];
    const double denom = static_cast<double>(r.total) + st.config.alpha_dp;
    for (const auto& [y, n] : r.customers) rep.sticks.emplace_back(y, static_cast<double>(n) / denom);
    std::sort(rep.sticks.begin(), rep.sticks.end(), [](const auto& a, const auto& b) {
      return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    rep.remainder = st.config.alpha_dp / denom;
    out.push_back(std::move(rep));
  }
  std::sort(out.begin(), out.end(), [](const StickReport& a, const StickReport& b) {
    return a.parent != b.parent ? a.parent < b.parent : a.kind < b.kind;
  });
  return out;
}

std::vector<std::pair<Category, double>> global_sticks(const HdpState& st, double* remainder) {
  std::map<Category, double> tables;
  double m = 0.0;
  for (const auto& [key, r] : st.restaurants)
    for (const auto& [y, n] : r.customers)
      if (n > 0) {
        tables[y] += 1.0;
        m += 1.0;
      }
  std::vector<std::pair<Category, double>> out;
  for (const auto& [y, t] : tables) out.emplace_back(y, t / (m + st.config.gamma));
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  if (remainder) *remainder = st.config.gamma / (m + st.config.gamma);
  return out;
}

// ---- checkpoint ---------------------------------------------------------------

std::string hdp_checkpoint(const HdpState& st, const Rng& rng) {
  nlohmann::json j;
  j["format_version"] = 1;
  j["iteration"] = st.iteration;
  j["escapes"] = st.escapes;
  j["accepted"] = st.accepted;
  j["proposed"] = st.proposed;
  j["alpha_dp"] = st.config.alpha_dp;
  j["rng"] = rng_state(rng);
  j["sentences"] = st.sentences;
  std::vector<std::string> trees;
  for (const auto& d : st.derivations) trees.push_back(to_bracketed(d));
  j["derivations"] = trees;
  return j.dump();
}

HdpState hdp_restore(const std::string& text, const HdpConfig& config, Rng& rng) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("format_version").get<int>() != 1) throw DataError("unsupported checkpoint format_version");
    HdpConfig cfg = config;
    cfg.alpha_dp = j.at("alpha_dp").get<double>();
    const auto tags = j.at("sentences").get<std::vector<std::vector<int>>>();
    const HdpState shell = hdp_empty(cfg);
    RuleConfig wide = shell.config.rules;
    wide.space.max_depth += 1;  // escaped derivations may sit one level deeper
    std::vector<Derivation> ds;
    for (const auto& t : j.at("derivations")) ds.push_back(read_bracketed(t.get<std::string>(), wide));
    HdpState st = hdp_from_derivations(tags, std::move(ds), cfg);
    st.iteration = j.at("iteration").get<std::uint64_t>();
    st.escapes = j.at("escapes").get<std::uint64_t>();
    st.accepted = j.at("accepted").get<std::uint64_t>();
    st.proposed = j.at("proposed").get<std::uint64_t>();
    restore_rng_state(rng, j.at("rng").get<std::string>());
    return st;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed checkpoint: ") + e.what());
  }
}

}  // namespace gccg
