#include "gccg/chart.hpp"

#include <algorithm>
#include <cassert>
#include <cctype>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "gccg/errors.hpp"

namespace gccg {

// ---------------------------------------------------------------- Lexicon

void Lexicon::add(const std::string& symbol, const Category& cat, double weight) {
  if (!(weight >= 0.0) || !std::isfinite(weight))
    throw DataError("lexicon weight for " + symbol + " must be finite and nonnegative");
  auto& list = entries_[symbol];
  for (auto& e : list) {
    if (e.category == cat) {
      e.weight += weight;
      return;
    }
  }
  list.push_back({cat, weight});
}

const std::vector<LexEntry>* Lexicon::find(std::string_view symbol) const {
  auto it = entries_.find(symbol);
  return it == entries_.end() ? nullptr : &it->second;
}

double Lexicon::weight(std::string_view symbol, const Category& cat) const {
  if (const auto* list = find(symbol))
    for (const auto& e : *list)
      if (e.category == cat) return e.weight;
  return 0.0;
}

std::vector<std::string> Lexicon::symbols() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [k, v] : entries_) out.push_back(k);
  return out;
}

Lexicon Lexicon::load(const std::string& path, const CategorySpace& space) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open lexicon " + path);
  Lexicon lex;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string symbol, cat_text, weight_text;
    if (!(fields >> symbol)) continue;
    if (!(fields >> cat_text)) throw LineError(path, lineno, "missing category");
    double weight = 1.0;
    if (fields >> weight_text) {
      try {
        weight = std::stod(weight_text);
      } catch (const std::exception&) {
        throw LineError(path, lineno, "bad weight '" + weight_text + "'");
      }
    }
    try {
      lex.add(symbol, parse_category(cat_text, space), weight);
    } catch (const DataError& e) {
      throw LineError(path, lineno, e.what());
    }
  }
  return lex;
}

double LexiconScorer::emission(const Category& cat, std::string_view symbol) const {
  const double w = lex_.weight(symbol, cat);
  return w > 0.0 ? std::log(w) : kLogZero;
}

// ---------------------------------------------------------- CategoryIndex

CatId CategoryIndex::intern(const Category& c) {
  auto [it, fresh] = ids.emplace(c, static_cast<CatId>(cats.size()));
  if (fresh) cats.push_back(c);
  return it->second;
}

std::optional<CatId> CategoryIndex::find(const Category& c) const {
  auto it = ids.find(c);
  if (it == ids.end()) return std::nullopt;
  return it->second;
}

// -------------------------------------------------------------- RuleTable

RuleTable RuleTable::compile(std::vector<Category> pool, const std::vector<Category>& arg_pool,
                             const RuleConfig& cfg) {
  for (CombinatorKind k : cfg.kinds)
    if (is_raise(k))
      throw ConfigError("compiled rule tables take fused raise kinds, not " + std::string(kind_name(k)));
  std::sort(pool.begin(), pool.end());
  pool.erase(std::unique(pool.begin(), pool.end()), pool.end());

  RuleTable t;
  t.cfg_ = cfg;
  auto index = std::make_shared<CategoryIndex>();
  for (const Category& c : pool) index->intern(c);

  for (CatId parent = 0; parent < index->cats.size(); ++parent) {
    for (const Expansion& e : enumerate_expansions(index->cats[parent], cfg, arg_pool)) {
      const auto l = index->find(e.left);
      const auto r = index->find(e.right);
      const auto a = index->find(e.argument);
      if (!l || !r || !a) continue;
      auto cit = std::find(t.combinators_.begin(), t.combinators_.end(), e.rule);
      const auto comb = static_cast<std::uint32_t>(cit - t.combinators_.begin());
      if (cit == t.combinators_.end()) t.combinators_.push_back(e.rule);
      t.rules_.push_back({parent, comb, *a, *l, *r});
    }
  }
  t.by_left_.assign(index->cats.size(), {});
  for (std::uint32_t i = 0; i < t.rules_.size(); ++i) t.by_left_[t.rules_[i].left].push_back(i);
  t.index_ = std::move(index);
  return t;
}

std::optional<CatId> RuleTable::id(const Category& c) const { return index_->find(c); }

// ----------------------------------------------------------- ChartBuilder

class ChartBuilder {
 public:
  ChartBuilder(const std::vector<std::string>& tokens, const RuleConfig& cfg,
               const ChartOptions& options) {
    if (tokens.empty()) throw EmptyInput("cannot parse an empty sentence");
    if (tokens.size() > options.max_length)
      throw DataError("sentence of " + std::to_string(tokens.size()) + " tokens exceeds max_length " +
                      std::to_string(options.max_length));
    chart_.tokens_ = tokens;
    chart_.cfg_ = cfg;
    const std::size_t n = tokens.size();
    chart_.cells_.assign(n * (n + 1) / 2, {});
    chart_.lookup_.assign(n * (n + 1) / 2, {});
  }

  std::uint32_t combinator_id(const Combinator& c) {
    auto& list = chart_.combinators_;
    auto it = std::find(list.begin(), list.end(), c);
    if (it != list.end()) return static_cast<std::uint32_t>(it - list.begin());
    list.push_back(c);
    return static_cast<std::uint32_t>(list.size() - 1);
  }

  ItemId lookup(std::size_t span, CatId cat) const {
    const auto& dense = chart_.lookup_[span];
    return cat < dense.size() ? dense[cat] : kNoItem;
  }

  void add(std::size_t start, std::size_t end, CatId cat, const Backpointer& bp) {
    const std::size_t span = chart_.span_index(start, end);
    ItemId id = lookup(span, cat);
    if (id == kNoItem) {
      id = static_cast<ItemId>(chart_.items_.size());
      ParseItem item;
      item.start = static_cast<std::uint32_t>(start);
      item.end = static_cast<std::uint32_t>(end);
      item.cat = cat;
      chart_.items_.push_back(std::move(item));
      chart_.cells_[span].push_back(id);
      auto& dense = chart_.lookup_[span];
      if (dense.size() <= cat) dense.resize(cat + 1, kNoItem);
      dense[cat] = id;
    }
    chart_.items_[static_cast<std::size_t>(id)].backpointers.push_back(bp);
  }

  // Generic CKY driven by combine().
  PackedChart build(const Lexicon& lex) {
    auto index = std::make_shared<CategoryIndex>();
    const RuleConfig& cfg = chart_.cfg_;
    const std::vector<Combinator> all = cfg.instances();
    std::vector<Combinator> binary, unary;
    for (const auto& c : all) (is_unary(c.kind) ? unary : binary).push_back(c);
    std::vector<std::uint32_t> binary_ids, unary_ids;
    for (const auto& c : binary) binary_ids.push_back(combinator_id(c));
    for (const auto& c : unary) unary_ids.push_back(combinator_id(c));
    const std::uint32_t lex_id = combinator_id(Combinator::lex());

    const std::size_t n = chart_.tokens_.size();
    for (std::size_t i = 0; i < n; ++i) {
      const auto* entries = lex.find(chart_.tokens_[i]);
      if (entries == nullptr || entries->empty())
        throw UnknownToken("token '" + chart_.tokens_[i] + "' at position " + std::to_string(i) +
                           " is not in the lexicon");
      for (const auto& e : *entries) {
        const CatId c = index->intern(e.category);
        add(i, i + 1, c, Backpointer{lex_id, c, kNoItem, kNoItem, 0.0});
      }
      raise_cell(i, i + 1, unary, unary_ids, *index);
    }

    for (std::size_t width = 2; width <= n; ++width) {
      for (std::size_t start = 0; start + width <= n; ++start) {
        const std::size_t end = start + width;
        for (std::size_t split = start + 1; split < end; ++split) {
          // Copies: add() may grow the vectors these refer to.
          const std::vector<ItemId> lefts = chart_.cells_[chart_.span_index(start, split)];
          const std::vector<ItemId> rights = chart_.cells_[chart_.span_index(split, end)];
          for (ItemId li : lefts) {
            for (ItemId ri : rights) {
              const Category lc = index->cats[chart_.items_[li].cat];
              const Category rc = index->cats[chart_.items_[ri].cat];
              for (std::size_t k = 0; k < binary.size(); ++k) {
                const Combination comb = combine(binary[k], lc, rc, cfg);
                if (comb.status == CombineStatus::LimitExceeded) ++chart_.limit_rejections_;
                if (!comb.ok()) continue;
                const CatId res = index->intern(comb.result);
                const CatId arg = index->intern(comb.argument);
                add(start, end, res, Backpointer{binary_ids[k], arg, li, ri, 0.0});
              }
            }
          }
        }
        raise_cell(start, end, unary, unary_ids, *index);
      }
    }
    chart_.index_ = std::move(index);
    return std::move(chart_);
  }

  // CKY driven by a compiled rule table.
  PackedChart build(const RuleTable& table) {
    chart_.index_ = table.index_;
    chart_.combinators_ = table.combinators_;
    const std::uint32_t lex_id = combinator_id(Combinator::lex());
    const std::size_t n = chart_.tokens_.size();
    const auto ncat = static_cast<CatId>(table.categories().size());
    for (auto& dense : chart_.lookup_) dense.assign(ncat, kNoItem);

    for (std::size_t i = 0; i < n; ++i)
      for (CatId c = 0; c < ncat; ++c) add(i, i + 1, c, Backpointer{lex_id, c, kNoItem, kNoItem, 0.0});

    const auto& rules = table.rules();
    for (std::size_t width = 2; width <= n; ++width) {
      for (std::size_t start = 0; start + width <= n; ++start) {
        const std::size_t end = start + width;
        for (std::size_t split = start + 1; split < end; ++split) {
          const std::size_t left_span = chart_.span_index(start, split);
          const std::vector<ItemId>& right_dense = chart_.lookup_[chart_.span_index(split, end)];
          const std::size_t nleft = chart_.cells_[left_span].size();
          for (std::size_t j = 0; j < nleft; ++j) {
            const ItemId li = chart_.cells_[left_span][j];
            for (std::uint32_t r : table.rules_with_left(chart_.items_[li].cat)) {
              const RuleTable::Rule& rule = rules[r];
              const ItemId ri = right_dense[rule.right];
              if (ri == kNoItem) continue;
              add(start, end, rule.parent, Backpointer{rule.combinator, rule.argument, li, ri, 0.0});
            }
          }
        }
      }
    }
    return std::move(chart_);
  }

 private:
  void raise_cell(std::size_t start, std::size_t end, const std::vector<Combinator>& unary,
                  const std::vector<std::uint32_t>& unary_ids, CategoryIndex& index) {
    if (unary.empty()) return;
    const std::vector<ItemId> base = chart_.cells_[chart_.span_index(start, end)];
    for (ItemId id : base) {
      const Category input = index.cats[chart_.items_[id].cat];
      if (!chart_.cfg_.can_raise(input)) continue;
      for (std::size_t k = 0; k < unary.size(); ++k) {
        const Combination comb = combine(unary[k], input, chart_.cfg_);
        if (comb.status == CombineStatus::LimitExceeded) ++chart_.limit_rejections_;
        if (!comb.ok()) continue;
        const CatId res = index.intern(comb.result);
        const CatId arg = index.intern(comb.argument);
        add(start, end, res, Backpointer{unary_ids[k], arg, id, kNoItem, 0.0});
      }
    }
  }

  PackedChart chart_;
};

PackedChart build_chart(const std::vector<std::string>& tokens, const Lexicon& lex, const RuleConfig& rules,
                        const Category& goal, const ChartOptions& options) {
  rules.validate();
  if (!goal.valid() || !rules.space.within_limits(goal))
    throw LimitError("goal category " + goal.str() + " is outside the category space");
  return ChartBuilder(tokens, rules, options).build(lex);
}

PackedChart build_chart(const std::vector<std::string>& tokens, const RuleTable& table,
                        const ChartOptions& options) {
  return ChartBuilder(tokens, table.config(), options).build(table);
}

ItemId PackedChart::find(std::size_t start, std::size_t end, CatId cat) const {
  if (start >= end || end > tokens_.size()) return kNoItem;
  const auto& dense = lookup_[span_index(start, end)];
  return cat < dense.size() ? dense[cat] : kNoItem;
}

ItemId PackedChart::find(std::size_t start, std::size_t end, const Category& cat) const {
  const auto id = index_->find(cat);
  return id ? find(start, end, *id) : kNoItem;
}

// ------------------------------------------------------------- algorithms

namespace {

DerivationCount sat_add(DerivationCount a, DerivationCount b) {
  DerivationCount out;
  out.saturated = a.saturated || b.saturated;
  if (out.saturated || a.value >= DerivationCount::kCap - b.value) {
    out.saturated = true;
    out.value = DerivationCount::kCap;
  } else {
    out.value = a.value + b.value;
  }
  return out;
}

DerivationCount sat_mul(DerivationCount a, DerivationCount b) {
  if ((a.value == 0 && !a.saturated) || (b.value == 0 && !b.saturated)) return {};
  DerivationCount out;
  if (a.saturated || b.saturated || a.value > DerivationCount::kCap / b.value) {
    out.saturated = true;
    out.value = DerivationCount::kCap;
  } else {
    out.value = a.value * b.value;
    if (out.value >= DerivationCount::kCap) {
      out.saturated = true;
      out.value = DerivationCount::kCap;
    }
  }
  return out;
}

// Memoized backpointer weights for one chart and scorer.
class WeightCache {
 public:
  WeightCache(const PackedChart& chart, const ExpansionScorer& scorer) : chart_(chart), scorer_(scorer) {}

  double operator()(const ParseItem& item, const Backpointer& bp) {
    const Combinator& rule = chart_.combinator(bp.rule);
    if (rule.kind == CombinatorKind::Lex) {
      const std::uint64_t key = (static_cast<std::uint64_t>(item.cat) << 32) | item.start;
      auto [it, fresh] = leaves_.try_emplace(key, 0.0);
      if (fresh) it->second = scorer_.emission(chart_.category(item.cat), chart_.tokens()[item.start]);
      return it->second;
    }
    const std::uint64_t key = (static_cast<std::uint64_t>(item.cat) << 40) ^
                              (static_cast<std::uint64_t>(bp.rule) << 24) ^ bp.argument;
    auto [it, fresh] = expansions_.try_emplace(key, 0.0);
    if (fresh)
      it->second = scorer_.expansion(chart_.category(item.cat), rule, chart_.category(bp.argument));
    return it->second;
  }

 private:
  const PackedChart& chart_;
  const ExpansionScorer& scorer_;
  std::unordered_map<std::uint64_t, double> leaves_;
  std::unordered_map<std::uint64_t, double> expansions_;
};

ItemId goal_item(const PackedChart& chart, const Category& goal) {
  return chart.find(0, chart.length(), goal);
}

void build_node(const PackedChart& chart, ItemId id, std::size_t bp_index, Derivation& d,
                const std::function<std::size_t(ItemId)>& choose) {
  const ParseItem& item = chart.item(id);
  const Backpointer& bp = item.backpointers[bp_index];
  const int self = static_cast<int>(d.nodes.size());
  d.nodes.emplace_back();
  {
    DerivationNode& node = d.nodes.back();
    node.start = item.start;
    node.end = item.end;
    node.category = chart.category(item.cat);
    node.rule = chart.combinator(bp.rule);
    if (node.rule.kind == CombinatorKind::Lex) {
      node.token = chart.tokens()[item.start];
      return;
    }
    node.argument = chart.category(bp.argument);
  }
  const int l = static_cast<int>(d.nodes.size());
  build_node(chart, bp.left, choose(bp.left), d, choose);
  d.nodes[static_cast<std::size_t>(self)].left = l;
  if (bp.right != kNoItem) {
    const int r = static_cast<int>(d.nodes.size());
    build_node(chart, bp.right, choose(bp.right), d, choose);
    d.nodes[static_cast<std::size_t>(self)].right = r;
  }
}

}  // namespace

DerivationCount count_derivations(const PackedChart& chart, const Category& goal) {
  const ItemId g = goal_item(chart, goal);
  if (g == kNoItem) return {};
  std::vector<DerivationCount> memo(chart.num_items());
  std::vector<char> done(chart.num_items(), 0);
  std::function<DerivationCount(ItemId)> count = [&](ItemId id) -> DerivationCount {
    if (done[id]) return memo[id];
    DerivationCount total;
    for (const Backpointer& bp : chart.item(id).backpointers) {
      DerivationCount term{1, false};
      if (bp.left != kNoItem) term = count(bp.left);
      if (bp.right != kNoItem) term = sat_mul(term, count(bp.right));
      total = sat_add(total, term);
    }
    done[id] = 1;
    return memo[id] = total;
  };
  return count(g);
}

void inside_weights(PackedChart& chart, const ExpansionScorer& scorer) {
  WeightCache weights(chart, scorer);
  for (ParseItem& item : chart.items_)
    for (Backpointer& bp : item.backpointers) bp.weight = weights(item, bp);

  std::vector<char> state(chart.items_.size(), 0);
  std::vector<double> terms;
  std::function<double(ItemId)> inside = [&](ItemId id) -> double {
    ParseItem& item = chart.items_[static_cast<std::size_t>(id)];
    if (state[id] == 2) return item.inside;
    assert(state[id] == 0 && "cycle in chart");
    state[id] = 1;
    std::vector<double> local;
    local.reserve(item.backpointers.size());
    for (const Backpointer& bp : item.backpointers) {
      double t = bp.weight;
      if (bp.left != kNoItem) t += inside(bp.left);
      if (bp.right != kNoItem) t += inside(bp.right);
      local.push_back(t);
    }
    item.inside = log_sum_exp(local);
    state[id] = 2;
    return item.inside;
  };
  for (std::size_t i = 0; i < chart.items_.size(); ++i) inside(static_cast<ItemId>(i));
  chart.has_inside_ = true;
}

double goal_inside(const PackedChart& chart, const Category& goal) {
  const ItemId g = goal_item(chart, goal);
  return g == kNoItem ? kLogZero : chart.item(g).inside;
}

std::optional<Derivation> viterbi_derivation(const PackedChart& chart, const ExpansionScorer& scorer,
                                             const Category& goal) {
  const ItemId g = goal_item(chart, goal);
  if (g == kNoItem) return std::nullopt;
  WeightCache weights(chart, scorer);
  std::vector<double> best(chart.num_items(), kLogZero);
  std::vector<std::size_t> choice(chart.num_items(), 0);
  std::vector<char> done(chart.num_items(), 0);

  // Tie order: combinator, argument string, split point.
  auto before = [&](const Backpointer& a, const Backpointer& b) {
    const Combinator& ca = chart.combinator(a.rule);
    const Combinator& cb = chart.combinator(b.rule);
    if (ca != cb) return ca < cb;
    const std::string& sa = chart.category(a.argument).str();
    const std::string& sb = chart.category(b.argument).str();
    if (sa != sb) return sa < sb;
    const auto split = [&](const Backpointer& bp) { return bp.left == kNoItem ? 0u : chart.item(bp.left).end; };
    return split(a) < split(b);
  };

  std::function<double(ItemId)> solve = [&](ItemId id) -> double {
    if (done[id]) return best[id];
    const ParseItem& item = chart.item(id);
    double top = kLogZero;
    std::size_t arg = item.backpointers.size();
    for (std::size_t k = 0; k < item.backpointers.size(); ++k) {
      const Backpointer& bp = item.backpointers[k];
      double s = weights(item, bp);
      if (bp.left != kNoItem) s += solve(bp.left);
      if (bp.right != kNoItem) s += solve(bp.right);
      if (s == kLogZero) continue;
      if (arg == item.backpointers.size() || s > top ||
          (s == top && before(bp, item.backpointers[arg]))) {
        top = s;
        arg = k;
      }
    }
    done[id] = 1;
    choice[id] = arg;
    return best[id] = top;
  };
  if (solve(g) == kLogZero) return std::nullopt;

  Derivation d;
  build_node(chart, g, choice[g], d, [&](ItemId id) { return choice[id]; });
  return d;
}

Derivation sample_derivation(const PackedChart& chart, const Category& goal, Rng& rng) {
  if (!chart.has_inside()) throw InvariantError("sample_derivation needs inside weights");
  const ItemId g = goal_item(chart, goal);
  if (g == kNoItem || chart.item(g).inside == kLogZero)
    throw NoParse("no derivation of " + goal.str() + " over the sentence");
  std::vector<double> scores;
  auto choose = [&](ItemId id) -> std::size_t {
    const ParseItem& item = chart.item(id);
    if (item.backpointers.size() == 1) return 0;
    scores.clear();
    for (const Backpointer& bp : item.backpointers) {
      double s = bp.weight;
      if (bp.left != kNoItem) s += chart.item(bp.left).inside;
      if (bp.right != kNoItem) s += chart.item(bp.right).inside;
      scores.push_back(s);
    }
    return sample_log(rng, scores);
  };
  Derivation d;
  build_node(chart, g, choose(g), d, choose);
  return d;
}

double derivation_log_weight(const Derivation& d, const ExpansionScorer& scorer) {
  double total = 0.0;
  for (const DerivationNode& node : d.nodes) {
    if (node.leaf())
      total += scorer.emission(node.category, node.token);
    else
      total += scorer.expansion(node.category, node.rule, node.argument);
  }
  return total;
}

std::string check_derivation(const Derivation& d, const RuleConfig& cfg) {
  for (std::size_t i = 0; i < d.nodes.size(); ++i) {
    const DerivationNode& node = d.nodes[i];
    if (node.leaf()) {
      if (node.end != node.start + 1) return "leaf " + std::to_string(i) + " spans more than one token";
      continue;
    }
    const DerivationNode& l = d.nodes[static_cast<std::size_t>(node.left)];
    Category right;
    if (node.right >= 0) {
      const DerivationNode& r = d.nodes[static_cast<std::size_t>(node.right)];
      if (l.start != node.start || l.end != r.start || r.end != node.end)
        return "node " + std::to_string(i) + " children do not tile its span";
      right = r.category;
    } else if (l.start != node.start || l.end != node.end) {
      return "unary node " + std::to_string(i) + " changes span";
    }
    const Combination c = combine(node.rule, l.category, right, cfg);
    if (!c.ok() || c.result != node.category || c.argument != node.argument)
      return "node " + std::to_string(i) + " (" + node.category.str() + ") does not recombine via " +
             node.rule.str();
  }
  return {};
}

std::vector<std::string> Derivation::tokens() const {
  std::vector<std::string> out;
  for (const auto& n : nodes)
    if (n.leaf()) out.push_back(n.token);
  return out;
}

std::set<std::pair<std::size_t, std::size_t>> extract_spans(const Derivation& d) {
  std::set<std::pair<std::size_t, std::size_t>> spans;
  if (d.empty()) return spans;
  const std::size_t n = d.root().end;
  for (const auto& node : d.nodes) {
    if (node.leaf() || node.end - node.start < 2) continue;
    if (node.start == 0 && node.end == n) continue;
    spans.emplace(node.start, node.end);
  }
  return spans;
}

namespace {

void bracket(const Derivation& d, std::size_t i, std::string& out) {
  const DerivationNode& node = d.nodes[i];
  out += '(';
  out += node.category.str();
  if (node.leaf()) {
    out += ' ';
    out += node.token;
  } else {
    out += ' ';
    bracket(d, static_cast<std::size_t>(node.left), out);
    if (node.right >= 0) {
      out += ' ';
      bracket(d, static_cast<std::size_t>(node.right), out);
    }
  }
  out += ')';
}

class BracketReader {
 public:
  BracketReader(std::string_view text, const RuleConfig& cfg) : text_(text), cfg_(cfg) {
    for (const auto& c : cfg.instances()) (is_unary(c.kind) ? unary_ : binary_).push_back(c);
  }

  Derivation read() {
    Derivation d;
    node(d);
    skip();
    if (pos_ != text_.size()) fail("trailing text");
    return d;
  }

 private:
  int node(Derivation& d) {
    skip();
    expect('(');
    const std::size_t label_start = pos_;
    while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    const std::string label(text_.substr(label_start, pos_ - label_start));
    Category cat;
    try {
      cat = parse_category(label, cfg_.space);
    } catch (const DataError& e) {
      fail(e.what());
    }
    const int self = static_cast<int>(d.nodes.size());
    d.nodes.emplace_back();
    d.nodes.back().category = cat;
    d.nodes.back().start = leaves_;
    skip();
    if (pos_ < text_.size() && text_[pos_] == '(') {
      const int l = node(d);
      skip();
      int r = -1;
      if (pos_ < text_.size() && text_[pos_] == '(') r = node(d);
      skip();
      expect(')');
      DerivationNode& n = d.nodes[static_cast<std::size_t>(self)];
      n.left = l;
      n.right = r;
      n.end = leaves_;
      const Category& lc = d.nodes[static_cast<std::size_t>(l)].category;
      const Category rc = r >= 0 ? d.nodes[static_cast<std::size_t>(r)].category : Category();
      for (const Combinator& c : r >= 0 ? binary_ : unary_) {
        const Combination comb = combine(c, lc, rc, cfg_);
        if (comb.ok() && comb.result == cat) {
          n.rule = c;
          n.argument = comb.argument;
          return self;
        }
      }
      fail("no enabled combinator builds " + cat.str());
    }
    const std::size_t tok_start = pos_;
    while (pos_ < text_.size() && text_[pos_] != ')' && !std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
    if (pos_ == tok_start) fail("leaf without token");
    DerivationNode& n = d.nodes[static_cast<std::size_t>(self)];
    n.token = std::string(text_.substr(tok_start, pos_ - tok_start));
    n.rule = Combinator::lex();
    n.end = ++leaves_;
    skip();
    expect(')');
    return self;
  }

  void skip() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  void expect(char c) {
    if (pos_ >= text_.size() || text_[pos_] != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }
  [[noreturn]] void fail(const std::string& why) const {
    throw SyntaxError("bad tree at offset " + std::to_string(pos_) + ": " + why);
  }

  std::string_view text_;
  const RuleConfig& cfg_;
  std::vector<Combinator> binary_, unary_;
  std::size_t pos_ = 0;
  std::size_t leaves_ = 0;
};

}  // namespace

std::string to_bracketed(const Derivation& d) {
  std::string out;
  if (!d.empty()) bracket(d, 0, out);
  return out;
}

Derivation read_bracketed(std::string_view text, const RuleConfig& cfg) {
  return BracketReader(text, cfg).read();
}

}  // namespace gccg
