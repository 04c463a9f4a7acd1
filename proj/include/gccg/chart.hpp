#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "gccg/category.hpp"
#include "gccg/log_math.hpp"
#include "gccg/random.hpp"
#include "gccg/rules.hpp"

namespace gccg {

using CatId = std::uint32_t;
using ItemId = std::int32_t;
inline constexpr ItemId kNoItem = -1;

struct LexEntry {
  Category category;
  double weight = 1.0;
};

/// Token (or tag) to lexical categories with nonnegative weights.
class Lexicon {
 public:
  /// Adds weight to (symbol, cat); repeated entries accumulate.
  void add(const std::string& symbol, const Category& cat, double weight = 1.0);
  const std::vector<LexEntry>* find(std::string_view symbol) const;
  double weight(std::string_view symbol, const Category& cat) const;
  std::size_t size() const { return entries_.size(); }
  std::vector<std::string> symbols() const;

  /// Lines "symbol<TAB>category[<TAB>weight]"; '#' starts a comment.
  static Lexicon load(const std::string& path, const CategorySpace& space);

 private:
  std::map<std::string, std::vector<LexEntry>, std::less<>> entries_;
};

/// Log-weights for the pieces of a derivation. Implementations must be
/// read-only while a batch of charts is being scored.
class ExpansionScorer {
 public:
  virtual ~ExpansionScorer() = default;
  virtual double expansion(const Category& parent, const Combinator& rule,
                           const Category& argument) const = 0;
  virtual double emission(const Category& cat, std::string_view symbol) const = 0;
};

/// Weight 1 for everything: inside scores reduce to derivation counts.
class UniformScorer final : public ExpansionScorer {
 public:
  double expansion(const Category&, const Combinator&, const Category&) const override { return 0.0; }
  double emission(const Category&, std::string_view) const override { return 0.0; }
};

/// Lexical weights from a Lexicon, unit weight for every combination.
class LexiconScorer final : public ExpansionScorer {
 public:
  explicit LexiconScorer(const Lexicon& lex) : lex_(lex) {}
  double expansion(const Category&, const Combinator&, const Category&) const override { return 0.0; }
  double emission(const Category& cat, std::string_view symbol) const override;

 private:
  const Lexicon& lex_;
};

struct Backpointer {
  std::uint32_t rule = 0;  // index into PackedChart::combinator
  CatId argument = 0;      // meaningless for lexical backpointers
  ItemId left = kNoItem;   // kNoItem for lexical backpointers
  ItemId right = kNoItem;  // kNoItem for lexical and unary backpointers
  double weight = 0.0;     // log-weight set by inside_weights
};

struct ParseItem {
  std::uint32_t start = 0;
  std::uint32_t end = 0;
  CatId cat = 0;
  std::vector<Backpointer> backpointers;
  double inside = kLogZero;
};

/// Saturating derivation count; `saturated` means the true count is >= cap.
struct DerivationCount {
  std::uint64_t value = 0;
  bool saturated = false;
  static constexpr std::uint64_t kCap = 1'000'000'000'000'000'000ULL;
};

/// Categories interned to dense ids.
struct CategoryIndex {
  std::vector<Category> cats;
  std::unordered_map<Category, CatId, CategoryHash> ids;

  CatId intern(const Category& c);
  std::optional<CatId> find(const Category& c) const;
};

/// A finite grammar over a fixed category pool, compiled for fast charting:
/// every binary (parent, combinator, argument) whose children are also in
/// the pool, indexed by left child. Every pool category may be a leaf.
class RuleTable {
 public:
  struct Rule {
    CatId parent;
    std::uint32_t combinator;
    CatId argument;
    CatId left;
    CatId right;
  };

  /// Compiles the expansions of every pool category with arguments from
  /// `arg_pool` (which should be a subset of `pool`). Unary raises are not
  /// supported here; use the fused raise kinds instead.
  static RuleTable compile(std::vector<Category> pool, const std::vector<Category>& arg_pool,
                           const RuleConfig& cfg);

  const std::vector<Category>& categories() const { return index_->cats; }
  const std::vector<Combinator>& combinators() const { return combinators_; }
  const std::vector<Rule>& rules() const { return rules_; }
  const std::vector<std::uint32_t>& rules_with_left(CatId left) const { return by_left_[left]; }
  std::optional<CatId> id(const Category& c) const;
  const RuleConfig& config() const { return cfg_; }

 private:
  friend class ChartBuilder;
  std::shared_ptr<const CategoryIndex> index_;
  std::vector<Combinator> combinators_;
  std::vector<Rule> rules_;
  std::vector<std::vector<std::uint32_t>> by_left_;
  RuleConfig cfg_;
};

struct ChartOptions {
  std::size_t max_length = 40;
};

/// CKY chart with one item per (span, category); ambiguity lives in the
/// backpointer lists. Items are appended bottom-up, shorter spans first.
class PackedChart {
 public:
  std::size_t length() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const RuleConfig& rules() const { return cfg_; }

  std::size_t num_categories() const { return index_->cats.size(); }
  const Category& category(CatId id) const { return index_->cats[id]; }
  const Combinator& combinator(std::uint32_t id) const { return combinators_[id]; }

  std::size_t num_items() const { return items_.size(); }
  const ParseItem& item(ItemId id) const { return items_[static_cast<std::size_t>(id)]; }
  const std::vector<ItemId>& cell(std::size_t start, std::size_t end) const {
    return cells_[span_index(start, end)];
  }
  ItemId find(std::size_t start, std::size_t end, const Category& cat) const;
  ItemId find(std::size_t start, std::size_t end, CatId cat) const;

  bool has_inside() const { return has_inside_; }
  /// Combinations dropped because the result broke the depth/arity caps.
  std::size_t limit_rejections() const { return limit_rejections_; }

 private:
  friend void inside_weights(PackedChart&, const ExpansionScorer&);
  friend class ChartBuilder;

  std::size_t span_index(std::size_t start, std::size_t end) const {
    // Spans grouped by width, then by start.
    const std::size_t width = end - start;
    const std::size_t n = tokens_.size();
    return (width - 1) * n - (width - 1) * (width - 2) / 2 + start;
  }

  std::vector<std::string> tokens_;
  RuleConfig cfg_;
  std::shared_ptr<const CategoryIndex> index_;
  std::vector<Combinator> combinators_;
  std::vector<ParseItem> items_;
  std::vector<std::vector<ItemId>> cells_;
  std::vector<std::vector<ItemId>> lookup_;  // per span, dense by CatId
  std::size_t limit_rejections_ = 0;
  bool has_inside_ = false;
};

/// Bottom-up CKY over `tokens` with lexical categories from `lex` and the
/// enabled combinators of `rules`. Type-raising is applied once per cell
/// after its binary closure, never to a raised item. Throws EmptyInput,
/// UnknownToken, or DataError when the sentence exceeds options.max_length.
/// `goal` is validated against the category space but does not prune.
PackedChart build_chart(const std::vector<std::string>& tokens, const Lexicon& lex, const RuleConfig& rules,
                        const Category& goal, const ChartOptions& options = {});

/// Chart over a compiled rule table: every token may be any pool category.
PackedChart build_chart(const std::vector<std::string>& tokens, const RuleTable& table,
                        const ChartOptions& options = {});

/// Number of distinct derivation trees of `goal` over the whole sentence.
DerivationCount count_derivations(const PackedChart& chart, const Category& goal);

/// Sets every backpointer weight from `scorer` and every item's inside
/// log-weight. Terms are accumulated per item in backpointer order with a
/// max-shifted log-sum-exp.
void inside_weights(PackedChart& chart, const ExpansionScorer& scorer);

/// Inside log-weight of `goal` over the whole sentence, -inf if absent.
double goal_inside(const PackedChart& chart, const Category& goal);

struct DerivationNode {
  std::size_t start = 0;
  std::size_t end = 0;
  Category category;
  Combinator rule;     // Lex at leaves
  Category argument;   // empty at leaves
  int left = -1;       // node indices; -1 when absent
  int right = -1;
  std::string token;   // leaves only

  bool leaf() const { return left < 0; }
  friend bool operator==(const DerivationNode&, const DerivationNode&) = default;
};

/// A derivation tree stored in preorder; nodes[0] is the root.
struct Derivation {
  std::vector<DerivationNode> nodes;

  bool empty() const { return nodes.empty(); }
  const DerivationNode& root() const { return nodes.front(); }
  std::size_t length() const { return nodes.empty() ? 0 : nodes.front().end; }
  std::vector<std::string> tokens() const;

  friend bool operator==(const Derivation&, const Derivation&) = default;
};

/// Maximum-weight derivation of `goal`, or nullopt when unparseable. Ties go
/// to the smaller combinator, then the smaller argument string, then the
/// earlier split point.
std::optional<Derivation> viterbi_derivation(const PackedChart& chart, const ExpansionScorer& scorer,
                                             const Category& goal);

/// Exact top-down sample proportional to derivation weight, using the inside
/// scores already in `chart`. Throws NoParse if `goal` has no derivation and
/// InvariantError if inside_weights was never run.
Derivation sample_derivation(const PackedChart& chart, const Category& goal, Rng& rng);

/// Sum of the scorer's log-weights over every node of `d`.
double derivation_log_weight(const Derivation& d, const ExpansionScorer& scorer);

/// Checks every internal node against combine. Returns an empty string when
/// valid, otherwise a description of the first violation.
std::string check_derivation(const Derivation& d, const RuleConfig& cfg);

/// Spans of internal nodes, excluding width-1 spans and the whole sentence.
std::set<std::pair<std::size_t, std::size_t>> extract_spans(const Derivation& d);

/// "(S (NP (NP/N the) (N dog)) (S\NP sleeps))".
std::string to_bracketed(const Derivation& d);

/// Reads the bracketed form. Combinators are recovered by trying every
/// instance enabled in `cfg` in order. Throws SyntaxError.
Derivation read_bracketed(std::string_view text, const RuleConfig& cfg);

}  // namespace gccg
