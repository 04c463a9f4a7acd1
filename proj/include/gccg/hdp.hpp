#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "gccg/category.hpp"
#include "gccg/chart.hpp"
#include "gccg/random.hpp"
#include "gccg/rules.hpp"

namespace gccg {

/// Base distribution over the infinite category space. An atom has
/// probability (1 - p_slash) * atom_prob; a complex category
/// p_slash * P(dir) * G0(result) * G0(argument).
struct BaseDistribution {
  std::vector<std::string> atoms;  // empty: the category space's atoms
  std::vector<double> atom_probs;  // empty: uniform over `atoms`
  double p_slash = 0.4;
  double p_forward = 0.5;

  void validate() const;  // throws ConfigError
  double atom_prob(const std::string& name) const;
};

double g0_log_prob(const Category& cat, const BaseDistribution& base);
inline double g0_prob(const Category& cat, const BaseDistribution& base) {
  return std::exp(g0_log_prob(cat, base));
}
/// Total G0 mass of all categories of depth <= d (closed-form recursion).
double g0_mass_within_depth(int d, const BaseDistribution& base);

struct HdpConfig {
  RuleConfig rules;  // unary raise kinds are replaced by their fused forms
  BaseDistribution base;
  int num_tags = 10;
  double alpha_dp = 1.0;     // argument DP concentration
  double gamma = 1.0;        // top-level concentration, used by the stick report
  double kind_prior = 1.0;   // Dirichlet pseudo-count per expansion kind
  double alpha_emit = 0.1;   // leaf emission Dirichlet
  Category root = Category::atom("S");
  bool resample_alpha = false;
  /// When set, the candidate pool is every category within this depth (and
  /// the space's arity cap) instead of the adaptive seated + one-step pool.
  std::optional<int> fixed_pool_depth;
  ChartOptions chart;

  void validate() const;  // throws ConfigError
};

/// One generative choice: an internal node (parent, combinator, argument)
/// or a leaf (parent, tag).
struct ExpansionEvent {
  Category parent;
  bool leaf = false;
  Combinator combinator;
  Category argument;
  int tag = -1;
};

/// Events of a derivation whose leaves carry tag ids as tokens, in preorder.
std::vector<ExpansionEvent> derivation_events(const Derivation& d);

struct CategoryPairHash {
  std::size_t operator()(const std::pair<Category, int>& k) const {
    return CategoryHash{}(k.first) * 31 + static_cast<std::size_t>(k.second);
  }
};

struct Restaurant {
  std::unordered_map<Category, std::int64_t, CategoryHash> customers;
  std::int64_t total = 0;
};

struct HdpState {
  HdpConfig config;
  std::vector<Combinator> kinds;  // binary expansion kinds; index kinds.size() is the leaf kind

  std::vector<std::vector<int>> sentences;  // tag ids
  std::vector<Derivation> derivations;
  std::vector<bool> escaped;  // derivation drawn from a widened pool
  std::uint64_t iteration = 0;
  std::uint64_t escapes = 0;
  std::uint64_t accepted = 0;
  std::uint64_t proposed = 0;

  std::unordered_map<Category, std::vector<std::int64_t>, CategoryHash> kind_counts;  // kinds + leaf
  std::unordered_map<Category, std::int64_t, CategoryHash> parent_total;
  std::unordered_map<std::pair<Category, int>, Restaurant, CategoryPairHash> restaurants;
  std::unordered_map<Category, std::vector<std::int64_t>, CategoryHash> emit_counts;
  std::unordered_map<Category, std::int64_t, CategoryHash> emit_total;

  int leaf_kind() const { return static_cast<int>(kinds.size()); }
  /// Index of a binary combinator in `kinds`, or -1.
  int kind_index(const Combinator& c) const;
  double g0_log(const Category& c) const;

  // Predictive terms from the current counts.
  double kind_log_predictive(const Category& parent, int kind) const;
  double crp_log_predictive(const Category& parent, int kind, const Category& y) const;
  double emit_log_predictive(const Category& parent, int tag) const;
  double event_log_predictive(const ExpansionEvent& e) const;

  void add(const ExpansionEvent& e, int delta);
  void add(const std::vector<ExpansionEvent>& events, int delta);

 private:
  mutable std::unordered_map<Category, double, CategoryHash> g0_cache_;
};

/// Empty state (no sentences) with kinds resolved from the config.
HdpState hdp_empty(const HdpConfig& config);

/// (count(y) + alpha_dp * G0(y)) / (total + alpha_dp) under the (parent, kind) restaurant.
double crp_predictive(const HdpState& state, const Category& parent, const Combinator& kind, const Category& y);

/// Scores expansions with P(kind | parent) * crp_predictive and leaves with
/// P(leaf | parent) * P(tag | parent); chart tokens are decimal tag ids.
class HdpScorer : public ExpansionScorer {
 public:
  explicit HdpScorer(const HdpState& state) : state_(state) {}
  double expansion(const Category& parent, const Combinator& rule, const Category& argument) const override;
  double emission(const Category& cat, std::string_view symbol) const override;

 private:
  const HdpState& state_;
};

/// Candidate categories for charts and the arguments they may cancel.
struct CandidatePool {
  std::vector<Category> categories;
  std::vector<Category> arguments;
};

/// Seated categories, their one-step expansions and the atoms, within the
/// limits of `rules` (or the fixed pool when configured).
CandidatePool candidate_pool(const HdpState& state, const RuleConfig& rules);

/// Every category within `depth` and the arity cap of `space`.
std::vector<Category> categories_within(int depth, const CategorySpace& space);

/// Derivations drawn sequentially from uniform-weight charts over the
/// atom-only pool extended to depth 2. Throws EmptyCorpus, NoParse.
HdpState hdp_init(const std::vector<std::vector<int>>& tags, const HdpConfig& config, Rng& rng);

/// Rebuilds a state from stored derivations (checkpoint resume).
HdpState hdp_from_derivations(const std::vector<std::vector<int>>& tags, std::vector<Derivation> derivations,
                              const HdpConfig& config);

/// One pass over all sentences: remove, rebuild the chart with the current
/// scorer, propose from it, accept with the Metropolis-Hastings ratio
/// against the exact collapsed conditional, reseat. Returns the log joint.
double hdp_gibbs_iteration(HdpState& state, Rng& rng);

/// Collapsed log joint of all seated events.
double hdp_log_joint(const HdpState& state);

/// Sum of sequential predictive log-probabilities of `events` added one at a
/// time on top of the current counts; the counts are restored afterwards.
double hdp_sequential_log_prob(HdpState& state, const std::vector<ExpansionEvent>& events);

/// Rebuilds every count from the stored derivations and compares; also
/// checks the category limits. Empty string when consistent.
std::string hdp_audit(const HdpState& state);

struct GrammarRule {
  Category parent;
  Combinator combinator;
  Category argument;
  std::int64_t count = 0;
  double prob = 0.0;  // P(kind | parent) * crp predictive
};

struct LeafEmission {
  Category parent;
  int tag = 0;
  std::int64_t count = 0;
  double prob = 0.0;  // P(tag | parent, leaf)
};

struct Grammar {
  std::vector<GrammarRule> rules;       // by parent, then prob descending
  std::vector<LeafEmission> emissions;  // by parent, then prob descending
};

Grammar extract_grammar(const HdpState& state, std::int64_t min_count);

/// "parent TAB kind TAB argument TAB count TAB prob" lines.
std::string grammar_table(const Grammar& g);

/// Posterior mean stick weights of one restaurant: seated arguments by
/// weight, plus the unallocated remainder.
struct StickReport {
  Category parent;
  Combinator kind;
  std::vector<std::pair<Category, double>> sticks;
  double remainder = 0.0;
};
std::vector<StickReport> stick_weights(const HdpState& state);
/// Top-level sticks shared across restaurants: one table per restaurant
/// serving a category, plus gamma for the remainder.
std::vector<std::pair<Category, double>> global_sticks(const HdpState& state, double* remainder = nullptr);

std::string hdp_checkpoint(const HdpState& state, const Rng& rng);
/// Restores state and rng. Throws DataError on malformed input.
HdpState hdp_restore(const std::string& json_text, const HdpConfig& config, Rng& rng);

}  // namespace gccg
