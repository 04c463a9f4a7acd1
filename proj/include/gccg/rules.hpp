#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gccg/category.hpp"

namespace gccg {

/// Combinator families. The declaration order is the deterministic order used
/// for enumeration and tie-breaking.
enum class CombinatorKind : std::uint8_t {
  FwdApp,        // X/Y  Y    => X
  BwdApp,        // Y    X\Y  => X
  FwdComp,       // X/Y  Y/Z  => X/Z
  BwdComp,       // Y\Z  X\Y  => X\Z
  FwdRaise,      // Y         => T/(T\Y)
  BwdRaise,      // Y         => T\(T/Y)
  FwdCrossComp,  // X/Y  Y\Z  => X\Z
  BwdCrossComp,  // Y/Z  X\Y  => X/Z
  FwdRaiseComp,  // Y  (T\Y)/Z => T/Z   (forward raise fused with forward composition)
  BwdRaiseComp,  // (T/Y)\Z  Y => T\Z   (backward raise fused with backward composition)
  Lex,
};

inline constexpr int kNumCombinatorKinds = 11;

std::string_view kind_name(CombinatorKind k);
/// Throws ConfigError for unknown names.
CombinatorKind parse_kind(std::string_view name);

bool is_unary(CombinatorKind k);
bool is_raise(CombinatorKind k);        // unary raises
bool is_fused_raise(CombinatorKind k);  // raise fused into composition
bool is_composition(CombinatorKind k);  // harmonic or crossed, any degree

/// A combinator instance. Composition carries its degree (1 = X/Y Y/Z);
/// raising (unary or fused) carries the target category T.
struct Combinator {
  CombinatorKind kind = CombinatorKind::FwdApp;
  int degree = 1;
  Category target;

  static Combinator lex() { return {CombinatorKind::Lex, 1, {}}; }

  /// e.g. "FwdApp", "FwdComp2", "FwdRaise[S]".
  std::string str() const;

  friend bool operator==(const Combinator& a, const Combinator& b) {
    return a.kind == b.kind && a.degree == b.degree && a.target == b.target;
  }
  friend bool operator!=(const Combinator& a, const Combinator& b) { return !(a == b); }
  friend bool operator<(const Combinator& a, const Combinator& b);
};

/// Parses the str() form back. Throws ConfigError.
Combinator parse_combinator(std::string_view text, const CategorySpace& space = {});

/// Which combinators are active and over which category space.
struct RuleConfig {
  CategorySpace space;
  std::vector<CombinatorKind> kinds{CombinatorKind::FwdApp,  CombinatorKind::BwdApp,
                                    CombinatorKind::FwdComp, CombinatorKind::BwdComp,
                                    CombinatorKind::FwdRaise, CombinatorKind::BwdRaise};
  int max_comp_degree = 1;
  std::vector<Category> raise_targets{Category::atom("S")};
  std::vector<Category> raisable{Category::atom("NP"), Category::atom("N")};

  static RuleConfig application_only(CategorySpace space = {});

  bool enabled(CombinatorKind k) const;
  bool can_raise(const Category& input) const;
  bool is_target(const Category& t) const;

  /// Every enabled non-lexical combinator instance in deterministic order
  /// (kind, then degree, then target).
  std::vector<Combinator> instances() const;

  /// Throws ConfigError when the configuration is inconsistent: raise kinds
  /// without targets, raisable inputs that are themselves raise outputs, ...
  void validate() const;
};

enum class CombineStatus : std::uint8_t { Ok, NoMatch, LimitExceeded };

/// Outcome of applying one combinator. `argument` is the category Y the
/// schema cancels (or raises); it is what the induction model conditions on.
struct Combination {
  CombineStatus status = CombineStatus::NoMatch;
  Category result;
  Category argument;

  bool ok() const { return status == CombineStatus::Ok; }
  explicit operator bool() const { return ok(); }
};

/// Applies `rule` to (left, right). Unary kinds ignore `right` (pass an empty
/// Category). The result is Ok only when the schema unifies structurally and
/// the result stays within the category space limits; a schema match whose
/// result breaks the caps is reported as LimitExceeded.
Combination combine(const Combinator& rule, const Category& left, const Category& right,
                    const RuleConfig& cfg);

inline Combination combine(const Combinator& rule, const Category& input, const RuleConfig& cfg) {
  return combine(rule, input, Category(), cfg);
}

/// One way to build `parent` from two children (or one, for unary raises,
/// in which case `right` is empty).
struct Expansion {
  Combinator rule;
  Category argument;
  Category left;
  Category right;
};

/// Inverts combine: for each enabled combinator instance and each argument y
/// in `arg_pool`, the unique child pair that recombines to `parent`.
/// Entries whose children break the limits are omitted. Ordered by
/// combinator, then argument canonical string.
std::vector<Expansion> enumerate_expansions(const Category& parent, const RuleConfig& cfg,
                                            const std::vector<Category>& arg_pool);

}  // namespace gccg
