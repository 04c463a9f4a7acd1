#include "gccg/rules.hpp"

#include <algorithm>
#include <array>
#include <cassert>
#include <cctype>
#include <utility>

#include "gccg/errors.hpp"

namespace gccg {

namespace {

constexpr std::array<std::string_view, kNumCombinatorKinds> kKindNames{
    "FwdApp",       "BwdApp",       "FwdComp",      "BwdComp",      "FwdRaise", "BwdRaise",
    "FwdCrossComp", "BwdCrossComp", "FwdRaiseComp", "BwdRaiseComp", "Lex"};

// Strips the `degree` outermost arguments of c. Returns false when c has
// fewer. `args` is ordered innermost first.
bool peel(const Category& c, int degree, Category& base, std::vector<std::pair<Slash, Category>>& args) {
  args.clear();
  Category cur = c;
  for (int i = 0; i < degree; ++i) {
    if (!cur.is_complex()) return false;
    args.emplace_back(cur.slash(), cur.argument());
    cur = cur.result();
  }
  std::reverse(args.begin(), args.end());
  base = cur;
  return true;
}

Category attach(Category base, const std::vector<std::pair<Slash, Category>>& args) {
  for (const auto& [s, a] : args) base = Category::complex(base, s, a);
  return base;
}

Combination finish(const Category& result, const Category& argument, const RuleConfig& cfg) {
  Combination out;
  out.result = result;
  out.argument = argument;
  out.status = cfg.space.within_limits(result) ? CombineStatus::Ok : CombineStatus::LimitExceeded;
  return out;
}

}  // namespace

std::string_view kind_name(CombinatorKind k) { return kKindNames[static_cast<std::size_t>(k)]; }

CombinatorKind parse_kind(std::string_view name) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i)
    if (kKindNames[i] == name) return static_cast<CombinatorKind>(i);
  throw ConfigError("unknown combinator kind '" + std::string(name) + "'");
}

bool is_unary(CombinatorKind k) { return k == CombinatorKind::FwdRaise || k == CombinatorKind::BwdRaise; }
bool is_raise(CombinatorKind k) { return is_unary(k); }
bool is_fused_raise(CombinatorKind k) {
  return k == CombinatorKind::FwdRaiseComp || k == CombinatorKind::BwdRaiseComp;
}
bool is_composition(CombinatorKind k) {
  return k == CombinatorKind::FwdComp || k == CombinatorKind::BwdComp ||
         k == CombinatorKind::FwdCrossComp || k == CombinatorKind::BwdCrossComp;
}

std::string Combinator::str() const {
  std::string s(kind_name(kind));
  if (is_composition(kind) && degree != 1) s += std::to_string(degree);
  if (target.valid()) s += "[" + target.str() + "]";
  return s;
}

bool operator<(const Combinator& a, const Combinator& b) {
  if (a.kind != b.kind) return a.kind < b.kind;
  if (a.degree != b.degree) return a.degree < b.degree;
  return a.target < b.target;
}

Combinator parse_combinator(std::string_view text, const CategorySpace& space) {
  Combinator c;
  std::string_view head = text;
  const auto bracket = text.find('[');
  if (bracket != std::string_view::npos) {
    if (text.back() != ']') throw ConfigError("bad combinator '" + std::string(text) + "'");
    head = text.substr(0, bracket);
    try {
      c.target = parse_category(text.substr(bracket + 1, text.size() - bracket - 2), space);
    } catch (const DataError& e) {
      throw ConfigError(std::string("bad combinator target: ") + e.what());
    }
  }
  std::size_t digits = head.size();
  while (digits > 0 && std::isdigit(static_cast<unsigned char>(head[digits - 1]))) --digits;
  if (digits < head.size()) {
    c.degree = std::stoi(std::string(head.substr(digits)));
    head = head.substr(0, digits);
  }
  c.kind = parse_kind(head);
  if (c.degree != 1 && !is_composition(c.kind))
    throw ConfigError("only composition takes a degree: '" + std::string(text) + "'");
  const bool needs_target = is_raise(c.kind) || is_fused_raise(c.kind);
  if (needs_target != c.target.valid())
    throw ConfigError("raise combinators need exactly one target: '" + std::string(text) + "'");
  return c;
}

RuleConfig RuleConfig::application_only(CategorySpace space) {
  RuleConfig cfg;
  cfg.space = std::move(space);
  cfg.kinds = {CombinatorKind::FwdApp, CombinatorKind::BwdApp};
  return cfg;
}

bool RuleConfig::enabled(CombinatorKind k) const {
  return std::find(kinds.begin(), kinds.end(), k) != kinds.end();
}

bool RuleConfig::can_raise(const Category& input) const {
  return std::find(raisable.begin(), raisable.end(), input) != raisable.end();
}

bool RuleConfig::is_target(const Category& t) const {
  return std::find(raise_targets.begin(), raise_targets.end(), t) != raise_targets.end();
}

std::vector<Combinator> RuleConfig::instances() const {
  std::vector<CombinatorKind> ks = kinds;
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  std::vector<Category> targets = raise_targets;
  std::sort(targets.begin(), targets.end());

  std::vector<Combinator> out;
  for (CombinatorKind k : ks) {
    if (k == CombinatorKind::Lex) continue;
    if (is_composition(k)) {
      for (int d = 1; d <= max_comp_degree; ++d) out.push_back({k, d, {}});
    } else if (is_raise(k) || is_fused_raise(k)) {
      for (const Category& t : targets) out.push_back({k, 1, t});
    } else {
      out.push_back({k, 1, {}});
    }
  }
  return out;
}

void RuleConfig::validate() const {
  if (space.atoms.empty()) throw ConfigError("atom set is empty");
  if (space.max_depth < 1) throw ConfigError("max_depth must be >= 1");
  if (space.max_arity < 0) throw ConfigError("max_arity must be >= 0");
  if (max_comp_degree < 1) throw ConfigError("max_comp_degree must be >= 1");
  if (std::find(kinds.begin(), kinds.end(), CombinatorKind::Lex) != kinds.end())
    throw ConfigError("Lex is not a configurable combinator");
  const bool raising = std::any_of(kinds.begin(), kinds.end(),
                                   [](CombinatorKind k) { return is_raise(k) || is_fused_raise(k); });
  if (raising && raise_targets.empty())
    throw ConfigError("type-raising is enabled but raise_targets is empty");
  for (const Category& t : raise_targets)
    if (!t.valid()) throw ConfigError("invalid raise target");
  // A raisable input that is itself a raise output would allow raise-of-raise chains.
  for (const Category& in : raisable) {
    if (!in.is_complex()) continue;
    for (const Category& t : raise_targets)
      for (const Category& y : raisable) {
        if (in == Category::complex(t, Slash::Forward, Category::complex(t, Slash::Backward, y)) ||
            in == Category::complex(t, Slash::Backward, Category::complex(t, Slash::Forward, y)))
          throw ConfigError("raisable category " + in.str() + " is itself a raise output");
      }
  }
}

Combination combine(const Combinator& rule, const Category& left, const Category& right,
                    const RuleConfig& cfg) {
  using K = CombinatorKind;
  Combination none;
  if (!left.valid()) return none;
  if (!is_unary(rule.kind) && rule.kind != K::Lex && !right.valid()) return none;

  thread_local std::vector<std::pair<Slash, Category>> args;
  Category base;

  switch (rule.kind) {
    case K::FwdApp:
      if (left.is_complex() && left.slash() == Slash::Forward && left.argument() == right)
        return finish(left.result(), right, cfg);
      return none;

    case K::BwdApp:
      if (right.is_complex() && right.slash() == Slash::Backward && right.argument() == left)
        return finish(right.result(), left, cfg);
      return none;

    case K::FwdComp:
    case K::FwdCrossComp: {
      // X/Y  (Y|1 Z1)...|d Zd  =>  (X|1 Z1)...|d Zd
      if (!left.is_complex() || left.slash() != Slash::Forward) return none;
      if (!peel(right, rule.degree, base, args)) return none;
      const Slash inner = rule.kind == K::FwdComp ? Slash::Forward : Slash::Backward;
      if (args.front().first != inner || base != left.argument()) return none;
      return finish(attach(left.result(), args), base, cfg);
    }

    case K::BwdComp:
    case K::BwdCrossComp: {
      // (Y|1 Z1)...|d Zd  X\Y  =>  (X|1 Z1)...|d Zd
      if (!right.is_complex() || right.slash() != Slash::Backward) return none;
      if (!peel(left, rule.degree, base, args)) return none;
      const Slash inner = rule.kind == K::BwdComp ? Slash::Backward : Slash::Forward;
      if (args.front().first != inner || base != right.argument()) return none;
      return finish(attach(right.result(), args), base, cfg);
    }

    case K::FwdRaise:
    case K::BwdRaise: {
      if (!rule.target.valid() || !cfg.is_target(rule.target) || !cfg.can_raise(left)) return none;
      const Slash outer = rule.kind == K::FwdRaise ? Slash::Forward : Slash::Backward;
      const Category raised =
          Category::complex(rule.target, outer, Category::complex(rule.target, flip(outer), left));
      return finish(raised, left, cfg);
    }

    case K::FwdRaiseComp: {
      // Y  (T\Y)/Z  =>  T/Z, via Y => T/(T\Y) then forward composition.
      const Category& t = rule.target;
      if (!t.valid() || !cfg.is_target(t) || !cfg.can_raise(left)) return none;
      if (!right.is_complex() || right.slash() != Slash::Forward) return none;
      const Category& mid = right.result();
      if (!mid.is_complex() || mid.slash() != Slash::Backward || mid.result() != t ||
          mid.argument() != left)
        return none;
      const Category raised = Category::complex(t, Slash::Forward, mid);
      Combination out = finish(Category::complex(t, Slash::Forward, right.argument()), left, cfg);
      if (out.ok() && !cfg.space.within_limits(raised)) out.status = CombineStatus::LimitExceeded;
      return out;
    }

    case K::BwdRaiseComp: {
      // (T/Y)\Z  Y  =>  T\Z, via Y => T\(T/Y) then backward composition.
      const Category& t = rule.target;
      if (!t.valid() || !cfg.is_target(t) || !cfg.can_raise(right)) return none;
      if (!left.is_complex() || left.slash() != Slash::Backward) return none;
      const Category& mid = left.result();
      if (!mid.is_complex() || mid.slash() != Slash::Forward || mid.result() != t ||
          mid.argument() != right)
        return none;
      const Category raised = Category::complex(t, Slash::Backward, mid);
      Combination out = finish(Category::complex(t, Slash::Backward, left.argument()), right, cfg);
      if (out.ok() && !cfg.space.within_limits(raised)) out.status = CombineStatus::LimitExceeded;
      return out;
    }

    case K::Lex:
      return none;
  }
  return none;
}

std::vector<Expansion> enumerate_expansions(const Category& parent, const RuleConfig& cfg,
                                            const std::vector<Category>& arg_pool) {
  using K = CombinatorKind;
  std::vector<Category> pool = arg_pool;
  std::sort(pool.begin(), pool.end());
  pool.erase(std::unique(pool.begin(), pool.end()), pool.end());

  std::vector<Expansion> out;
  std::vector<std::pair<Slash, Category>> args;
  Category base;

  for (const Combinator& rule : cfg.instances()) {
    for (const Category& y : pool) {
      Category left, right;
      switch (rule.kind) {
        case K::FwdApp:
          left = Category::complex(parent, Slash::Forward, y);
          right = y;
          break;
        case K::BwdApp:
          left = y;
          right = Category::complex(parent, Slash::Backward, y);
          break;
        case K::FwdComp:
        case K::FwdCrossComp:
          if (!peel(parent, rule.degree, base, args)) continue;
          left = Category::complex(base, Slash::Forward, y);
          right = attach(y, args);
          break;
        case K::BwdComp:
        case K::BwdCrossComp:
          if (!peel(parent, rule.degree, base, args)) continue;
          left = attach(y, args);
          right = Category::complex(base, Slash::Backward, y);
          break;
        case K::FwdRaise:
        case K::BwdRaise:
          left = y;
          break;
        case K::FwdRaiseComp:
          if (!parent.is_complex() || parent.slash() != Slash::Forward) continue;
          left = y;
          right = Category::complex(Category::complex(rule.target, Slash::Backward, y), Slash::Forward,
                                    parent.argument());
          break;
        case K::BwdRaiseComp:
          if (!parent.is_complex() || parent.slash() != Slash::Backward) continue;
          left = Category::complex(Category::complex(rule.target, Slash::Forward, y), Slash::Backward,
                                   parent.argument());
          right = y;
          break;
        case K::Lex:
          continue;
      }
      if (!cfg.space.within_limits(left)) continue;
      if (right.valid() && !cfg.space.within_limits(right)) continue;
      const Combination c = combine(rule, left, right, cfg);
      if (!c.ok() || c.result != parent) continue;
      out.push_back({rule, y, std::move(left), std::move(right)});
    }
  }
  return out;
}

}  // namespace gccg
