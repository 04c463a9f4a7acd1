#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace gccg {

enum class Slash : std::uint8_t { Forward, Backward };

inline char slash_char(Slash s) { return s == Slash::Forward ? '/' : '\\'; }
inline Slash flip(Slash s) { return s == Slash::Forward ? Slash::Backward : Slash::Forward; }

/// An immutable CCG syntactic category: an atom (S, N, NP, ...) or a
/// functor result|argument. Copies share structure; identity is structural.
///
/// Depth counts nesting levels with atoms at depth 1, so NP/N has depth 2 and
/// (S\NP)/NP depth 3. Arity is the number of outermost arguments along the
/// result chain: arity((S\NP)/NP) = 2.
class Category {
 public:
  /// Empty handle; only useful as a placeholder in containers.
  Category() = default;

  static Category atom(std::string_view name);
  static Category complex(const Category& result, Slash slash, const Category& argument);

  bool valid() const { return node_ != nullptr; }
  bool is_atom() const;
  bool is_complex() const { return valid() && !is_atom(); }

  const std::string& atom_name() const;
  const Category& result() const;
  Slash slash() const;
  const Category& argument() const;

  int depth() const;
  int arity() const;
  std::size_t hash() const;

  /// Canonical notation; see print_category.
  const std::string& str() const;

  friend bool operator==(const Category& a, const Category& b);
  friend bool operator!=(const Category& a, const Category& b) { return !(a == b); }
  /// Canonical-string order; used wherever a deterministic order is needed.
  friend bool operator<(const Category& a, const Category& b) { return a.str() < b.str(); }

 private:
  struct Node;
  explicit Category(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

struct CategoryHash {
  std::size_t operator()(const Category& c) const { return c.hash(); }
};

/// The atom inventory and the hard size caps applied to every category.
struct CategorySpace {
  std::vector<std::string> atoms{"S", "N", "NP", "Conj"};
  int max_depth = 4;
  int max_arity = 3;

  bool has_atom(std::string_view name) const;
  bool within_limits(const Category& c) const {
    return c.depth() <= max_depth && c.arity() <= max_arity;
  }
};

/// Parses category notation: atoms, "/", "\" and parentheses. Slashes are
/// left-associative; parentheses override. Throws SyntaxError on malformed
/// text or unknown atoms and LimitError when the category exceeds the caps.
Category parse_category(std::string_view text, const CategorySpace& space = {});

/// Canonical notation. Arguments that are complex are parenthesized; a
/// complex result is left bare when it continues a chain of the same slash
/// direction ("S/N/N") and parenthesized otherwise ("(S\NP)/NP").
std::string print_category(const Category& c);

std::ostream& operator<<(std::ostream& os, const Category& c);

}  // namespace gccg

template <>
struct std::hash<gccg::Category> {
  std::size_t operator()(const gccg::Category& c) const { return c.hash(); }
};
