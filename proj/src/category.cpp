#include "gccg/category.hpp"

#include <algorithm>
#include <cassert>
#include <cctype>
#include <ostream>

#include "gccg/errors.hpp"

namespace gccg {

struct Category::Node {
  std::string name;  // atoms only
  Category result;
  Category argument;
  Slash slash = Slash::Forward;
  bool atom = true;
  int depth = 1;
  int arity = 0;
  std::string text;
  std::size_t hash = 0;
};

Category Category::atom(std::string_view name) {
  auto n = std::make_shared<Node>();
  n->name = std::string(name);
  n->text = n->name;
  n->hash = std::hash<std::string>{}(n->text);
  return Category(std::move(n));
}

Category Category::complex(const Category& result, Slash slash, const Category& argument) {
  assert(result.valid() && argument.valid());
  auto n = std::make_shared<Node>();
  n->atom = false;
  n->result = result;
  n->argument = argument;
  n->slash = slash;
  n->depth = 1 + std::max(result.depth(), argument.depth());
  n->arity = 1 + result.arity();

  std::string& t = n->text;
  const bool wrap_result = result.is_complex() && result.slash() != slash;
  const bool wrap_arg = argument.is_complex();
  t.reserve(result.str().size() + argument.str().size() + 5);
  if (wrap_result) t += '(';
  t += result.str();
  if (wrap_result) t += ')';
  t += slash_char(slash);
  if (wrap_arg) t += '(';
  t += argument.str();
  if (wrap_arg) t += ')';
  n->hash = std::hash<std::string>{}(t);
  return Category(std::move(n));
}

bool Category::is_atom() const { return node_ && node_->atom; }
const std::string& Category::atom_name() const { return node_->name; }
const Category& Category::result() const { return node_->result; }
Slash Category::slash() const { return node_->slash; }
const Category& Category::argument() const { return node_->argument; }
int Category::depth() const { return node_ ? node_->depth : 0; }
int Category::arity() const { return node_ ? node_->arity : 0; }
std::size_t Category::hash() const { return node_ ? node_->hash : 0; }

const std::string& Category::str() const {
  static const std::string empty;
  return node_ ? node_->text : empty;
}

bool operator==(const Category& a, const Category& b) {
  if (a.node_ == b.node_) return true;
  if (!a.node_ || !b.node_) return false;
  return a.node_->hash == b.node_->hash && a.node_->text == b.node_->text;
}

bool CategorySpace::has_atom(std::string_view name) const {
  return std::find(atoms.begin(), atoms.end(), name) != atoms.end();
}

namespace {

class CategoryReader {
 public:
  CategoryReader(std::string_view text, const CategorySpace& space) : text_(text), space_(space) {}

  Category read() {
    Category c = chain();
    if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
    return c;
  }

 private:
  // chain := primary (slash primary)*
  Category chain() {
    Category c = primary();
    while (pos_ < text_.size() && (text_[pos_] == '/' || text_[pos_] == '\\')) {
      const Slash s = text_[pos_] == '/' ? Slash::Forward : Slash::Backward;
      ++pos_;
      Category arg = primary();
      c = Category::complex(c, s, arg);
    }
    return c;
  }

  Category primary() {
    if (pos_ >= text_.size()) fail("unexpected end of input");
    if (text_[pos_] == '(') {
      ++pos_;
      Category inner = chain();
      if (pos_ >= text_.size() || text_[pos_] != ')') fail("unbalanced parentheses");
      ++pos_;
      return inner;
    }
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    if (pos_ == start) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
    std::string_view name = text_.substr(start, pos_ - start);
    if (!space_.has_atom(name)) fail("unknown atom '" + std::string(name) + "'");
    return Category::atom(name);
  }

  [[noreturn]] void fail(const std::string& why) const {
    throw SyntaxError("bad category \"" + std::string(text_) + "\" at offset " +
                      std::to_string(pos_) + ": " + why);
  }

  std::string_view text_;
  const CategorySpace& space_;
  std::size_t pos_ = 0;
};

}  // namespace

Category parse_category(std::string_view text, const CategorySpace& space) {
  Category c = CategoryReader(text, space).read();
  if (c.depth() > space.max_depth)
    throw LimitError("category " + c.str() + " has depth " + std::to_string(c.depth()) +
                     " > " + std::to_string(space.max_depth));
  if (c.arity() > space.max_arity)
    throw LimitError("category " + c.str() + " has arity " + std::to_string(c.arity()) +
                     " > " + std::to_string(space.max_arity));
  return c;
}

std::string print_category(const Category& c) { return c.str(); }

std::ostream& operator<<(std::ostream& os, const Category& c) { return os << c.str(); }

}  // namespace gccg
