#include "oracles.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

namespace oracle {

TermP atom(const std::string& name) {
  auto t = std::make_shared<Term>();
  t->atom = name;
  return t;
}

TermP fn(TermP res, char slash, TermP arg) {
  auto t = std::make_shared<Term>();
  t->slash = slash;
  t->res = std::move(res);
  t->arg = std::move(arg);
  return t;
}

namespace {

struct Reader {
  const std::string& s;
  size_t i = 0;

  TermP chain() {
    TermP t = prim();
    while (i < s.size() && (s[i] == '/' || s[i] == '\\')) {
      char sl = s[i++];
      t = fn(t, sl, prim());
    }
    return t;
  }
  TermP prim() {
    if (i < s.size() && s[i] == '(') {
      ++i;
      TermP t = chain();
      if (i >= s.size() || s[i] != ')') throw std::runtime_error("oracle: unbalanced " + s);
      ++i;
      return t;
    }
    size_t b = i;
    while (i < s.size() && std::isalnum(static_cast<unsigned char>(s[i]))) ++i;
    if (b == i) throw std::runtime_error("oracle: bad category " + s);
    return atom(s.substr(b, i - b));
  }
};

}  // namespace

TermP parse(const std::string& text) {
  Reader r{text};
  TermP t = r.chain();
  if (r.i != text.size()) throw std::runtime_error("oracle: trailing text in " + text);
  return t;
}

std::string print(const TermP& t) {
  if (!t->atom.empty()) return t->atom;
  std::string r = print(t->res);
  if (t->res->atom.empty() && t->res->slash != t->slash) r = "(" + r + ")";
  std::string a = print(t->arg);
  if (a.size() > 0 && t->arg->atom.empty()) a = "(" + a + ")";
  return r + t->slash + a;
}

bool same(const TermP& a, const TermP& b) {
  if (!a || !b) return !a && !b;
  if (a->atom != b->atom || a->slash != b->slash) return false;
  if (!a->atom.empty()) return true;
  return same(a->res, b->res) && same(a->arg, b->arg);
}

int depth(const TermP& t) { return t->atom.empty() ? 1 + std::max(depth(t->res), depth(t->arg)) : 1; }
int arity(const TermP& t) { return t->atom.empty() ? 1 + arity(t->res) : 0; }

std::string Rule::text() const {
  std::string s = kind;
  if (degree != 1) s += std::to_string(degree);
  if (!target.empty()) s += "[" + target + "]";
  return s;
}

namespace {

bool in(const std::vector<std::string>& v, const TermP& t) {
  if (!t) return false;
  const std::string p = print(t);
  return std::find(v.begin(), v.end(), p) != v.end();
}

Match done(TermP res, TermP arg, const Rules& rules) {
  Match m;
  m.result = res;
  m.arg = arg;
  m.status = rules.limits.ok(res) ? Status::Ok : Status::Limit;
  return m;
}

bool is_fn(const TermP& t, char slash) { return t && t->atom.empty() && t->slash == slash; }

// Splits off d outermost arguments: c = base |s1 a1 ... |sd ad (sd outermost).
bool split(const TermP& c, int d, TermP& base, std::vector<std::pair<char, TermP>>& outer_first) {
  outer_first.clear();
  TermP cur = c;
  for (int k = 0; k < d; ++k) {
    if (!cur->atom.empty()) return false;
    outer_first.push_back({cur->slash, cur->arg});
    cur = cur->res;
  }
  base = cur;
  return true;
}

TermP rebuild(TermP base, const std::vector<std::pair<char, TermP>>& outer_first) {
  for (auto it = outer_first.rbegin(); it != outer_first.rend(); ++it) base = fn(base, it->first, it->second);
  return base;
}

}  // namespace

Match combine(const Rule& r, const TermP& L, const TermP& R, const Rules& rules) {
  Match none;
  const std::string& k = r.kind;
  if (k == "FwdApp") {
    if (is_fn(L, '/') && same(L->arg, R)) return done(L->res, R, rules);
    return none;
  }
  if (k == "BwdApp") {
    if (is_fn(R, '\\') && same(R->arg, L)) return done(R->res, L, rules);
    return none;
  }
  if (k == "FwdComp" || k == "FwdCrossComp" || k == "BwdComp" || k == "BwdCrossComp") {
    const bool fwd = k[0] == 'F';
    const bool crossed = k.find("Cross") != std::string::npos;
    const TermP& primary = fwd ? L : R;
    const TermP& secondary = fwd ? R : L;
    const char ps = fwd ? '/' : '\\';
    char inner = ps;
    if (crossed) inner = fwd ? '\\' : '/';
    if (!is_fn(primary, ps)) return none;
    TermP base;
    std::vector<std::pair<char, TermP>> zs;
    if (!split(secondary, r.degree, base, zs)) return none;
    if (zs.back().first != inner) return none;
    if (!same(base, primary->arg)) return none;
    return done(rebuild(primary->res, zs), base, rules);
  }
  if (k == "FwdRaise" || k == "BwdRaise") {
    if (std::find(rules.targets.begin(), rules.targets.end(), r.target) == rules.targets.end()) return none;
    if (!in(rules.raisable, L)) return none;
    TermP t = parse(r.target);
    if (k == "FwdRaise") return done(fn(t, '/', fn(t, '\\', L)), L, rules);
    return done(fn(t, '\\', fn(t, '/', L)), L, rules);
  }
  if (k == "FwdRaiseComp" || k == "BwdRaiseComp") {
    if (std::find(rules.targets.begin(), rules.targets.end(), r.target) == rules.targets.end()) return none;
    TermP t = parse(r.target);
    const bool fwd = k == "FwdRaiseComp";
    const TermP& y = fwd ? L : R;
    const TermP& f = fwd ? R : L;
    if (!in(rules.raisable, y)) return none;
    // forward: f = (T\Y)/Z ; backward: f = (T/Y)\Z
    const char outer = fwd ? '/' : '\\';
    const char mid = fwd ? '\\' : '/';
    if (!is_fn(f, outer) || !is_fn(f->res, mid)) return none;
    if (!same(f->res->res, t) || !same(f->res->arg, y)) return none;
    Match m = done(fn(t, outer, f->arg), y, rules);
    if (m.status == Status::Ok && !rules.limits.ok(fn(t, outer, f->res))) m.status = Status::Limit;
    return m;
  }
  throw std::runtime_error("oracle: unknown rule " + k);
}

Enumerator::Enumerator(std::vector<std::string> tokens, Lexicon lex, Rules rules)
    : tokens_(std::move(tokens)), lex_(std::move(lex)), rules_(std::move(rules)) {}

const std::vector<Tree>& Enumerator::trees(int i, int j) {
  auto key = std::make_pair(i, j);
  if (auto it = memo_.find(key); it != memo_.end()) return it->second;
  std::vector<Tree> base;
  auto allowed = [&](const TermP& c) { return !keep || keep(print(c)); };
  auto allowed_arg = [&](const TermP& c) { return !keep_arg || keep_arg(print(c)); };
  if (j == i + 1) {
    auto it = lex_.find(tokens_[i]);
    if (it == lex_.end()) throw std::runtime_error("oracle: unknown token");
    for (const auto& c : it->second) {
      Tree t;
      t.cat = parse(c);
      if (!allowed(t.cat)) continue;
      t.text = "(" + print(t.cat) + " " + tokens_[i] + ")";
      t.leaves.push_back({print(t.cat), tokens_[i]});
      base.push_back(std::move(t));
    }
  } else {
    for (int k = i + 1; k < j; ++k) {
      // copies: trees() may rehash memo_
      const std::vector<Tree> ls = trees(i, k);
      const std::vector<Tree> rs = trees(k, j);
      for (const auto& l : ls)
        for (const auto& r : rs)
          for (const auto& rule : rules_.instances) {
            if (rule.unary()) continue;
            Match m = combine(rule, l.cat, r.cat, rules_);
            if (m.status != Status::Ok || !allowed(m.result) || !allowed_arg(m.arg)) continue;
            Tree t;
            t.cat = m.result;
            t.text = "(" + print(m.result) + " " + l.text + " " + r.text + ")";
            t.events.push_back({print(m.result), rule.text(), print(m.arg)});
            t.events.insert(t.events.end(), l.events.begin(), l.events.end());
            t.events.insert(t.events.end(), r.events.begin(), r.events.end());
            t.leaves = l.leaves;
            t.leaves.insert(t.leaves.end(), r.leaves.begin(), r.leaves.end());
            t.spans.push_back({i, j});
            t.spans.insert(t.spans.end(), l.spans.begin(), l.spans.end());
            t.spans.insert(t.spans.end(), r.spans.begin(), r.spans.end());
            base.push_back(std::move(t));
          }
    }
  }
  std::vector<Tree> out = base;
  for (const auto& b : base)
    for (const auto& rule : rules_.instances) {
      if (!rule.unary()) continue;
      Match m = combine(rule, b.cat, nullptr, rules_);
      if (m.status != Status::Ok || !allowed(m.result) || !allowed_arg(m.arg)) continue;
      Tree t = b;
      t.cat = m.result;
      t.text = "(" + print(m.result) + " " + b.text + ")";
      t.events.insert(t.events.begin(), {print(m.result), rule.text(), print(m.arg)});
      if (j > i + 1) t.spans.insert(t.spans.begin(), {i, j});
      out.push_back(std::move(t));
    }
  return memo_[key] = std::move(out);
}

std::vector<Tree> Enumerator::goal_trees(const std::string& goal) {
  std::vector<Tree> out;
  const TermP g = parse(goal);
  for (const auto& t : trees(0, static_cast<int>(tokens_.size())))
    if (same(t.cat, g)) out.push_back(t);
  return out;
}

std::uint64_t catalan(int n) {
  std::uint64_t c = 1;
  for (int k = 0; k < n; ++k) c = c * 2 * (2 * k + 1) / (k + 2);
  return c;
}

}  // namespace oracle

namespace oracle {

double hmm_joint(const std::vector<std::vector<int>>& words, const std::vector<std::vector<int>>& tags, int K,
                 int V, double at, double ae) {
  std::map<std::pair<int, int>, int> tc, ec;
  std::map<int, int> trow, erow;
  double p = 1.0;
  for (std::size_t s = 0; s < words.size(); ++s) {
    int prev = K;
    for (std::size_t i = 0; i < words[s].size(); ++i) {
      const int k = tags[s][i], w = words[s][i];
      p *= (tc[{prev, k}] + at) / (trow[prev] + K * at);
      ++tc[{prev, k}];
      ++trow[prev];
      p *= (ec[{k, w}] + ae) / (erow[k] + V * ae);
      ++ec[{k, w}];
      ++erow[k];
      prev = k;
    }
  }
  return p;
}

double dm_sequence(const std::vector<int>& draws, int categories, double alpha) {
  std::map<int, int> c;
  double p = 1.0;
  int n = 0;
  for (int d : draws) {
    p *= (c[d] + alpha) / (n + categories * alpha);
    ++c[d];
    ++n;
  }
  return p;
}

}  // namespace oracle

namespace oracle {

double grounding_joint(const std::vector<GroundTok>& toks, const std::vector<int>& alphabet, double phi,
                       double theta, double nu) {
  std::map<int, std::map<int, int>> mc;
  std::map<int, int> mt;
  std::map<std::pair<int, int>, std::map<int, int>> sc;
  std::map<std::pair<int, int>, int> st;
  double p = 1.0;
  for (const auto& t : toks) {
    p *= (mc[t.word][t.modality] + phi) / (mt[t.word] + 5 * phi);
    ++mc[t.word][t.modality];
    ++mt[t.word];
    if (t.modality == 4) {
      p *= nu;
      continue;
    }
    const auto key = std::make_pair(t.word, t.modality);
    p *= (sc[key][t.symbol] + theta) / (st[key] + alphabet[static_cast<std::size_t>(t.modality)] * theta);
    ++sc[key][t.symbol];
    ++st[key];
  }
  return p;
}

}  // namespace oracle

namespace oracle {

double g0(const TermP& t, const HdpParams& p) {
  if (!t->atom.empty()) {
    const bool known = std::find(p.atoms.begin(), p.atoms.end(), t->atom) != p.atoms.end();
    return known ? (1.0 - p.p_slash) / static_cast<double>(p.atoms.size()) : 0.0;
  }
  return p.p_slash * 0.5 * g0(t->res, p) * g0(t->arg, p);
}

double hdp_joint(const std::vector<const Tree*>& trees, const HdpParams& p) {
  std::map<std::string, std::map<std::string, int>> kinds;  // parent -> kind -> n
  std::map<std::string, int> parent_n;
  std::map<std::pair<std::string, std::string>, std::map<std::string, int>> seats;
  std::map<std::pair<std::string, std::string>, int> seat_n;
  std::map<std::string, std::map<std::string, int>> emit;
  std::map<std::string, int> emit_n;
  double prob = 1.0;
  auto kind_step = [&](const std::string& parent, const std::string& kind) {
    prob *= (kinds[parent][kind] + p.kind_prior) / (parent_n[parent] + p.num_kinds * p.kind_prior);
    ++kinds[parent][kind];
    ++parent_n[parent];
  };
  for (const Tree* t : trees) {
    for (const auto& e : t->events) {
      kind_step(e[0], e[1]);
      const auto key = std::make_pair(e[0], e[1]);
      prob *= (seats[key][e[2]] + p.alpha * g0(parse(e[2]), p)) / (seat_n[key] + p.alpha);
      ++seats[key][e[2]];
      ++seat_n[key];
    }
    for (const auto& [cat, tok] : t->leaves) {
      kind_step(cat, "<leaf>");
      prob *= (emit[cat][tok] + p.alpha_emit) / (emit_n[cat] + p.num_tags * p.alpha_emit);
      ++emit[cat][tok];
      ++emit_n[cat];
    }
  }
  return prob;
}

}  // namespace oracle
