#include "gccg/harness/eval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include <json.hpp>

#include "gccg/errors.hpp"

namespace gccg::harness {

namespace {

BracketScore finish(std::size_t m, std::size_t p, std::size_t g) {
  BracketScore s;
  s.matched = m;
  s.predicted = p;
  s.gold = g;
  // no brackets on either side counts as perfect agreement
  s.precision = p ? static_cast<double>(m) / static_cast<double>(p) : (g ? 0.0 : 1.0);
  s.recall = g ? static_cast<double>(m) / static_cast<double>(g) : (p ? 0.0 : 1.0);
  s.f1 = s.precision + s.recall > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

double entropy(const std::map<int, double>& counts, double n) {
  double h = 0.0;
  for (const auto& [k, c] : counts)
    if (c > 0) h -= c / n * std::log(c / n);
  return h;
}

}  // namespace

BracketScore eval_brackets(const std::vector<SpanSet>& pred, const std::vector<SpanSet>& gold) {
  if (pred.size() != gold.size())
    throw LengthMismatch(std::to_string(pred.size()) + " predicted trees but " + std::to_string(gold.size()) + " gold");
  std::size_t m = 0, p = 0, g = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    p += pred[i].size();
    g += gold[i].size();
    for (const auto& s : pred[i]) m += gold[i].count(s);
  }
  return finish(m, p, g);
}

BracketScore eval_brackets(const std::vector<Derivation>& pred, const std::vector<Derivation>& gold) {
  if (pred.size() != gold.size())
    throw LengthMismatch(std::to_string(pred.size()) + " predicted trees but " + std::to_string(gold.size()) + " gold");
  std::vector<SpanSet> a, b;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i].length() != gold[i].length())
      throw LengthMismatch("tree " + std::to_string(i) + " covers a different number of tokens");
    a.push_back(extract_spans(pred[i]));
    b.push_back(extract_spans(gold[i]));
  }
  return eval_brackets(a, b);
}

SpanSet spans_from_bracketed(std::string_view text, std::size_t* length) {
  // (label child...) or (label token). Labels are category strings and may
  // hold balanced parentheses themselves: ((S\N)/N give)
  std::vector<std::size_t> starts;
  SpanSet spans;
  std::size_t pos = 0, i = 0;
  bool done = false;
  auto fail = [&](const std::string& why) {
    throw SyntaxError("bracketed tree: " + why + " at offset " + std::to_string(i));
  };
  auto space = [&](std::size_t k) { return std::isspace(static_cast<unsigned char>(text[k])) != 0; };
  while (i < text.size()) {
    const char c = text[i];
    if (space(i)) {
      ++i;
    } else if (c == '(') {
      if (done) fail("text after the tree");
      starts.push_back(pos);
      ++i;
      while (i < text.size() && space(i)) ++i;
      const std::size_t b = i;
      int depth = 0;
      while (i < text.size()) {
        if (text[i] == '(') {
          ++depth;
        } else if (text[i] == ')') {
          if (depth == 0) break;
          --depth;
        } else if (depth == 0 && space(i)) {
          break;
        }
        ++i;
      }
      if (i == b || depth != 0) fail("missing label");
    } else if (c == ')') {
      if (starts.empty()) fail("unbalanced ')'");
      const std::size_t start = starts.back();
      starts.pop_back();
      if (pos == start) fail("empty node");
      if (pos - start > 1) spans.insert({start, pos});
      if (starts.empty()) done = true;
      ++i;
    } else {
      if (starts.empty()) fail("token outside a node");
      while (i < text.size() && !space(i) && text[i] != '(' && text[i] != ')') ++i;
      ++pos;
    }
  }
  if (!starts.empty() || !done) fail("unbalanced tree");
  spans.erase({0, pos});
  if (length) *length = pos;
  return spans;
}

TagScore eval_tags(const std::vector<std::vector<int>>& pred, const std::vector<std::vector<int>>& gold) {
  if (pred.size() != gold.size())
    throw LengthMismatch(std::to_string(pred.size()) + " predicted sentences but " + std::to_string(gold.size()) +
                         " gold");
  std::map<int, std::map<int, double>> table;  // pred -> gold -> n
  std::map<int, double> pk, gc;
  std::size_t n = 0;
  for (std::size_t s = 0; s < pred.size(); ++s) {
    if (pred[s].size() != gold[s].size())
      throw LengthMismatch("sentence " + std::to_string(s) + " has " + std::to_string(pred[s].size()) +
                           " predicted tags but " + std::to_string(gold[s].size()) + " gold");
    for (std::size_t i = 0; i < pred[s].size(); ++i) {
      table[pred[s][i]][gold[s][i]] += 1;
      pk[pred[s][i]] += 1;
      gc[gold[s][i]] += 1;
      ++n;
    }
  }
  TagScore t;
  t.tokens = n;
  if (n == 0) {
    t.many_to_one = t.homogeneity = t.completeness = t.v_measure = 1.0;
    return t;
  }
  const double N = static_cast<double>(n);
  double hits = 0.0, h_c_given_k = 0.0, h_k_given_c = 0.0;
  for (const auto& [k, row] : table) {
    double best = 0.0;
    for (const auto& [c, v] : row) {
      best = std::max(best, v);
      h_c_given_k -= v / N * std::log(v / pk[k]);
      h_k_given_c -= v / N * std::log(v / gc[c]);
    }
    hits += best;
  }
  t.many_to_one = hits / N;
  const double h_c = entropy(gc, N), h_k = entropy(pk, N);
  t.homogeneity = h_c > 0 ? 1.0 - h_c_given_k / h_c : 1.0;
  t.completeness = h_k > 0 ? 1.0 - h_k_given_c / h_k : 1.0;
  // clamp rounding noise
  t.homogeneity = std::clamp(t.homogeneity, 0.0, 1.0);
  t.completeness = std::clamp(t.completeness, 0.0, 1.0);
  t.v_measure = t.homogeneity + t.completeness > 0
                    ? 2 * t.homogeneity * t.completeness / (t.homogeneity + t.completeness)
                    : 0.0;
  return t;
}

GroundingScore eval_grounding(const std::vector<GroundedLexiconEntry>& lexicon,
                              const std::map<std::string, Modality>& truth) {
  GroundingScore g;
  for (const auto& e : lexicon) {
    auto it = truth.find(e.word);
    if (it == truth.end()) continue;
    ++g.total;
    g.correct += e.dominant == it->second;
  }
  g.accuracy = g.total ? static_cast<double>(g.correct) / static_cast<double>(g.total) : 0.0;
  return g;
}

bool EvalReport::consistent() const {
  auto unit = [](double x) { return x >= 0.0 && x <= 1.0; };
  if (brackets) {
    const auto& b = *brackets;
    if (!unit(b.precision) || !unit(b.recall) || !unit(b.f1)) return false;
    const double hm = b.precision + b.recall > 0 ? 2 * b.precision * b.recall / (b.precision + b.recall) : 0.0;
    if (std::abs(hm - b.f1) > 1e-9) return false;
  }
  if (tags && (!unit(tags->many_to_one) || !unit(tags->v_measure) || !unit(tags->homogeneity) ||
               !unit(tags->completeness)))
    return false;
  if (grounding && !unit(grounding->accuracy)) return false;
  return true;
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["format_version"] = 1;
  if (brackets)
    j["brackets"] = {{"precision", brackets->precision}, {"recall", brackets->recall}, {"f1", brackets->f1},
                     {"matched", brackets->matched},     {"predicted", brackets->predicted}, {"gold", brackets->gold}};
  else
    j["brackets"] = nullptr;
  if (tags)
    j["tags"] = {{"many_to_one", tags->many_to_one},
                 {"v_measure", tags->v_measure},
                 {"homogeneity", tags->homogeneity},
                 {"completeness", tags->completeness},
                 {"tokens", tags->tokens}};
  else
    j["tags"] = nullptr;
  if (grounding)
    j["grounding"] = {{"modality_accuracy", grounding->accuracy}, {"correct", grounding->correct},
                      {"total", grounding->total}};
  else
    j["grounding"] = nullptr;
  j["consistent"] = consistent();
  return j.dump(2) + "\n";
}

}  // namespace gccg::harness
