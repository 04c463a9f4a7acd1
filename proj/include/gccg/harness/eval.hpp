#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gccg/chart.hpp"
#include "gccg/grounding.hpp"

namespace gccg::harness {

using SpanSet = std::set<std::pair<std::size_t, std::size_t>>;

struct BracketScore {
  double precision = 0.0, recall = 0.0, f1 = 0.0;
  std::size_t matched = 0, predicted = 0, gold = 0;
};

/// Micro-averaged unlabeled bracketing. Throws LengthMismatch.
BracketScore eval_brackets(const std::vector<SpanSet>& pred, const std::vector<SpanSet>& gold);
BracketScore eval_brackets(const std::vector<Derivation>& pred, const std::vector<Derivation>& gold);

/// Spans of a bracketed tree read structurally: labels are not interpreted,
/// so trees over any atom inventory can be compared. Same convention as
/// extract_spans. Throws SyntaxError.
SpanSet spans_from_bracketed(std::string_view tree, std::size_t* length = nullptr);

struct TagScore {
  double many_to_one = 0.0;
  double homogeneity = 0.0, completeness = 0.0, v_measure = 0.0;
  std::size_t tokens = 0;
};

/// Many-to-one accuracy and V-measure (natural-log entropies). Throws
/// LengthMismatch when sentences or tokens do not align.
TagScore eval_tags(const std::vector<std::vector<int>>& pred, const std::vector<std::vector<int>>& gold);

struct GroundingScore {
  double accuracy = 0.0;
  std::size_t correct = 0, total = 0;
};

/// Dominant-modality accuracy over the words present in both.
GroundingScore eval_grounding(const std::vector<GroundedLexiconEntry>& lexicon,
                              const std::map<std::string, Modality>& truth);

struct EvalReport {
  std::optional<BracketScore> brackets;
  std::optional<TagScore> tags;
  std::optional<GroundingScore> grounding;

  /// Every metric in [0, 1] and F1 consistent with P and R.
  bool consistent() const;
  std::string to_json() const;
};

}  // namespace gccg::harness
