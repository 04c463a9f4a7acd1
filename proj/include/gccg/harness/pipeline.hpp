#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gccg/grounding.hpp"
#include "gccg/harness/config.hpp"
#include "gccg/hdp.hpp"
#include "gccg/pos.hpp"

namespace gccg::harness {

// Rng streams per stage, so stages stay independent of each other's draws.
inline constexpr std::uint64_t kPosStream = 1;
inline constexpr std::uint64_t kGroundStream = 2;
inline constexpr std::uint64_t kInduceStream = 100;  // + chain index

struct PosResult {
  TaggedCorpus tagged;
  std::map<std::string, int> word_tag;  // majority decoded tag per word
  int open_class_tag = 0;
  std::vector<double> trace;  // log joint per sweep
};

PosResult run_pos(const std::vector<Sentence>& corpus, const PosStage& stage, std::uint64_t seed);

/// Tag with the most distinct word types; ties to the lowest id.
int open_class_tag(const std::map<std::string, int>& word_tag);
/// Known words get their tag, unknown ones the open-class tag.
std::vector<int> apply_tags(const Sentence& s, const std::map<std::string, int>& word_tag, int open_class);

struct GroundingResult {
  GroundingState state;
  std::vector<GroundedLexiconEntry> lexicon;
  std::vector<double> trace;
};

/// Throws LengthMismatch when scenes and sentences do not pair up,
/// InvariantError when the final audit fails.
GroundingResult run_grounding(const TaggedCorpus& tagged, const std::vector<Scene>& scenes,
                              const Alphabets& alphabets, const GroundingStage& stage, std::uint64_t seed);

struct ChainResult {
  double log_joint = 0.0;
  std::vector<std::pair<int, double>> trace;  // (iteration, log joint)
  std::uint64_t escapes = 0, accepted = 0, proposed = 0;
};

struct InductionResult {
  std::vector<ChainResult> chains;
  int best_chain = 0;  // highest final log joint, ties to the lowest index
  HdpState best;
  std::string best_checkpoint;
};

/// Independent chains run one after another; audits every
/// `audit_every` iterations and at the end (InvariantError on failure).
InductionResult run_induction(const std::vector<std::vector<int>>& tags, const InductionStage& stage,
                              std::uint64_t seed);

/// Same trees with the leaf tokens replaced by the sentence's words.
Derivation with_words(Derivation d, const Sentence& words);

}  // namespace gccg::harness
