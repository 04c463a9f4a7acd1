#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "gccg/random.hpp"

namespace gccg {

using Sentence = std::vector<std::string>;

/// Sentences with one numeric tag per token.
struct TaggedCorpus {
  std::vector<Sentence> tokens;
  std::vector<std::vector<int>> tags;

  std::size_t size() const { return tokens.size(); }
  std::size_t num_tokens() const;
};

/// Word types in first-seen order.
class Vocabulary {
 public:
  int intern(const std::string& w);
  int find(const std::string& w) const;  // -1 when absent
  const std::string& word(int id) const { return words_[static_cast<std::size_t>(id)]; }
  int size() const { return static_cast<int>(words_.size()); }

 private:
  std::unordered_map<std::string, int> ids_;
  std::vector<std::string> words_;
};

struct PosConfig {
  int num_tags = 10;
  double alpha_t = 1.0;  // transition Dirichlet
  double alpha_e = 0.1;  // emission Dirichlet
};

/// Collapsed state of a Dirichlet-multinomial bigram HMM. Row `num_tags` of
/// the transition table is the start state; there is no stop state.
struct PosState {
  int K = 0;
  double alpha_t = 1.0;
  double alpha_e = 0.1;
  Vocabulary vocab;
  std::vector<std::vector<int>> words;  // word ids per sentence
  std::vector<std::vector<int>> z;      // tags per sentence

  std::vector<std::int64_t> trans;      // (K+1) x K
  std::vector<std::int64_t> trans_row;  // K+1
  std::vector<std::int64_t> emit;       // K x V
  std::vector<std::int64_t> emit_row;   // K

  // Retained-sample tag histograms for decoding, K per token.
  std::vector<std::vector<std::uint32_t>> marginals;
  std::uint64_t retained = 0;

  std::int64_t& t(int prev, int next) { return trans[static_cast<std::size_t>(prev * K + next)]; }
  std::int64_t t(int prev, int next) const { return trans[static_cast<std::size_t>(prev * K + next)]; }
  std::int64_t& e(int tag, int word) { return emit[static_cast<std::size_t>(tag * vocab.size() + word)]; }
  std::int64_t e(int tag, int word) const { return emit[static_cast<std::size_t>(tag * vocab.size() + word)]; }
};

/// Uniform random initial tags. K may be 1 here (closed-form checks);
/// configuration validation asks for at least 2. Throws EmptyCorpus.
PosState pos_init(const std::vector<Sentence>& corpus, const PosConfig& cfg, Rng& rng);

/// Same, from given initial tags.
PosState pos_init_from(const std::vector<Sentence>& corpus, const std::vector<std::vector<int>>& z,
                       const PosConfig& cfg);

/// One systematic-scan sweep (sentences in order, tokens left to right),
/// each tag drawn from its collapsed full conditional. Returns the collapsed
/// log P(Z, w) afterwards.
double pos_gibbs_sweep(PosState& state, Rng& rng);

/// Unnormalized full conditional of token (s, i), counts excluding it.
/// Probabilities, not logs. The token's own counts must already be removed.
std::vector<double> pos_conditional(const PosState& state, std::size_t s, std::size_t i);

double pos_log_joint(const PosState& state);

/// Adds the current assignment to the decoding histograms.
void pos_retain(PosState& state);

/// Maximum-marginal tag per token over retained samples (current tags if
/// none were retained); ties go to the lowest tag id.
TaggedCorpus pos_decode(const PosState& state);

/// Rebuilds every count table from Z; empty string when consistent.
std::string pos_audit(const PosState& state);

}  // namespace gccg
