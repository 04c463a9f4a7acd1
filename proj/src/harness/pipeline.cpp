#include "gccg/harness/pipeline.hpp"

#include "gccg/errors.hpp"

namespace gccg::harness {

PosResult run_pos(const std::vector<Sentence>& corpus, const PosStage& stage, std::uint64_t seed) {
  Rng rng = make_rng(seed, kPosStream);
  PosState st = pos_init(corpus, stage.model, rng);
  PosResult r;
  for (int it = 0; it < stage.iterations; ++it) {
    r.trace.push_back(pos_gibbs_sweep(st, rng));
    if (it >= stage.burn_in && (it - stage.burn_in) % stage.thin == 0) pos_retain(st);
  }
  if (const std::string bad = pos_audit(st); !bad.empty()) throw InvariantError("tagger audit: " + bad);
  r.tagged = pos_decode(st);

  std::map<std::string, std::map<int, int>> votes;
  for (std::size_t s = 0; s < r.tagged.size(); ++s)
    for (std::size_t i = 0; i < r.tagged.tokens[s].size(); ++i) ++votes[r.tagged.tokens[s][i]][r.tagged.tags[s][i]];
  for (const auto& [w, v] : votes) {
    int best = v.begin()->first;
    for (const auto& [t, n] : v)
      if (n > v.at(best)) best = t;
    r.word_tag[w] = best;
  }
  r.open_class_tag = open_class_tag(r.word_tag);
  return r;
}

int open_class_tag(const std::map<std::string, int>& word_tag) {
  std::map<int, int> types;
  for (const auto& [w, t] : word_tag) ++types[t];
  int best = 0, n = -1;
  for (const auto& [t, k] : types)
    if (k > n) {
      best = t;
      n = k;
    }
  return best;
}

std::vector<int> apply_tags(const Sentence& s, const std::map<std::string, int>& word_tag, int open_class) {
  std::vector<int> out;
  for (const auto& w : s) {
    auto it = word_tag.find(w);
    out.push_back(it == word_tag.end() ? open_class : it->second);
  }
  return out;
}

GroundingResult run_grounding(const TaggedCorpus& tagged, const std::vector<Scene>& scenes,
                              const Alphabets& alphabets, const GroundingStage& stage, std::uint64_t seed) {
  if (scenes.size() != tagged.size())
    throw LengthMismatch(std::to_string(tagged.size()) + " sentences but " + std::to_string(scenes.size()) +
                         " scenes");
  std::vector<GroundingPair> pairs;
  for (std::size_t i = 0; i < scenes.size(); ++i) pairs.push_back({tagged.tokens[i], tagged.tags[i], scenes[i]});
  Rng rng = make_rng(seed, kGroundStream);
  GroundingResult r{ground_init(pairs, alphabets, stage.model, rng), {}, {}};
  for (int it = 0; it < stage.iterations; ++it) r.trace.push_back(ground_gibbs_sweep(r.state, rng));
  if (const std::string bad = ground_audit(r.state); !bad.empty()) throw InvariantError("grounding audit: " + bad);
  r.lexicon = grounded_lexicon(r.state);
  return r;
}

InductionResult run_induction(const std::vector<std::vector<int>>& tags, const InductionStage& stage,
                              std::uint64_t seed) {
  InductionResult r;
  for (int c = 0; c < stage.chains; ++c) {
    Rng rng = make_rng(seed, kInduceStream + static_cast<std::uint64_t>(c));
    HdpState st = hdp_init(tags, stage.model, rng);
    ChainResult cr;
    double lp = hdp_log_joint(st);
    for (int it = 0; it < stage.iterations; ++it) {
      lp = hdp_gibbs_iteration(st, rng);
      if (it % stage.log_every == 0 || it + 1 == stage.iterations) cr.trace.emplace_back(it, lp);
      if (stage.audit_every > 0 && (it + 1) % stage.audit_every == 0)
        if (const std::string bad = hdp_audit(st); !bad.empty())
          throw InvariantError("induction audit, chain " + std::to_string(c) + ": " + bad);
    }
    if (const std::string bad = hdp_audit(st); !bad.empty())
      throw InvariantError("induction audit, chain " + std::to_string(c) + ": " + bad);
    cr.log_joint = lp;
    cr.escapes = st.escapes;
    cr.accepted = st.accepted;
    cr.proposed = st.proposed;
    if (c == 0 || lp > r.chains[static_cast<std::size_t>(r.best_chain)].log_joint) {
      r.best_chain = c;
      r.best_checkpoint = hdp_checkpoint(st, rng);
      r.best = std::move(st);
    }
    r.chains.push_back(std::move(cr));
  }
  return r;
}

Derivation with_words(Derivation d, const Sentence& words) {
  for (auto& n : d.nodes)
    if (n.leaf()) {
      if (n.start >= words.size()) throw LengthMismatch("tree is longer than its sentence");
      n.token = words[n.start];
    }
  return d;
}

}  // namespace gccg::harness
