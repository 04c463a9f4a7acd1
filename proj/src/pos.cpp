#include "gccg/pos.hpp"

#include <cmath>

#include "gccg/errors.hpp"
#include "gccg/log_math.hpp"

namespace gccg {

std::size_t TaggedCorpus::num_tokens() const {
  std::size_t n = 0;
  for (const auto& s : tokens) n += s.size();
  return n;
}

int Vocabulary::intern(const std::string& w) {
  auto [it, fresh] = ids_.emplace(w, size());
  if (fresh) words_.push_back(w);
  return it->second;
}

int Vocabulary::find(const std::string& w) const {
  auto it = ids_.find(w);
  return it == ids_.end() ? -1 : it->second;
}

namespace {

void check_config(const PosConfig& cfg) {
  if (cfg.num_tags < 1) throw ConfigError("num_tags must be positive");
  if (!(cfg.alpha_t > 0.0) || !(cfg.alpha_e > 0.0)) throw ConfigError("POS hyperparameters must be positive");
}

void add_token(PosState& st, std::size_t s, std::size_t i, int delta) {
  const auto& z = st.z[s];
  const int k = z[i];
  const int prev = i == 0 ? st.K : z[i - 1];
  st.t(prev, k) += delta;
  st.trans_row[static_cast<std::size_t>(prev)] += delta;
  if (i + 1 < z.size()) {
    st.t(k, z[i + 1]) += delta;
    st.trans_row[static_cast<std::size_t>(k)] += delta;
  }
  st.e(k, st.words[s][i]) += delta;
  st.emit_row[static_cast<std::size_t>(k)] += delta;
}

void rebuild(PosState& st) {
  const auto K = static_cast<std::size_t>(st.K);
  const auto V = static_cast<std::size_t>(st.vocab.size());
  st.trans.assign((K + 1) * K, 0);
  st.trans_row.assign(K + 1, 0);
  st.emit.assign(K * V, 0);
  st.emit_row.assign(K, 0);
  for (std::size_t s = 0; s < st.z.size(); ++s) {
    const auto& z = st.z[s];
    for (std::size_t i = 0; i < z.size(); ++i) {
      // Only the incoming transition per token, so each edge is counted once.
      const int prev = i == 0 ? st.K : z[i - 1];
      st.t(prev, z[i]) += 1;
      st.trans_row[static_cast<std::size_t>(prev)] += 1;
      st.e(z[i], st.words[s][i]) += 1;
      st.emit_row[static_cast<std::size_t>(z[i])] += 1;
    }
  }
}

PosState make_state(const std::vector<Sentence>& corpus, const PosConfig& cfg) {
  check_config(cfg);
  std::size_t n = 0;
  for (const auto& s : corpus) n += s.size();
  if (n == 0) throw EmptyCorpus("POS induction needs at least one token");
  PosState st;
  st.K = cfg.num_tags;
  st.alpha_t = cfg.alpha_t;
  st.alpha_e = cfg.alpha_e;
  for (const auto& s : corpus) {
    if (s.empty()) continue;
    std::vector<int> ids;
    ids.reserve(s.size());
    for (const auto& w : s) ids.push_back(st.vocab.intern(w));
    st.words.push_back(std::move(ids));
  }
  st.marginals.resize(st.words.size());
  return st;
}

}  // namespace

PosState pos_init(const std::vector<Sentence>& corpus, const PosConfig& cfg, Rng& rng) {
  PosState st = make_state(corpus, cfg);
  st.z.resize(st.words.size());
  for (std::size_t s = 0; s < st.words.size(); ++s) {
    st.z[s].resize(st.words[s].size());
    for (int& k : st.z[s]) k = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(st.K)));
  }
  rebuild(st);
  return st;
}

PosState pos_init_from(const std::vector<Sentence>& corpus, const std::vector<std::vector<int>>& z,
                       const PosConfig& cfg) {
  PosState st = make_state(corpus, cfg);
  std::vector<std::vector<int>> kept;
  for (const auto& tags : z)
    if (!tags.empty()) kept.push_back(tags);
  if (kept.size() != st.words.size()) throw LengthMismatch("initial tags do not match the corpus");
  for (std::size_t s = 0; s < kept.size(); ++s) {
    if (kept[s].size() != st.words[s].size()) throw LengthMismatch("initial tags do not match the corpus");
    for (int k : kept[s])
      if (k < 0 || k >= st.K) throw DataError("initial tag out of range");
  }
  st.z = std::move(kept);
  rebuild(st);
  return st;
}

std::vector<double> pos_conditional(const PosState& st, std::size_t s, std::size_t i) {
  const auto& z = st.z[s];
  const int K = st.K;
  const double V = st.vocab.size();
  const int prev = i == 0 ? K : z[i - 1];
  const bool has_next = i + 1 < z.size();
  const int next = has_next ? z[i + 1] : -1;
  const int w = st.words[s][i];
  const double kat = K * st.alpha_t;
  std::vector<double> p(static_cast<std::size_t>(K));
  const double in_den = static_cast<double>(st.trans_row[static_cast<std::size_t>(prev)]) + kat;
  for (int k = 0; k < K; ++k) {
    double v = (static_cast<double>(st.t(prev, k)) + st.alpha_t) / in_den;
    if (has_next) {
      const double same = (prev == k) ? 1.0 : 0.0;
      const double hit = (prev == k && k == next) ? 1.0 : 0.0;
      v *= (static_cast<double>(st.t(k, next)) + st.alpha_t + hit) /
           (static_cast<double>(st.trans_row[static_cast<std::size_t>(k)]) + kat + same);
    }
    v *= (static_cast<double>(st.e(k, w)) + st.alpha_e) /
         (static_cast<double>(st.emit_row[static_cast<std::size_t>(k)]) + V * st.alpha_e);
    p[static_cast<std::size_t>(k)] = v;
  }
  return p;
}

double pos_gibbs_sweep(PosState& st, Rng& rng) {
  for (std::size_t s = 0; s < st.z.size(); ++s) {
    for (std::size_t i = 0; i < st.z[s].size(); ++i) {
      add_token(st, s, i, -1);
      const auto p = pos_conditional(st, s, i);
      const std::size_t k = sample_linear(rng, p);
      if (k >= p.size()) throw InvariantError("POS conditional has no mass");
      st.z[s][i] = static_cast<int>(k);
      add_token(st, s, i, +1);
    }
  }
  return pos_log_joint(st);
}

double pos_log_joint(const PosState& st) {
  const int K = st.K;
  const int V = st.vocab.size();
  double lp = 0.0;
  const double lg_at = log_gamma(st.alpha_t), lg_kat = log_gamma(K * st.alpha_t);
  for (int r = 0; r <= K; ++r) {
    lp += lg_kat - log_gamma(static_cast<double>(st.trans_row[static_cast<std::size_t>(r)]) + K * st.alpha_t);
    for (int k = 0; k < K; ++k) lp += log_gamma(static_cast<double>(st.t(r, k)) + st.alpha_t) - lg_at;
  }
  const double lg_ae = log_gamma(st.alpha_e), lg_vae = log_gamma(V * st.alpha_e);
  for (int k = 0; k < K; ++k) {
    lp += lg_vae - log_gamma(static_cast<double>(st.emit_row[static_cast<std::size_t>(k)]) + V * st.alpha_e);
    for (int w = 0; w < V; ++w) {
      const auto c = st.e(k, w);
      if (c > 0) lp += log_gamma(static_cast<double>(c) + st.alpha_e) - lg_ae;
    }
  }
  return lp;
}

void pos_retain(PosState& st) {
  for (std::size_t s = 0; s < st.z.size(); ++s) {
    auto& m = st.marginals[s];
    if (m.empty()) m.assign(st.z[s].size() * static_cast<std::size_t>(st.K), 0);
    for (std::size_t i = 0; i < st.z[s].size(); ++i)
      ++m[i * static_cast<std::size_t>(st.K) + static_cast<std::size_t>(st.z[s][i])];
  }
  ++st.retained;
}

TaggedCorpus pos_decode(const PosState& st) {
  TaggedCorpus out;
  for (std::size_t s = 0; s < st.z.size(); ++s) {
    Sentence words;
    for (int w : st.words[s]) words.push_back(st.vocab.word(w));
    out.tokens.push_back(std::move(words));
    if (st.retained == 0) {
      out.tags.push_back(st.z[s]);
      continue;
    }
    std::vector<int> tags(st.z[s].size());
    const auto& m = st.marginals[s];
    for (std::size_t i = 0; i < tags.size(); ++i) {
      int best = 0;
      for (int k = 1; k < st.K; ++k)
        if (m[i * static_cast<std::size_t>(st.K) + static_cast<std::size_t>(k)] >
            m[i * static_cast<std::size_t>(st.K) + static_cast<std::size_t>(best)])
          best = k;
      tags[i] = best;
    }
    out.tags.push_back(std::move(tags));
  }
  return out;
}

std::string pos_audit(const PosState& st) {
  PosState fresh;
  fresh.K = st.K;
  fresh.vocab = st.vocab;
  fresh.words = st.words;
  fresh.z = st.z;
  rebuild(fresh);
  if (fresh.trans != st.trans) return "transition counts differ from a rebuild";
  if (fresh.trans_row != st.trans_row) return "transition row totals differ from a rebuild";
  if (fresh.emit != st.emit) return "emission counts differ from a rebuild";
  if (fresh.emit_row != st.emit_row) return "emission totals differ from a rebuild";
  return {};
}

}  // namespace gccg
