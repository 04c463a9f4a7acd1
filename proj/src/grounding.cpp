#include "gccg/grounding.hpp"

#include <algorithm>
#include <cmath>

#include "gccg/errors.hpp"
#include "gccg/log_math.hpp"

namespace gccg {

namespace {

constexpr std::array<std::string_view, kNumModalities> kModalityNames{"action", "color", "spatial", "geometry",
                                                                      "none"};
constexpr std::array<Modality, 4> kGrounded{Modality::Action, Modality::Color, Modality::Spatial,
                                            Modality::Geometry};

std::size_t idx(Modality m) { return static_cast<std::size_t>(m); }

void add(GroundingState& st, const GroundingState::Token& tok, int delta) {
  const auto w = static_cast<std::size_t>(tok.word);
  st.mod_counts[w][idx(tok.modality)] += delta;
  st.mod_total[w] += delta;
  if (tok.modality != Modality::None) {
    st.sym_counts[w][idx(tok.modality)][static_cast<std::size_t>(tok.symbol)] += delta;
    st.sym_total[w][idx(tok.modality)] += delta;
  }
}

void allocate(GroundingState& st) {
  const auto V = static_cast<std::size_t>(st.vocab.size());
  st.mod_counts.assign(V, {});
  st.mod_total.assign(V, 0);
  st.sym_counts.assign(V, {});
  st.sym_total.assign(V, {});
  for (auto& per_word : st.sym_counts)
    for (Modality m : kGrounded) per_word[idx(m)].assign(static_cast<std::size_t>(st.alphabets.size(m)), 0);
}

// log of the Dirichlet-multinomial marginal of one count vector
double dm_log(const std::int64_t* counts, std::size_t n, const double* alpha) {
  double a_sum = 0.0, c_sum = 0.0, lp = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    a_sum += alpha[i];
    c_sum += static_cast<double>(counts[i]);
    if (counts[i] > 0) lp += log_gamma(static_cast<double>(counts[i]) + alpha[i]) - log_gamma(alpha[i]);
  }
  return lp + log_gamma(a_sum) - log_gamma(a_sum + c_sum);
}

}  // namespace

std::string_view modality_name(Modality m) { return kModalityNames[idx(m)]; }

Modality parse_modality(std::string_view name) {
  for (std::size_t i = 0; i < kModalityNames.size(); ++i)
    if (kModalityNames[i] == name) return static_cast<Modality>(i);
  throw DataError("unknown modality '" + std::string(name) + "'");
}

int Alphabets::size(Modality m) const {
  switch (m) {
    case Modality::Action: return action;
    case Modality::Color: return color;
    case Modality::Spatial: return spatial;
    case Modality::Geometry: return geometry;
    case Modality::None: return 0;
  }
  return 0;
}

std::vector<int> Scene::present(Modality m) const {
  std::vector<int> out;
  switch (m) {
    case Modality::Action:
      if (action) out.push_back(*action);
      break;
    case Modality::Color:
      for (const auto& o : objects) out.push_back(o.color);
      break;
    case Modality::Geometry:
      for (const auto& o : objects) out.push_back(o.geometry);
      break;
    case Modality::Spatial:
      for (const auto& r : spatial) out.push_back(r.symbol);
      break;
    case Modality::None:
      break;
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

int Scene::spatial_symbol(int from, int to) const {
  for (const auto& r : spatial)
    if (r.from == from && r.to == to) return r.symbol;
  return -1;
}

void Scene::validate(const Alphabets& a) const {
  if (objects.empty()) throw EmptyScene("scene has no objects");
  auto check = [](int v, int size, const char* what) {
    if (v < 0 || v >= size)
      throw DataError(std::string(what) + " symbol " + std::to_string(v) + " outside alphabet of size " +
                      std::to_string(size));
  };
  if (action) check(*action, a.action, "action");
  for (const auto& o : objects) {
    check(o.color, a.color, "color");
    check(o.geometry, a.geometry, "geometry");
  }
  const int n = static_cast<int>(objects.size());
  for (const auto& r : spatial) {
    check(r.symbol, a.spatial, "spatial");
    if (r.from < 0 || r.from >= n || r.to < 0 || r.to >= n || r.from == r.to)
      throw DataError("spatial relation refers to a bad object pair");
  }
}

const std::array<double, kNumModalities>& GroundingState::phi(int word) const {
  auto it = config.phi_by_tag.find(word_tag[static_cast<std::size_t>(word)]);
  return it == config.phi_by_tag.end() ? config.phi_default : it->second;
}

double GroundingState::modality_predictive(int word, Modality m) const {
  const auto& p = phi(word);
  double total = 0.0;
  for (double x : p) total += x;
  const auto w = static_cast<std::size_t>(word);
  return (static_cast<double>(mod_counts[w][idx(m)]) + p[idx(m)]) / (static_cast<double>(mod_total[w]) + total);
}

double GroundingState::symbol_predictive(int word, Modality m, int symbol) const {
  const auto w = static_cast<std::size_t>(word);
  const double a = alphabets.size(m);
  return (static_cast<double>(sym_counts[w][idx(m)][static_cast<std::size_t>(symbol)]) + config.theta) /
         (static_cast<double>(sym_total[w][idx(m)]) + a * config.theta);
}

GroundingState ground_init(const std::vector<GroundingPair>& pairs, const Alphabets& alphabets,
                           const GroundingConfig& config, Rng& rng) {
  if (!(config.theta > 0.0)) throw ConfigError("theta must be positive");
  if (!(config.none_weight > 0.0) || config.none_weight > 1.0) throw ConfigError("none_weight must be in (0, 1]");
  for (const auto& row : config.phi_by_tag)
    for (double x : row.second)
      if (!(x > 0.0)) throw ConfigError("phi pseudo-counts must be positive");
  for (double x : config.phi_default)
    if (!(x > 0.0)) throw ConfigError("phi pseudo-counts must be positive");
  for (Modality m : kGrounded)
    if (alphabets.size(m) < 1) throw ConfigError("every modality alphabet needs at least one symbol");

  GroundingState st;
  st.alphabets = alphabets;
  st.config = config;
  std::vector<std::map<int, int>> tag_votes;
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto& pair = pairs[p];
    if (pair.tags.size() != pair.tokens.size())
      throw MissingScene("pair " + std::to_string(p) + " has " + std::to_string(pair.tokens.size()) +
                         " tokens but " + std::to_string(pair.tags.size()) + " tags");
    pair.scene.validate(alphabets);
    st.scenes.push_back(pair.scene);
    for (std::size_t i = 0; i < pair.tokens.size(); ++i) {
      const int w = st.vocab.intern(pair.tokens[i]);
      if (static_cast<std::size_t>(w) >= tag_votes.size()) tag_votes.resize(static_cast<std::size_t>(w) + 1);
      ++tag_votes[static_cast<std::size_t>(w)][pair.tags[i]];
      st.tokens.push_back({static_cast<int>(p), w, Modality::None, -1});
    }
  }
  if (st.tokens.empty()) throw EmptyCorpus("grounding needs at least one token");
  for (const auto& votes : tag_votes) {
    int best = votes.begin()->first, n = -1;
    for (const auto& [tag, c] : votes)
      if (c > n) best = tag, n = c;
    st.word_tag.push_back(best);
  }
  allocate(st);

  std::vector<std::pair<Modality, std::vector<int>>> options;
  for (auto& tok : st.tokens) {
    const Scene& scene = st.scenes[static_cast<std::size_t>(tok.pair)];
    options.clear();
    for (Modality m : kGrounded)
      if (auto p = scene.present(m); !p.empty()) options.emplace_back(m, std::move(p));
    options.emplace_back(Modality::None, std::vector<int>{});
    const auto& pick = options[uniform_index(rng, options.size())];
    tok.modality = pick.first;
    tok.symbol = pick.second.empty() ? -1 : pick.second[uniform_index(rng, pick.second.size())];
    add(st, tok, +1);
  }
  return st;
}

std::vector<GroundingOption> ground_conditional(const GroundingState& st, std::size_t t) {
  const auto& tok = st.tokens[t];
  const Scene& scene = st.scenes[static_cast<std::size_t>(tok.pair)];
  std::vector<GroundingOption> out;
  for (Modality m : kGrounded) {
    const std::vector<int> syms = scene.present(m);
    if (syms.empty()) continue;
    const double pm = st.modality_predictive(tok.word, m);
    for (int s : syms) out.push_back({m, s, pm * st.symbol_predictive(tok.word, m, s)});
  }
  out.push_back({Modality::None, -1, st.modality_predictive(tok.word, Modality::None) * st.config.none_weight});
  return out;
}

double ground_gibbs_sweep(GroundingState& st, Rng& rng) {
  std::vector<double> w;
  for (std::size_t t = 0; t < st.tokens.size(); ++t) {
    add(st, st.tokens[t], -1);
    const auto options = ground_conditional(st, t);
    w.clear();
    for (const auto& o : options) w.push_back(o.weight);
    const std::size_t k = sample_linear(rng, w);
    if (k >= options.size()) throw InvariantError("grounding conditional has no mass");
    st.tokens[t].modality = options[k].modality;
    st.tokens[t].symbol = options[k].symbol;
    add(st, st.tokens[t], +1);
  }
  return ground_log_joint(st);
}

double ground_log_joint(const GroundingState& st) {
  double lp = 0.0;
  std::vector<double> theta;
  for (int w = 0; w < st.vocab.size(); ++w) {
    const auto uw = static_cast<std::size_t>(w);
    lp += dm_log(st.mod_counts[uw].data(), kNumModalities, st.phi(w).data());
    for (Modality m : kGrounded) {
      const auto& c = st.sym_counts[uw][idx(m)];
      theta.assign(c.size(), st.config.theta);
      lp += dm_log(c.data(), c.size(), theta.data());
    }
    lp += static_cast<double>(st.mod_counts[uw][idx(Modality::None)]) * std::log(st.config.none_weight);
  }
  return lp;
}

std::string ground_audit(const GroundingState& st) {
  GroundingState fresh;
  fresh.alphabets = st.alphabets;
  fresh.vocab = st.vocab;
  allocate(fresh);
  for (std::size_t t = 0; t < st.tokens.size(); ++t) {
    const auto& tok = st.tokens[t];
    if (tok.modality == Modality::None) {
      if (tok.symbol != -1) return "token " + std::to_string(t) + " is ungrounded but carries a symbol";
    } else {
      const auto p = st.scenes[static_cast<std::size_t>(tok.pair)].present(tok.modality);
      if (!std::binary_search(p.begin(), p.end(), tok.symbol))
        return "token " + std::to_string(t) + " is grounded in a symbol absent from its scene";
    }
    add(fresh, tok, +1);
  }
  if (fresh.mod_counts != st.mod_counts || fresh.mod_total != st.mod_total) return "modality counts differ from a rebuild";
  if (fresh.sym_counts != st.sym_counts || fresh.sym_total != st.sym_total) return "symbol counts differ from a rebuild";
  return {};
}

std::vector<GroundedLexiconEntry> grounded_lexicon(const GroundingState& st) {
  std::vector<GroundedLexiconEntry> out;
  for (int w = 0; w < st.vocab.size(); ++w) {
    GroundedLexiconEntry e;
    e.word = st.vocab.word(w);
    e.tag = st.word_tag[static_cast<std::size_t>(w)];
    e.count = st.mod_total[static_cast<std::size_t>(w)];
    std::size_t best = 0;
    for (std::size_t m = 0; m < kNumModalities; ++m) {
      e.modality_posterior[m] = st.modality_predictive(w, static_cast<Modality>(m));
      if (e.modality_posterior[m] > e.modality_posterior[best]) best = m;
    }
    e.dominant = static_cast<Modality>(best);
    e.confidence = e.modality_posterior[best];
    if (e.dominant != Modality::None)
      for (int s = 0; s < st.alphabets.size(e.dominant); ++s) e.symbols.push_back(st.symbol_predictive(w, e.dominant, s));
    out.push_back(std::move(e));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.word < b.word; });
  return out;
}

namespace {

template <class Score>
std::optional<int> argmax(int n, Score score, bool& ambiguous) {
  std::optional<int> best;
  double top = -1.0;
  ambiguous = false;
  for (int i = 0; i < n; ++i) {
    const double s = score(i);
    if (s < 0.0) continue;  // excluded candidate
    if (!best || s > top) {
      best = i;
      top = s;
      ambiguous = false;
    } else if (s == top) {
      ambiguous = true;
    }
  }
  return best;
}

}  // namespace

Resolution resolve_instruction(const Sentence& tokens, const Scene& scene, const GroundingState& st) {
  auto dominant = [&](const std::string& w) -> std::optional<Modality> {
    const int id = st.vocab.find(w);
    if (id < 0) return std::nullopt;
    Modality best = Modality::Action;
    for (std::size_t m = 1; m < kNumModalities; ++m)
      if (st.modality_predictive(id, static_cast<Modality>(m)) > st.modality_predictive(id, best))
        best = static_cast<Modality>(m);
    return best;
  };

  std::vector<int> action_words, spatial_words, ref_words, land_words;
  bool after_spatial = false;
  for (const auto& w : tokens) {
    const auto m = dominant(w);
    if (!m) continue;
    const int id = st.vocab.find(w);
    switch (*m) {
      case Modality::Action: action_words.push_back(id); break;
      case Modality::Spatial:
        spatial_words.push_back(id);
        after_spatial = true;
        break;
      case Modality::Color:
      case Modality::Geometry: (after_spatial ? land_words : ref_words).push_back(id); break;
      case Modality::None: break;
    }
  }

  auto describe = [&](int o, const std::vector<int>& words) {
    double p = 1.0;
    const auto& obj = scene.objects[static_cast<std::size_t>(o)];
    for (int w : words) {
      const Modality m = *dominant(st.vocab.word(w));
      p *= st.symbol_predictive(w, m, m == Modality::Color ? obj.color : obj.geometry);
    }
    return p;
  };

  Resolution r;
  if (!action_words.empty()) {
    std::vector<int> candidates;
    if (scene.action)
      candidates.push_back(*scene.action);
    else
      for (int s = 0; s < st.alphabets.action; ++s) candidates.push_back(s);
    const auto pick = argmax(
        static_cast<int>(candidates.size()),
        [&](int i) {
          double p = 1.0;
          for (int w : action_words) p *= st.symbol_predictive(w, Modality::Action, candidates[static_cast<std::size_t>(i)]);
          return p;
        },
        r.action_ambiguous);
    if (pick) r.action = candidates[static_cast<std::size_t>(*pick)];
  }
  const int n = static_cast<int>(scene.objects.size());
  if (!ref_words.empty()) {
    r.referent = argmax(n, [&](int o) { return describe(o, ref_words); }, r.referent_ambiguous);
    if (r.referent) r.referent_color = scene.objects[static_cast<std::size_t>(*r.referent)].color;
  }
  if (!spatial_words.empty() && r.referent) {
    const int ref = *r.referent;
    r.landmark = argmax(
        n,
        [&](int o) {
          if (o == ref) return -1.0;
          const int sym = scene.spatial_symbol(ref, o);
          if (sym < 0) return 0.0;
          double p = describe(o, land_words);
          for (int w : spatial_words) p *= st.symbol_predictive(w, Modality::Spatial, sym);
          return p;
        },
        r.landmark_ambiguous);
  }
  return r;
}

}  // namespace gccg
