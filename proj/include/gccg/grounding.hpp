#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gccg/pos.hpp"
#include "gccg/random.hpp"

namespace gccg {

enum class Modality : std::uint8_t { Action, Color, Spatial, Geometry, None };
inline constexpr int kNumModalities = 5;

std::string_view modality_name(Modality m);
Modality parse_modality(std::string_view name);  // throws DataError

/// Alphabet size per grounded modality.
struct Alphabets {
  int action = 0;
  int color = 0;
  int spatial = 0;
  int geometry = 0;
  int size(Modality m) const;
};

struct SceneObject {
  int color = 0;
  int geometry = 0;
  std::vector<double> position;
};

struct SpatialRelation {
  int from = 0;
  int to = 0;
  int symbol = 0;
};

/// One situation. `action` is optional: when absent, no action symbol is
/// present for learning and resolve_instruction considers every action.
struct Scene {
  std::optional<int> action;
  std::vector<SceneObject> objects;
  std::vector<SpatialRelation> spatial;

  /// Sorted distinct symbols of modality m present in the scene.
  std::vector<int> present(Modality m) const;
  /// Symbol of the ordered pair (from, to), or -1.
  int spatial_symbol(int from, int to) const;
  /// Throws EmptyScene for zero objects, DataError for out-of-range symbols.
  void validate(const Alphabets& a) const;
};

struct GroundingConfig {
  /// Modality pseudo-counts in the order action, color, spatial, geometry,
  /// none; per tag id, falling back to `phi_default`.
  std::array<double, kNumModalities> phi_default{1.0, 1.0, 1.0, 1.0, 1.0};
  std::map<int, std::array<double, kNumModalities>> phi_by_tag;
  double theta = 0.1;       // symbol Dirichlet
  double none_weight = 0.5; // likelihood factor of an ungrounded token
};

/// A tagged sentence paired with its scene.
struct GroundingPair {
  Sentence tokens;
  std::vector<int> tags;
  Scene scene;
};

struct GroundingState {
  Alphabets alphabets;
  GroundingConfig config;
  Vocabulary vocab;
  std::vector<int> word_tag;  // majority tag per word type (ties: lowest id)
  std::vector<Scene> scenes;

  struct Token {
    int pair = 0;
    int word = 0;
    Modality modality = Modality::None;
    int symbol = -1;
  };
  std::vector<Token> tokens;

  // counts[w][m]; symbol counts[w][m][s] for grounded modalities
  std::vector<std::array<std::int64_t, kNumModalities>> mod_counts;
  std::vector<std::int64_t> mod_total;
  std::vector<std::array<std::vector<std::int64_t>, 4>> sym_counts;
  std::vector<std::array<std::int64_t, 4>> sym_total;

  const std::array<double, kNumModalities>& phi(int word) const;
  /// Predictive P(m | w) and P(s | w, m) from the current counts.
  double modality_predictive(int word, Modality m) const;
  double symbol_predictive(int word, Modality m, int symbol) const;
};

/// Random modality per token among those with a symbol present in its scene
/// (plus none), symbol uniform among the present ones. Throws MissingScene
/// when a pair's tags do not line up with its tokens, EmptyScene for empty
/// scenes, EmptyCorpus without tokens.
GroundingState ground_init(const std::vector<GroundingPair>& pairs, const Alphabets& alphabets,
                           const GroundingConfig& config, Rng& rng);

/// (modality, symbol) choice with its unnormalized conditional weight.
struct GroundingOption {
  Modality modality;
  int symbol;
  double weight;
};

/// Full conditional of token t; its own counts must be removed first.
std::vector<GroundingOption> ground_conditional(const GroundingState& state, std::size_t t);

/// One sweep in token order. Returns the collapsed log joint afterwards.
double ground_gibbs_sweep(GroundingState& state, Rng& rng);

double ground_log_joint(const GroundingState& state);

std::string ground_audit(const GroundingState& state);

struct GroundedLexiconEntry {
  std::string word;
  int tag = 0;
  Modality dominant = Modality::None;
  std::array<double, kNumModalities> modality_posterior{};
  std::vector<double> symbols;  // predictive over the dominant modality's alphabet
  double confidence = 0.0;
  std::int64_t count = 0;
};

/// One entry per word type, sorted by word. Ties in the modality posterior
/// go to the earlier modality (action, color, spatial, geometry, none).
std::vector<GroundedLexiconEntry> grounded_lexicon(const GroundingState& state);

struct Resolution {
  std::optional<int> action;
  std::optional<int> referent;
  std::optional<int> referent_color;
  std::optional<int> landmark;
  bool action_ambiguous = false;
  bool referent_ambiguous = false;
  bool landmark_ambiguous = false;
};

/// Reads an instruction against a scene with the learned lexicon. Words are
/// classed by dominant modality; descriptor words before the first spatial
/// word describe the referent, those after it the landmark. Unknown words
/// are ignored.
Resolution resolve_instruction(const Sentence& tokens, const Scene& scene, const GroundingState& state);

}  // namespace gccg
