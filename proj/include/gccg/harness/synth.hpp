#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gccg/chart.hpp"
#include "gccg/grounding.hpp"
#include "gccg/pos.hpp"
#include "gccg/random.hpp"
#include "gccg/rules.hpp"

namespace gccg::harness {

struct SynthRule {
  Category parent;
  Combinator combinator;
  Category argument;
  double prob = 0.0;
};

struct SynthTag {
  int id = 0;
  std::string name;
  Category category;
  std::vector<std::string> words;
  double weight = 1.0;
};

struct WordBinding {
  Modality modality = Modality::None;
  int symbol = 0;
};

struct SceneTemplate {
  Alphabets alphabets;
  int objects = 3;
  std::map<std::string, WordBinding> words;
};

/// Generator grammar. For every category that can be generated,
/// leaf_prob[c] plus the probabilities of the rules with parent c sum to 1.
struct SynthGrammarSpec {
  RuleConfig rules;  // space and the kinds the generator uses
  std::vector<SynthRule> expansions;
  std::map<Category, double> leaf_prob;
  std::vector<SynthTag> tags;
  std::size_t max_length = 8;
  Category root = Category::atom("S");
  std::optional<SceneTemplate> scenes;

  /// Structural checks plus the termination/expectation check. Throws
  /// SpecError.
  void validate() const;
  /// Probability that a derivation from the root has at most max_length leaves.
  double length_cap_mass() const;
};

SynthGrammarSpec parse_synth_spec(const std::string& json_text);
std::string synth_spec_json(const SynthGrammarSpec& spec);

/// The 6-rule generator used for end-to-end induction runs.
SynthGrammarSpec default_synth_spec();

struct SynthCorpus {
  std::vector<Sentence> sentences;
  std::vector<Derivation> gold_trees;  // leaves carry words
  std::vector<std::vector<int>> gold_tags;
  std::vector<Scene> scenes;  // empty unless the spec has scene templates
};

/// Top-down generation from the root with rejection of over-long sentences.
SynthCorpus synth_corpus(const SynthGrammarSpec& spec, std::size_t n, Rng& rng);

/// Scene consistent with the grounded words of `tokens`: descriptor words
/// before the first spatial word describe object 0, those after it object 1,
/// the spatial word fixes the (0, 1) relation; everything else is random.
/// Objects are shuffled afterwards, so the referent is not always object 0.
Scene synth_scene(const Sentence& tokens, const SceneTemplate& tmpl, Rng& rng);

/// Instruction-style grounding fixture: 3 action, 4 color, 2 spatial and 3
/// geometry words with one-to-one symbol bindings.
struct InstructionFixture {
  SceneTemplate scenes;
  std::vector<GroundingPair> pairs;
  std::map<std::string, Modality> truth;
};
InstructionFixture synth_instructions(std::size_t n, Rng& rng);

}  // namespace gccg::harness
