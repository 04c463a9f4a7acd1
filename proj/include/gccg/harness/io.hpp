#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "gccg/chart.hpp"
#include "gccg/grounding.hpp"
#include "gccg/harness/eval.hpp"
#include "gccg/pos.hpp"

namespace gccg::harness {

namespace fs = std::filesystem;

inline constexpr int kFormatVersion = 1;
inline constexpr const char* kToolVersion = "gccg 0.1.0";

std::string read_file(const fs::path& p);  // throws IoError
void write_file(const fs::path& p, const std::string& text);
std::string sha256_hex(const std::string& bytes);

/// One sentence per line, whitespace tokens. Blank lines are skipped.
/// Throws IoError when unreadable, EmptyCorpus when nothing is left.
std::vector<Sentence> load_corpus(const fs::path& p, bool lowercase);
std::string corpus_text(const std::vector<Sentence>& corpus);

// Tagged corpora: JSONL, {"format_version", "tokens", "tags"} per line.
std::string tagged_jsonl(const TaggedCorpus& c);
std::string tagged_text(const TaggedCorpus& c);  // word/tag per token
TaggedCorpus read_tagged(const fs::path& p);

// Trees: one bracketed tree per line, plus JSONL with a nested record. An
// empty derivation (no parse) is written as the line kNoParse.
inline constexpr const char* kNoParse = "NOPARSE";
nlohmann::ordered_json tree_record(const Derivation& d);
std::string trees_text(const std::vector<Derivation>& trees);
std::string trees_jsonl(const std::vector<Derivation>& trees);
/// Structural read of a bracketed tree file; `lengths` gets the token count
/// of each tree.
std::vector<SpanSet> read_tree_spans(const fs::path& p, std::vector<std::size_t>* lengths = nullptr);

/// Scene file: JSONL whose first record is a header declaring the
/// alphabets, then one scene per sentence in order. Symbols are given
/// directly (action_sym, color_sym, geom_sym, spatial_sym) or as feature
/// vectors (*_features) that are quantized per modality with k-means, k the
/// alphabet size. Bad records raise LineError naming the line.
struct SceneFile {
  Alphabets alphabets;
  std::vector<Scene> scenes;
};
SceneFile read_scene_file(const fs::path& p, std::uint64_t quantize_seed);
std::string scene_file_text(const SceneFile& f);

std::string lexicon_jsonl(const std::vector<GroundedLexiconEntry>& lex);
std::vector<GroundedLexiconEntry> read_lexicon(const fs::path& p);

std::string truth_json(const std::map<std::string, Modality>& truth);
std::map<std::string, Modality> read_truth(const fs::path& p);

/// The count tables resolve_instruction and grounded_lexicon read.
std::string grounding_model_json(const GroundingState& st);
GroundingState read_grounding_model(const fs::path& p);

/// Manifest of a pipeline step: config hash, seed, version, input and
/// output digests. No timestamps or absolute paths, so two identical runs
/// produce identical manifests.
struct ManifestEntry {
  std::string name;
  std::string sha256;
};
std::string manifest_json(const std::string& command, const std::string& config_canonical, std::uint64_t seed,
                          const std::vector<fs::path>& inputs, const fs::path& out_dir,
                          const std::vector<std::string>& outputs);
/// Recomputes output digests; empty string when they match.
std::string verify_manifest(const fs::path& out_dir);

}  // namespace gccg::harness
