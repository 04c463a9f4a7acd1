#include "gccg/harness/cli.hpp"

#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gccg/chart.hpp"
#include "gccg/errors.hpp"
#include "gccg/harness/config.hpp"
#include "gccg/harness/eval.hpp"
#include "gccg/harness/io.hpp"
#include "gccg/harness/pipeline.hpp"
#include "gccg/harness/synth.hpp"

namespace gccg::harness {

namespace {

using ojson = nlohmann::ordered_json;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Args {
  std::string config, out;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::string corpus, tagged, scenes, lexicon, checkpoint, pos_model, instructions, model, spec;
  std::string gold_trees, pred_trees, gold_tags, pred_tags, truth;
  std::optional<std::size_t> sentences;
};

// One subcommand invocation: collects inputs and outputs for the manifest.
class Run {
 public:
  Run(std::string command, PipelineConfig cfg, fs::path out, fs::path config_path)
      : command_(std::move(command)), cfg_(std::move(cfg)), out_(std::move(out)) {
    inputs_.push_back(std::move(config_path));
  }

  const PipelineConfig& cfg() const { return cfg_; }

  fs::path input(const std::string& flag, const char* key, const char* option) {
    std::string p = flag;
    if (p.empty()) {
      auto it = cfg_.paths.find(key);
      if (it == cfg_.paths.end())
        throw UsageError(command_ + " needs " + option + " (or paths." + key + " in the config)");
      p = it->second;
    }
    inputs_.emplace_back(p);
    return p;
  }

  std::optional<fs::path> optional_input(const std::string& flag, const char* key) {
    if (flag.empty() && !cfg_.paths.count(key)) return std::nullopt;
    return input(flag, key, "");
  }

  void emit(const std::string& name, const std::string& text) {
    write_file(out_ / name, text);
    outputs_.push_back(name);
  }

  void finish(std::ostream& out) {
    write_file(out_ / "manifest.json",
               manifest_json(command_, config_json(cfg_), cfg_.seed, inputs_, out_, outputs_));
    for (const auto& o : outputs_) out << "wrote " << (out_ / o).string() << "\n";
    out << "wrote " << (out_ / "manifest.json").string() << "\n";
  }

 private:
  std::string command_;
  PipelineConfig cfg_;
  fs::path out_;
  std::vector<fs::path> inputs_;
  std::vector<std::string> outputs_;
};

std::string trace_jsonl(const char* key, const std::vector<double>& trace) {
  std::string out;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    ojson j;
    j["format_version"] = kFormatVersion;
    j[key] = i;
    j["log_joint"] = trace[i];
    out += j.dump() + "\n";
  }
  return out;
}

void cmd_synth(Run& run, const Args& a) {
  const PipelineConfig& cfg = run.cfg();
  SynthGrammarSpec spec;
  std::string label = "default generator (self-chosen synthetic defaults)";
  std::string spec_path = a.spec;
  if (spec_path.empty() && cfg.synth_spec) spec_path = *cfg.synth_spec;
  if (!spec_path.empty()) {
    spec = parse_synth_spec(read_file(run.input(spec_path, "", "--spec")));
    label = "spec file " + fs::path(spec_path).filename().string();
  } else {
    spec = default_synth_spec();
  }
  const std::size_t n = a.sentences.value_or(cfg.synth_sentences);
  Rng rng = make_rng(cfg.seed);
  const SynthCorpus c = synth_corpus(spec, n, rng);

  run.emit("corpus.txt", corpus_text(c.sentences));
  run.emit("gold_trees.txt", trees_text(c.gold_trees));
  run.emit("gold_trees.jsonl", trees_jsonl(c.gold_trees));
  run.emit("gold_tags.jsonl", tagged_jsonl(TaggedCorpus{c.sentences, c.gold_tags}));
  run.emit("synth_spec.json", synth_spec_json(spec));
  if (spec.scenes) {
    run.emit("scenes.jsonl", scene_file_text(SceneFile{spec.scenes->alphabets, c.scenes}));
    std::map<std::string, Modality> truth;
    for (const auto& s : c.sentences)
      for (const auto& w : s) {
        auto it = spec.scenes->words.find(w);
        truth[w] = it == spec.scenes->words.end() ? Modality::None : it->second.modality;
      }
    run.emit("grounding_truth.json", truth_json(truth));
  }
  std::set<std::string> vocab;
  std::size_t tokens = 0;
  for (const auto& s : c.sentences) {
    tokens += s.size();
    vocab.insert(s.begin(), s.end());
  }
  ojson rep;
  rep["format_version"] = kFormatVersion;
  rep["generator"] = label;
  rep["sentences"] = c.sentences.size();
  rep["tokens"] = tokens;
  rep["vocabulary"] = vocab.size();
  rep["mean_length"] = static_cast<double>(tokens) / static_cast<double>(c.sentences.size());
  rep["scenes"] = c.scenes.size();
  run.emit("synth_report.json", rep.dump(2) + "\n");
}

void cmd_tag(Run& run, const Args& a) {
  const PipelineConfig& cfg = run.cfg();
  const auto corpus = load_corpus(run.input(a.corpus, "corpus", "--corpus"), cfg.lowercase);
  const PosResult r = run_pos(corpus, cfg.pos, cfg.seed);
  run.emit("tagged.jsonl", tagged_jsonl(r.tagged));
  run.emit("tagged.txt", tagged_text(r.tagged));
  ojson m;
  m["format_version"] = kFormatVersion;
  m["num_tags"] = cfg.pos.model.num_tags;
  m["open_class_tag"] = r.open_class_tag;
  m["words"] = r.word_tag;
  run.emit("pos_model.json", m.dump(2) + "\n");
  run.emit("pos_trace.jsonl", trace_jsonl("sweep", r.trace));
}

SceneFile load_scenes(Run& run, const std::string& flag) {
  SceneFile sf = read_scene_file(run.input(flag, "scenes", "--scenes"), run.cfg().seed);
  if (const auto& al = run.cfg().alphabets) {
    if (al->action != sf.alphabets.action || al->color != sf.alphabets.color ||
        al->spatial != sf.alphabets.spatial || al->geometry != sf.alphabets.geometry)
      throw DataError("scene file alphabets differ from the configured alphabets");
  }
  return sf;
}

void cmd_ground(Run& run, const Args& a) {
  const PipelineConfig& cfg = run.cfg();
  const TaggedCorpus tagged = read_tagged(run.input(a.tagged, "tagged", "--tagged"));
  const SceneFile sf = load_scenes(run, a.scenes);
  const GroundingResult r = run_grounding(tagged, sf.scenes, sf.alphabets, cfg.grounding, cfg.seed);
  run.emit("lexicon.jsonl", lexicon_jsonl(r.lexicon));
  run.emit("grounding_model.json", grounding_model_json(r.state));
  run.emit("grounding_trace.jsonl", trace_jsonl("sweep", r.trace));
}

void check_tag_range(const TaggedCorpus& t, int k) {
  for (std::size_t s = 0; s < t.size(); ++s)
    for (int x : t.tags[s])
      if (x >= k)
        throw DataError("sentence " + std::to_string(s) + " has tag " + std::to_string(x) + " but pos.num_tags is " +
                        std::to_string(k));
}

void cmd_induce(Run& run, const Args& a) {
  const PipelineConfig& cfg = run.cfg();
  const TaggedCorpus tagged = read_tagged(run.input(a.tagged, "tagged", "--tagged"));
  check_tag_range(tagged, cfg.pos.model.num_tags);
  const InductionResult r = run_induction(tagged.tags, cfg.induction, cfg.seed);
  std::vector<Derivation> trees;
  for (std::size_t s = 0; s < tagged.size(); ++s) trees.push_back(with_words(r.best.derivations[s], tagged.tokens[s]));
  run.emit("grammar.tsv", grammar_table(extract_grammar(r.best, cfg.induction.min_count)));
  run.emit("trees.txt", trees_text(trees));
  run.emit("trees.jsonl", trees_jsonl(trees));
  run.emit("checkpoint.json", r.best_checkpoint);
  std::string chains;
  for (std::size_t c = 0; c < r.chains.size(); ++c) {
    const ChainResult& cr = r.chains[c];
    ojson j;
    j["format_version"] = kFormatVersion;
    j["chain"] = c;
    j["best"] = static_cast<int>(c) == r.best_chain;
    j["log_joint"] = cr.log_joint;
    j["escapes"] = cr.escapes;
    j["accepted"] = cr.accepted;
    j["proposed"] = cr.proposed;
    j["trace"] = ojson::array();
    for (const auto& [it, lp] : cr.trace) j["trace"].push_back({it, lp});
    chains += j.dump() + "\n";
  }
  run.emit("chains.jsonl", chains);
}

void cmd_parse(Run& run, const Args& a) {
  const PipelineConfig& cfg = run.cfg();
  const HdpConfig& model = cfg.induction.model;
  const auto corpus = load_corpus(run.input(a.corpus, "corpus", "--corpus"), cfg.lowercase);
  std::vector<Derivation> trees;
  if (!a.lexicon.empty() || (a.checkpoint.empty() && cfg.paths.count("lexicon_categories"))) {
    // lexicon mode: unknown tokens are errors
    const Lexicon lex =
        Lexicon::load(run.input(a.lexicon, "lexicon_categories", "--lexicon").string(), model.rules.space);
    const LexiconScorer scorer(lex);
    for (const auto& s : corpus) {
      const PackedChart chart = build_chart(s, lex, model.rules, model.root, model.chart);
      trees.push_back(viterbi_derivation(chart, scorer, model.root).value_or(Derivation{}));
    }
  } else {
    // induced-model mode: words are tagged first, unknown words get the open-class tag
    const fs::path ckpt = run.input(a.checkpoint, "checkpoint", "--checkpoint or --lexicon");
    const fs::path pm = run.input(a.pos_model, "pos_model", "--pos-model");
    std::map<std::string, int> word_tag;
    int open = 0;
    try {
      const auto j = nlohmann::json::parse(read_file(pm));
      if (j.at("format_version").get<int>() != kFormatVersion) throw DataError("unsupported format_version");
      word_tag = j.at("words").get<std::map<std::string, int>>();
      open = j.at("open_class_tag").get<int>();
    } catch (const nlohmann::json::exception& e) {
      throw DataError(pm.string() + ": " + e.what());
    }
    Rng rng = make_rng(cfg.seed);
    const HdpState st = hdp_restore(read_file(ckpt), model, rng);
    const CandidatePool pool = candidate_pool(st, st.config.rules);
    const RuleTable table = RuleTable::compile(pool.categories, pool.arguments, st.config.rules);
    const HdpScorer scorer(st);
    for (const auto& s : corpus) {
      std::vector<std::string> toks;
      for (int t : apply_tags(s, word_tag, open)) {
        if (t < 0 || t >= model.num_tags) throw DataError("pos model tag out of range");
        toks.push_back(std::to_string(t));
      }
      const PackedChart chart = build_chart(toks, table, model.chart);
      auto d = viterbi_derivation(chart, scorer, model.root);
      trees.push_back(d ? with_words(*d, s) : Derivation{});
    }
  }
  run.emit("trees.txt", trees_text(trees));
  run.emit("trees.jsonl", trees_jsonl(trees));
}

void cmd_resolve(Run& run, const Args& a) {
  const PipelineConfig& cfg = run.cfg();
  const GroundingState st = read_grounding_model(run.input(a.model, "grounding_model", "--model"));
  const auto instr = load_corpus(run.input(a.instructions, "instructions", "--instructions"), cfg.lowercase);
  const SceneFile sf = load_scenes(run, a.scenes);
  if (sf.scenes.size() != instr.size())
    throw LengthMismatch(std::to_string(instr.size()) + " instructions but " + std::to_string(sf.scenes.size()) +
                         " scenes");
  const Alphabets& m = st.alphabets;
  if (m.action != sf.alphabets.action || m.color != sf.alphabets.color || m.spatial != sf.alphabets.spatial ||
      m.geometry != sf.alphabets.geometry)
    throw DataError("scene file alphabets differ from the grounding model's");
  std::string out;
  auto opt = [](const std::optional<int>& v) { return v ? ojson(*v) : ojson(nullptr); };
  for (std::size_t i = 0; i < instr.size(); ++i) {
    const Resolution r = resolve_instruction(instr[i], sf.scenes[i], st);
    ojson j;
    j["format_version"] = kFormatVersion;
    j["index"] = i;
    j["action"] = opt(r.action);
    j["referent"] = opt(r.referent);
    j["referent_color"] = opt(r.referent_color);
    j["landmark"] = opt(r.landmark);
    j["action_ambiguous"] = r.action_ambiguous;
    j["referent_ambiguous"] = r.referent_ambiguous;
    j["landmark_ambiguous"] = r.landmark_ambiguous;
    out += j.dump() + "\n";
  }
  run.emit("resolutions.jsonl", out);
}

void cmd_eval(Run& run, const Args& a, std::ostream& out) {
  EvalReport rep;
  auto gt = run.optional_input(a.gold_trees, "gold_trees");
  auto pt = run.optional_input(a.pred_trees, "pred_trees");
  if (gt && pt) {
    std::vector<std::size_t> gl, pl;
    const auto g = read_tree_spans(*gt, &gl);
    const auto p = read_tree_spans(*pt, &pl);
    if (g.size() != p.size())
      throw LengthMismatch(std::to_string(p.size()) + " predicted trees but " + std::to_string(g.size()) + " gold");
    for (std::size_t i = 0; i < g.size(); ++i)
      if (gl[i] && pl[i] && gl[i] != pl[i])
        throw LengthMismatch("tree " + std::to_string(i) + " covers " + std::to_string(pl[i]) + " tokens, gold " +
                             std::to_string(gl[i]));
    rep.brackets = eval_brackets(p, g);
  } else if (gt || pt) {
    throw UsageError("bracket evaluation needs both --gold-trees and --pred-trees");
  }
  auto gg = run.optional_input(a.gold_tags, "gold_tags");
  auto pg = run.optional_input(a.pred_tags, "pred_tags");
  if (gg && pg) {
    const TaggedCorpus g = read_tagged(*gg), p = read_tagged(*pg);
    rep.tags = eval_tags(p.tags, g.tags);
  } else if (gg || pg) {
    throw UsageError("tag evaluation needs both --gold-tags and --pred-tags");
  }
  auto lx = run.optional_input(a.lexicon, "lexicon");
  auto tr = run.optional_input(a.truth, "truth");
  if (lx && tr) {
    rep.grounding = eval_grounding(read_lexicon(*lx), read_truth(*tr));
  } else if (lx || tr) {
    throw UsageError("grounding evaluation needs both --lexicon and --truth");
  }
  if (!rep.brackets && !rep.tags && !rep.grounding) throw UsageError("eval needs at least one gold/predicted pair");
  if (!rep.consistent()) throw InvariantError("evaluation report is inconsistent");
  const std::string text = rep.to_json();
  run.emit("eval.json", text);
  out << text;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Grounded CCG induction toolkit", "gccg"};
  app.require_subcommand(1);
  Args a;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", a.config, "pipeline config (JSON)")->required();
    sub->add_option("--out", a.out, "output directory")->required();
    sub->add_option("--set", a.sets, "override a config key: section.key=value");
    sub->add_option("--seed", a.seed, "override the config seed");
  };
  auto* synth = app.add_subcommand("synth", "generate a corpus, gold trees, tags and scenes");
  common(synth);
  synth->add_option("--sentences", a.sentences, "number of sentences");
  synth->add_option("--spec", a.spec, "generator spec (JSON)");
  auto* tag = app.add_subcommand("tag", "induce part-of-speech tags");
  common(tag);
  tag->add_option("--corpus", a.corpus, "plain-text corpus");
  auto* ground = app.add_subcommand("ground", "learn word groundings from scenes");
  common(ground);
  ground->add_option("--tagged", a.tagged, "tagged corpus (JSONL)");
  ground->add_option("--scenes", a.scenes, "scene file (JSONL)");
  auto* induce = app.add_subcommand("induce", "induce a CCG from tagged sentences");
  common(induce);
  induce->add_option("--tagged", a.tagged, "tagged corpus (JSONL)");
  auto* parse = app.add_subcommand("parse", "parse with a lexicon or an induced model");
  common(parse);
  parse->add_option("--corpus", a.corpus, "plain-text sentences");
  parse->add_option("--lexicon", a.lexicon, "word<TAB>category[<TAB>weight] lexicon");
  parse->add_option("--checkpoint", a.checkpoint, "induction checkpoint");
  parse->add_option("--pos-model", a.pos_model, "pos_model.json from tag");
  auto* resolve = app.add_subcommand("resolve", "resolve instructions against scenes");
  common(resolve);
  resolve->add_option("--model", a.model, "grounding_model.json from ground");
  resolve->add_option("--instructions", a.instructions, "one instruction per line");
  resolve->add_option("--scenes", a.scenes, "scene file, one scene per instruction");
  auto* eval = app.add_subcommand("eval", "score predictions against gold data");
  common(eval);
  eval->add_option("--gold-trees", a.gold_trees, "gold bracketed trees");
  eval->add_option("--pred-trees", a.pred_trees, "predicted bracketed trees");
  eval->add_option("--gold-tags", a.gold_tags, "gold tagged corpus");
  eval->add_option("--pred-tags", a.pred_tags, "predicted tagged corpus");
  eval->add_option("--lexicon", a.lexicon, "grounded lexicon from ground");
  eval->add_option("--truth", a.truth, "word modality truth");

  auto usage = [&](const std::string& msg, CLI::App* sub) {
    err << "error: " << msg << "\n\n" << (sub ? sub->help() : app.help());
    return 1;
  };
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    CLI::App* sub = nullptr;
    for (auto* s : app.get_subcommands()) sub = s;
    return usage(e.what(), sub);
  }
  CLI::App* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();

  PipelineConfig cfg;
  try {
    cfg = parse_config(read_file(a.config), a.sets);
    if (a.seed) cfg.seed = *a.seed;
  } catch (const IoError& e) {
    return usage(std::string("cannot read config: ") + e.what(), sub);
  } catch (const ConfigError& e) {
    return usage(e.what(), sub);
  }

  try {
    Run run(name, cfg, a.out, a.config);
    if (name == "synth") cmd_synth(run, a);
    else if (name == "tag") cmd_tag(run, a);
    else if (name == "ground") cmd_ground(run, a);
    else if (name == "induce") cmd_induce(run, a);
    else if (name == "parse") cmd_parse(run, a);
    else if (name == "resolve") cmd_resolve(run, a);
    else cmd_eval(run, a, out);
    run.finish(out);
    return 0;
  } catch (const UsageError& e) {
    return usage(e.what(), sub);
  } catch (const ConfigError& e) {
    return usage(e.what(), sub);
  } catch (const InvariantError& e) {
    err << "invariant violation: " << e.what() << "\n";
    return 3;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    err << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace gccg::harness
