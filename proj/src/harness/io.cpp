#include "gccg/harness/io.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include <openssl/evp.h>

#include "gccg/errors.hpp"
#include "gccg/harness/quantize.hpp"

namespace gccg::harness {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error reading " + p.string());
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(p.parent_path(), ec);
    if (ec) throw IoError("cannot create " + p.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + p.string());
  out << text;
  if (!out) throw IoError("error writing " + p.string());
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw IoError("sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

namespace {

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

bool blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

json parse_line(const std::string& file, std::size_t no, const std::string& line) {
  try {
    json j = json::parse(line);
    if (!j.is_object()) throw LineError(file, no, "record is not a JSON object");
    return j;
  } catch (const json::exception& e) {
    throw LineError(file, no, std::string("malformed JSON: ") + e.what());
  }
}

void check_version(const std::string& file, std::size_t no, const json& j) {
  if (!j.contains("format_version") || !j["format_version"].is_number_integer())
    throw LineError(file, no, "missing format_version");
  if (j["format_version"].get<int>() != kFormatVersion)
    throw LineError(file, no, "unsupported format_version " + j["format_version"].dump());
}

void only_keys(const std::string& file, std::size_t no, const json& j, std::initializer_list<const char*> keys) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return it.key() == k; }))
      throw LineError(file, no, "unknown field '" + it.key() + "'");
}

}  // namespace

std::vector<Sentence> load_corpus(const fs::path& p, bool lowercase) {
  const std::string text = read_file(p);
  std::vector<Sentence> out;
  for (std::string line : split_lines(text)) {
    if (lowercase)
      std::transform(line.begin(), line.end(), line.begin(), [](unsigned char c) { return std::tolower(c); });
    std::istringstream ss(line);
    Sentence s;
    std::string w;
    while (ss >> w) s.push_back(w);
    if (!s.empty()) out.push_back(std::move(s));
  }
  if (out.empty()) throw EmptyCorpus(p.string() + " has no sentences");
  return out;
}

std::string corpus_text(const std::vector<Sentence>& corpus) {
  std::string out;
  for (const auto& s : corpus) {
    for (std::size_t i = 0; i < s.size(); ++i) out += (i ? " " : "") + s[i];
    out += '\n';
  }
  return out;
}

std::string tagged_jsonl(const TaggedCorpus& c) {
  std::string out;
  for (std::size_t i = 0; i < c.size(); ++i) {
    ojson j;
    j["format_version"] = kFormatVersion;
    j["tokens"] = c.tokens[i];
    j["tags"] = c.tags[i];
    out += j.dump() + "\n";
  }
  return out;
}

std::string tagged_text(const TaggedCorpus& c) {
  std::string out;
  for (std::size_t i = 0; i < c.size(); ++i) {
    for (std::size_t k = 0; k < c.tokens[i].size(); ++k)
      out += (k ? " " : "") + c.tokens[i][k] + "/" + std::to_string(c.tags[i][k]);
    out += '\n';
  }
  return out;
}

TaggedCorpus read_tagged(const fs::path& p) {
  const auto lines = split_lines(read_file(p));
  const std::string f = p.string();
  TaggedCorpus c;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (blank(lines[i])) continue;
    const json j = parse_line(f, i + 1, lines[i]);
    check_version(f, i + 1, j);
    only_keys(f, i + 1, j, {"format_version", "tokens", "tags"});
    try {
      auto toks = j.at("tokens").get<Sentence>();
      auto tags = j.at("tags").get<std::vector<int>>();
      if (toks.size() != tags.size()) throw LineError(f, i + 1, "tokens and tags differ in length");
      if (toks.empty()) throw LineError(f, i + 1, "empty sentence");
      for (int t : tags)
        if (t < 0) throw LineError(f, i + 1, "negative tag");
      c.tokens.push_back(std::move(toks));
      c.tags.push_back(std::move(tags));
    } catch (const json::exception& e) {
      throw LineError(f, i + 1, e.what());
    }
  }
  if (c.tokens.empty()) throw EmptyCorpus(f + " has no sentences");
  return c;
}

ojson tree_record(const Derivation& d) {
  std::function<ojson(std::size_t)> rec = [&](std::size_t i) {
    const DerivationNode& n = d.nodes[i];
    ojson j;
    j["cat"] = n.category.str();
    j["span"] = {n.start, n.end};
    if (n.leaf()) {
      j["token"] = n.token;
    } else {
      j["rule"] = n.rule.str();
      if (n.argument.valid()) j["arg"] = n.argument.str();
      j["children"] = ojson::array();
      j["children"].push_back(rec(static_cast<std::size_t>(n.left)));
      if (n.right >= 0) j["children"].push_back(rec(static_cast<std::size_t>(n.right)));
    }
    return j;
  };
  return d.empty() ? ojson() : rec(0);
}

std::string trees_text(const std::vector<Derivation>& trees) {
  std::string out;
  for (const auto& d : trees) out += (d.empty() ? std::string(kNoParse) : to_bracketed(d)) + "\n";
  return out;
}

std::string trees_jsonl(const std::vector<Derivation>& trees) {
  std::string out;
  for (std::size_t i = 0; i < trees.size(); ++i) {
    ojson j;
    j["format_version"] = kFormatVersion;
    j["index"] = i;
    j["parsed"] = !trees[i].empty();
    j["bracketed"] = trees[i].empty() ? std::string(kNoParse) : to_bracketed(trees[i]);
    j["tree"] = tree_record(trees[i]);
    out += j.dump() + "\n";
  }
  return out;
}

std::vector<SpanSet> read_tree_spans(const fs::path& p, std::vector<std::size_t>* lengths) {
  const auto lines = split_lines(read_file(p));
  std::vector<SpanSet> out;
  if (lengths) lengths->clear();
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (blank(lines[i])) continue;
    std::size_t n = 0;
    if (lines[i] == kNoParse) {
      out.emplace_back();
      if (lengths) lengths->push_back(0);
      continue;
    }
    try {
      out.push_back(spans_from_bracketed(lines[i], &n));
    } catch (const DataError& e) {
      throw LineError(p.string(), i + 1, e.what());
    }
    if (lengths) lengths->push_back(n);
  }
  return out;
}

namespace {

struct PendingFeatures {
  // modality -> (scene, object or relation index, features)
  struct Item {
    std::size_t scene;
    std::size_t index;
    std::vector<double> x;
    std::size_t line;
  };
  std::array<std::vector<Item>, 4> items;
};

int sym_field(const std::string& f, std::size_t no, const json& j, const char* key) {
  const json& v = j.at(key);
  if (!v.is_number_integer()) throw LineError(f, no, std::string(key) + " must be an integer");
  return v.get<int>();
}

std::vector<double> feat_field(const std::string& f, std::size_t no, const json& j, const char* key) {
  const json& v = j.at(key);
  if (!v.is_array() || v.empty()) throw LineError(f, no, std::string(key) + " must be a nonempty array");
  std::vector<double> x;
  for (const auto& e : v) {
    if (!e.is_number()) throw LineError(f, no, std::string(key) + " must hold numbers");
    x.push_back(e.get<double>());
  }
  return x;
}

}  // namespace

SceneFile read_scene_file(const fs::path& p, std::uint64_t quantize_seed) {
  const auto lines = split_lines(read_file(p));
  const std::string f = p.string();
  SceneFile out;
  PendingFeatures pending;
  std::vector<std::size_t> scene_line;
  bool header = false;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t no = i + 1;
    if (blank(lines[i])) continue;
    const json j = parse_line(f, no, lines[i]);
    check_version(f, no, j);
    try {
      if (!header) {
        if (j.value("type", "") != "header") throw LineError(f, no, "first record must be the header");
        only_keys(f, no, j, {"format_version", "type", "alphabets"});
        const json& a = j.at("alphabets");
        only_keys(f, no, a, {"action", "color", "spatial", "geometry"});
        out.alphabets = {a.at("action").get<int>(), a.at("color").get<int>(), a.at("spatial").get<int>(),
                         a.at("geometry").get<int>()};
        if (out.alphabets.action < 1 || out.alphabets.color < 1 || out.alphabets.spatial < 1 ||
            out.alphabets.geometry < 1)
          throw LineError(f, no, "alphabet sizes must be positive");
        header = true;
        continue;
      }
      only_keys(f, no, j, {"format_version", "id", "action_sym", "action_features", "objects", "spatial"});
      const std::size_t s = out.scenes.size();
      if (!j.contains("id") || !j["id"].is_number_unsigned() || j["id"].get<std::size_t>() != s)
        throw LineError(f, no, "expected scene id " + std::to_string(s));
      Scene sc;
      if (j.contains("action_sym")) sc.action = sym_field(f, no, j, "action_sym");
      if (j.contains("action_features")) {
        if (sc.action) throw LineError(f, no, "both action_sym and action_features");
        sc.action = 0;
        pending.items[0].push_back({s, 0, feat_field(f, no, j, "action_features"), no});
      }
      const json& objs = j.at("objects");
      if (!objs.is_array()) throw LineError(f, no, "objects must be an array");
      for (const auto& o : objs) {
        only_keys(f, no, o, {"color_sym", "geom_sym", "color_features", "geom_features", "position"});
        SceneObject ob;
        const std::size_t k = sc.objects.size();
        if (o.contains("color_features")) {
          if (o.contains("color_sym")) throw LineError(f, no, "both color_sym and color_features");
          pending.items[1].push_back({s, k, feat_field(f, no, o, "color_features"), no});
        } else {
          ob.color = sym_field(f, no, o, "color_sym");
        }
        if (o.contains("geom_features")) {
          if (o.contains("geom_sym")) throw LineError(f, no, "both geom_sym and geom_features");
          pending.items[3].push_back({s, k, feat_field(f, no, o, "geom_features"), no});
        } else {
          ob.geometry = sym_field(f, no, o, "geom_sym");
        }
        if (o.contains("position")) ob.position = feat_field(f, no, o, "position");
        sc.objects.push_back(std::move(ob));
      }
      if (j.contains("spatial")) {
        const json& rels = j["spatial"];
        if (!rels.is_array()) throw LineError(f, no, "spatial must be an array");
        for (const auto& r : rels) {
          only_keys(f, no, r, {"from", "to", "spatial_sym", "spatial_features"});
          SpatialRelation rel{sym_field(f, no, r, "from"), sym_field(f, no, r, "to"), 0};
          if (r.contains("spatial_features")) {
            if (r.contains("spatial_sym")) throw LineError(f, no, "both spatial_sym and spatial_features");
            pending.items[2].push_back({s, sc.spatial.size(), feat_field(f, no, r, "spatial_features"), no});
          } else {
            rel.symbol = sym_field(f, no, r, "spatial_sym");
          }
          sc.spatial.push_back(rel);
        }
      }
      out.scenes.push_back(std::move(sc));
      scene_line.push_back(no);
    } catch (const LineError&) {
      throw;
    } catch (const json::exception& e) {
      throw LineError(f, no, e.what());
    }
  }
  if (!header) throw LineError(f, 1, "missing header record");

  const int sizes[4] = {out.alphabets.action, out.alphabets.color, out.alphabets.spatial, out.alphabets.geometry};
  for (int m = 0; m < 4; ++m) {
    auto& items = pending.items[static_cast<std::size_t>(m)];
    if (items.empty()) continue;
    std::vector<std::vector<double>> rows;
    for (const auto& it : items) rows.push_back(it.x);
    Quantization q;
    try {
      q = quantize_features(rows, sizes[m], quantize_seed + static_cast<std::uint64_t>(m));
    } catch (const DimensionMismatch& e) {
      // name the first offending line
      for (const auto& it : items)
        if (it.x.size() != rows[0].size()) throw LineError(f, it.line, e.what());
      throw;
    }
    for (std::size_t k = 0; k < items.size(); ++k) {
      Scene& sc = out.scenes[items[k].scene];
      const int sym = q.symbols[k];
      switch (m) {
        case 0: sc.action = sym; break;
        case 1: sc.objects[items[k].index].color = sym; break;
        case 2: sc.spatial[items[k].index].symbol = sym; break;
        default: sc.objects[items[k].index].geometry = sym; break;
      }
    }
  }
  for (std::size_t s = 0; s < out.scenes.size(); ++s) {
    try {
      out.scenes[s].validate(out.alphabets);
    } catch (const DataError& e) {
      throw LineError(f, scene_line[s], e.what());
    }
  }
  return out;
}

std::string scene_file_text(const SceneFile& sf) {
  std::string out;
  ojson h;
  h["format_version"] = kFormatVersion;
  h["type"] = "header";
  h["alphabets"] = {{"action", sf.alphabets.action},
                    {"color", sf.alphabets.color},
                    {"spatial", sf.alphabets.spatial},
                    {"geometry", sf.alphabets.geometry}};
  out += h.dump() + "\n";
  for (std::size_t s = 0; s < sf.scenes.size(); ++s) {
    const Scene& sc = sf.scenes[s];
    ojson j;
    j["format_version"] = kFormatVersion;
    j["id"] = s;
    if (sc.action) j["action_sym"] = *sc.action;
    j["objects"] = ojson::array();
    for (const auto& o : sc.objects) {
      ojson jo;
      jo["color_sym"] = o.color;
      jo["geom_sym"] = o.geometry;
      if (!o.position.empty()) jo["position"] = o.position;
      j["objects"].push_back(jo);
    }
    j["spatial"] = ojson::array();
    for (const auto& r : sc.spatial) j["spatial"].push_back({{"from", r.from}, {"to", r.to}, {"spatial_sym", r.symbol}});
    out += j.dump() + "\n";
  }
  return out;
}

std::string lexicon_jsonl(const std::vector<GroundedLexiconEntry>& lex) {
  std::string out;
  for (const auto& e : lex) {
    ojson j;
    j["format_version"] = kFormatVersion;
    j["word"] = e.word;
    j["tag"] = e.tag;
    j["modality"] = modality_name(e.dominant);
    j["confidence"] = e.confidence;
    j["count"] = e.count;
    ojson post;
    for (int m = 0; m < kNumModalities; ++m)
      post[std::string(modality_name(static_cast<Modality>(m)))] = e.modality_posterior[static_cast<std::size_t>(m)];
    j["posterior"] = post;
    j["symbols"] = e.symbols;
    out += j.dump() + "\n";
  }
  return out;
}

std::vector<GroundedLexiconEntry> read_lexicon(const fs::path& p) {
  const auto lines = split_lines(read_file(p));
  const std::string f = p.string();
  std::vector<GroundedLexiconEntry> out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (blank(lines[i])) continue;
    const json j = parse_line(f, i + 1, lines[i]);
    check_version(f, i + 1, j);
    try {
      GroundedLexiconEntry e;
      e.word = j.at("word").get<std::string>();
      e.tag = j.at("tag").get<int>();
      e.dominant = parse_modality(j.at("modality").get<std::string>());
      e.confidence = j.at("confidence").get<double>();
      e.count = j.at("count").get<std::int64_t>();
      for (int m = 0; m < kNumModalities; ++m)
        e.modality_posterior[static_cast<std::size_t>(m)] =
            j.at("posterior").at(std::string(modality_name(static_cast<Modality>(m)))).get<double>();
      e.symbols = j.at("symbols").get<std::vector<double>>();
      out.push_back(std::move(e));
    } catch (const json::exception& e) {
      throw LineError(f, i + 1, e.what());
    } catch (const LineError&) {
      throw;
    } catch (const DataError& e) {
      throw LineError(f, i + 1, e.what());
    }
  }
  return out;
}

std::string truth_json(const std::map<std::string, Modality>& truth) {
  ojson j;
  j["format_version"] = kFormatVersion;
  ojson words = ojson::object();
  for (const auto& [w, m] : truth) words[w] = modality_name(m);
  j["words"] = words;
  return j.dump(2) + "\n";
}

std::map<std::string, Modality> read_truth(const fs::path& p) {
  std::map<std::string, Modality> out;
  try {
    const json j = json::parse(read_file(p));
    if (j.at("format_version").get<int>() != kFormatVersion) throw DataError("unsupported format_version");
    for (const auto& [w, m] : j.at("words").items()) out[w] = parse_modality(m.get<std::string>());
  } catch (const json::exception& e) {
    throw DataError(p.string() + ": " + e.what());
  }
  return out;
}

std::string grounding_model_json(const GroundingState& st) {
  ojson j;
  j["format_version"] = kFormatVersion;
  j["alphabets"] = {{"action", st.alphabets.action},
                    {"color", st.alphabets.color},
                    {"spatial", st.alphabets.spatial},
                    {"geometry", st.alphabets.geometry}};
  j["theta"] = st.config.theta;
  j["none_weight"] = st.config.none_weight;
  j["phi_default"] = st.config.phi_default;
  ojson by_tag = ojson::object();
  for (const auto& [t, row] : st.config.phi_by_tag) by_tag[std::to_string(t)] = row;
  j["phi_by_tag"] = by_tag;
  j["words"] = ojson::array();
  for (int w = 0; w < st.vocab.size(); ++w) {
    const auto k = static_cast<std::size_t>(w);
    ojson e;
    e["word"] = st.vocab.word(w);
    e["tag"] = st.word_tag[k];
    e["modality_counts"] = st.mod_counts[k];
    ojson syms = ojson::array();
    for (const auto& v : st.sym_counts[k]) syms.push_back(v);
    e["symbol_counts"] = syms;
    j["words"].push_back(e);
  }
  return j.dump() + "\n";
}

GroundingState read_grounding_model(const fs::path& p) {
  GroundingState st;
  try {
    const json j = json::parse(read_file(p));
    if (j.at("format_version").get<int>() != kFormatVersion) throw DataError("unsupported format_version");
    const json& a = j.at("alphabets");
    st.alphabets = {a.at("action").get<int>(), a.at("color").get<int>(), a.at("spatial").get<int>(),
                    a.at("geometry").get<int>()};
    st.config.theta = j.at("theta").get<double>();
    st.config.none_weight = j.at("none_weight").get<double>();
    st.config.phi_default = j.at("phi_default").get<std::array<double, kNumModalities>>();
    for (const auto& [t, row] : j.at("phi_by_tag").items())
      st.config.phi_by_tag[std::stoi(t)] = row.get<std::array<double, kNumModalities>>();
    const int sizes[4] = {st.alphabets.action, st.alphabets.color, st.alphabets.spatial, st.alphabets.geometry};
    for (const auto& e : j.at("words")) {
      const int id = st.vocab.intern(e.at("word").get<std::string>());
      if (id != st.vocab.size() - 1) throw DataError("duplicate word " + e.at("word").get<std::string>());
      st.word_tag.push_back(e.at("tag").get<int>());
      const auto mc = e.at("modality_counts").get<std::array<std::int64_t, kNumModalities>>();
      st.mod_counts.push_back(mc);
      std::int64_t total = 0;
      for (auto c : mc) {
        if (c < 0) throw DataError("negative count");
        total += c;
      }
      st.mod_total.push_back(total);
      const json& sc = e.at("symbol_counts");
      if (!sc.is_array() || sc.size() != 4) throw DataError("symbol_counts needs 4 rows");
      std::array<std::vector<std::int64_t>, 4> rows;
      std::array<std::int64_t, 4> tot{};
      for (std::size_t m = 0; m < 4; ++m) {
        rows[m] = sc[m].get<std::vector<std::int64_t>>();
        if (static_cast<int>(rows[m].size()) != sizes[m]) throw DataError("symbol_counts row has the wrong size");
        for (auto c : rows[m]) tot[m] += c;
        if (tot[m] != mc[m]) throw DataError("symbol counts disagree with modality counts");
      }
      st.sym_counts.push_back(std::move(rows));
      st.sym_total.push_back(tot);
    }
  } catch (const json::exception& e) {
    throw DataError(p.string() + ": " + e.what());
  } catch (const IoError&) {
    throw;
  } catch (const DataError& e) {
    throw DataError(p.string() + ": " + e.what());
  }
  return st;
}

std::string manifest_json(const std::string& command, const std::string& config_canonical, std::uint64_t seed,
                          const std::vector<fs::path>& inputs, const fs::path& out_dir,
                          const std::vector<std::string>& outputs) {
  ojson j;
  j["format_version"] = kFormatVersion;
  j["tool"] = kToolVersion;
  j["command"] = command;
  j["config_sha256"] = sha256_hex(config_canonical);
  j["seed"] = seed;
  j["inputs"] = ojson::array();
  for (const auto& p : inputs)
    j["inputs"].push_back({{"name", p.filename().string()}, {"sha256", sha256_hex(read_file(p))}});
  j["outputs"] = ojson::array();
  for (const auto& name : outputs)
    j["outputs"].push_back({{"name", name}, {"sha256", sha256_hex(read_file(out_dir / name))}});
  return j.dump(2) + "\n";
}

std::string verify_manifest(const fs::path& out_dir) {
  try {
    const json j = json::parse(read_file(out_dir / "manifest.json"));
    for (const auto& o : j.at("outputs")) {
      const std::string name = o.at("name").get<std::string>();
      if (sha256_hex(read_file(out_dir / name)) != o.at("sha256").get<std::string>()) return name + " changed";
    }
  } catch (const json::exception& e) {
    return std::string("bad manifest: ") + e.what();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

}  // namespace gccg::harness
