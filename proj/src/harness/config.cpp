#include "gccg/harness/config.hpp"

#include <algorithm>

#include <json.hpp>

#include "gccg/errors.hpp"

namespace gccg::harness {

using json = nlohmann::json;

namespace {

const char* const kPathKeys[] = {"corpus",      "scenes",          "tagged",     "gold_trees", "gold_tags",
                                 "truth",       "lexicon",         "pred_trees", "pred_tags",  "grounding_model",
                                 "checkpoint",  "instructions",    "pos_model",  "lexicon_categories"};

// Reads one object section, rejecting keys it was never asked about.
class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.push_back(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(where(key) + " has the wrong type");
    }
  }

  std::optional<Section> sub(const char* key) {
    seen_.push_back(key);
    if (!j_.contains(key)) return std::nullopt;
    return Section(j_.at(key), where(key));
  }

  bool has(const char* key) const { return j_.contains(key); }
  const json& raw(const char* key) {
    seen_.push_back(key);
    return j_.at(key);
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (std::find(seen_.begin(), seen_.end(), it.key()) == seen_.end())
        throw ConfigError("unknown config key '" + where(it.key().c_str()) + "'");
  }

  std::string where(const char* key = nullptr) const {
    std::string s = name_;
    if (key) s += (s.empty() ? "" : ".") + std::string(key);
    return s.empty() ? "config" : s;
  }

 private:
  const json& j_;
  std::string name_;
  std::vector<std::string> seen_;
};

json parse_value(const std::string& v) {
  try {
    return json::parse(v);
  } catch (const json::exception&) {
    return json(v);
  }
}

void apply_override(json& root, const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + text + "' is not key=value");
  const std::string path = text.substr(0, eq);
  json* node = &root;
  std::size_t b = 0;
  while (true) {
    const auto dot = path.find('.', b);
    const std::string key = path.substr(b, dot == std::string::npos ? std::string::npos : dot - b);
    if (key.empty()) throw ConfigError("override '" + text + "' has an empty key");
    if (!node->is_object()) throw ConfigError("override '" + text + "' descends into a non-object");
    if (dot == std::string::npos) {
      (*node)[key] = parse_value(text.substr(eq + 1));
      return;
    }
    node = &(*node)[key];
    if (node->is_null()) *node = json::object();
    b = dot + 1;
  }
}

std::vector<Category> categories(const std::vector<std::string>& names, const CategorySpace& space,
                                 const char* what) {
  std::vector<Category> out;
  for (const auto& n : names) {
    try {
      out.push_back(parse_category(n, space));
    } catch (const DataError& e) {
      throw ConfigError(std::string(what) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace

void PipelineConfig::validate() const {
  if (pos.model.num_tags < 2) throw ConfigError("pos.num_tags must be at least 2");
  if (!(pos.model.alpha_t > 0) || !(pos.model.alpha_e > 0)) throw ConfigError("pos Dirichlet parameters must be positive");
  if (pos.iterations < 1 || pos.burn_in < 0 || pos.thin < 1) throw ConfigError("pos iteration counts are invalid");
  if (pos.burn_in >= pos.iterations) throw ConfigError("pos.burn_in must be below pos.iterations");
  if (grounding.iterations < 1) throw ConfigError("grounding.iterations must be positive");
  if (!(grounding.model.theta > 0)) throw ConfigError("grounding.theta must be positive");
  if (!(grounding.model.none_weight > 0) || grounding.model.none_weight > 1)
    throw ConfigError("grounding.none_weight must be in (0, 1]");
  auto positive_row = [](const std::array<double, kNumModalities>& r) {
    return std::all_of(r.begin(), r.end(), [](double x) { return x > 0; });
  };
  if (!positive_row(grounding.model.phi_default)) throw ConfigError("grounding.phi_default must be positive");
  for (const auto& [t, r] : grounding.model.phi_by_tag)
    if (t < 0 || !positive_row(r)) throw ConfigError("grounding.phi_by_tag rows must be positive");
  if (induction.iterations < 1 || induction.chains < 1 || induction.log_every < 1 || induction.audit_every < 0 ||
      induction.min_count < 0)
    throw ConfigError("induction iteration counts are invalid");
  induction.model.validate();
  if (induction.model.num_tags != pos.model.num_tags) throw ConfigError("induction tag count must equal pos.num_tags");
  if (alphabets && (alphabets->action < 1 || alphabets->color < 1 || alphabets->spatial < 1 || alphabets->geometry < 1))
    throw ConfigError("alphabet sizes must be positive");
  if (synth_sentences < 1) throw ConfigError("synth.sentences must be positive");
}

PipelineConfig parse_config(const std::string& text, const std::vector<std::string>& overrides) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& o : overrides) apply_override(root, o);

  PipelineConfig c;
  Section top(root, "");
  int version = 1;
  top.get("format_version", version);
  if (version != 1) throw ConfigError("unsupported config format_version " + std::to_string(version));
  top.get("seed", c.seed);
  top.get("lowercase", c.lowercase);

  RuleConfig& rules = c.induction.model.rules;
  rules.space.atoms = {"S", "N"};
  rules.kinds = {CombinatorKind::FwdApp, CombinatorKind::BwdApp};
  rules.raise_targets.clear();
  rules.raisable.clear();
  std::vector<std::string> targets, raisable, kinds;
  std::string root_cat = "S";
  if (auto g = top.sub("grammar")) {
    g->get("atoms", rules.space.atoms);
    g->get("max_depth", rules.space.max_depth);
    g->get("max_arity", rules.space.max_arity);
    g->get("combinators", kinds);
    g->get("max_comp_degree", rules.max_comp_degree);
    g->get("raise_targets", targets);
    g->get("raisable", raisable);
    g->get("root", root_cat);
    g->get("max_length", c.induction.model.chart.max_length);
    g->finish();
    if (g->has("combinators")) {
      rules.kinds.clear();
      for (const auto& k : kinds) {
        try {
          rules.kinds.push_back(parse_kind(k));
        } catch (const Error& e) {
          throw ConfigError(std::string("grammar.combinators: ") + e.what());
        }
      }
    }
  }
  if (rules.space.atoms.empty()) throw ConfigError("grammar.atoms must not be empty");
  if (rules.space.max_depth < 1 || rules.space.max_arity < 1) throw ConfigError("grammar limits must be positive");
  rules.raise_targets = categories(targets, rules.space, "grammar.raise_targets");
  rules.raisable = categories(raisable, rules.space, "grammar.raisable");
  c.induction.model.root = categories({root_cat}, rules.space, "grammar.root").front();

  if (auto p = top.sub("pos")) {
    p->get("num_tags", c.pos.model.num_tags);
    p->get("alpha_t", c.pos.model.alpha_t);
    p->get("alpha_e", c.pos.model.alpha_e);
    p->get("iterations", c.pos.iterations);
    p->get("burn_in", c.pos.burn_in);
    p->get("thin", c.pos.thin);
    p->finish();
  }
  c.induction.model.num_tags = c.pos.model.num_tags;

  if (auto g = top.sub("grounding")) {
    g->get("theta", c.grounding.model.theta);
    g->get("none_weight", c.grounding.model.none_weight);
    g->get("phi_default", c.grounding.model.phi_default);
    std::map<std::string, std::array<double, kNumModalities>> by_tag;
    g->get("phi_by_tag", by_tag);
    for (const auto& [k, row] : by_tag) {
      std::size_t used = 0;
      int t = -1;
      try {
        t = std::stoi(k, &used);
      } catch (const std::exception&) {
      }
      if (used != k.size() || t < 0) throw ConfigError("grounding.phi_by_tag key '" + k + "' is not a tag id");
      c.grounding.model.phi_by_tag[t] = row;
    }
    g->get("iterations", c.grounding.iterations);
    g->finish();
  }

  if (auto s = top.sub("induction")) {
    HdpConfig& m = c.induction.model;
    s->get("alpha_dp", m.alpha_dp);
    s->get("gamma", m.gamma);
    s->get("kind_prior", m.kind_prior);
    s->get("alpha_emit", m.alpha_emit);
    s->get("p_slash", m.base.p_slash);
    s->get("p_forward", m.base.p_forward);
    s->get("atom_probs", m.base.atom_probs);
    s->get("resample_alpha", m.resample_alpha);
    if (s->has("fixed_pool_depth") && !s->raw("fixed_pool_depth").is_null()) {
      int d = 0;
      s->get("fixed_pool_depth", d);
      m.fixed_pool_depth = d;
    }
    s->get("iterations", c.induction.iterations);
    s->get("chains", c.induction.chains);
    s->get("log_every", c.induction.log_every);
    s->get("audit_every", c.induction.audit_every);
    s->get("min_count", c.induction.min_count);
    s->finish();
  }

  if (auto a = top.sub("alphabets")) {
    Alphabets al;
    a->get("action", al.action);
    a->get("color", al.color);
    a->get("spatial", al.spatial);
    a->get("geometry", al.geometry);
    a->finish();
    c.alphabets = al;
  }

  if (auto s = top.sub("synth")) {
    s->get("sentences", c.synth_sentences);
    if (s->has("spec") && !s->raw("spec").is_null()) {
      std::string p;
      s->get("spec", p);
      c.synth_spec = p;
    }
    s->finish();
  }

  if (auto p = top.sub("paths")) {
    for (const char* k : kPathKeys) {
      std::string v;
      p->get(k, v);
      if (p->has(k)) c.paths[k] = v;
    }
    p->finish();
  }
  top.finish();

  try {
    c.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return c;
}

std::string config_json(const PipelineConfig& c) {
  const HdpConfig& m = c.induction.model;
  const RuleConfig& r = m.rules;
  auto names = [](const std::vector<Category>& v) {
    std::vector<std::string> out;
    for (const auto& x : v) out.push_back(x.str());
    return out;
  };
  std::vector<std::string> kinds;
  for (auto k : r.kinds) kinds.emplace_back(kind_name(k));
  json j;  // std::map-backed, so keys come out sorted
  j["format_version"] = 1;
  j["seed"] = c.seed;
  j["lowercase"] = c.lowercase;
  j["grammar"] = {{"atoms", r.space.atoms},          {"max_depth", r.space.max_depth},
                  {"max_arity", r.space.max_arity},  {"combinators", kinds},
                  {"max_comp_degree", r.max_comp_degree}, {"raise_targets", names(r.raise_targets)},
                  {"raisable", names(r.raisable)},   {"root", m.root.str()},
                  {"max_length", m.chart.max_length}};
  j["pos"] = {{"num_tags", c.pos.model.num_tags}, {"alpha_t", c.pos.model.alpha_t},
              {"alpha_e", c.pos.model.alpha_e},   {"iterations", c.pos.iterations},
              {"burn_in", c.pos.burn_in},         {"thin", c.pos.thin}};
  json by_tag = json::object();
  for (const auto& [t, row] : c.grounding.model.phi_by_tag) by_tag[std::to_string(t)] = row;
  j["grounding"] = {{"theta", c.grounding.model.theta},
                    {"none_weight", c.grounding.model.none_weight},
                    {"phi_default", c.grounding.model.phi_default},
                    {"phi_by_tag", by_tag},
                    {"iterations", c.grounding.iterations}};
  j["induction"] = {{"alpha_dp", m.alpha_dp},
                    {"gamma", m.gamma},
                    {"kind_prior", m.kind_prior},
                    {"alpha_emit", m.alpha_emit},
                    {"p_slash", m.base.p_slash},
                    {"p_forward", m.base.p_forward},
                    {"atom_probs", m.base.atom_probs},
                    {"resample_alpha", m.resample_alpha},
                    {"fixed_pool_depth", m.fixed_pool_depth ? json(*m.fixed_pool_depth) : json(nullptr)},
                    {"iterations", c.induction.iterations},
                    {"chains", c.induction.chains},
                    {"log_every", c.induction.log_every},
                    {"audit_every", c.induction.audit_every},
                    {"min_count", c.induction.min_count}};
  if (c.alphabets)
    j["alphabets"] = {{"action", c.alphabets->action},
                      {"color", c.alphabets->color},
                      {"spatial", c.alphabets->spatial},
                      {"geometry", c.alphabets->geometry}};
  j["synth"] = {{"sentences", c.synth_sentences}, {"spec", c.synth_spec ? json(*c.synth_spec) : json(nullptr)}};
  j["paths"] = c.paths;
  return j.dump(2) + "\n";
}

}  // namespace gccg::harness
