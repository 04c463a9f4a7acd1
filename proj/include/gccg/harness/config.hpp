#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gccg/grounding.hpp"
#include "gccg/hdp.hpp"
#include "gccg/pos.hpp"

namespace gccg::harness {

struct PosStage {
  PosConfig model;
  int iterations = 300;
  int burn_in = 100;
  int thin = 5;
};

struct GroundingStage {
  GroundingConfig model;
  int iterations = 300;
};

struct InductionStage {
  HdpConfig model;
  int iterations = 500;
  int chains = 3;
  int log_every = 10;    // log-joint trace thinning
  int audit_every = 0;   // 0: audit only at the end
  std::int64_t min_count = 5;
};

/// Everything a pipeline run depends on. Every section is optional in the
/// JSON form; unknown keys anywhere are errors.
struct PipelineConfig {
  std::uint64_t seed = 1;
  bool lowercase = true;
  PosStage pos;
  GroundingStage grounding;
  InductionStage induction;
  std::optional<Alphabets> alphabets;  // when set, scene headers must agree
  std::size_t synth_sentences = 500;
  std::optional<std::string> synth_spec;  // path; default generator otherwise
  std::map<std::string, std::string> paths;

  void validate() const;  // throws ConfigError
};

/// Strict parse. `overrides` are "dotted.key=value" pairs applied to the
/// JSON before parsing; values are read as JSON, falling back to a string.
/// Throws ConfigError.
PipelineConfig parse_config(const std::string& json_text, const std::vector<std::string>& overrides = {});

/// Canonical JSON of the effective configuration (sorted keys, all
/// defaults filled in); its digest goes into the manifest.
std::string config_json(const PipelineConfig& cfg);

}  // namespace gccg::harness
