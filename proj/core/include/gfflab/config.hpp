#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gfflab/domain.hpp"
#include "gfflab/errors.hpp"
#include "gfflab/loopsoup.hpp"

namespace gfflab {

struct ConfigError : Error {
  ConfigError(const std::string& field, int line, const std::string& what);
  std::string field;
  int line;  // 1-based, 0 if unknown
};

struct ExperimentConfig {
  std::string experiment = "lejan";
  DomainSpec domain;
  double c = 1.0;
  std::int64_t replicas = 1000;
  std::vector<int> grid_ladder;
  std::vector<double> offsets;
  std::vector<double> eps_ladder;
  std::uint64_t seed = 1;
  // Named tolerance overrides; see tolerance_names().
  std::map<std::string, double> tolerances;
  std::string output_dir = "out";
  int workers = 1;
  int depth = 6;
  SoupMethod soup_method = SoupMethod::excursion;
  // Test hook: force eta = epsilon in the theorem1 pipeline.
  bool identity_coupling = false;

  double tolerance(const std::string& name) const;
};

const std::vector<std::string>& experiment_names();
const std::map<std::string, double>& tolerance_defaults();

// Acceptance-scale defaults for an experiment.
ExperimentConfig default_config(const std::string& experiment);

// Strict JSON parsing: unknown keys, duplicate keys, wrong types and range
// violations are rejected with a field/line diagnostic. Missing fields take
// the defaults of the named experiment.
ExperimentConfig parse_config(const std::string& text);
std::string echo_config(const ExperimentConfig& cfg);
std::string domain_json(const DomainSpec& d);

}  // namespace gfflab
