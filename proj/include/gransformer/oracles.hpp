#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace gransformer {

struct OracleCase {
  std::string name;
  bool pass = false;
  std::string detail;  // metric summary, or the reason for a failure
};

struct OracleReport {
  std::string suite;
  std::vector<OracleCase> cases;

  bool all_pass() const;
};

// Suites: walks (path-count stack vs exponential enumeration), theorem1
// (constrained row law vs enumeration and a rejection sampler), made (mask
// reachability and bit invariance), leakage (encoder outputs vs later input
// rows), gradcheck (full loss vs central finite differences).
std::vector<std::string> oracle_suite_names();

// Throws config_error for an unknown suite name.
OracleReport run_oracle_suite(const std::string& suite, uint64_t seed);

}  // namespace gransformer
