#pragma once

#include <string>

namespace radpipe {

struct VerifyOptions {
  std::string data_dir = "data";
  size_t oracle_batches = 200;
  size_t masking_examples = 2000;
  size_t closure_reports = 200;
};

struct VerifyResult {
  bool ok = true;
  std::string report;  // deterministic text, one PASS/FAIL line per check
};

/// Runs the invariant suite: loss-kernel oracle comparisons, gradient checks,
/// masking quota/compliance checks over generated examples, vocabulary-gate
/// checks, annotator closure and pipeline determinism.
VerifyResult verify_all(const VerifyOptions& options);

}  // namespace radpipe
