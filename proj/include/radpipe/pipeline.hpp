#pragma once

#include <optional>
#include <string>
#include <vector>

#include "radpipe/annotator.hpp"
#include "radpipe/corpus.hpp"
#include "radpipe/masking.hpp"
#include "radpipe/taxonomy.hpp"
#include "radpipe/tokenizer.hpp"

namespace radpipe {

/// Per-report cleaning + section identification. Reports that are empty
/// after cleaning are dropped with a logged reason.
std::vector<SectionedReport> preprocess_corpus(const std::vector<RawReport>& reports,
                                               const RegexRuleSet& rules,
                                               const HeaderPatternSet& headers);

std::vector<RawReport> read_corpus_jsonl(const std::string& path);
void write_corpus_jsonl(const std::vector<RawReport>& reports, const std::string& path);

std::string sectioned_to_jsonl(const std::vector<SectionedReport>& reports);
std::vector<SectionedReport> read_sectioned_jsonl(const std::string& path);

enum class MaskingMode { Random, Kg };

struct PipelineExample {
  TokenizedChunk chunk;
  MaskedExample masked;
  std::vector<EntitySpan> spans;  // empty for plain random masking
  std::string text;               // chunk sentence texts joined with spaces
  size_t chunk_idx = 0;           // index within the report
};

struct PipelineStats {
  size_t reports_in = 0;
  size_t chunks = 0;
  size_t examples = 0;
  size_t skipped_short = 0;       // chunks below the 7-token floor
  size_t skipped_overlong = 0;    // reports with a sentence over budget
  size_t skipped_quota = 0;       // kg chunks with unreachable quota
};

/// The full masking pipeline over preprocessed reports. Per-example seeds are
/// derived as hash(run_seed, report_id, chunk_idx), so the CLI export and the
/// trainer produce identical examples for the same run seed. Kg mode falls
/// back to random masking for chunks outside Clinical/Findings/Impressions.
std::vector<PipelineExample> make_masked_examples(const std::vector<SectionedReport>& reports,
                                                  const Vocabulary& vocab, const Taxonomy& tax,
                                                  MaskingMode mode, size_t budget,
                                                  uint64_t run_seed,
                                                  PipelineStats* stats = nullptr);

std::string masked_examples_to_jsonl(const std::vector<PipelineExample>& examples);

/// Per-vocabulary-id knowledge links used by the kg loss: word-initial tokens
/// whose surface matches a taxonomy concept carry that concept's anatomical
/// sites and body-system branches.
struct KgLinkTable {
  std::vector<bool> linked;
  std::vector<std::set<std::string>> sites;
  std::vector<std::set<std::string>> bodysys;

  static KgLinkTable build(const Vocabulary& vocab, const Taxonomy& tax);
};

}  // namespace radpipe
