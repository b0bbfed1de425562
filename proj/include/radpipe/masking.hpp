#pragma once

#include <optional>
#include <string>
#include <vector>

#include "radpipe/annotator.hpp"
#include "radpipe/corpus.hpp"

namespace radpipe {

/// The four entity-masking options. Every option additionally masks Symptom
/// spans in Findings and Impressions; each names exactly one of
/// {Anatomy, Observation}, which is what preserves context.
enum class MaskingOption { Opt1, Opt2, Opt3, Opt4 };

const char* masking_option_name(MaskingOption o);
std::optional<MaskingOption> masking_option_from_name(const std::string& name);

/// True iff the option masks (category, section) pairs of this kind:
///   Opt1: Anatomy@{Clinical,Findings}      + Symptom@{Findings,Impressions}
///   Opt2: Observation@{Findings}           + Symptom@{Findings,Impressions}
///   Opt3: Anatomy@{Clinical,Impressions}   + Symptom@{Findings,Impressions}
///   Opt4: Observation@{Impressions}        + Symptom@{Findings,Impressions}
bool option_licenses(MaskingOption o, Category category, SectionKind section);

struct MaskedExample {
  std::vector<int> token_ids;              // generator input, [MASK] substituted
  std::vector<size_t> mask_positions;      // sorted
  std::vector<int> original_ids;           // aligned to mask_positions
  std::optional<MaskingOption> option;     // nullopt for plain MLM
  std::vector<SectionKind> section_labels; // per sentence
  uint64_t rng_seed = 0;
};

/// ceil(rate * n) with a guard against floating-point drift.
size_t mask_quota(size_t n_tokens, double rate = 0.15);

/// Uniformly masks exactly ceil(rate*n) non-special positions.
/// Requires >= 7 tokens and at least one non-special position.
MaskedExample mask_random(const std::vector<int>& ids, const std::vector<bool>& is_special,
                          int mask_token_id, double rate, uint64_t seed);

/// Chooses the masking option: options whose licensed span tokens reach the
/// 15% quota qualify; pick uniformly among qualifiers, else uniformly among
/// all four. Returns the option and whether it qualified.
std::pair<MaskingOption, bool> select_option(const std::vector<EntitySpan>& spans,
                                             size_t n_tokens, uint64_t seed);

/// Masks each licensed span fully or as a uniformly chosen non-empty subset
/// (fair coin per span), then fills up to the quota from non-entity,
/// non-special positions. Entity masking beyond the quota is never capped.
/// Throws PipelineError naming the chunk when the quota is unreachable.
MaskedExample mask_kg(const std::vector<int>& ids, const std::vector<bool>& is_special,
                      const std::vector<EntitySpan>& spans, MaskingOption option, bool qualified,
                      int mask_token_id, uint64_t seed, const std::string& chunk_name = "");

/// One (sentence token ids, section label) example per sentence of the
/// report's chunks; ids include the sequence specials.
struct SentenceExample {
  std::vector<int> ids;
  SectionKind label = SectionKind::Miscellaneous;
};
std::vector<SentenceExample> label_sections(const std::vector<TokenizedChunk>& chunks,
                                            const Vocabulary& vocab);

}  // namespace radpipe
