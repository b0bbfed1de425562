#include "radpipe/masking.hpp"

#include <algorithm>
#include <cmath>

#include "radpipe/errors.hpp"
#include "radpipe/rng.hpp"

namespace radpipe {

const char* masking_option_name(MaskingOption o) {
  switch (o) {
    case MaskingOption::Opt1: return "opt1";
    case MaskingOption::Opt2: return "opt2";
    case MaskingOption::Opt3: return "opt3";
    case MaskingOption::Opt4: return "opt4";
  }
  return "opt1";
}

std::optional<MaskingOption> masking_option_from_name(const std::string& name) {
  if (name == "opt1") return MaskingOption::Opt1;
  if (name == "opt2") return MaskingOption::Opt2;
  if (name == "opt3") return MaskingOption::Opt3;
  if (name == "opt4") return MaskingOption::Opt4;
  return std::nullopt;
}

bool option_licenses(MaskingOption o, Category category, SectionKind section) {
  if (category == Category::Symptom)
    return section == SectionKind::Findings || section == SectionKind::Impressions;
  switch (o) {
    case MaskingOption::Opt1:
      return category == Category::Anatomy &&
             (section == SectionKind::Clinical || section == SectionKind::Findings);
    case MaskingOption::Opt2:
      return category == Category::Observation && section == SectionKind::Findings;
    case MaskingOption::Opt3:
      return category == Category::Anatomy &&
             (section == SectionKind::Clinical || section == SectionKind::Impressions);
    case MaskingOption::Opt4:
      return category == Category::Observation && section == SectionKind::Impressions;
  }
  return false;
}

size_t mask_quota(size_t n_tokens, double rate) {
  return static_cast<size_t>(std::ceil(rate * static_cast<double>(n_tokens) - 1e-9));
}

namespace {

MaskedExample apply_masks(const std::vector<int>& ids, std::vector<size_t> positions,
                          int mask_token_id, uint64_t seed) {
  std::sort(positions.begin(), positions.end());
  MaskedExample ex;
  ex.token_ids = ids;
  ex.rng_seed = seed;
  for (size_t p : positions) {
    ex.mask_positions.push_back(p);
    ex.original_ids.push_back(ids[p]);
    ex.token_ids[p] = mask_token_id;
  }
  return ex;
}

}  // namespace

MaskedExample mask_random(const std::vector<int>& ids, const std::vector<bool>& is_special,
                          int mask_token_id, double rate, uint64_t seed) {
  if (ids.size() < 7) throw PipelineError("mask_random: need at least 7 tokens");
  std::vector<size_t> candidates;
  for (size_t i = 0; i < ids.size(); ++i)
    if (!is_special[i]) candidates.push_back(i);
  if (candidates.empty()) throw PipelineError("mask_random: all positions are special tokens");
  size_t quota = mask_quota(ids.size(), rate);
  if (quota > candidates.size())
    throw PipelineError("mask_random: quota exceeds maskable positions");
  Rng rng(seed);
  std::vector<size_t> picked_idx = rng.sample_without_replacement(candidates.size(), quota);
  std::vector<size_t> positions;
  positions.reserve(quota);
  for (size_t i : picked_idx) positions.push_back(candidates[i]);
  return apply_masks(ids, std::move(positions), mask_token_id, seed);
}

std::pair<MaskingOption, bool> select_option(const std::vector<EntitySpan>& spans,
                                             size_t n_tokens, uint64_t seed) {
  const MaskingOption all[4] = {MaskingOption::Opt1, MaskingOption::Opt2, MaskingOption::Opt3,
                                MaskingOption::Opt4};
  size_t quota = mask_quota(n_tokens);
  std::vector<MaskingOption> qualified;
  for (MaskingOption o : all) {
    size_t count = 0;
    for (const EntitySpan& s : spans)
      if (option_licenses(o, s.category, s.section)) count += s.token_end - s.token_start;
    if (count >= quota) qualified.push_back(o);
  }
  Rng rng(seed);
  if (!qualified.empty()) return {qualified[rng.below(qualified.size())], true};
  return {all[rng.below(4)], false};
}

MaskedExample mask_kg(const std::vector<int>& ids, const std::vector<bool>& is_special,
                      const std::vector<EntitySpan>& spans, MaskingOption option, bool qualified,
                      int mask_token_id, uint64_t seed, const std::string& chunk_name) {
  Rng rng(seed);
  std::vector<bool> in_entity(ids.size(), false);
  for (const EntitySpan& s : spans)
    for (size_t i = s.token_start; i < s.token_end; ++i) in_entity[i] = true;

  // spans in token order so the rng draw sequence is deterministic
  std::vector<const EntitySpan*> licensed;
  for (const EntitySpan& s : spans)
    if (option_licenses(option, s.category, s.section)) licensed.push_back(&s);
  std::sort(licensed.begin(), licensed.end(),
            [](const EntitySpan* a, const EntitySpan* b) { return a->token_start < b->token_start; });

  std::vector<size_t> positions;
  for (const EntitySpan* s : licensed) {
    size_t len = s->token_end - s->token_start;
    bool whole = (len == 1) || rng.bernoulli(0.5);
    if (whole) {
      for (size_t i = s->token_start; i < s->token_end; ++i) positions.push_back(i);
    } else {
      // uniformly chosen non-empty subset of the span's tokens
      uint64_t subsets = (uint64_t{1} << len) - 1;
      uint64_t bits = 1 + rng.below(subsets);
      for (size_t i = 0; i < len; ++i)
        if (bits & (uint64_t{1} << i)) positions.push_back(s->token_start + i);
    }
  }

  size_t quota = mask_quota(ids.size());
  if (positions.size() < quota) {
    std::vector<size_t> fill;
    for (size_t i = 0; i < ids.size(); ++i)
      if (!is_special[i] && !in_entity[i]) fill.push_back(i);
    size_t need = quota - positions.size();
    if (need > fill.size())
      throw PipelineError("mask_kg: quota unreachable for chunk " +
                          (chunk_name.empty() ? std::string("<unnamed>") : chunk_name) + " (need " +
                          std::to_string(need) + " fill positions, have " +
                          std::to_string(fill.size()) + ")");
    std::vector<size_t> picked = rng.sample_without_replacement(fill.size(), need);
    for (size_t i : picked) positions.push_back(fill[i]);
  }

  MaskedExample ex = apply_masks(ids, std::move(positions), mask_token_id, seed);
  ex.option = option;
  (void)qualified;
  return ex;
}

std::vector<SentenceExample> label_sections(const std::vector<TokenizedChunk>& chunks,
                                            const Vocabulary& vocab) {
  std::vector<SentenceExample> out;
  for (const TokenizedChunk& chunk : chunks) {
    for (const TokenizedSentence& sent : chunk.sentences) {
      SentenceExample ex;
      ex.ids.push_back(vocab.cls_id());
      for (size_t t = sent.token_start; t < sent.token_end; ++t) ex.ids.push_back(chunk.ids[t]);
      ex.ids.push_back(vocab.sep_id());
      ex.label = chunk.section;
      out.push_back(std::move(ex));
    }
  }
  return out;
}

}  // namespace radpipe
