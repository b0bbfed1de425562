#pragma once

#include <optional>
#include <string>
#include <vector>

#include "radpipe/corpus.hpp"
#include "radpipe/taxonomy.hpp"
#include "radpipe/tokenizer.hpp"

namespace radpipe {

enum class Category { Symptom, Anatomy, Observation };

const char* category_name(Category c);
std::optional<Category> category_from_name(const std::string& name);

/// A linked, categorized span of tokens inside one chunk.
struct EntitySpan {
  SectionKind section = SectionKind::Miscellaneous;
  size_t token_start = 0, token_end = 0;  // half-open token range within chunk
  std::string surface;
  std::string concept_id;
  Category category = Category::Observation;
};

/// Class-based categorization heuristics; classes outside the three lists
/// yield nullopt and the match is discarded (logged, never silent).
std::optional<Category> categorize(const Taxonomy& tax, const Concept& c);

/// Resolves a surface form to one concept. Ambiguous surfaces prefer the
/// concept whose class categorizes, in the order Anatomy > Observation >
/// Symptom. Null concept means no match.
struct SurfaceLink {
  const Concept* match = nullptr;
  std::optional<Category> category;
  bool ambiguous = false;
};
SurfaceLink link_surface(const Taxonomy& tax, const std::string& surface);

struct DiscardedMatch {
  std::string surface;
  std::string concept_id;
  std::string reason;
};

struct AnnotationAudit {
  std::vector<EntitySpan> spans;
  std::vector<DiscardedMatch> discarded;
  std::vector<std::string> ambiguities;  // surfaces with multiple candidate concepts
};

/// Greedy longest-match of word n-grams (n <= 5) against taxonomy surface
/// forms, left to right within each sentence, no overlaps. Multi-word matches
/// whose constituent words map to different categories are split per word.
/// Chunks outside Clinical/Findings/Impressions yield no spans.
std::vector<EntitySpan> annotate(const TokenizedChunk& chunk, const Vocabulary& vocab,
                                 const Taxonomy& tax);
AnnotationAudit annotate_audit(const TokenizedChunk& chunk, const Vocabulary& vocab,
                               const Taxonomy& tax);

/// Splits a multi-word span into per-word spans categorized independently.
/// Constituent words that do not link or have no category are dropped.
/// `words` are the chunk words covered by the span. Single-word spans are
/// returned unchanged.
std::vector<EntitySpan> split_mixed_entity(const Taxonomy& tax,
                                           const std::vector<TokenizedWord>& words,
                                           const EntitySpan& span);

/// Shared surface resolution used by annotate() and by the synthetic-corpus
/// generator's gold labels: decides whether a matched surface stays one span
/// or splits into constituents, and assigns categories. Word offsets are
/// relative to the matched word sequence; empty when nothing categorizes.
struct ResolvedPart {
  size_t word_offset = 0;
  size_t n_words = 1;
  std::string concept_id;
  Category category = Category::Observation;
};
std::vector<ResolvedPart> resolve_surface(const Taxonomy& tax,
                                          const std::vector<std::string>& words);

}  // namespace radpipe
