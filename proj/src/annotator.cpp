#include "radpipe/annotator.hpp"

#include <algorithm>

#include "radpipe/log.hpp"

namespace radpipe {

const char* category_name(Category c) {
  switch (c) {
    case Category::Symptom: return "symptom";
    case Category::Anatomy: return "anatomy";
    case Category::Observation: return "observation";
  }
  return "observation";
}

std::optional<Category> category_from_name(const std::string& name) {
  if (name == "symptom") return Category::Symptom;
  if (name == "anatomy") return Category::Anatomy;
  if (name == "observation") return Category::Observation;
  return std::nullopt;
}

std::optional<Category> categorize(const Taxonomy& tax, const Concept& c) {
  const std::string& cls = tax.class_of(c);
  if (cls == "symptom") return Category::Symptom;
  if (cls == "anatomical entity" || cls == "anatomical descriptors" ||
      cls == "anatomically-related descriptor" || cls == "location descriptor")
    return Category::Anatomy;
  if (cls == "clinical finding" || cls == "procedure" || cls == "imaging observation" ||
      cls == "size descriptor" || cls == "normality descriptor" || cls == "turbidity descriptor" ||
      cls == "stage of healing descriptor" || cls == "composition descriptor")
    return Category::Observation;
  return std::nullopt;
}

SurfaceLink link_surface(const Taxonomy& tax, const std::string& surface) {
  SurfaceLink r;
  std::vector<const Concept*> candidates = tax.lookup(surface);
  if (candidates.empty()) return r;
  r.ambiguous = candidates.size() > 1;
  auto rank = [&](const Concept* c) {
    auto cat = categorize(tax, *c);
    if (!cat) return 3;
    switch (*cat) {
      case Category::Anatomy: return 0;
      case Category::Observation: return 1;
      case Category::Symptom: return 2;
    }
    return 3;
  };
  r.match = *std::min_element(candidates.begin(), candidates.end(),
                                [&](const Concept* a, const Concept* b) { return rank(a) < rank(b); });
  r.category = categorize(tax, *r.match);
  return r;
}

namespace {

constexpr size_t kMaxNgramWords = 5;

std::string join_words(const std::vector<std::string>& words, size_t start, size_t len) {
  std::string out;
  for (size_t i = start; i < start + len; ++i) {
    if (!out.empty()) out.push_back(' ');
    out += words[i];
  }
  return out;
}

}  // namespace

std::vector<ResolvedPart> resolve_surface(const Taxonomy& tax,
                                          const std::vector<std::string>& words) {
  std::vector<ResolvedPart> out;
  SurfaceLink whole = link_surface(tax, join_words(words, 0, words.size()));
  if (!whole.match) return out;

  if (words.size() > 1) {
    // per-word resolution; mixed categories force a split
    std::vector<std::pair<size_t, SurfaceLink>> parts;
    std::set<Category> cats;
    for (size_t i = 0; i < words.size(); ++i) {
      SurfaceLink lr = link_surface(tax, words[i]);
      if (lr.match && lr.category) {
        parts.emplace_back(i, lr);
        cats.insert(*lr.category);
      }
    }
    if (cats.size() >= 2) {
      for (const auto& [offset, lr] : parts)
        out.push_back({offset, 1, lr.match->id, *lr.category});
      return out;
    }
  }
  if (whole.category)
    out.push_back({0, words.size(), whole.match->id, *whole.category});
  return out;
}

std::vector<EntitySpan> split_mixed_entity(const Taxonomy& tax,
                                           const std::vector<TokenizedWord>& words,
                                           const EntitySpan& span) {
  if (words.size() <= 1) return {span};
  std::vector<EntitySpan> out;
  for (const TokenizedWord& w : words) {
    SurfaceLink lr = link_surface(tax, w.text);
    if (!lr.match || !lr.category) continue;  // constituents without category are dropped
    EntitySpan s;
    s.section = span.section;
    s.token_start = w.token_start;
    s.token_end = w.token_end;
    s.surface = w.text;
    s.concept_id = lr.match->id;
    s.category = *lr.category;
    out.push_back(std::move(s));
  }
  return out;
}

AnnotationAudit annotate_audit(const TokenizedChunk& chunk, const Vocabulary& vocab,
                               const Taxonomy& tax) {
  (void)vocab;
  AnnotationAudit audit;
  if (chunk.section != SectionKind::Clinical && chunk.section != SectionKind::Findings &&
      chunk.section != SectionKind::Impressions)
    return audit;

  auto matchable = [&](const TokenizedWord& w) {
    return !w.is_special && !w.text.empty() &&
           std::isalnum(static_cast<unsigned char>(w.text[0]));
  };

  for (const TokenizedSentence& sent : chunk.sentences) {
    size_t pos = sent.word_start;
    while (pos < sent.word_end) {
      if (!matchable(chunk.words[pos])) {
        ++pos;
        continue;
      }
      size_t max_len = std::min(kMaxNgramWords, sent.word_end - pos);
      // n-grams cannot contain punctuation or placeholders
      size_t run = 0;
      while (run < max_len && matchable(chunk.words[pos + run])) ++run;

      bool matched = false;
      for (size_t len = run; len >= 1 && !matched; --len) {
        std::vector<std::string> words;
        for (size_t i = 0; i < len; ++i) words.push_back(chunk.words[pos + i].text);
        std::string surface = join_words(words, 0, len);
        SurfaceLink whole = link_surface(tax, surface);
        if (!whole.match) continue;
        matched = true;
        if (whole.ambiguous) {
          audit.ambiguities.push_back(surface);
          log_debug("annotate: ambiguous surface \"" + surface + "\" resolved to " +
                    whole.match->id);
        }
        std::vector<ResolvedPart> parts = resolve_surface(tax, words);
        if (parts.empty()) {
          audit.discarded.push_back({surface, whole.match->id, "no category for class \"" +
                                                                    whole.match->radlex_class +
                                                                    "\""});
          log_debug("annotate: discarded \"" + surface + "\" (" + whole.match->radlex_class +
                    ")");
        }
        for (const ResolvedPart& part : parts) {
          EntitySpan s;
          s.section = chunk.section;
          s.token_start = chunk.words[pos + part.word_offset].token_start;
          s.token_end = chunk.words[pos + part.word_offset + part.n_words - 1].token_end;
          s.surface = join_words(words, part.word_offset, part.n_words);
          s.concept_id = part.concept_id;
          s.category = part.category;
          audit.spans.push_back(std::move(s));
        }
        pos += len;
      }
      if (!matched) ++pos;
    }
  }
  return audit;
}

std::vector<EntitySpan> annotate(const TokenizedChunk& chunk, const Vocabulary& vocab,
                                 const Taxonomy& tax) {
  return annotate_audit(chunk, vocab, tax).spans;
}

}  // namespace radpipe
