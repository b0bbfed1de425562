#pragma once

#include <string>
#include <vector>

#include "radpipe/annotator.hpp"
#include "radpipe/corpus.hpp"
#include "radpipe/taxonomy.hpp"

namespace radpipe {

struct Template {
  SectionKind section = SectionKind::Findings;
  std::string pattern;  // slots: {ANAT} {OBS} {SYM} {DESC}
  double weight = 1.0;
};

/// Template file: JSON-lines {"section","pattern","weight"}.
std::vector<Template> load_templates(const std::string& path);

/// A generation-time entity label with char offsets into the raw text.
struct GoldEntity {
  SectionKind section = SectionKind::Findings;
  size_t char_start = 0, char_end = 0;
  std::string surface;
  std::string concept_id;
  Category category = Category::Observation;
};

struct GoldSentence {
  SectionKind section = SectionKind::Findings;
  std::string text;
  size_t char_start = 0, char_end = 0;
};

struct GeneratedReport {
  RawReport raw;
  std::vector<GoldSentence> sentences;
  std::vector<GoldEntity> entities;
};

/// Deterministic per (seed, index). Each report carries 2-5 sections with
/// literal headers that match the shipped header pattern file, and slot fills
/// drawn from the taxonomy with gold labels recorded as they are placed.
std::vector<GeneratedReport> generate(size_t n_reports, const Taxonomy& tax,
                                      const std::vector<Template>& templates, uint64_t seed);

}  // namespace radpipe
