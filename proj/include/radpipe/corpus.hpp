#pragma once

#include <map>
#include <optional>
#include <regex>
#include <string>
#include <vector>

namespace radpipe {

class Vocabulary;

struct RawReport {
  std::string id;
  std::string text;
};

enum class SectionKind { Clinical, Comparison, Findings, Impressions, Miscellaneous };

constexpr int kSectionKindCount = 5;
const char* section_name(SectionKind kind);
std::optional<SectionKind> section_from_name(const std::string& name);

struct Sentence {
  std::string text;
  size_t start = 0;  // char span into the cleaned report text
  size_t end = 0;
};

/// One header-delimited region of a report, in document order. The leading
/// region before any header has an empty header span and kind Miscellaneous.
struct Segment {
  SectionKind kind = SectionKind::Miscellaneous;
  size_t header_start = 0, header_end = 0;  // empty when header_start == header_end
  size_t body_start = 0, body_end = 0;
  std::vector<Sentence> sentences;
};

struct SectionedReport {
  std::string id;
  std::string cleaned;
  std::vector<Segment> segments;

  /// Sentences per section, merged across segments in document order.
  std::map<SectionKind, std::vector<Sentence>> sections() const;
};

struct Chunk {
  std::string report_id;
  SectionKind section = SectionKind::Miscellaneous;
  std::vector<Sentence> sentences;
  size_t token_count = 0;  // post-tokenization, including sequence specials
};

/// Ordered substitution rules, one per line: `pattern<TAB>replacement`.
class RegexRuleSet {
 public:
  static RegexRuleSet load(const std::string& path);
  static RegexRuleSet from_lines(const std::vector<std::string>& lines,
                                 const std::string& origin = "<memory>");
  size_t size() const { return rules_.size(); }

  friend std::string clean_text(const std::string& raw, const RegexRuleSet& rules);

 private:
  struct Rule {
    std::regex pattern;
    std::string replacement;
  };
  std::vector<Rule> rules_;
};

/// Applies the rules top-to-bottom, then collapses whitespace runs
/// (spaces/tabs to one space, newline runs to one newline) and trims.
/// Deterministic and idempotent for the shipped rule set.
std::string clean_text(const std::string& raw, const RegexRuleSet& rules);

/// Section header patterns, one per line: `section<TAB>regex`. Patterns are
/// matched case-insensitively and anchored at line starts.
class HeaderPatternSet {
 public:
  static HeaderPatternSet load(const std::string& path);
  static HeaderPatternSet from_lines(const std::vector<std::string>& lines,
                                     const std::string& origin = "<memory>");

  /// Match at cleaned[pos..]; returns (kind, match length) for the first
  /// pattern in file order that matches, or nullopt.
  std::optional<std::pair<SectionKind, size_t>> match_at(const std::string& cleaned,
                                                         size_t pos) const;

 private:
  struct Pattern {
    SectionKind kind;
    std::regex re;
  };
  std::vector<Pattern> patterns_;
};

/// Splits cleaned text into header-delimited segments. Never fails: text
/// without any recognized header degrades to a single Miscellaneous segment.
SectionedReport identify_sections(const std::string& report_id, const std::string& cleaned,
                                  const HeaderPatternSet& headers);

/// Rule-based sentence splitting on ./!/? with an abbreviation guard list.
/// Returned spans are offsets into the *report* text: local offsets in `text`
/// shifted by `abs_offset`. Gaps between sentences are whitespace only, so
/// concatenating sentences plus separators reconstructs the input.
std::vector<Sentence> split_sentences(const std::string& text, size_t abs_offset = 0);

/// Greedy sentence packing per section; a chunk never spans two sections and
/// never exceeds `budget` tokens (including the two sequence specials).
/// A single sentence over budget throws PipelineError (the report is skipped
/// upstream, never truncated).
std::vector<Chunk> chunk_sections(const SectionedReport& report, const Vocabulary& vocab,
                                  size_t budget);

}  // namespace radpipe
