#include "radpipe/corpus.hpp"

#include <algorithm>
#include <cctype>

#include "radpipe/errors.hpp"
#include "radpipe/io.hpp"
#include "radpipe/tokenizer.hpp"

namespace radpipe {

const char* section_name(SectionKind kind) {
  switch (kind) {
    case SectionKind::Clinical: return "clinical";
    case SectionKind::Comparison: return "comparison";
    case SectionKind::Findings: return "findings";
    case SectionKind::Impressions: return "impressions";
    case SectionKind::Miscellaneous: return "miscellaneous";
  }
  return "miscellaneous";
}

std::optional<SectionKind> section_from_name(const std::string& name) {
  std::string n;
  for (char c : name) n.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (n == "clinical") return SectionKind::Clinical;
  if (n == "comparison") return SectionKind::Comparison;
  if (n == "findings") return SectionKind::Findings;
  if (n == "impressions") return SectionKind::Impressions;
  if (n == "miscellaneous") return SectionKind::Miscellaneous;
  return std::nullopt;
}

std::map<SectionKind, std::vector<Sentence>> SectionedReport::sections() const {
  std::map<SectionKind, std::vector<Sentence>> out;
  for (const Segment& seg : segments) {
    if (seg.sentences.empty()) continue;
    auto& v = out[seg.kind];
    v.insert(v.end(), seg.sentences.begin(), seg.sentences.end());
  }
  return out;
}

// ---------------------------------------------------------------------------
// cleaning

RegexRuleSet RegexRuleSet::load(const std::string& path) {
  return from_lines(read_lines(path), path);
}

RegexRuleSet RegexRuleSet::from_lines(const std::vector<std::string>& lines,
                                      const std::string& origin) {
  RegexRuleSet set;
  size_t line_no = 0;
  for (const std::string& line : lines) {
    ++line_no;
    size_t tab = line.find('\t');
    if (tab == std::string::npos)
      throw ConfigError(origin + " line " + std::to_string(line_no) +
                        ": expected pattern<TAB>replacement");
    Rule rule;
    try {
      rule.pattern = std::regex(line.substr(0, tab), std::regex::ECMAScript | std::regex::optimize);
    } catch (const std::regex_error& e) {
      throw ConfigError(origin + " line " + std::to_string(line_no) + ": bad regex: " + e.what());
    }
    rule.replacement = line.substr(tab + 1);
    set.rules_.push_back(std::move(rule));
  }
  return set;
}

namespace {

std::string collapse_whitespace(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  size_t i = 0;
  while (i < s.size()) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    if (std::isspace(c)) {
      bool newline = false;
      while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) {
        if (s[i] == '\n' || s[i] == '\r') newline = true;
        ++i;
      }
      if (!out.empty() && i < s.size()) out.push_back(newline ? '\n' : ' ');
    } else {
      out.push_back(s[i]);
      ++i;
    }
  }
  return out;
}

}  // namespace

std::string clean_text(const std::string& raw, const RegexRuleSet& rules) {
  std::string text = raw;
  for (const RegexRuleSet::Rule& rule : rules.rules_)
    text = std::regex_replace(text, rule.pattern, rule.replacement);
  return collapse_whitespace(text);
}

// ---------------------------------------------------------------------------
// section identification

HeaderPatternSet HeaderPatternSet::load(const std::string& path) {
  return from_lines(read_lines(path), path);
}

HeaderPatternSet HeaderPatternSet::from_lines(const std::vector<std::string>& lines,
                                              const std::string& origin) {
  HeaderPatternSet set;
  size_t line_no = 0;
  for (const std::string& line : lines) {
    ++line_no;
    size_t tab = line.find('\t');
    if (tab == std::string::npos)
      throw ConfigError(origin + " line " + std::to_string(line_no) +
                        ": expected section<TAB>regex");
    auto kind = section_from_name(line.substr(0, tab));
    if (!kind)
      throw ConfigError(origin + " line " + std::to_string(line_no) + ": unknown section \"" +
                        line.substr(0, tab) + "\"");
    Pattern p;
    p.kind = *kind;
    try {
      p.re = std::regex(line.substr(tab + 1),
                        std::regex::ECMAScript | std::regex::icase | std::regex::optimize);
    } catch (const std::regex_error& e) {
      throw ConfigError(origin + " line " + std::to_string(line_no) + ": bad regex: " + e.what());
    }
    set.patterns_.push_back(std::move(p));
  }
  return set;
}

std::optional<std::pair<SectionKind, size_t>> HeaderPatternSet::match_at(
    const std::string& cleaned, size_t pos) const {
  for (const Pattern& p : patterns_) {
    std::smatch m;
    if (std::regex_search(cleaned.cbegin() + static_cast<long>(pos), cleaned.cend(), m, p.re,
                          std::regex_constants::match_continuous)) {
      return std::make_pair(p.kind, static_cast<size_t>(m.length(0)));
    }
  }
  return std::nullopt;
}

SectionedReport identify_sections(const std::string& report_id, const std::string& cleaned,
                                  const HeaderPatternSet& headers) {
  SectionedReport report;
  report.id = report_id;
  report.cleaned = cleaned;

  struct Header {
    SectionKind kind;
    size_t start, end;
  };
  std::vector<Header> found;
  size_t pos = 0;
  while (pos <= cleaned.size()) {
    if (pos == 0 || (pos > 0 && cleaned[pos - 1] == '\n')) {
      if (auto m = headers.match_at(cleaned, pos)) {
        found.push_back({m->first, pos, pos + m->second});
      }
    }
    size_t next = cleaned.find('\n', pos);
    if (next == std::string::npos) break;
    pos = next + 1;
  }

  auto add_segment = [&](SectionKind kind, size_t hs, size_t he, size_t bs, size_t be) {
    Segment seg;
    seg.kind = kind;
    seg.header_start = hs;
    seg.header_end = he;
    seg.body_start = bs;
    seg.body_end = be;
    seg.sentences = split_sentences(cleaned.substr(bs, be - bs), bs);
    report.segments.push_back(std::move(seg));
  };

  size_t first = found.empty() ? cleaned.size() : found.front().start;
  if (first > 0 || found.empty()) {
    // text before the first header falls into Miscellaneous
    add_segment(SectionKind::Miscellaneous, 0, 0, 0, first);
  }
  for (size_t i = 0; i < found.size(); ++i) {
    size_t body_end = (i + 1 < found.size()) ? found[i + 1].start : cleaned.size();
    add_segment(found[i].kind, found[i].start, found[i].end, found[i].end, body_end);
  }
  return report;
}

// ---------------------------------------------------------------------------
// sentence splitting

namespace {

const std::vector<std::string>& abbreviation_guards() {
  static const std::vector<std::string> guards = {"dr",  "mr", "mrs", "ms", "prof",
                                                  "st",  "vs", "e.g", "i.e"};
  return guards;
}

bool guarded_abbreviation(const std::string& text, size_t dot) {
  // word immediately before the dot, allowing inner dots for e.g./i.e.
  size_t start = dot;
  while (start > 0) {
    char c = text[start - 1];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '.') --start;
    else break;
  }
  if (start == dot) return false;
  std::string word;
  for (size_t i = start; i < dot; ++i)
    word.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(text[i]))));
  const auto& guards = abbreviation_guards();
  return std::find(guards.begin(), guards.end(), word) != guards.end();
}

}  // namespace

std::vector<Sentence> split_sentences(const std::string& text, size_t abs_offset) {
  std::vector<Sentence> out;
  size_t n = text.size();
  size_t i = 0;
  while (i < n) {
    while (i < n && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i >= n) break;
    size_t start = i;
    size_t end = n;
    for (size_t j = i; j < n; ++j) {
      char c = text[j];
      if (c != '.' && c != '!' && c != '?') continue;
      // consume a run of terminators
      size_t k = j;
      while (k + 1 < n && (text[k + 1] == '.' || text[k + 1] == '!' || text[k + 1] == '?')) ++k;
      bool at_boundary = (k + 1 >= n) || std::isspace(static_cast<unsigned char>(text[k + 1]));
      if (!at_boundary) {
        continue;  // e.g. decimals: "3.5"
      }
      if (c == '.' && k == j && guarded_abbreviation(text, j)) continue;
      end = k + 1;
      break;
    }
    // trailing whitespace never belongs to the sentence
    size_t last = end;
    while (last > start && std::isspace(static_cast<unsigned char>(text[last - 1]))) --last;
    if (last > start) {
      Sentence s;
      s.text = text.substr(start, last - start);
      s.start = abs_offset + start;
      s.end = abs_offset + last;
      out.push_back(std::move(s));
    }
    i = end;
  }
  return out;
}

// ---------------------------------------------------------------------------
// chunking

std::vector<Chunk> chunk_sections(const SectionedReport& report, const Vocabulary& vocab,
                                  size_t budget) {
  constexpr size_t kSpecialOverhead = 2;  // [CLS] and [SEP]
  std::vector<Chunk> chunks;
  for (const Segment& seg : report.segments) {
    Chunk cur;
    cur.report_id = report.id;
    cur.section = seg.kind;
    cur.token_count = kSpecialOverhead;
    auto flush = [&]() {
      if (!cur.sentences.empty()) chunks.push_back(cur);
      cur.sentences.clear();
      cur.token_count = kSpecialOverhead;
    };
    for (const Sentence& s : seg.sentences) {
      size_t count = tokenize(vocab, s.text).size();
      if (count + kSpecialOverhead > budget)
        throw PipelineError("report " + report.id + ": sentence exceeds token budget (" +
                            std::to_string(count + kSpecialOverhead) + " > " +
                            std::to_string(budget) + "): " + s.text);
      if (cur.token_count + count > budget) flush();
      cur.sentences.push_back(s);
      cur.token_count += count;
    }
    flush();
  }
  return chunks;
}

}  // namespace radpipe
