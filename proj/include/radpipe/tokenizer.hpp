#pragma once

#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "radpipe/corpus.hpp"

namespace radpipe {

class Taxonomy;

enum class TokenProvenance { Base, New, Special };

/// The five anonymization placeholders appended as T_s, in file order.
const std::vector<std::string>& anonymization_tokens();

/// Ordered token set with the "##" continuation convention. Ids are dense
/// 0..N-1 in file order; immutable once constructed.
class Vocabulary {
 public:
  /// One token per line, line number = id. Requires the control tokens
  /// [PAD],[UNK],[CLS],[SEP],[MASK] to be present.
  static Vocabulary load(const std::string& path);
  static Vocabulary from_tokens(const std::vector<std::string>& tokens);

  void save(const std::string& path) const;
  /// Sidecar format: token<TAB>{base|new|special}.
  void save_provenance(const std::string& path) const;

  size_t size() const { return tokens_.size(); }
  std::optional<int> id_of(const std::string& token) const;
  const std::string& token_of(int id) const { return tokens_.at(static_cast<size_t>(id)); }
  TokenProvenance provenance(int id) const { return provenance_.at(static_cast<size_t>(id)); }

  int pad_id() const { return pad_id_; }
  int unk_id() const { return unk_id_; }
  int cls_id() const { return cls_id_; }
  int sep_id() const { return sep_id_; }
  int mask_id() const { return mask_id_; }

  /// True for control tokens and anonymization placeholders; these are never
  /// maskable and never count as entity positions.
  bool is_special_id(int id) const;

  friend Vocabulary extend_vocabulary(const Vocabulary& base, const std::set<std::string>& corpus_tokens,
                                      const Taxonomy& tax);

 private:
  void append(const std::string& token, TokenProvenance prov);
  void find_control_ids();

  std::vector<std::string> tokens_;
  std::vector<TokenProvenance> provenance_;
  std::unordered_map<std::string, int> index_;
  int pad_id_ = -1, unk_id_ = -1, cls_id_ = -1, sep_id_ = -1, mask_id_ = -1;
};

struct Word {
  std::string text;   // lowercased
  size_t start = 0;   // char span into the input string
  size_t end = 0;
  bool is_special = false;  // anonymization placeholder, kept atomic
};

/// Lowercases and splits on whitespace, then splits punctuation into single
/// tokens. Anonymization placeholders like "[date]" stay atomic.
std::vector<Word> pre_tokenize(const std::string& text);

/// join of pre_tokenize() with single spaces; the fixed point of tokenize +
/// detokenize for inputs without unknown tokens.
std::string normalize_text(const std::string& text);

/// Greedy longest-prefix WordPiece over pre-tokenized words.
std::vector<int> tokenize(const Vocabulary& vocab, const std::string& text);

std::string detokenize(const Vocabulary& vocab, const std::vector<int>& ids);

struct WordPieceResult {
  std::set<std::string> tokens;
  bool reached_target = true;  // false -> corpus exhausted before target_size
};

/// Character-alphabet seeded WordPiece induction: both word-initial and "##"
/// continuation forms of every character are seeded, then pairs are merged
/// greedily by score = freq(pair) / (freq(left) * freq(right)) until
/// target_size tokens exist. Ties break lexicographically on (left, right).
/// Deterministic given corpus order. Empty corpus throws PipelineError;
/// target_size must be >= 256 unless relax_target_floor (tests only).
WordPieceResult train_wordpiece(const std::vector<std::string>& corpus_texts, size_t target_size,
                                bool relax_target_floor = false);

/// Taxonomy-gated vocabulary extension: candidates are corpus tokens not in
/// base; a candidate joins T_new iff its surface, stripped of the "##"
/// prefix, matches a taxonomy concept. Result = base ++ sorted(T_new) ++ T_s.
/// Base ids are unchanged.
Vocabulary extend_vocabulary(const Vocabulary& base, const std::set<std::string>& corpus_tokens,
                             const Taxonomy& tax);

// ---------------------------------------------------------------------------
// chunk tokenization with alignment (shared by the annotator and masking)

struct TokenizedWord {
  std::string text;
  size_t char_start = 0, char_end = 0;  // absolute span into the cleaned report
  size_t token_start = 0, token_end = 0;
  bool is_special = false;
};

struct TokenizedSentence {
  size_t token_start = 0, token_end = 0;
  size_t word_start = 0, word_end = 0;  // indices into TokenizedChunk::words
};

struct TokenizedChunk {
  std::string report_id;
  SectionKind section = SectionKind::Miscellaneous;
  std::vector<int> ids;  // [CLS] body [SEP]
  std::vector<TokenizedWord> words;
  std::vector<TokenizedSentence> sentences;

  std::vector<bool> special_mask(const Vocabulary& vocab) const;
};

TokenizedChunk tokenize_chunk(const Vocabulary& vocab, const Chunk& chunk);

}  // namespace radpipe
