// Copyright 2026 The Colo Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Documents, vocabulary, tokenization, JSONL ingestion, the synthetic corpus
// generator, and the encoder input layout.

#ifndef COLO_CORPUS_HPP_
#define COLO_CORPUS_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace colo::corpus {

using TokenId = std::int32_t;
using TokenSeq = std::vector<TokenId>;

// Reserved ids. They occupy the first slots of every vocabulary.
namespace special {
inline constexpr TokenId kPad = 0;
inline constexpr TokenId kUnk = 1;
inline constexpr TokenId kDoc = 2;
inline constexpr TokenId kCls = 3;
inline constexpr TokenId kSep = 4;
inline constexpr TokenId kBos = 5;
inline constexpr TokenId kEos = 6;
inline constexpr int kCount = 7;
}  // namespace special

class Vocabulary {
 public:
  // A vocabulary holding only the reserved tokens.
  Vocabulary();

  // Builds from tokens listed in id order. The first entries must be the
  // reserved names in reserved order.
  static Vocabulary FromTokens(const std::vector<std::string>& ordered);

  // Adds `token` if absent and returns its id.
  TokenId Add(std::string_view token);
  // Id of `token`, or <unk>.
  TokenId Lookup(std::string_view token) const;
  bool Contains(std::string_view token) const;
  const std::string& Token(TokenId id) const;
  std::size_t size() const { return id_to_token_.size(); }
  const std::vector<std::string>& tokens() const { return id_to_token_; }

 private:
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, TokenId> token_to_id_;
};

// Lowercases, splits on whitespace, and emits every ASCII punctuation
// character as its own token.
std::vector<std::string> SplitTokens(std::string_view text);
TokenSeq Tokenize(std::string_view text, const Vocabulary& vocab);
std::string Detokenize(std::span<const TokenId> ids, const Vocabulary& vocab);

struct Document {
  std::string id;
  std::vector<TokenSeq> sentences;
  TokenSeq reference;
  std::vector<std::string> raw_sentences;
  std::string raw_reference;
  // Number of sentences in the gold summary.
  int summary_sentence_count = 1;

  std::size_t num_sentences() const { return sentences.size(); }
};

// One JSONL line before tokenization.
struct RawRecord {
  std::string id;
  std::vector<std::string> sentences;
  std::string summary;
};

// Parses {"id", "sentences", "summary"} objects, one per line. Blank lines
// are skipped. Errors name the 1-based line number.
std::vector<RawRecord> ReadJsonl(const std::string& path);
void WriteJsonl(const std::string& path, std::span<const Document> docs);

// Frequency-ranked vocabulary over sentences and summaries, capped at
// `max_size` entries including the reserved ones. Ties sort by token text.
Vocabulary BuildVocabulary(std::span<const RawRecord> records,
                           std::size_t max_size);
// Sentences that tokenize to nothing are dropped; a record left with no
// sentences is an error.
std::vector<Document> TokenizeRecords(std::span<const RawRecord> records,
                                      const Vocabulary& vocab);
std::vector<Document> LoadJsonl(const std::string& path,
                                const Vocabulary& vocab);

// Checks the Document invariants against `vocab`; throws on violation.
void ValidateDataset(std::span<const Document> docs, const Vocabulary& vocab);

void WriteVocabulary(const std::string& path, const Vocabulary& vocab);
Vocabulary ReadVocabulary(const std::string& path);

// Sentence-final punctuation count of a summary string, at least 1.
int CountSummarySentences(std::string_view summary);

struct SynthSpec {
  int num_docs = 500;
  int min_sentences = 6;
  int max_sentences = 10;
  int min_sentence_len = 5;
  int max_sentence_len = 10;
  int vocab_size = 2000;
  int min_summary_sentences = 2;
  int max_summary_sentences = 3;
  // Per-token substitution probability applied to the reference.
  double noise_rate = 0.1;
  // Size of the salient word pool that marks summary-worthy sentences.
  int salient_words = 64;
  double salient_rate = 0.5;
  double distractor_salient_rate = 0.05;
  // Probability that a summary sentence gets a noisy near-duplicate
  // elsewhere in the document.
  double duplicate_rate = 0.5;
  double duplicate_noise = 0.3;
};

struct SynthCorpus {
  Vocabulary vocab;
  std::vector<Document> docs;
};

Vocabulary SynthVocabulary(int vocab_size);
// Deterministic for a fixed (spec, seed).
SynthCorpus SynthesizeCorpus(const SynthSpec& spec, std::uint64_t seed);
void ValidateSynthSpec(const SynthSpec& spec);

struct ModelInput {
  TokenSeq token_ids;
  int doc_pos = 0;
  std::vector<int> cls_pos;
  // Half-open [cls, sep + 1) span of each kept sentence.
  std::vector<std::pair<int, int>> sent_spans;

  std::size_t num_sentences() const { return cls_pos.size(); }
};

// <doc> (<cls> tokens <sep>)* truncated to `max_len` by dropping whole
// trailing sentences.
ModelInput BuildModelInput(const Document& doc, std::size_t max_len);
ModelInput BuildSentencesInput(std::span<const TokenSeq> sentences,
                               std::size_t max_len);

}  // namespace colo::corpus

#endif  // COLO_CORPUS_HPP_
