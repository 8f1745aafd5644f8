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

#include "colo/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "colo/common.hpp"
#include "json.hpp"

namespace colo::corpus {
namespace {

constexpr const char* kReservedNames[special::kCount] = {
    "<pad>", "<unk>", "<doc>", "<cls>", "<sep>", "<bos>", "<eos>"};

bool IsPunct(unsigned char c) { return c < 128 && std::ispunct(c); }
bool IsSpace(unsigned char c) { return c < 128 && std::isspace(c); }

}  // namespace

Vocabulary::Vocabulary() {
  for (const char* name : kReservedNames) Add(name);
}

Vocabulary Vocabulary::FromTokens(const std::vector<std::string>& ordered) {
  if (ordered.size() < static_cast<std::size_t>(special::kCount)) {
    Fail(ErrorCode::kInvalidArgument, "vocabulary is missing reserved tokens");
  }
  for (int i = 0; i < special::kCount; ++i) {
    if (ordered[i] != kReservedNames[i]) {
      Fail(ErrorCode::kInvalidArgument,
           "vocabulary entry " + std::to_string(i) + " must be " +
               kReservedNames[i]);
    }
  }
  Vocabulary vocab;
  for (std::size_t i = special::kCount; i < ordered.size(); ++i) {
    if (vocab.Contains(ordered[i])) {
      Fail(ErrorCode::kInvalidArgument,
           "duplicate vocabulary token '" + ordered[i] + "'");
    }
    vocab.Add(ordered[i]);
  }
  return vocab;
}

TokenId Vocabulary::Add(std::string_view token) {
  std::string key(token);
  auto it = token_to_id_.find(key);
  if (it != token_to_id_.end()) return it->second;
  auto id = static_cast<TokenId>(id_to_token_.size());
  id_to_token_.push_back(key);
  token_to_id_.emplace(std::move(key), id);
  return id;
}

TokenId Vocabulary::Lookup(std::string_view token) const {
  auto it = token_to_id_.find(std::string(token));
  return it == token_to_id_.end() ? special::kUnk : it->second;
}

bool Vocabulary::Contains(std::string_view token) const {
  return token_to_id_.count(std::string(token)) > 0;
}

const std::string& Vocabulary::Token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= id_to_token_.size()) {
    Fail(ErrorCode::kInvalidArgument,
         "token id " + std::to_string(id) + " out of range");
  }
  return id_to_token_[id];
}

std::vector<std::string> SplitTokens(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  for (char ch : text) {
    auto c = static_cast<unsigned char>(ch);
    if (IsSpace(c)) {
      flush();
    } else if (IsPunct(c)) {
      flush();
      out.emplace_back(1, ch);
    } else {
      cur.push_back(c < 128 ? static_cast<char>(std::tolower(c)) : ch);
    }
  }
  flush();
  return out;
}

TokenSeq Tokenize(std::string_view text, const Vocabulary& vocab) {
  TokenSeq ids;
  for (const auto& tok : SplitTokens(text)) ids.push_back(vocab.Lookup(tok));
  return ids;
}

std::string Detokenize(std::span<const TokenId> ids, const Vocabulary& vocab) {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out.push_back(' ');
    out += vocab.Token(ids[i]);
  }
  return out;
}

std::vector<RawRecord> ReadJsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorCode::kIo, "cannot open " + path);
  std::vector<RawRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      Fail(ErrorCode::kParse, "malformed JSON at line " +
                                  std::to_string(line_no) + ": " + e.what());
    }
    if (!obj.is_object()) {
      Fail(ErrorCode::kParse,
           "expected an object at line " + std::to_string(line_no));
    }
    for (const char* key : {"id", "sentences", "summary"}) {
      if (!obj.contains(key)) {
        Fail(ErrorCode::kParse, std::string("missing key ") + key +
                                    " at line " + std::to_string(line_no));
      }
    }
    RawRecord rec;
    try {
      const auto& id = obj["id"];
      rec.id = id.is_string() ? id.get<std::string>() : id.dump();
      rec.sentences = obj["sentences"].get<std::vector<std::string>>();
      rec.summary = obj["summary"].get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      Fail(ErrorCode::kParse, "bad field type at line " +
                                  std::to_string(line_no) + ": " + e.what());
    }
    records.push_back(std::move(rec));
  }
  return records;
}

void WriteJsonl(const std::string& path, std::span<const Document> docs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) Fail(ErrorCode::kIo, "cannot write " + path);
  for (const auto& doc : docs) {
    nlohmann::json obj;
    obj["id"] = doc.id;
    obj["sentences"] = doc.raw_sentences;
    obj["summary"] = doc.raw_reference;
    out << obj.dump() << '\n';
  }
}

Vocabulary BuildVocabulary(std::span<const RawRecord> records,
                           std::size_t max_size) {
  std::map<std::string, long> freq;
  auto count = [&](const std::string& text) {
    for (auto& tok : SplitTokens(text)) ++freq[tok];
  };
  for (const auto& rec : records) {
    for (const auto& s : rec.sentences) count(s);
    count(rec.summary);
  }
  std::vector<std::pair<std::string, long>> ranked(freq.begin(), freq.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  Vocabulary vocab;
  for (const auto& [tok, n] : ranked) {
    if (vocab.size() >= max_size) break;
    vocab.Add(tok);
  }
  return vocab;
}

int CountSummarySentences(std::string_view summary) {
  int count = 0;
  bool content = false;
  for (char c : summary) {
    if (c == '.' || c == '!' || c == '?') {
      if (content) ++count;
      content = false;
    } else if (!IsSpace(static_cast<unsigned char>(c))) {
      content = true;
    }
  }
  if (content) ++count;
  return std::max(count, 1);
}

std::vector<Document> TokenizeRecords(std::span<const RawRecord> records,
                                      const Vocabulary& vocab) {
  std::vector<Document> docs;
  docs.reserve(records.size());
  for (const auto& rec : records) {
    Document doc;
    doc.id = rec.id;
    for (const auto& s : rec.sentences) {
      TokenSeq ids = Tokenize(s, vocab);
      if (ids.empty()) continue;
      doc.sentences.push_back(std::move(ids));
      doc.raw_sentences.push_back(s);
    }
    if (doc.sentences.empty()) {
      Fail(ErrorCode::kInvalidArgument,
           "document " + rec.id + " has no non-empty sentences");
    }
    doc.reference = Tokenize(rec.summary, vocab);
    doc.raw_reference = rec.summary;
    doc.summary_sentence_count = CountSummarySentences(rec.summary);
    docs.push_back(std::move(doc));
  }
  return docs;
}

std::vector<Document> LoadJsonl(const std::string& path,
                                const Vocabulary& vocab) {
  auto records = ReadJsonl(path);
  auto docs = TokenizeRecords(records, vocab);
  ValidateDataset(docs, vocab);
  return docs;
}

void ValidateDataset(std::span<const Document> docs, const Vocabulary& vocab) {
  std::set<std::string> ids;
  auto check_seq = [&](const Document& doc, const TokenSeq& seq) {
    for (TokenId t : seq) {
      if (t < 0 || static_cast<std::size_t>(t) >= vocab.size()) {
        Fail(ErrorCode::kInvalidArgument,
             "document " + doc.id + " has token id " + std::to_string(t) +
                 " outside the vocabulary");
      }
    }
  };
  for (const auto& doc : docs) {
    if (!ids.insert(doc.id).second) {
      Fail(ErrorCode::kInvalidArgument, "duplicate document id " + doc.id);
    }
    if (doc.sentences.empty()) {
      Fail(ErrorCode::kInvalidArgument, "document " + doc.id + " is empty");
    }
    for (const auto& s : doc.sentences) {
      if (s.empty()) {
        Fail(ErrorCode::kInvalidArgument,
             "document " + doc.id + " has an empty sentence");
      }
      check_seq(doc, s);
    }
    check_seq(doc, doc.reference);
  }
}

void WriteVocabulary(const std::string& path, const Vocabulary& vocab) {
  std::ofstream out(path, std::ios::binary);
  if (!out) Fail(ErrorCode::kIo, "cannot write " + path);
  for (const auto& tok : vocab.tokens()) out << tok << '\n';
}

Vocabulary ReadVocabulary(const std::string& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorCode::kIo, "cannot open " + path);
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    tokens.push_back(line);
  }
  return Vocabulary::FromTokens(tokens);
}

Vocabulary SynthVocabulary(int vocab_size) {
  Vocabulary vocab;
  for (int id = special::kCount; id < vocab_size; ++id) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "w%04d", id - special::kCount);
    vocab.Add(buf);
  }
  return vocab;
}

void ValidateSynthSpec(const SynthSpec& s) {
  auto bad = [](const std::string& what) {
    Fail(ErrorCode::kInvalidArgument, "invalid synth spec: " + what);
  };
  if (s.num_docs < 0) bad("num_docs < 0");
  if (s.min_sentences < 1 || s.min_sentences > s.max_sentences)
    bad("sentence count range");
  if (s.min_sentence_len < 1 || s.min_sentence_len > s.max_sentence_len)
    bad("sentence length range");
  if (s.min_summary_sentences < 1 ||
      s.min_summary_sentences > s.max_summary_sentences)
    bad("summary sentence range");
  if (s.salient_words < 1) bad("salient_words < 1");
  if (s.vocab_size - special::kCount < s.salient_words + 8)
    bad("vocab_size too small for the salient pool");
  for (double r : {s.noise_rate, s.salient_rate, s.distractor_salient_rate,
                   s.duplicate_rate, s.duplicate_noise}) {
    if (!(r >= 0.0 && r <= 1.0)) bad("rates must lie in [0, 1]");
  }
}

SynthCorpus SynthesizeCorpus(const SynthSpec& spec, std::uint64_t seed) {
  ValidateSynthSpec(spec);
  SynthCorpus corpus{SynthVocabulary(spec.vocab_size), {}};
  std::mt19937_64 rng(seed);
  const TokenId first_salient = special::kCount;
  const TokenId first_plain = first_salient + spec.salient_words;
  const TokenId last_plain = spec.vocab_size - 1;

  auto uniform = [&](int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
  };
  auto coin = [&](double p) { return std::bernoulli_distribution(p)(rng); };
  auto plain_token = [&] { return uniform(first_plain, last_plain); };
  auto sentence = [&](double salient_rate) {
    TokenSeq s(uniform(spec.min_sentence_len, spec.max_sentence_len));
    for (auto& t : s) {
      t = coin(salient_rate) ? uniform(first_salient, first_plain - 1)
                             : plain_token();
    }
    return s;
  };

  for (int d = 0; d < spec.num_docs; ++d) {
    Document doc;
    char id[32];
    std::snprintf(id, sizeof(id), "synth-%06d", d);
    doc.id = id;
    int k = uniform(spec.min_summary_sentences, spec.max_summary_sentences);
    int n = std::max(uniform(spec.min_sentences, spec.max_sentences),
                     spec.max_summary_sentences + 2);
    std::vector<int> slots(n);
    for (int i = 0; i < n; ++i) slots[i] = i;
    std::shuffle(slots.begin(), slots.end(), rng);
    std::vector<int> keys(slots.begin(), slots.begin() + k);
    std::vector<int> free_slots(slots.begin() + k, slots.end());
    std::sort(keys.begin(), keys.end());

    doc.sentences.assign(n, {});
    std::vector<bool> filled(n, false);
    for (int key : keys) {
      doc.sentences[key] = sentence(spec.salient_rate);
      filled[key] = true;
    }
    std::size_t next_free = 0;
    for (int key : keys) {
      if (next_free >= free_slots.size() || !coin(spec.duplicate_rate)) continue;
      int slot = free_slots[next_free++];
      TokenSeq dup = doc.sentences[key];
      bool changed = false;
      for (auto& t : dup) {
        if (coin(spec.duplicate_noise)) {
          t = plain_token();
          changed = true;
        }
      }
      if (!changed) dup[uniform(0, static_cast<int>(dup.size()) - 1)] = plain_token();
      doc.sentences[slot] = std::move(dup);
      filled[slot] = true;
    }
    for (int i = 0; i < n; ++i) {
      if (!filled[i]) doc.sentences[i] = sentence(spec.distractor_salient_rate);
    }

    for (int key : keys) {
      for (TokenId t : doc.sentences[key]) {
        doc.reference.push_back(coin(spec.noise_rate) ? plain_token() : t);
      }
    }
    for (const auto& s : doc.sentences) {
      doc.raw_sentences.push_back(Detokenize(s, corpus.vocab));
    }
    doc.raw_reference = Detokenize(doc.reference, corpus.vocab);
    doc.summary_sentence_count = k;
    corpus.docs.push_back(std::move(doc));
  }
  return corpus;
}

ModelInput BuildSentencesInput(std::span<const TokenSeq> sentences,
                               std::size_t max_len) {
  if (sentences.empty()) Fail(ErrorCode::kInvalidArgument, "empty document");
  ModelInput input;
  input.token_ids.push_back(special::kDoc);
  input.doc_pos = 0;
  for (const auto& s : sentences) {
    if (input.token_ids.size() + s.size() + 2 > max_len) break;
    int start = static_cast<int>(input.token_ids.size());
    input.cls_pos.push_back(start);
    input.token_ids.push_back(special::kCls);
    input.token_ids.insert(input.token_ids.end(), s.begin(), s.end());
    input.token_ids.push_back(special::kSep);
    input.sent_spans.emplace_back(start,
                                  static_cast<int>(input.token_ids.size()));
  }
  if (input.cls_pos.empty()) {
    Fail(ErrorCode::kInvalidArgument, "document untruncatable");
  }
  return input;
}

ModelInput BuildModelInput(const Document& doc, std::size_t max_len) {
  return BuildSentencesInput(doc.sentences, max_len);
}

}  // namespace colo::corpus
