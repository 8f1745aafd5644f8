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

// Helpers shared by the unit tests.

#ifndef COLO_TESTS_TEST_UTIL_HPP_
#define COLO_TESTS_TEST_UTIL_HPP_

#include <filesystem>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "colo/corpus.hpp"

namespace colo::testing {

// Maps whitespace-separated words to stable ids (one id per distinct word
// across the whole test binary).
inline corpus::TokenSeq Words(const std::string& text) {
  static std::map<std::string, corpus::TokenId> ids;
  corpus::TokenSeq out;
  std::istringstream in(text);
  std::string w;
  while (in >> w) {
    auto [it, inserted] =
        ids.emplace(w, static_cast<corpus::TokenId>(100 + ids.size()));
    out.push_back(it->second);
  }
  return out;
}

inline corpus::Document MakeDoc(const std::vector<std::string>& sentences,
                                const std::string& reference,
                                const std::string& id = "doc") {
  corpus::Document doc;
  doc.id = id;
  for (const auto& s : sentences) {
    doc.sentences.push_back(Words(s));
    doc.raw_sentences.push_back(s);
  }
  doc.reference = Words(reference);
  doc.raw_reference = reference;
  return doc;
}

inline corpus::TokenSeq RandomTokens(std::mt19937_64& rng, int max_len,
                                     int vocab) {
  std::uniform_int_distribution<int> len(0, max_len);
  std::uniform_int_distribution<int> tok(0, vocab - 1);
  corpus::TokenSeq out(len(rng));
  for (auto& t : out) t = tok(rng);
  return out;
}

// A fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("colo_test_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string path() const { return path_.string(); }
  std::string file(const std::string& name) const {
    return (path_ / name).string();
  }

 private:
  std::filesystem::path path_;
};

}  // namespace colo::testing

#endif  // COLO_TESTS_TEST_UTIL_HPP_
