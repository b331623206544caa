/* Copyright 2026 The Disent Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef DISENT_VOCAB_HPP_
#define DISENT_VOCAB_HPP_

#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

namespace disent {

// Token <-> index map. Index 0 is padding, index 1 is unknown; file format is
// one token per line where line number == index - 2.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;

  Vocabulary();

  int add(const std::string& token);      // idempotent, returns index
  int lookup(const std::string& token) const;  // kUnk when absent
  bool contains(const std::string& token) const;
  const std::string& token(int index) const;
  int size() const { return static_cast<int>(tokens_.size()); }

  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace disent

#endif  // DISENT_VOCAB_HPP_
