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

#include "disent/vocab.hpp"

#include <fstream>

#include "disent/common.hpp"

namespace disent {

Vocabulary::Vocabulary() {
  tokens_ = {"<pad>", "<unk>"};
  index_ = {{"<pad>", kPad}, {"<unk>", kUnk}};
}

int Vocabulary::add(const std::string& token) {
  auto it = index_.find(token);
  if (it != index_.end()) return it->second;
  int idx = static_cast<int>(tokens_.size());
  tokens_.push_back(token);
  index_.emplace(token, idx);
  return idx;
}

int Vocabulary::lookup(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(const std::string& token) const {
  return index_.count(token) != 0;
}

const std::string& Vocabulary::token(int index) const {
  if (index < 0 || index >= size())
    throw ContractError("vocabulary index " + std::to_string(index) +
                        " out of range (size " + std::to_string(size()) + ")");
  return tokens_[static_cast<std::size_t>(index)];
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write vocabulary file: " + path.string());
  for (std::size_t i = 2; i < tokens_.size(); ++i) out << tokens_[i] << "\n";
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read vocabulary file: " + path.string());
  Vocabulary v;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty())
      throw ParseError("vocabulary file " + path.string() + " line " +
                       std::to_string(line_no) + ": empty token");
    if (v.contains(line))
      throw ParseError("vocabulary file " + path.string() + " line " +
                       std::to_string(line_no) + ": duplicate token '" + line +
                       "'");
    v.add(line);
  }
  return v;
}

}  // namespace disent
