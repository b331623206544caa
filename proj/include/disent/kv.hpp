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

// Plain `key = value` configuration text: one pair per line, '#' comments.
// Used by config files, the C API, and run manifests.

#ifndef DISENT_KV_HPP_
#define DISENT_KV_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace disent {

class Kv {
 public:
  Kv() = default;

  static Kv parse_text(const std::string& text);
  static Kv parse_file(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value);
  void set_double(const std::string& key, double value);
  void set_int(const std::string& key, long long value);
  void set_bool(const std::string& key, bool value);
  bool has(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& dflt) const;
  std::string require_string(const std::string& key) const;
  double get_double(const std::string& key, double dflt) const;
  long long get_int(const std::string& key, long long dflt) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t dflt) const;
  bool get_bool(const std::string& key, bool dflt) const;

  // Overlay other on top of *this (other wins).
  void merge(const Kv& other);

  const std::map<std::string, std::string>& items() const { return items_; }
  std::string dump() const;  // canonical sorted "key = value" lines

 private:
  std::map<std::string, std::string> items_;
};

}  // namespace disent

#endif  // DISENT_KV_HPP_
