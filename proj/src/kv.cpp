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

#include "disent/kv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "disent/common.hpp"

namespace disent {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

Kv Kv::parse_text(const std::string& text) {
  Kv kv;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ParseError("config line " + std::to_string(line_no) +
                       ": expected 'key = value', got '" + t + "'");
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (key.empty())
      throw ParseError("config line " + std::to_string(line_no) +
                       ": empty key");
    kv.items_[key] = value;
  }
  return kv;
}

Kv Kv::parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_text(ss.str());
}

void Kv::set(const std::string& key, const std::string& value) {
  items_[key] = value;
}

void Kv::set_double(const std::string& key, double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  items_[key] = buf;
}

void Kv::set_int(const std::string& key, long long value) {
  items_[key] = std::to_string(value);
}

void Kv::set_bool(const std::string& key, bool value) {
  items_[key] = value ? "true" : "false";
}

bool Kv::has(const std::string& key) const { return items_.count(key) != 0; }

std::string Kv::get_string(const std::string& key,
                           const std::string& dflt) const {
  auto it = items_.find(key);
  return it == items_.end() ? dflt : it->second;
}

std::string Kv::require_string(const std::string& key) const {
  auto it = items_.find(key);
  if (it == items_.end())
    throw ParseError("missing required key '" + key + "'");
  return it->second;
}

double Kv::get_double(const std::string& key, double dflt) const {
  auto it = items_.find(key);
  if (it == items_.end()) return dflt;
  try {
    std::size_t pos = 0;
    double v = std::stod(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ParseError("key '" + key + "': expected a number, got '" +
                     it->second + "'");
  }
}

long long Kv::get_int(const std::string& key, long long dflt) const {
  auto it = items_.find(key);
  if (it == items_.end()) return dflt;
  try {
    std::size_t pos = 0;
    long long v = std::stoll(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ParseError("key '" + key + "': expected an integer, got '" +
                     it->second + "'");
  }
}

std::uint64_t Kv::get_u64(const std::string& key, std::uint64_t dflt) const {
  auto it = items_.find(key);
  if (it == items_.end()) return dflt;
  try {
    std::size_t pos = 0;
    unsigned long long v = std::stoull(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ParseError("key '" + key + "': expected an unsigned integer, got '" +
                     it->second + "'");
  }
}

bool Kv::get_bool(const std::string& key, bool dflt) const {
  auto it = items_.find(key);
  if (it == items_.end()) return dflt;
  const std::string& v = it->second;
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ParseError("key '" + key + "': expected a boolean, got '" + v + "'");
}

void Kv::merge(const Kv& other) {
  for (const auto& [k, v] : other.items_) items_[k] = v;
}

std::string Kv::dump() const {
  std::ostringstream out;
  for (const auto& [k, v] : items_) out << k << " = " << v << "\n";
  return out.str();
}

}  // namespace disent
