// Copyright (c) 2026 mtlab contributors
// SPDX-License-Identifier: Apache-2.0

#include "mtlab/kvfile.hpp"

#include "mtlab/common.hpp"

#include <fstream>

namespace mtlab {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::map<std::string, std::string> read_kv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw DataError(path + ":" + std::to_string(line_no) +
                      ": expected 'key = value'");
    const std::string key = trim(t.substr(0, eq));
    const std::string val = trim(t.substr(eq + 1));
    if (key.empty())
      throw DataError(path + ":" + std::to_string(line_no) + ": empty key");
    if (!kv.emplace(key, val).second)
      throw DataError(path + ":" + std::to_string(line_no) +
                      ": duplicate key '" + key + "'");
  }
  return kv;
}

void write_kv_file(
    const std::string& path,
    const std::vector<std::pair<std::string, std::string>>& entries) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  for (const auto& [k, v] : entries) out << k << " = " << v << "\n";
}

}  // namespace mtlab
