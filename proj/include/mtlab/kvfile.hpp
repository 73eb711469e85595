// Copyright (c) 2026 mtlab contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace mtlab {

// Flat `key = value` text files (configs, manifests). '#' starts a comment
// line; keys may not repeat.
std::map<std::string, std::string> read_kv_file(const std::string& path);
void write_kv_file(const std::string& path,
                   const std::vector<std::pair<std::string, std::string>>& entries);

std::string trim(const std::string& s);

}  // namespace mtlab
