// Copyright 2026 The fedgraph Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#ifndef FEDGRAPH_TESTS_TEST_UTIL_HPP_
#define FEDGRAPH_TESTS_TEST_UTIL_HPP_

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "fedgraph.hpp"

namespace fedgraph::testing {

// Scratch directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("fedgraph_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

  std::string write(const std::string& name, const std::string& content) const {
    std::ofstream out(path_ / name, std::ios::binary);
    out << content;
    return file(name);
  }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::vector<RawInteraction> parse_text(const std::string& text,
                                              InputFormat format = InputFormat::kTabSeparated) {
  std::istringstream in(text);
  return parse_interactions(in, format, "<test>");
}

// Random dataset where every user has train items plus validation and test.
inline InteractionDataset random_dataset(std::mt19937_64& gen, std::size_t users, std::size_t items,
                                         std::size_t min_train, std::size_t max_train) {
  std::vector<UserSplit> splits;
  for (std::size_t u = 0; u < users; ++u) {
    std::vector<ItemIndex> perm(items);
    for (std::size_t i = 0; i < items; ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), gen);
    const std::size_t n = min_train + gen() % (max_train - min_train + 1);
    UserSplit s;
    s.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n));
    s.validation = perm[n];
    s.test = perm[n + 1];
    splits.push_back(std::move(s));
  }
  return InteractionDataset::from_splits(items, std::move(splits));
}

inline std::string ml100k_path() {
#ifdef FEDGRAPH_ML100K_PATH
  return FEDGRAPH_ML100K_PATH;
#else
  return std::string(FEDGRAPH_SOURCE_DIR) + "/data/ml-100k/u.data";
#endif
}

}  // namespace fedgraph::testing

#endif  // FEDGRAPH_TESTS_TEST_UTIL_HPP_
