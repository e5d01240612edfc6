#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "crrix/corpus.hpp"

namespace crrix::testing {

inline std::string data_path(const std::string& name) { return std::string(CRRIX_TEST_DATA) + "/" + name; }

/// Fresh scratch directory under the build tree.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::path(CRRIX_TEST_TMP) / name;
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline Article article(std::string id, std::string date, std::string body, Label label = Label::Unlabeled,
                       std::string title = "") {
  Article a;
  a.id = std::move(id);
  a.date = *Date::parse(date);
  a.body = std::move(body);
  a.title = std::move(title);
  a.label = label;
  return a;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace crrix::testing
