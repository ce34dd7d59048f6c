#pragma once

#include "common/bytes.hpp"

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace pqchain::test {

// Reads a whitespace-separated vector file; '#' lines are comments and the
// token "-" stands for an empty field.
inline std::vector<std::vector<std::string>> load_vectors(const std::string& path)
{
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open vector file: " + path);
  }
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') {
      continue;
    }
    std::istringstream ss(line);
    std::vector<std::string> row;
    std::string tok;
    while (ss >> tok) {
      row.push_back(tok == "-" ? "" : tok);
    }
    if (!row.empty()) {
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

inline std::vector<std::string> load_lines(const std::string& path)
{
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open file: " + path);
  }
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '#') {
      lines.push_back(line);
    }
  }
  return lines;
}

#ifndef PQCHAIN_VECTOR_DIR
#error "PQCHAIN_VECTOR_DIR must be defined by the build"
#endif

inline std::string vector_path(const std::string& name)
{
  return std::string(PQCHAIN_VECTOR_DIR) + "/" + name;
}

} // namespace pqchain::test
