#pragma once

// Plain-text mesh format:
//
//   polymesh 2 1
//   <N nodes>
//   x y tag          (N lines, tag 0 interior, 1 neumann, 2 dirichlet)
//   <M elements>
//   k v1 ... vk      (M lines, counter-clockwise node ids)
//
// '#' starts a comment that runs to the end of the line.

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "anisomesh/error.hpp"
#include "anisomesh/mesh.hpp"

namespace anisomesh {

namespace detail {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Splits the stream into non-empty lines with comments stripped, keeping line numbers.
class TokenLines {
 public:
  explicit TokenLines(std::istream& in) {
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
      ++number;
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      std::istringstream ss(line);
      std::vector<std::string> tokens;
      std::string tok;
      while (ss >> tok) tokens.push_back(tok);
      if (!tokens.empty()) lines_.push_back({number, std::move(tokens)});
    }
  }

  const std::vector<std::string>& next(const char* what) {
    if (pos_ >= lines_.size()) fail(last_line(), std::string("unexpected end of file, expected ") + what);
    current_ = lines_[pos_].number;
    return lines_[pos_++].tokens;
  }
  bool done() const { return pos_ >= lines_.size(); }
  int line() const { return current_; }

  [[noreturn]] static void fail(int line, const std::string& what) {
    throw Error(ErrorKind::ParseError, "line " + std::to_string(line) + ": " + what);
  }

  double number(const std::string& s) const {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      fail(current_, "invalid number '" + s + "'");
    }
  }
  long integer(const std::string& s) const {
    try {
      std::size_t used = 0;
      const long v = std::stol(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      fail(current_, "invalid integer '" + s + "'");
    }
  }

 private:
  struct Line {
    int number;
    std::vector<std::string> tokens;
  };
  std::vector<Line> lines_;
  std::size_t pos_ = 0;
  int current_ = 0;

  int last_line() const { return lines_.empty() ? 0 : lines_.back().number; }
};

}  // namespace detail

inline void write_mesh(const PolyMesh& mesh, std::ostream& out) {
  out << "polymesh 2 1\n" << mesh.num_nodes() << '\n';
  for (const auto& n : mesh.nodes()) {
    out << detail::format_double(n.coords.x()) << ' ' << detail::format_double(n.coords.y()) << ' '
        << static_cast<int>(n.tag) << '\n';
  }
  out << mesh.num_elements() << '\n';
  for (const auto& e : mesh.elements()) {
    out << e.loop.size();
    for (int v : e.loop) out << ' ' << v;
    out << '\n';
  }
}

inline PolyMesh read_mesh(std::istream& in) {
  detail::TokenLines lines(in);
  const auto& header = lines.next("header");
  if (header.size() != 3 || header[0] != "polymesh" || header[1] != "2") {
    detail::TokenLines::fail(lines.line(), "expected header 'polymesh 2 <version>'");
  }
  if (lines.integer(header[2]) != 1) detail::TokenLines::fail(lines.line(), "unsupported format version");
  const auto& count_line = lines.next("node count");
  if (count_line.size() != 1) detail::TokenLines::fail(lines.line(), "expected a single node count");
  const long n = lines.integer(count_line[0]);
  if (n < 3) detail::TokenLines::fail(lines.line(), "a mesh needs at least 3 nodes");
  std::vector<MeshNode> nodes(static_cast<std::size_t>(n));
  for (auto& node : nodes) {
    const auto& t = lines.next("node line");
    if (t.size() != 3) detail::TokenLines::fail(lines.line(), "node lines are 'x y tag'");
    node.coords = Vec2(lines.number(t[0]), lines.number(t[1]));
    const long tag = lines.integer(t[2]);
    if (tag < 0 || tag > 2) detail::TokenLines::fail(lines.line(), "tag must be 0, 1 or 2");
    node.tag = static_cast<BoundaryTag>(tag);
  }
  const auto& ecount = lines.next("element count");
  if (ecount.size() != 1) detail::TokenLines::fail(lines.line(), "expected a single element count");
  const long m = lines.integer(ecount[0]);
  if (m < 1) detail::TokenLines::fail(lines.line(), "a mesh needs at least one element");
  std::vector<std::vector<int>> loops(static_cast<std::size_t>(m));
  for (auto& loop : loops) {
    const auto& t = lines.next("element line");
    const long k = lines.integer(t[0]);
    if (k < 3 || static_cast<std::size_t>(k) + 1 != t.size()) {
      detail::TokenLines::fail(lines.line(), "element lines are 'k v1 ... vk' with k >= 3");
    }
    for (long i = 1; i <= k; ++i) {
      const long v = lines.integer(t[i]);
      if (v < 0 || v >= n) detail::TokenLines::fail(lines.line(), "node id out of range");
      loop.push_back(static_cast<int>(v));
    }
  }
  if (!lines.done()) detail::TokenLines::fail(lines.line() + 1, "trailing content after the last element");
  return PolyMesh(std::move(nodes), loops);
}

inline void save_mesh(const PolyMesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::ParseError, "cannot write " + path);
  write_mesh(mesh, out);
}

inline PolyMesh load_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ParseError, "cannot open " + path);
  return read_mesh(in);
}

}  // namespace anisomesh
