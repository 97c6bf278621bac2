#include "mixmemb/io.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>

#include "mixmemb/errors.hpp"

namespace mixmemb {

namespace {

std::ifstream open_for_read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string() + " for reading");
  return in;
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  return out;
}

bool blank_or_comment(const std::string& line) {
  for (char c : line) {
    if (c == '#') return true;
    if (!std::isspace(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

}  // namespace

AdjacencyMatrix load_edge_list(const std::filesystem::path& path,
                               bool zero_indexed) {
  std::ifstream in = open_for_read(path);
  std::set<std::pair<int, int>> edges;
  int max_id = -1;
  long line_no = 0;
  long dropped_loops = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank_or_comment(line)) continue;
    std::istringstream ss(line);
    long long a = 0, b = 0;
    std::string extra;
    if (!(ss >> a >> b)) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                           ": expected two integer node ids",
                       line_no);
    }
    if (!zero_indexed) {
      --a;
      --b;
    }
    if (a < 0 || b < 0) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                           ": node ids must be nonnegative",
                       line_no);
    }
    const int i = static_cast<int>(a);
    const int j = static_cast<int>(b);
    max_id = std::max(max_id, std::max(i, j));
    if (i == j) {
      ++dropped_loops;
      continue;
    }
    edges.emplace(std::min(i, j), std::max(i, j));
  }
  if (dropped_loops > 0) {
    std::cerr << "warning: " << path.string() << ": dropped " << dropped_loops
              << " self-loop(s)\n";
  }
  AdjacencyMatrix adj;
  adj.n = max_id + 1;
  adj.edges.assign(edges.begin(), edges.end());
  return adj;
}

void write_edge_list(const AdjacencyMatrix& a,
                     const std::filesystem::path& path) {
  std::ofstream out = open_for_write(path);
  std::vector<std::pair<int, int>> edges = a.edges;
  std::sort(edges.begin(), edges.end());
  for (const auto& [i, j] : edges) out << i << ' ' << j << '\n';
  for (int i : a.self_loops) out << i << ' ' << i << '\n';
  if (!out) throw Error("write failed: " + path.string());
}

Eigen::MatrixXd load_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in = open_for_read(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank_or_comment(line)) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t pos = 0;
        const double v = std::stod(cell, &pos);
        while (pos < cell.size() &&
               std::isspace(static_cast<unsigned char>(cell[pos]))) {
          ++pos;
        }
        if (pos != cell.size()) throw std::invalid_argument(cell);
        row.push_back(v);
      } catch (const std::exception&) {
        throw ParseError(path.string() + ":" + std::to_string(line_no) +
                             ": not a number: '" + cell + "'",
                         line_no);
      }
    }
    if (row.empty()) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                           ": empty row",
                       line_no);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                           ": ragged row (" + std::to_string(row.size()) +
                           " columns, expected " +
                           std::to_string(rows.front().size()) + ")",
                       line_no);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(path.string() + ": empty matrix", 0);
  Eigen::MatrixXd m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

void write_matrix_csv(const Eigen::MatrixXd& m,
                      const std::filesystem::path& path) {
  std::ofstream out = open_for_write(path);
  char buf[64];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
      out << buf;
      if (j + 1 < m.cols()) out << ',';
    }
    out << '\n';
  }
  if (!out) throw Error("write failed: " + path.string());
}

Eigen::MatrixXd load_ground_truth(const std::filesystem::path& path) {
  Eigen::MatrixXd m = load_matrix_csv(path);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (m.row(i).minCoeff() < 0) {
      throw ParseError(path.string() + ": negative entry in row " +
                           std::to_string(i + 1),
                       i + 1);
    }
    const double s = m.row(i).sum();
    if (!(s > 0)) {
      throw ParseError(path.string() + ": all-zero row " +
                           std::to_string(i + 1),
                       i + 1);
    }
    m.row(i) /= s;
  }
  return m;
}

}  // namespace mixmemb
