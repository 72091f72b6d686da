#pragma once

#include "commopt/exactnum/matrix.hpp"
#include "commopt/exactnum/scalar.hpp"

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace commopt {

// Rows of A and b spread over s servers. partition[r] is the 1-based server
// holding row r.
struct Instance {
  std::string kind;
  std::size_t n = 0;
  std::size_t d = 0;
  std::size_t L = 0;
  std::size_t s = 1;
  ExactMatrix A;
  ExactVector b;
  std::optional<ExactVector> c;
  std::vector<std::size_t> partition;

  friend bool operator==(const Instance&, const Instance&) = default;

  void validate() const {
    if (A.rows() != n || A.cols() != d) throw std::invalid_argument("instance: A shape does not match n, d");
    if (b.size() != n) throw std::invalid_argument("instance: b length does not match n");
    if (c && c->size() != d) throw std::invalid_argument("instance: c length does not match d");
    if (s == 0) throw std::invalid_argument("instance: s must be positive");
    if (partition.size() != n) throw std::invalid_argument("instance: partition length does not match n");
    for (auto p : partition)
      if (p < 1 || p > s) throw std::invalid_argument("instance: partition references a server outside 1..s");
  }

  std::vector<std::size_t> rows_of(std::size_t server) const {
    std::vector<std::size_t> out;
    for (std::size_t r = 0; r < n; ++r)
      if (partition[r] == server) out.push_back(r);
    return out;
  }
};

// Largest magnitude bit length over the entries of A, b and c (0 when all zero).
inline std::size_t entry_bits(const Instance& inst) {
  std::size_t bits = 0;
  auto visit = [&](const Rational& q) {
    bits = std::max({bits, bit_length(BigInt(q.get_num())), bit_length(BigInt(q.get_den()))});
  };
  for (const auto& q : inst.A.data()) visit(q);
  for (const auto& q : inst.b) visit(q);
  if (inst.c)
    for (const auto& q : *inst.c) visit(q);
  return bits;
}

// What a single server can see: its own rows, with their global indices.
struct ServerView {
  std::size_t index = 0;
  std::vector<std::size_t> rows;
  ExactMatrix A;
  ExactVector b;

  std::size_t size() const { return rows.size(); }
};

inline std::vector<ServerView> split_servers(const Instance& inst) {
  inst.validate();
  std::vector<ServerView> views(inst.s);
  for (std::size_t i = 0; i < inst.s; ++i) {
    views[i].index = i + 1;
    views[i].rows = inst.rows_of(i + 1);
    views[i].A = inst.A.select_rows(views[i].rows);
    if (views[i].rows.empty()) views[i].A = ExactMatrix(0, inst.d);
    for (auto r : views[i].rows) views[i].b.push_back(inst.b[r]);
  }
  return views;
}

inline Instance make_instance(std::string kind, ExactMatrix a, ExactVector b, std::vector<std::size_t> partition,
                              std::optional<ExactVector> c = std::nullopt) {
  Instance inst;
  inst.kind = std::move(kind);
  inst.n = a.rows();
  inst.d = a.cols();
  inst.A = std::move(a);
  inst.b = std::move(b);
  inst.c = std::move(c);
  inst.partition = std::move(partition);
  inst.s = inst.partition.empty() ? 1 : *std::max_element(inst.partition.begin(), inst.partition.end());
  inst.L = entry_bits(inst);
  inst.validate();
  return inst;
}

}  // namespace commopt
