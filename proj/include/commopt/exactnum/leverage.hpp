#pragma once

#include "commopt/exactnum/echelon.hpp"
#include "commopt/exactnum/matrix.hpp"

#include <optional>
#include <stdexcept>
#include <vector>

namespace commopt {

// nullopt stands for an infinite score (row outside the row space of B).
using LeverageScore = std::optional<Rational>;

// Exact generalized leverage scores tau^B_i(A) = a_i (B^T B)^+ a_i^T.
// When a_i lies in the row space of B the normal system (B^T B) y = a_i^T is
// consistent and a_i . y does not depend on which solution is picked.
inline std::vector<LeverageScore> leverage_scores(const ExactMatrix& a, const ExactMatrix& b) {
  if (a.cols() != b.cols()) throw std::invalid_argument("leverage_scores: column mismatch");
  const std::size_t d = a.cols();
  ExactMatrix g = gram(b);
  std::vector<LeverageScore> out;
  out.reserve(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    ExactVector ai = a.row_vector(i);
    ExactEchelon e(d);
    bool escaped = false;
    for (std::size_t r = 0; r < d && !escaped; ++r) {
      if (e.insert(g.row_vector(r), ai[r]) == RowStatus::inconsistent) escaped = true;
    }
    if (escaped) {
      out.emplace_back(std::nullopt);
    } else {
      out.emplace_back(dot(ai, e.solve()));
    }
  }
  return out;
}

inline std::vector<LeverageScore> leverage_scores(const ExactMatrix& a) { return leverage_scores(a, a); }

}  // namespace commopt
