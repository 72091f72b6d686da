#pragma once

#include "commopt/commsim/transcript.hpp"
#include "commopt/exactnum/scalar.hpp"

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace commopt {

// A configured size or depth cap was exceeded.
struct GuardError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Status { ok, feasible, infeasible, unbounded, presumed_infeasible, empty };

inline std::string to_string(Status s) {
  switch (s) {
    case Status::ok: return "OK";
    case Status::feasible: return "FEASIBLE";
    case Status::infeasible: return "INFEASIBLE";
    case Status::unbounded: return "UNBOUNDED";
    case Status::presumed_infeasible: return "PRESUMED_INFEASIBLE";
    default: return "EMPTY";
  }
}

struct ProtocolOutcome {
  Status status = Status::ok;
  std::optional<ExactVector> x_exact;
  std::vector<double> x;
  std::optional<Rational> objective_exact;
  double objective = 0.0;
  std::uint64_t iterations = 0;
  Transcript transcript;
  std::map<std::string, double> stats;

  bool has_solution() const { return x_exact.has_value() || !x.empty(); }

  void set_exact(ExactVector v) {
    x = to_doubles(v);
    x_exact = std::move(v);
  }

  friend bool operator==(const ProtocolOutcome&, const ProtocolOutcome&) = default;
};

}  // namespace commopt
