#pragma once

#include "commopt/exactnum/bitcost.hpp"
#include "commopt/exactnum/matrix.hpp"

#include <cstdint>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace commopt {

enum class Mode { coordinator, blackboard };

inline std::string to_string(Mode m) { return m == Mode::coordinator ? "coordinator" : "blackboard"; }

inline Mode parse_mode(const std::string& s) {
  if (s == "coordinator") return Mode::coordinator;
  if (s == "blackboard") return Mode::blackboard;
  throw std::invalid_argument("unknown mode: " + s);
}

struct PartyId {
  enum class Kind { coordinator, server, broadcast };
  Kind kind = Kind::coordinator;
  std::size_t index = 0;  // 1..s for servers

  static PartyId coordinator() { return {Kind::coordinator, 0}; }
  static PartyId server(std::size_t i) {
    if (i == 0) throw std::invalid_argument("server indices start at 1");
    return {Kind::server, i};
  }
  static PartyId everyone() { return {Kind::broadcast, 0}; }

  bool is_server() const { return kind == Kind::server; }
  bool is_coordinator() const { return kind == Kind::coordinator; }

  std::string str() const {
    switch (kind) {
      case Kind::coordinator: return "C";
      case Kind::server: return "P" + std::to_string(index);
      default: return "BROADCAST";
    }
  }
  friend bool operator==(const PartyId&, const PartyId&) = default;
};

enum class PayloadType { scalars, integers, reals, field, matrix, verdict, count };

inline std::string to_string(PayloadType t) {
  switch (t) {
    case PayloadType::scalars: return "scalars";
    case PayloadType::integers: return "integers";
    case PayloadType::reals: return "reals";
    case PayloadType::field: return "field";
    case PayloadType::matrix: return "matrix";
    case PayloadType::verdict: return "verdict";
    default: return "count";
  }
}

// Type tag plus encoded size. The simulator only needs the size; the values
// themselves are handed over by the protocol code right after the send call.
struct Payload {
  PayloadType type = PayloadType::verdict;
  std::uint64_t bits = 1;

  static Payload scalars(const ExactVector& v, const BitCostModel& m = {}) {
    return {PayloadType::scalars, m.vector(v)};
  }
  static Payload scalar(const Rational& q, const BitCostModel& m = {}) {
    return {PayloadType::scalars, m.rational(q)};
  }
  static Payload integers(const std::vector<BigInt>& v, const BitCostModel& m = {}) {
    return {PayloadType::integers, m.integer_vector(v)};
  }
  static Payload reals(const std::vector<double>& v, const BitCostModel& m = {}) {
    return {PayloadType::reals, m.real_vector(v)};
  }
  static Payload real(double v, const BitCostModel& m = {}) { return {PayloadType::reals, m.real(v)}; }
  static Payload field(const std::vector<std::uint64_t>& v, const BitCostModel& m = {}) {
    std::uint64_t bits = m.header_bits_per_length_field;
    for (auto x : v) bits += m.unsigned_integer(x);
    return {PayloadType::field, bits};
  }
  static Payload matrix(const ExactMatrix& a, const BitCostModel& m = {}) {
    std::uint64_t bits = 2 * m.header_bits_per_length_field;
    for (const auto& q : a.data()) bits += m.rational(q);
    return {PayloadType::matrix, bits};
  }
  static Payload real_matrix(const Matrix<double>& a, const BitCostModel& m = {}) {
    std::uint64_t bits = 2 * m.header_bits_per_length_field;
    for (double v : a.data()) bits += m.real(v);
    return {PayloadType::matrix, bits};
  }
  static Payload verdict(const BitCostModel& m = {}) { return {PayloadType::verdict, m.verdict()}; }
  static Payload count(std::uint64_t k, const BitCostModel& m = {}) {
    return {PayloadType::count, m.unsigned_integer(k)};
  }
  static Payload count(const BigInt& k, const BitCostModel& m = {}) {
    return {PayloadType::count, m.integer(k)};
  }
};

struct Message {
  PartyId from;
  PartyId to;
  std::string kind;  // protocol-level label, e.g. "equation"
  PayloadType type = PayloadType::verdict;
  std::uint64_t payload_bits = 0;
  std::uint64_t address_bits = 0;
  std::uint64_t group = 0;  // messages expanded from one logical send share a group
  std::uint64_t round = 0;

  std::uint64_t bits() const { return payload_bits + address_bits; }
  friend bool operator==(const Message&, const Message&) = default;
};

// Allowed labels and their payload types for one protocol.
using MessageSchema = std::map<std::string, PayloadType>;

class Transcript {
 public:
  Transcript() = default;
  explicit Transcript(Mode mode) : mode_(mode) {}

  Mode mode() const { return mode_; }
  const std::vector<Message>& messages() const { return messages_; }
  std::uint64_t total_bits() const { return total_bits_; }
  std::uint64_t rounds() const { return rounds_; }

  void append(Message m) {
    total_bits_ += m.bits();
    messages_.push_back(std::move(m));
  }
  void set_rounds(std::uint64_t r) { rounds_ = r; }

  std::uint64_t bits_with_kind(const std::string& kind) const {
    std::uint64_t acc = 0;
    for (const auto& m : messages_)
      if (m.kind == kind) acc += m.bits();
    return acc;
  }

  std::size_t count_kind(const std::string& kind) const {
    std::set<std::uint64_t> groups;
    for (const auto& m : messages_)
      if (m.kind == kind) groups.insert(m.group);
    return groups.size();
  }

  // Cost if every relayed fan-out were one broadcast: each logical send is
  // charged its payload once and no addressing.
  std::uint64_t collapsed_relay_bits() const {
    std::map<std::uint64_t, std::uint64_t> per_group;
    for (const auto& m : messages_) {
      auto& slot = per_group[m.group];
      if (m.payload_bits > slot) slot = m.payload_bits;
    }
    std::uint64_t acc = 0;
    for (const auto& [g, b] : per_group) acc += b;
    return acc;
  }

  // Empty string when every message matches the schema and the totals add up.
  std::string validate(const MessageSchema& schema) const {
    std::uint64_t sum = 0;
    for (std::size_t i = 0; i < messages_.size(); ++i) {
      const auto& m = messages_[i];
      auto it = schema.find(m.kind);
      if (it == schema.end()) return "message " + std::to_string(i) + ": unknown kind '" + m.kind + "'";
      if (it->second != m.type) return "message " + std::to_string(i) + ": payload type mismatch for '" + m.kind + "'";
      if (m.to.kind == PartyId::Kind::broadcast && mode_ != Mode::blackboard)
        return "message " + std::to_string(i) + ": broadcast outside blackboard mode";
      if (m.from == m.to) return "message " + std::to_string(i) + ": self-addressed";
      sum += m.bits();
    }
    if (sum != total_bits_) return "total_bits does not match message sum";
    return {};
  }

  std::string to_csv() const {
    std::ostringstream out;
    out << "index,from,to,kind,bits\n";
    for (std::size_t i = 0; i < messages_.size(); ++i) {
      const auto& m = messages_[i];
      out << i << ',' << m.from.str() << ',' << m.to.str() << ',' << m.kind << ',' << m.bits() << '\n';
    }
    out << "total,,,," << total_bits_ << '\n';
    return out.str();
  }

  friend bool operator==(const Transcript& a, const Transcript& b) {
    return a.mode_ == b.mode_ && a.total_bits_ == b.total_bits_ && a.rounds_ == b.rounds_ &&
           a.messages_ == b.messages_;
  }

 private:
  Mode mode_ = Mode::coordinator;
  std::vector<Message> messages_;
  std::uint64_t total_bits_ = 0;
  std::uint64_t rounds_ = 0;
};

}  // namespace commopt
