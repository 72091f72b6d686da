#pragma once

#include "commopt/commsim/transcript.hpp"

#include <bit>
#include <stdexcept>
#include <string>

namespace commopt {

inline std::uint64_t ceil_log2(std::uint64_t v) { return v <= 1 ? 0 : std::bit_width(v - 1); }

// Routes logical sends into transcript entries. In coordinator mode
// server-to-server traffic goes through the coordinator and the relayed leg
// carries ceil(log2 s) addressing bits; in blackboard mode every logical send
// is written once.
class Network {
 public:
  Network(Mode mode, std::size_t servers, BitCostModel cost = {})
      : mode_(mode), servers_(servers), cost_(cost), transcript_(mode) {
    if (servers == 0) throw std::invalid_argument("network needs at least one server");
  }

  Mode mode() const { return mode_; }
  std::size_t servers() const { return servers_; }
  const BitCostModel& cost() const { return cost_; }
  std::uint64_t address_bits() const { return ceil_log2(servers_); }

  void send(PartyId from, PartyId to, const std::string& kind, const Payload& p) {
    check(from);
    check(to);
    if (from == to) throw std::invalid_argument("self-addressed message");
    const std::uint64_t g = next_group_++;
    if (mode_ == Mode::blackboard || from.is_coordinator() || to.is_coordinator()) {
      push(from, to, kind, p, 0, g);
      return;
    }
    push(from, PartyId::coordinator(), kind, p, 0, g);
    push(PartyId::coordinator(), to, kind, p, address_bits(), g);
  }

  void broadcast(PartyId from, const std::string& kind, const Payload& p) {
    check(from);
    const std::uint64_t g = next_group_++;
    if (mode_ == Mode::blackboard) {
      push(from, PartyId::everyone(), kind, p, 0, g);
      return;
    }
    if (from.is_server()) push(from, PartyId::coordinator(), kind, p, 0, g);
    for (std::size_t j = 1; j <= servers_; ++j) {
      if (from.is_server() && from.index == j) continue;
      push(PartyId::coordinator(), PartyId::server(j), kind, p, from.is_server() ? address_bits() : 0, g);
    }
  }

  void next_round() { ++rounds_; }

  const Transcript& transcript() const { return transcript_; }

  Transcript finish() {
    transcript_.set_rounds(rounds_);
    return transcript_;
  }

 private:
  void check(const PartyId& p) const {
    if (p.kind == PartyId::Kind::broadcast) throw std::invalid_argument("use broadcast() for fan-out");
    if (p.is_server() && (p.index < 1 || p.index > servers_)) throw std::out_of_range("server index out of range");
  }

  void push(PartyId from, PartyId to, const std::string& kind, const Payload& p, std::uint64_t addr,
            std::uint64_t group) {
    transcript_.append(Message{from, to, kind, p.type, p.bits, addr, group, rounds_});
  }

  Mode mode_;
  std::size_t servers_;
  BitCostModel cost_;
  Transcript transcript_;
  std::uint64_t next_group_ = 0;
  std::uint64_t rounds_ = 0;
};

}  // namespace commopt
