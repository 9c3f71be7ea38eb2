// SPDX-License-Identifier: Apache-2.0
// Fault-injectable point-to-point link with RTO retransmission, per-second
// packet accounting, and an in-process topic bus.
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "evsim/sim_time.hpp"

namespace evsim {

struct Envelope {
  std::string topic;
  std::string payload;
  SimTime sent_at;
  int attempt = 1;
  std::uint64_t id = 0;  // stable across retransmissions
};

struct PacketCounters {
  std::uint64_t sent = 0;
  std::uint64_t delivered = 0;
  std::uint64_t lost = 0;
  std::uint64_t retransmitted = 0;
  std::uint64_t errored = 0;

  PacketCounters& operator+=(const PacketCounters& o);
  bool operator==(const PacketCounters&) const = default;
};

enum class PacketEvent { Sent, Delivered, Lost, Retransmitted, Errored };

class PacketLog {
 public:
  void record(PacketEvent e, double t_s);
  /// Merges pre-aggregated counters into one bucket.
  void add(std::int64_t second, const PacketCounters& c) { buckets_[second] += c; }

  PacketCounters at(std::int64_t second) const;
  PacketCounters totals() const;
  const std::map<std::int64_t, PacketCounters>& buckets() const { return buckets_; }

  bool operator==(const PacketLog&) const = default;

 private:
  std::map<std::int64_t, PacketCounters> buckets_;
};

struct SimLink {
  std::string id;
  std::pair<std::string, std::string> endpoints;
  double latency_s = 0.0;
  double loss_prob = 0.0;
  bool severed = false;
  std::optional<double> severed_at;
  double rto_s = 0.2;
  int max_retransmits = 5;
  PacketLog log;
  // Observer invoked for every counter increment, after it is logged.
  std::function<void(PacketEvent, double t_s, const Envelope&)> tap;

  /// Loss probability in force at time t.
  double effective_loss(double t_s) const;
};

enum class NetEventKind { Arrival, Ack, Retransmit, DeliveryFailure };

struct NetEvent {
  NetEventKind kind{};
  double at = 0.0;
  Envelope env;
};

/// Transmits one attempt of `env`. Lost attempts schedule a retransmission
/// after rto_s; once max_retransmits retries are spent the packet is counted
/// errored and a DeliveryFailure is surfaced immediately.
std::vector<NetEvent> send(SimLink& link, const Envelope& env, Rng& rng, SimTime now);

/// Completes an Arrival. Returns true when delivered; an arrival on a link
/// severed meanwhile is dropped, counted lost, and retried like a send loss
/// (follow-up events appended to `follow_up`).
bool arrive(SimLink& link, const Envelope& env, SimTime now, std::vector<NetEvent>& follow_up);

void sever(SimLink& link, SimTime at);
void restore(SimLink& link);

struct PacketRow {
  std::int64_t t = 0;
  std::uint64_t sent = 0;
  std::uint64_t delivered = 0;
  std::uint64_t retransmitted = 0;
  std::uint64_t errored = 0;
  bool operator==(const PacketRow&) const = default;
};

/// One row per whole second in [from_s, to_s), zero-filled.
std::vector<PacketRow> packet_series(const PacketLog& log, std::int64_t from_s, std::int64_t to_s);
std::string packet_series_csv(const std::vector<PacketRow>& rows);

/// In-process publish/subscribe router with MQTT-style filters ("+" matches
/// one level, a trailing "#" the rest). Delivery is synchronous, at most once.
class TopicBus {
 public:
  using Handler = std::function<void(std::string_view topic, std::string_view payload)>;

  void subscribe(std::string filter, Handler handler);
  /// Returns the number of subscribers the message reached.
  std::size_t publish(std::string_view topic, std::string_view payload) const;

  static bool matches(std::string_view filter, std::string_view topic);

 private:
  std::vector<std::pair<std::string, Handler>> subs_;
};

}  // namespace evsim
