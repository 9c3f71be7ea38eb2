// SPDX-License-Identifier: Apache-2.0
#include "evsim/driver.hpp"

#include <set>

namespace evsim {

namespace {

class MockDriver final : public SimDriver {
 public:
  DriverKind kind() const override { return DriverKind::Mock; }

  void connect(const EvseConfig& evse) override { links_.insert(cable_link_id(evse.id)); }

  std::vector<NetEvent> transmit(const std::string& link_id, const Envelope& env,
                                 SimTime now) override {
    if (severed_.count(link_id)) return {};  // nothing carries the message
    return {NetEvent{NetEventKind::Arrival, now.seconds, env}};
  }

  std::vector<NetEvent> on_event(const std::string& link_id, const NetEvent& ev, SimTime,
                                 bool& delivered) override {
    delivered = ev.kind == NetEventKind::Arrival && !severed_.count(link_id);
    return {};
  }

  void sever(const std::string& link_id, SimTime) override { severed_.insert(link_id); }
  void restore(const std::string& link_id) override { severed_.erase(link_id); }
  bool has_link(const std::string& link_id) const override { return links_.count(link_id) > 0; }
  std::map<std::string, PacketLog> packet_logs() const override { return {}; }

 private:
  std::set<std::string> links_;
  std::set<std::string> severed_;
};

class LinkedDriver final : public SimDriver {
 public:
  explicit LinkedDriver(std::uint64_t seed) : rng_(derive_seed(seed, 3)) {}

  DriverKind kind() const override { return DriverKind::Linked; }

  void connect(const EvseConfig& evse) override {
    const std::string id = cable_link_id(evse.id);
    if (links_.count(id)) return;
    SimLink link;
    link.id = id;
    link.endpoints = {"ev@" + evse.id, "evse:" + evse.id};
    link.latency_s = evse.link_latency_s;
    link.loss_prob = evse.link_loss_prob;
    link.tap = [this, id](PacketEvent e, double t, const Envelope& env) {
      if (observer_) observer_(id, e, t, env);
    };
    links_.emplace(id, std::move(link));
  }

  std::vector<NetEvent> transmit(const std::string& link_id, const Envelope& env,
                                 SimTime now) override {
    return send(link(link_id), env, rng_, now);
  }

  std::vector<NetEvent> on_event(const std::string& link_id, const NetEvent& ev, SimTime now,
                                 bool& delivered) override {
    delivered = false;
    std::vector<NetEvent> follow_up;
    switch (ev.kind) {
      case NetEventKind::Arrival:
        delivered = arrive(link(link_id), ev.env, now, follow_up);
        break;
      case NetEventKind::Retransmit:
        follow_up = send(link(link_id), ev.env, rng_, now);
        break;
      case NetEventKind::Ack:
      case NetEventKind::DeliveryFailure:
        break;
    }
    return follow_up;
  }

  void sever(const std::string& link_id, SimTime at) override { evsim::sever(link(link_id), at); }
  void restore(const std::string& link_id) override { evsim::restore(link(link_id)); }
  bool has_link(const std::string& link_id) const override { return links_.count(link_id) > 0; }

  std::map<std::string, PacketLog> packet_logs() const override {
    std::map<std::string, PacketLog> out;
    for (const auto& [id, l] : links_) out.emplace(id, l.log);
    return out;
  }

 private:
  SimLink& link(const std::string& id) {
    const auto it = links_.find(id);
    if (it == links_.end()) throw std::out_of_range("no link '" + id + "'");
    return it->second;
  }

  Rng rng_;
  std::map<std::string, SimLink> links_;
};

}  // namespace

std::string_view driver_name(DriverKind k) { return k == DriverKind::Mock ? "mock" : "linked"; }

std::unique_ptr<SimDriver> make_driver(DriverKind kind, std::uint64_t seed) {
  if (kind == DriverKind::Mock) return std::make_unique<MockDriver>();
  return std::make_unique<LinkedDriver>(seed);
}

}  // namespace evsim
