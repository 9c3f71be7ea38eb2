// SPDX-License-Identifier: Apache-2.0
// Transport seam between the EV and EVSE daemons.
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "evsim/core_model.hpp"
#include "evsim/sim_net.hpp"

namespace evsim {

enum class DriverKind { Mock, Linked };

std::string_view driver_name(DriverKind k);

using PacketObserver =
    std::function<void(const std::string& link_id, PacketEvent e, double t_s, const Envelope& env)>;

// A driver carries daemon-to-daemon envelopes. MockDriver couples the daemons
// directly (zero latency, no packet accounting); LinkedDriver routes every
// envelope over a SimLink. Both expose the same surface so the runner is
// agnostic to which one is plugged in.
class SimDriver {
 public:
  virtual ~SimDriver() = default;

  virtual DriverKind kind() const = 0;

  /// Creates the cable for an EVSE. Idempotent.
  virtual void connect(const EvseConfig& evse) = 0;

  /// Starts transmission; returns network events to schedule.
  virtual std::vector<NetEvent> transmit(const std::string& link_id, const Envelope& env,
                                         SimTime now) = 0;

  /// Handles a due network event. Sets `delivered` when the envelope reached
  /// its destination; returns follow-up events to schedule.
  virtual std::vector<NetEvent> on_event(const std::string& link_id, const NetEvent& ev,
                                         SimTime now, bool& delivered) = 0;

  virtual void sever(const std::string& link_id, SimTime at) = 0;
  virtual void restore(const std::string& link_id) = 0;
  virtual bool has_link(const std::string& link_id) const = 0;

  virtual std::map<std::string, PacketLog> packet_logs() const = 0;

  void set_packet_observer(PacketObserver obs) { observer_ = std::move(obs); }

 protected:
  PacketObserver observer_;
};

std::unique_ptr<SimDriver> make_driver(DriverKind kind, std::uint64_t seed);

}  // namespace evsim
