// SPDX-License-Identifier: Apache-2.0
#include "evsim/sim_net.hpp"

#include <cmath>
#include <sstream>

namespace evsim {

namespace {

void count(SimLink& link, PacketEvent e, double t, const Envelope& env) {
  link.log.record(e, t);
  if (link.tap) link.tap(e, t, env);
}

// A lost attempt is retried after the RTO until the budget is spent.
void on_loss(SimLink& link, const Envelope& env, double now, std::vector<NetEvent>& out) {
  count(link, PacketEvent::Lost, now, env);
  if (env.attempt <= link.max_retransmits) {
    Envelope next = env;
    ++next.attempt;
    // Scheduled from the first send so repeated RTO steps do not accumulate
    // rounding error.
    const double planned = env.sent_at.seconds + env.attempt * link.rto_s;
    const double at = planned >= now ? planned : now + link.rto_s;
    out.push_back(NetEvent{NetEventKind::Retransmit, at, std::move(next)});
  } else {
    count(link, PacketEvent::Errored, now, env);
    out.push_back(NetEvent{NetEventKind::DeliveryFailure, now, env});
  }
}

}  // namespace

PacketCounters& PacketCounters::operator+=(const PacketCounters& o) {
  sent += o.sent;
  delivered += o.delivered;
  lost += o.lost;
  retransmitted += o.retransmitted;
  errored += o.errored;
  return *this;
}

void PacketLog::record(PacketEvent e, double t_s) {
  PacketCounters& c = buckets_[static_cast<std::int64_t>(std::floor(t_s))];
  switch (e) {
    case PacketEvent::Sent: ++c.sent; break;
    case PacketEvent::Delivered: ++c.delivered; break;
    case PacketEvent::Lost: ++c.lost; break;
    case PacketEvent::Retransmitted: ++c.retransmitted; break;
    case PacketEvent::Errored: ++c.errored; break;
  }
}

PacketCounters PacketLog::at(std::int64_t second) const {
  const auto it = buckets_.find(second);
  return it == buckets_.end() ? PacketCounters{} : it->second;
}

PacketCounters PacketLog::totals() const {
  PacketCounters sum;
  for (const auto& [t, c] : buckets_) sum += c;
  return sum;
}

double SimLink::effective_loss(double t_s) const {
  if (severed && (!severed_at || t_s >= *severed_at)) return 1.0;
  return loss_prob;
}

std::vector<NetEvent> send(SimLink& link, const Envelope& env, Rng& rng, SimTime now) {
  std::vector<NetEvent> out;
  count(link, PacketEvent::Sent, now.seconds, env);
  if (env.attempt > 1) count(link, PacketEvent::Retransmitted, now.seconds, env);
  // Always draw so the stream does not depend on the link's state.
  const double u = uniform01(rng);
  if (u < link.effective_loss(now.seconds)) {
    on_loss(link, env, now.seconds, out);
    return out;
  }
  out.push_back(NetEvent{NetEventKind::Arrival, now.seconds + link.latency_s, env});
  out.push_back(NetEvent{NetEventKind::Ack, now.seconds + 2 * link.latency_s, env});
  return out;
}

bool arrive(SimLink& link, const Envelope& env, SimTime now, std::vector<NetEvent>& follow_up) {
  if (link.severed && link.effective_loss(now.seconds) >= 1.0) {
    on_loss(link, env, now.seconds, follow_up);
    return false;
  }
  count(link, PacketEvent::Delivered, now.seconds, env);
  return true;
}

void sever(SimLink& link, SimTime at) {
  if (link.severed) return;
  link.severed = true;
  link.severed_at = at.seconds;
}

void restore(SimLink& link) {
  link.severed = false;
  link.severed_at.reset();
}

std::vector<PacketRow> packet_series(const PacketLog& log, std::int64_t from_s, std::int64_t to_s) {
  std::vector<PacketRow> rows;
  for (std::int64_t t = from_s; t < to_s; ++t) {
    const PacketCounters c = log.at(t);
    rows.push_back(PacketRow{t, c.sent, c.delivered, c.retransmitted, c.errored});
  }
  return rows;
}

std::string packet_series_csv(const std::vector<PacketRow>& rows) {
  std::ostringstream out;
  out << "t,sent,delivered,retransmitted,errored\n";
  for (const PacketRow& r : rows) {
    out << r.t << ',' << r.sent << ',' << r.delivered << ',' << r.retransmitted << ',' << r.errored
        << '\n';
  }
  return out.str();
}

void TopicBus::subscribe(std::string filter, Handler handler) {
  subs_.emplace_back(std::move(filter), std::move(handler));
}

std::size_t TopicBus::publish(std::string_view topic, std::string_view payload) const {
  std::size_t n = 0;
  for (const auto& [filter, handler] : subs_) {
    if (!matches(filter, topic)) continue;
    handler(topic, payload);
    ++n;
  }
  return n;
}

bool TopicBus::matches(std::string_view filter, std::string_view topic) {
  std::size_t fi = 0;
  std::size_t ti = 0;
  while (true) {
    const std::size_t fe = filter.find('/', fi);
    const std::string_view flevel = filter.substr(fi, fe == std::string_view::npos ? fe : fe - fi);
    if (flevel == "#") return fe == std::string_view::npos;
    const std::size_t te = topic.find('/', ti);
    const std::string_view tlevel = topic.substr(ti, te == std::string_view::npos ? te : te - ti);
    if (flevel != "+" && flevel != tlevel) return false;
    if (te == std::string_view::npos && fe != std::string_view::npos &&
        filter.substr(fe + 1) == "#") {
      return true;  // "a/#" also matches "a"
    }
    if (fe == std::string_view::npos || te == std::string_view::npos) {
      return fe == std::string_view::npos && te == std::string_view::npos;
    }
    fi = fe + 1;
    ti = te + 1;
  }
}

}  // namespace evsim
