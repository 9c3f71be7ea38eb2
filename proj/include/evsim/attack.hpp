// SPDX-License-Identifier: Apache-2.0
// Attack orchestration: scheduling, broken-wire execution, OCPP fuzz
// campaigns, and outcome classification.
#pragma once

#include <array>
#include <compare>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "evsim/attack_plan.hpp"
#include "evsim/core_model.hpp"
#include "evsim/ocpp.hpp"
#include "evsim/sim_net.hpp"
#include "evsim/telemetry.hpp"

namespace evsim {

class UnresolvedTarget : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AttackEvent {
  double at = 0.0;
  std::size_t plan_index = 0;
  bool is_start = true;
  bool operator==(const AttackEvent&) const = default;
};

/// Start events (and end events for plans with a duration), ordered by time.
std::vector<AttackEvent> schedule(std::span<const AttackPlan> plans, const Scenario& scenario);

/// Severs the cable link and returns the attack-start record.
TelemetryRecord exec_broken_wire_l1(SimLink& link, SimTime at);
TelemetryRecord broken_wire_l1_record(std::string_view link_id, double at_s);

// Scales power delivered by the targeted EVSEs inside [start_s, end_s).
class PowerModifier {
 public:
  PowerModifier(std::set<std::string> evse_ids, PowerDisruptionParams params, double start_s,
                double end_s);

  bool active(double t_s) const { return t_s >= start_s_ && t_s < end_s_; }
  bool targets(std::string_view evse_id) const;
  /// Multiplier for one sample: 1 - reduction_factor + U(-jitter, jitter).
  double draw_factor(Rng& rng) const;
  /// Multiplier for `evse_id` at t; exactly 1.0 when inactive or untargeted
  /// (no random draw is consumed then).
  double factor(std::string_view evse_id, double t_s, Rng& rng) const;

  const std::set<std::string>& evse_ids() const { return evse_ids_; }
  const PowerDisruptionParams& params() const { return params_; }
  double start_s() const { return start_s_; }
  double end_s() const { return end_s_; }

 private:
  std::set<std::string> evse_ids_;
  PowerDisruptionParams params_;
  double start_s_;
  double end_s_;
};

PowerModifier exec_broken_wire_l3(std::span<const std::string> evse_ids, PowerDisruptionParams p,
                                  double start_s, double end_s);

// ---------------------------------------------------------------------------
// Fuzzing

struct OutcomeCode {
  int wire_type = 3;
  int bucket = 1;

  static OutcomeCode from_bucket(int bucket);
  std::string label() const;  // "(3,1)"
  auto operator<=>(const OutcomeCode&) const = default;
};

struct FuzzRecord {
  int seq = 0;
  OcppAction action{};
  MutationMode mutation = MutationMode::None;
  std::string sent;
  OutcomeCode outcome;
  double latency_s = 0.0;
  bool server_alive_after = true;
  int hint_bucket = 1;  // CSMS ground truth, telemetry only
  double t_s = 0.0;     // campaign-internal virtual time of the send

  bool operator==(const FuzzRecord&) const = default;
};

Json fuzz_record_to_json(const FuzzRecord& r);
FuzzRecord fuzz_record_from_json(const Json& j);

struct GeneratedMessage {
  std::string bytes;
  // Mode actually applied; falls back to UnknownField when the action's
  // schema has nothing the requested mutation could target.
  MutationMode applied = MutationMode::None;
};

GeneratedMessage gen_message(OcppAction action, MutationMode mode, Rng& rng);

/// Pool the generator draws idTokens from.
std::span<const std::string> fuzz_token_pool();

std::vector<FuzzRecord> run_random_fuzz(const FuzzPlan& plan, CsmsState& csms,
                                        const CsmsPolicy& policy, double start_s = 0.0);
std::vector<FuzzRecord> run_state_fuzz(const FuzzPlan& plan, CsmsState& csms,
                                       const CsmsPolicy& policy, double start_s = 0.0);
std::vector<FuzzRecord> run_fuzz(const FuzzPlan& plan, CsmsState& csms, const CsmsPolicy& policy,
                                 double start_s = 0.0);

/// The CSMS answered with a CALL; no outcome applies.
class Unclassifiable : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

OutcomeCode classify(std::string_view sent, const std::optional<OcppFrame>& response,
                     double latency_s, bool server_alive_after);

struct FuzzSummaryRow {
  OcppAction action{};
  std::array<double, 7> pct{};  // buckets 1..7
  double mean_latency_s = 0.0;
  std::size_t count = 0;
};

std::vector<FuzzSummaryRow> summarize_fuzz(std::span<const FuzzRecord> records);
std::string fuzz_summary_csv(std::span<const FuzzSummaryRow> rows);

}  // namespace evsim
