// SPDX-License-Identifier: Apache-2.0
// OCPP-J 2.0.1 framing, payload validation and the reference CSMS used as a
// fuzzing target.
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "evsim/sim_time.hpp"
#include "json.hpp"

namespace evsim {

using Json = nlohmann::json;

// The ten request actions exercised by the fuzz campaigns.
enum class OcppAction {
  Heartbeat,
  AuthorizeReq,
  BootNotification,
  ClearCacheReq,
  FirmwareStatusNotification,
  DataTransferReq,
  Get15118EVCertificateReq,
  NotifyCustomerInformation,
  StatusNotificationReq,
  PublishFirmwareStatusNotificationReq,
};

inline constexpr std::array<OcppAction, 10> kAllActions = {
    OcppAction::Heartbeat,
    OcppAction::AuthorizeReq,
    OcppAction::BootNotification,
    OcppAction::ClearCacheReq,
    OcppAction::FirmwareStatusNotification,
    OcppAction::DataTransferReq,
    OcppAction::Get15118EVCertificateReq,
    OcppAction::NotifyCustomerInformation,
    OcppAction::StatusNotificationReq,
    OcppAction::PublishFirmwareStatusNotificationReq,
};

/// Report name, e.g. "AuthorizeReq".
std::string_view action_name(OcppAction a);
/// Name carried in the CALL frame, e.g. "Authorize".
std::string_view wire_action(OcppAction a);
std::optional<OcppAction> action_from_name(std::string_view name);
std::optional<OcppAction> action_from_wire(std::string_view name);

enum class ActionGroup { StartUp, Operational, UserInteraction, FirmwareCustom };

inline constexpr std::array<ActionGroup, 4> kGroupOrder = {
    ActionGroup::StartUp, ActionGroup::Operational, ActionGroup::UserInteraction,
    ActionGroup::FirmwareCustom};

ActionGroup group_of(OcppAction a);
std::span<const OcppAction> group_members(ActionGroup g);

// ---------------------------------------------------------------------------
// Frames

struct Call {
  std::string message_id;
  OcppAction action{};
  Json payload = Json::object();
  bool operator==(const Call&) const = default;
};

struct CallResult {
  std::string message_id;
  Json payload = Json::object();
  bool operator==(const CallResult&) const = default;
};

struct CallError {
  std::string message_id;
  std::string error_code;
  std::string error_description;
  Json error_details = Json::object();
  bool operator==(const CallError&) const = default;
};

using OcppFrame = std::variant<Call, CallResult, CallError>;

inline constexpr int kCallType = 2;
inline constexpr int kCallResultType = 3;
inline constexpr int kCallErrorType = 4;
inline constexpr std::size_t kMaxMessageIdLength = 36;

/// Raised by decode_frame for anything that is not a well-formed OCPP-J array.
class MalformedJson : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by decode_frame for a CALL naming an action outside the supported set.
class UnknownAction : public std::runtime_error {
 public:
  UnknownAction(std::string message_id, std::string action);
  const std::string& message_id() const { return message_id_; }
  const std::string& action() const { return action_; }

 private:
  std::string message_id_;
  std::string action_;
};

std::string encode_frame(const OcppFrame& f);
OcppFrame decode_frame(std::string_view bytes);

const std::string& frame_message_id(const OcppFrame& f);

// ---------------------------------------------------------------------------
// Validation

struct ValidationResult {
  enum class Kind { Valid, FormatViolation, UnknownAction, MalformedJson };
  Kind kind = Kind::Valid;
  std::string path;
  std::string reason;

  bool valid() const { return kind == Kind::Valid; }
  static ValidationResult ok() { return {}; }
  static ValidationResult violation(std::string path, std::string reason) {
    return {Kind::FormatViolation, std::move(path), std::move(reason)};
  }
  bool operator==(const ValidationResult&) const = default;
};

const Json& action_schema(OcppAction a);

/// Checks required fields, primitive types, enums, string bounds and unknown
/// properties against the action's schema. Total: never throws.
ValidationResult validate_payload(OcppAction action, const Json& payload);

/// Frame-level check: MalformedJson, UnknownAction, or the payload verdict.
ValidationResult validate_message(std::string_view bytes);

// ---------------------------------------------------------------------------
// Reference CSMS

enum class BootPolicy { ShutdownOnBoot, AcceptBoot };

struct CsmsPolicy {
  bool require_boot_first = true;
  std::set<std::string> known_id_tokens;
  bool allow_clear_cache = false;
  BootPolicy boot_shutdown_policy = BootPolicy::ShutdownOnBoot;
  double cert_latency_s = 0.573;
  bool strict_parsing = true;
  // Fraction of pre-boot ClearCache requests answered with InternalError.
  double clear_cache_internal_error_rate = 0.08;

  bool operator==(const CsmsPolicy&) const = default;
};

struct RequestLogEntry {
  SimTime at;
  std::optional<OcppAction> action;
};

struct CsmsState {
  bool booted = false;
  bool alive = true;
  Json cache = Json::object();
  std::set<std::string> token_registry;
  std::vector<RequestLogEntry> request_log;
  double internal_error_accumulator = 0.0;
};

struct CsmsReply {
  std::optional<OcppFrame> response;
  double latency_s = 0.0;
  // Ground-truth outcome bucket (1..7) the CSMS intended. Recorded in
  // telemetry only, never put on the wire.
  int outcome_hint = 1;
};

// Per-action service latencies in seconds.
double action_latency(OcppAction a, const CsmsPolicy& policy);
inline constexpr double kMalformedLatency = 0.002;

/// Handles one decoded CALL.
CsmsReply csms_handle(CsmsState& st, const CsmsPolicy& policy, const Call& call, SimTime now);

/// Handles raw bytes: decodes, then either answers the parse failure or
/// dispatches to csms_handle.
CsmsReply csms_receive(CsmsState& st, const CsmsPolicy& policy, std::string_view bytes,
                       SimTime now);

CsmsState csms_restart(CsmsState st);

// Wire markers carried in CALLRESULT statusInfo.reasonCode.
inline constexpr std::string_view kNotImplementedMarker = "NotImplemented";
inline constexpr std::string_view kJsonParseMarker = "JsonParse";

/// ISO-8601 UTC rendering of virtual time against a fixed epoch.
std::string virtual_timestamp(double seconds);

}  // namespace evsim
