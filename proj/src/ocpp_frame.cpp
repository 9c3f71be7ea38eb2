// SPDX-License-Identifier: Apache-2.0
#include <array>
#include <cmath>
#include <cstdio>
#include <ctime>

#include "evsim/ocpp.hpp"

namespace evsim {

namespace {

struct ActionInfo {
  OcppAction action;
  std::string_view name;
  std::string_view wire;
  ActionGroup group;
};

constexpr std::array<ActionInfo, 10> kActions = {{
    {OcppAction::Heartbeat, "Heartbeat", "Heartbeat", ActionGroup::Operational},
    {OcppAction::AuthorizeReq, "AuthorizeReq", "Authorize", ActionGroup::UserInteraction},
    {OcppAction::BootNotification, "BootNotification", "BootNotification", ActionGroup::StartUp},
    {OcppAction::ClearCacheReq, "ClearCacheReq", "ClearCache", ActionGroup::StartUp},
    {OcppAction::FirmwareStatusNotification, "FirmwareStatusNotification",
     "FirmwareStatusNotification", ActionGroup::StartUp},
    {OcppAction::DataTransferReq, "DataTransferReq", "DataTransfer", ActionGroup::FirmwareCustom},
    {OcppAction::Get15118EVCertificateReq, "Get15118EVCertificateReq", "Get15118EVCertificate",
     ActionGroup::UserInteraction},
    {OcppAction::NotifyCustomerInformation, "NotifyCustomerInformation",
     "NotifyCustomerInformation", ActionGroup::UserInteraction},
    {OcppAction::StatusNotificationReq, "StatusNotificationReq", "StatusNotification",
     ActionGroup::Operational},
    {OcppAction::PublishFirmwareStatusNotificationReq, "PublishFirmwareStatusNotificationReq",
     "PublishFirmwareStatusNotification", ActionGroup::FirmwareCustom},
}};

// Group membership in the order a well-behaved station sends them.
constexpr std::array<OcppAction, 3> kStartUp = {OcppAction::BootNotification,
                                                OcppAction::FirmwareStatusNotification,
                                                OcppAction::ClearCacheReq};
constexpr std::array<OcppAction, 2> kOperational = {OcppAction::Heartbeat,
                                                    OcppAction::StatusNotificationReq};
constexpr std::array<OcppAction, 3> kUserInteraction = {OcppAction::AuthorizeReq,
                                                        OcppAction::Get15118EVCertificateReq,
                                                        OcppAction::NotifyCustomerInformation};
constexpr std::array<OcppAction, 2> kFirmwareCustom = {
    OcppAction::PublishFirmwareStatusNotificationReq, OcppAction::DataTransferReq};

const ActionInfo& info(OcppAction a) { return kActions[static_cast<std::size_t>(a)]; }

void check_message_id(const std::string& id) {
  if (id.empty() || id.size() > kMaxMessageIdLength) {
    throw MalformedJson("message id must be 1.." + std::to_string(kMaxMessageIdLength) + " chars");
  }
}

}  // namespace

std::string_view action_name(OcppAction a) { return info(a).name; }
std::string_view wire_action(OcppAction a) { return info(a).wire; }

std::optional<OcppAction> action_from_name(std::string_view name) {
  for (const ActionInfo& i : kActions) {
    if (i.name == name) return i.action;
  }
  return std::nullopt;
}

std::optional<OcppAction> action_from_wire(std::string_view name) {
  for (const ActionInfo& i : kActions) {
    if (i.wire == name) return i.action;
  }
  return std::nullopt;
}

ActionGroup group_of(OcppAction a) { return info(a).group; }

std::span<const OcppAction> group_members(ActionGroup g) {
  switch (g) {
    case ActionGroup::StartUp: return kStartUp;
    case ActionGroup::Operational: return kOperational;
    case ActionGroup::UserInteraction: return kUserInteraction;
    case ActionGroup::FirmwareCustom: return kFirmwareCustom;
  }
  return {};
}

UnknownAction::UnknownAction(std::string message_id, std::string action)
    : std::runtime_error("unknown OCPP action '" + action + "'"),
      message_id_(std::move(message_id)),
      action_(std::move(action)) {}

std::string encode_frame(const OcppFrame& f) {
  Json arr = std::visit(
      [](const auto& fr) -> Json {
        using T = std::decay_t<decltype(fr)>;
        if constexpr (std::is_same_v<T, Call>) {
          return Json::array({kCallType, fr.message_id, std::string(wire_action(fr.action)), fr.payload});
        } else if constexpr (std::is_same_v<T, CallResult>) {
          return Json::array({kCallResultType, fr.message_id, fr.payload});
        } else {
          return Json::array({kCallErrorType, fr.message_id, fr.error_code, fr.error_description,
                              fr.error_details});
        }
      },
      f);
  return arr.dump();
}

OcppFrame decode_frame(std::string_view bytes) {
  Json j;
  try {
    j = Json::parse(bytes.begin(), bytes.end());
  } catch (const Json::parse_error& e) {
    throw MalformedJson(std::string("not JSON: ") + e.what());
  }
  if (!j.is_array() || j.empty()) throw MalformedJson("frame is not a non-empty JSON array");
  if (!j[0].is_number_integer()) throw MalformedJson("message type id is not an integer");
  const auto type_id = j[0].get<long long>();
  auto id_at = [&](std::size_t i) {
    if (i >= j.size() || !j[i].is_string()) throw MalformedJson("message id is not a string");
    std::string id = j[i].get<std::string>();
    check_message_id(id);
    return id;
  };
  auto object_at = [&](std::size_t i, const char* what) {
    if (i >= j.size() || !j[i].is_object()) throw MalformedJson(std::string(what) + " is not an object");
    return j[i];
  };
  switch (type_id) {
    case kCallType: {
      if (j.size() != 4) throw MalformedJson("CALL must have 4 elements");
      std::string id = id_at(1);
      if (!j[2].is_string()) throw MalformedJson("action is not a string");
      const std::string action = j[2].get<std::string>();
      Json payload = object_at(3, "payload");
      const auto a = action_from_wire(action);
      if (!a) throw UnknownAction(std::move(id), action);
      return Call{std::move(id), *a, std::move(payload)};
    }
    case kCallResultType: {
      if (j.size() != 3) throw MalformedJson("CALLRESULT must have 3 elements");
      return CallResult{id_at(1), object_at(2, "payload")};
    }
    case kCallErrorType: {
      if (j.size() != 5) throw MalformedJson("CALLERROR must have 5 elements");
      std::string id = id_at(1);
      if (!j[2].is_string() || !j[3].is_string()) throw MalformedJson("error code/description not strings");
      return CallError{std::move(id), j[2].get<std::string>(), j[3].get<std::string>(),
                       object_at(4, "error details")};
    }
    default:
      throw MalformedJson("unsupported message type id " + std::to_string(type_id));
  }
}

const std::string& frame_message_id(const OcppFrame& f) {
  return std::visit([](const auto& fr) -> const std::string& { return fr.message_id; }, f);
}

std::string virtual_timestamp(double seconds) {
  // Virtual epoch 2025-01-01T00:00:00Z.
  constexpr std::time_t kEpoch = 1735689600;
  const double whole = std::floor(seconds);
  const std::time_t t = kEpoch + static_cast<std::time_t>(whole);
  const int millis = static_cast<int>(std::lround((seconds - whole) * 1000.0)) % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900,
                tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, millis);
  return buf;
}

}  // namespace evsim
