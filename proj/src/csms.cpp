// SPDX-License-Identifier: Apache-2.0
// Reference CSMS: a deterministic behaviour table per action.
#include "evsim/ocpp.hpp"

namespace evsim {

namespace {

CsmsReply result(const std::string& id, Json payload, double latency, int hint) {
  return CsmsReply{CallResult{id, std::move(payload)}, latency, hint};
}

CsmsReply error(const std::string& id, std::string code, std::string description, Json details,
                double latency, int hint) {
  return CsmsReply{CallError{id, std::move(code), std::move(description), std::move(details)},
                   latency, hint};
}

Json status_info(std::string_view reason) {
  return Json{{"reasonCode", std::string(reason)}};
}

CsmsReply authorize(CsmsState& st, const CsmsPolicy& policy, const Call& call, double latency) {
  const Json& tok = call.payload.at("idToken");
  const std::string token =
      tok.contains("idToken") && tok["idToken"].is_string() ? tok["idToken"].get<std::string>() : "";
  const std::set<std::string>& registry =
      policy.require_boot_first ? st.token_registry : policy.known_id_tokens;
  const bool known = (!policy.require_boot_first || st.booted) && registry.count(token) > 0;
  if (known) {
    st.cache[token] = "Accepted";
    return result(call.message_id, Json{{"idTokenInfo", {{"status", "Accepted"}}}}, latency, 1);
  }
  return result(call.message_id, Json{{"idTokenInfo", {{"status", "Unknown"}}}}, latency, 2);
}

CsmsReply clear_cache(CsmsState& st, const CsmsPolicy& policy, const Call& call, double latency) {
  if (policy.allow_clear_cache) {
    st.cache = Json::object();
    return result(call.message_id, Json{{"status", "Accepted"}}, latency, 1);
  }
  if (!st.booted) {
    // Error diffusion: exactly rate * n InternalErrors over n pre-boot requests.
    st.internal_error_accumulator += policy.clear_cache_internal_error_rate;
    if (st.internal_error_accumulator >= 1.0 - 1e-9) {
      st.internal_error_accumulator -= 1.0;
      return error(call.message_id, "InternalError", "cache backend unavailable", Json::object(),
                   latency, 7);
    }
  }
  return error(call.message_id, "SecurityError", "clearing the cache is not permitted",
               Json::object(), latency, 5);
}

}  // namespace

double action_latency(OcppAction a, const CsmsPolicy& policy) {
  switch (a) {
    case OcppAction::Heartbeat: return 0.010;
    case OcppAction::AuthorizeReq: return 0.011;
    case OcppAction::BootNotification: return 0.048;
    case OcppAction::ClearCacheReq: return 0.003;
    case OcppAction::FirmwareStatusNotification: return 0.026;
    case OcppAction::DataTransferReq: return 0.008;
    case OcppAction::Get15118EVCertificateReq: return policy.cert_latency_s;
    case OcppAction::NotifyCustomerInformation: return 0.008;
    case OcppAction::StatusNotificationReq: return 0.016;
    case OcppAction::PublishFirmwareStatusNotificationReq: return 0.010;
  }
  return 0.0;
}

CsmsReply csms_handle(CsmsState& st, const CsmsPolicy& policy, const Call& call, SimTime now) {
  if (!st.alive) return CsmsReply{std::nullopt, 0.0, 4};
  st.request_log.push_back(RequestLogEntry{now, call.action});
  const double latency = action_latency(call.action, policy);
  const std::string& id = call.message_id;

  if (policy.strict_parsing) {
    const ValidationResult v = validate_payload(call.action, call.payload);
    if (!v.valid()) {
      if (v.reason == "enum") {
        return error(id, "PropertyConstraintViolation", "value not defined for " + v.path,
                     Json{{"unknownEntity", v.path}}, latency, 6);
      }
      return error(id, "FormatViolation", v.reason + " at " + v.path, Json{{"path", v.path}},
                   latency, 5);
    }
  }

  switch (call.action) {
    case OcppAction::Heartbeat:
      return result(id, Json{{"currentTime", virtual_timestamp(now.seconds)}}, latency, 1);
    case OcppAction::AuthorizeReq:
      if (!call.payload.contains("idToken") || !call.payload["idToken"].is_object()) {
        return error(id, "FormationViolation", "idToken missing", Json::object(), latency, 5);
      }
      return authorize(st, policy, call, latency);
    case OcppAction::BootNotification: {
      CsmsReply r = result(id,
                           Json{{"currentTime", virtual_timestamp(now.seconds)},
                                {"interval", 300},
                                {"status", "Accepted"}},
                           latency, 1);
      if (policy.boot_shutdown_policy == BootPolicy::ShutdownOnBoot) {
        st.alive = false;
        r.outcome_hint = 4;
      } else {
        st.booted = true;
        st.token_registry = policy.known_id_tokens;
      }
      return r;
    }
    case OcppAction::ClearCacheReq:
      return clear_cache(st, policy, call, latency);
    case OcppAction::FirmwareStatusNotification:
    case OcppAction::NotifyCustomerInformation:
    case OcppAction::StatusNotificationReq:
      return result(id, Json::object(), latency, 1);
    case OcppAction::DataTransferReq:
      return result(id,
                    Json{{"status", "UnknownVendorId"},
                         {"statusInfo", status_info(kNotImplementedMarker)}},
                    latency, 2);
    case OcppAction::Get15118EVCertificateReq:
      return result(id,
                    Json{{"status", "Failed"},
                         {"exiResponse", ""},
                         {"statusInfo", status_info(kJsonParseMarker)}},
                    latency, 3);
    case OcppAction::PublishFirmwareStatusNotificationReq:
      if (call.payload.contains("location")) {
        return result(id, Json{{"statusInfo", status_info(kNotImplementedMarker)}}, latency, 2);
      }
      return error(id, "FormationViolation", "location list required", Json::object(), latency, 5);
  }
  return error(id, "InternalError", "unhandled action", Json::object(), latency, 7);
}

CsmsReply csms_receive(CsmsState& st, const CsmsPolicy& policy, std::string_view bytes,
                       SimTime now) {
  if (!st.alive) return CsmsReply{std::nullopt, 0.0, 4};
  OcppFrame f;
  try {
    f = decode_frame(bytes);
  } catch (const UnknownAction& e) {
    st.request_log.push_back(RequestLogEntry{now, std::nullopt});
    return error(e.message_id(), "NotImplemented", "unknown action " + e.action(), Json::object(),
                 kMalformedLatency, 7);
  } catch (const MalformedJson& e) {
    st.request_log.push_back(RequestLogEntry{now, std::nullopt});
    if (policy.strict_parsing) {
      return error("-1", "FormationViolation", e.what(), Json::object(), kMalformedLatency, 5);
    }
    return result("-1",
                  Json{{"status", "Accepted"},
                       {"error", std::string(kJsonParseMarker)},
                       {"statusInfo", status_info(kJsonParseMarker)}},
                  kMalformedLatency, 3);
  }
  if (const Call* c = std::get_if<Call>(&f)) return csms_handle(st, policy, *c, now);
  // A station answering a CALL the CSMS never made.
  st.request_log.push_back(RequestLogEntry{now, std::nullopt});
  return error(frame_message_id(f), "ProtocolError", "unexpected response frame", Json::object(),
               kMalformedLatency, 5);
}

CsmsState csms_restart(CsmsState st) {
  st.alive = true;
  st.booted = false;
  st.cache = Json::object();
  st.token_registry.clear();
  return st;
}

}  // namespace evsim
