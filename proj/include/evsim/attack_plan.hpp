// SPDX-License-Identifier: Apache-2.0
// Declarative attack descriptions as they appear in scenario files.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "evsim/ocpp.hpp"

namespace evsim {

enum class AttackKind { BrokenWireL1, BrokenWireL3, Fuzzification };

std::string_view attack_kind_name(AttackKind k);  // "broken-wire-l1", ...
std::optional<AttackKind> attack_kind_from_name(std::string_view name);

struct AttackPlan {
  AttackKind kind{};
  std::string target_id;
  double start_s = 0.0;
  std::optional<double> duration_s;
  Json params = Json::object();

  bool operator==(const AttackPlan&) const = default;
};

// Every EVSE in the scenario (broken-wire L3 only).
inline constexpr std::string_view kAllEvses = "*";
inline constexpr std::string_view kCsmsId = "csms";

struct PowerDisruptionParams {
  double reduction_factor = 0.45;
  double jitter = 0.0;
};

enum class MutationMode { None, DropRequired, WrongType, EnumOutOfRange, UnknownField, TruncateJson };

std::string_view mutation_name(MutationMode m);
std::optional<MutationMode> mutation_from_name(std::string_view name);

enum class FuzzStrategy { Random, StateBased };

struct FuzzPlan {
  FuzzStrategy strategy = FuzzStrategy::Random;
  int repetitions = 100;
  std::vector<OcppAction> actions{kAllActions.begin(), kAllActions.end()};
  std::vector<MutationMode> mutation_modes{MutationMode::None};
  std::vector<int> injection_points;
  std::uint64_t seed = 0;
};

// Typed views over AttackPlan::params. Both throw std::invalid_argument with
// a "params.<field>" prefix when a field is malformed.
PowerDisruptionParams power_params(const AttackPlan& plan);
FuzzPlan fuzz_plan(const AttackPlan& plan, std::uint64_t default_seed);

}  // namespace evsim
