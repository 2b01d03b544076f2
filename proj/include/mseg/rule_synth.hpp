#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mseg/flow_ingest.hpp"
#include "mseg/security_groups.hpp"

namespace mseg {

/// Rule endpoint: a security group or a named network object. Groups order
/// before objects.
struct EntityRef {
  enum class Kind { group, object };

  Kind kind = Kind::group;
  std::size_t group_id = 0;
  std::string object;

  static EntityRef group(std::size_t id) { return {Kind::group, id, {}}; }
  static EntityRef named_object(std::string name) { return {Kind::object, 0, std::move(name)}; }

  bool is_group() const { return kind == Kind::group; }
  /// "group:<id>" or "object:<name>".
  std::string str() const;
  static EntityRef parse(std::string_view text);

  friend auto operator<=>(const EntityRef&, const EntityRef&) = default;
};

struct ServiceTuple {
  std::string protocol;
  std::uint16_t dst_port = 0;

  friend auto operator<=>(const ServiceTuple&, const ServiceTuple&) = default;
};

struct RuleKey {
  EntityRef src;
  EntityRef dst;
  ServiceTuple service;

  friend auto operator<=>(const RuleKey&, const RuleKey&) = default;
};

/// Observed (src, dst, service) tuples with the number of supporting flows.
using ServiceFlows = std::map<RuleKey, std::size_t>;

struct FirewallRule {
  EntityRef src;
  EntityRef dst;
  ServiceTuple service;
  std::size_t evidence_count = 0;

  RuleKey key() const { return {src, dst, service}; }
};

enum class Verdict { allow, deny };

/// Canonically sorted allow rules; anything unmatched is denied.
struct RuleSet {
  std::vector<FirewallRule> rules;
  static constexpr Verdict default_action = Verdict::deny;

  bool allows(const RuleKey& key) const;
};

/// Maps each flow's peers to group/object references and counts evidence per
/// distinct tuple. Throws DataError when a member endpoint has no group.
ServiceFlows extract_service_flows(std::span<const ClassifiedFlow> flows, const SecurityGroups& groups,
                                   const MemberScope& scope);

/// One allow rule per tuple, sorted by (src, dst, protocol, port).
RuleSet generalize(const ServiceFlows& tuples);

struct Redundancy {
  std::size_t narrower;  // rule index
  std::size_t broader;
};

struct HygieneReport {
  std::vector<std::size_t> any_to_any;
  std::vector<std::size_t> duplicate_keys;
  std::vector<std::size_t> empty_group_refs;
  std::vector<Redundancy> redundant;

  std::size_t flag_count() const {
    return any_to_any.size() + duplicate_keys.size() + empty_group_refs.size() + redundant.size();
  }
};

HygieneReport check_ruleset(const RuleSet& ruleset, const SecurityGroups& groups, const MemberScope& scope);
std::string format_hygiene_report(const HygieneReport& report, const RuleSet& ruleset);

Verdict match(const RuleSet& ruleset, const SecurityGroups& groups, const MemberScope& scope, const FlowRecord& flow);

inline constexpr const char* kRuleSetHeader = "src_ref,dst_ref,protocol,dst_port,action,evidence_count";

void write_ruleset(std::ostream& out, const RuleSet& ruleset);
RuleSet read_ruleset(std::istream& in);

}  // namespace mseg
