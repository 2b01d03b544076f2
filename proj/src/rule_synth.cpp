#include "mseg/rule_synth.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

#include "mseg/error.hpp"
#include "mseg/util.hpp"

namespace mseg {

namespace {

std::optional<EntityRef> to_ref(const PeerClass& peer, Ipv4 addr, const SecurityGroups& groups) {
  switch (peer.kind) {
    case PeerClass::Kind::member: {
      auto g = groups.group_of(addr);
      if (!g) return std::nullopt;
      return EntityRef::group(*g);
    }
    case PeerClass::Kind::network_object:
      return EntityRef::named_object(peer.object);
    case PeerClass::Kind::unknown:
      break;
  }
  return std::nullopt;
}

/// Address blocks an object reference stands for.
std::vector<Cidr> ref_blocks(const EntityRef& ref, const MemberScope& scope) {
  return ref.is_group() ? std::vector<Cidr>{} : scope.object_blocks(ref.object);
}

bool covers(const std::vector<Cidr>& outer, const std::vector<Cidr>& inner) {
  return std::all_of(inner.begin(), inner.end(), [&](const Cidr& in) {
    return std::any_of(outer.begin(), outer.end(), [&](const Cidr& out) { return out.contains(in); });
  });
}

enum class Containment { none, equal, strict };

/// Whether the address set of `outer` contains that of `inner`. Groups are
/// disjoint sets, so two group refs relate only by equality; a group and an
/// object never relate because objects only ever match non-members.
Containment contains(const EntityRef& outer, const EntityRef& inner, const MemberScope& scope) {
  if (outer == inner) return Containment::equal;
  if (outer.is_group() || inner.is_group()) return Containment::none;
  auto ob = ref_blocks(outer, scope);
  auto ib = ref_blocks(inner, scope);
  if (!covers(ob, ib)) return Containment::none;
  return covers(ib, ob) ? Containment::equal : Containment::strict;
}

bool universal(const EntityRef& ref, const MemberScope& scope) {
  if (ref.is_group()) return false;
  auto blocks = ref_blocks(ref, scope);
  return std::any_of(blocks.begin(), blocks.end(), [](const Cidr& c) { return c.is_universal(); });
}

}  // namespace

std::string EntityRef::str() const { return is_group() ? "group:" + std::to_string(group_id) : "object:" + object; }

EntityRef EntityRef::parse(std::string_view text) {
  if (text.starts_with("group:")) {
    auto id_text = text.substr(6);
    std::size_t id = 0;
    auto [p, ec] = std::from_chars(id_text.data(), id_text.data() + id_text.size(), id);
    if (ec == std::errc{} && p == id_text.data() + id_text.size() && !id_text.empty()) return group(id);
  } else if (text.starts_with("object:") && text.size() > 7) {
    return named_object(std::string(text.substr(7)));
  }
  throw DataError("rule_synth", "bad entity reference '" + std::string(text) + "'");
}

bool RuleSet::allows(const RuleKey& key) const {
  auto it = std::lower_bound(rules.begin(), rules.end(), key,
                             [](const FirewallRule& r, const RuleKey& k) { return r.key() < k; });
  return it != rules.end() && it->key() == key;
}

ServiceFlows extract_service_flows(std::span<const ClassifiedFlow> flows, const SecurityGroups& groups,
                                   const MemberScope& scope) {
  ServiceFlows out;
  for (const auto& f : flows) {
    for (const auto* side : {&f.src_class, &f.dst_class}) {
      if (side->is_member() && !groups.group_of(side->address)) {
        throw DataError("rule_synth", "endpoint " + side->address.str() +
                                          " has no security group; run grouping on this log first");
      }
      if (side->is_object() && !scope.has_object(side->object)) {
        throw DataError("rule_synth", "network object '" + side->object + "' is not in the scope table");
      }
    }
    auto src = to_ref(f.src_class, f.record.src, groups);
    auto dst = to_ref(f.dst_class, f.record.dst, groups);
    if (!src || !dst) continue;  // unknown peers never produce rules
    ++out[{*src, *dst, {f.record.protocol, f.record.dst_port}}];
  }
  return out;
}

RuleSet generalize(const ServiceFlows& tuples) {
  RuleSet rs;
  rs.rules.reserve(tuples.size());
  for (const auto& [key, count] : tuples) rs.rules.push_back({key.src, key.dst, key.service, count});
  return rs;  // std::map iteration already yields canonical order
}

HygieneReport check_ruleset(const RuleSet& ruleset, const SecurityGroups& groups, const MemberScope& scope) {
  HygieneReport report;
  const auto& rules = ruleset.rules;
  for (std::size_t i = 0; i < rules.size(); ++i) {
    const auto& r = rules[i];
    if (universal(r.src, scope) && universal(r.dst, scope)) report.any_to_any.push_back(i);
    if (i > 0 && rules[i - 1].key() == r.key()) report.duplicate_keys.push_back(i);
    bool empty = (r.src.is_group() && !groups.has_group(r.src.group_id)) ||
                 (r.dst.is_group() && !groups.has_group(r.dst.group_id));
    if (empty) report.empty_group_refs.push_back(i);
  }
  for (std::size_t i = 0; i < rules.size(); ++i) {
    for (std::size_t j = 0; j < rules.size(); ++j) {
      if (i == j || rules[i].service != rules[j].service) continue;
      auto s = contains(rules[j].src, rules[i].src, scope);
      auto d = contains(rules[j].dst, rules[i].dst, scope);
      if (s == Containment::none || d == Containment::none) continue;
      if (s == Containment::strict || d == Containment::strict) report.redundant.push_back({i, j});
    }
  }
  return report;
}

std::string format_hygiene_report(const HygieneReport& report, const RuleSet& ruleset) {
  std::ostringstream out;
  auto describe = [&](std::size_t i) {
    const auto& r = ruleset.rules[i];
    return r.src.str() + " -> " + r.dst.str() + " " + r.service.protocol + "/" + std::to_string(r.service.dst_port);
  };
  out << "rules: " << ruleset.rules.size() << "\n";
  out << "any-to-any: " << report.any_to_any.size() << "\n";
  for (auto i : report.any_to_any) out << "  " << describe(i) << "\n";
  out << "duplicate keys: " << report.duplicate_keys.size() << "\n";
  for (auto i : report.duplicate_keys) out << "  " << describe(i) << "\n";
  out << "empty group references: " << report.empty_group_refs.size() << "\n";
  for (auto i : report.empty_group_refs) out << "  " << describe(i) << "\n";
  out << "redundant: " << report.redundant.size() << "\n";
  for (const auto& r : report.redundant) out << "  " << describe(r.narrower) << " within " << describe(r.broader) << "\n";
  return out.str();
}

Verdict match(const RuleSet& ruleset, const SecurityGroups& groups, const MemberScope& scope, const FlowRecord& flow) {
  auto src = to_ref(scope.classify(flow.src), flow.src, groups);
  auto dst = to_ref(scope.classify(flow.dst), flow.dst, groups);
  if (!src || !dst) return Verdict::deny;
  return ruleset.allows({*src, *dst, {flow.protocol, flow.dst_port}}) ? Verdict::allow : RuleSet::default_action;
}

void write_ruleset(std::ostream& out, const RuleSet& ruleset) {
  out << kRuleSetHeader << '\n';
  for (const auto& r : ruleset.rules) {
    out << r.src.str() << ',' << r.dst.str() << ',' << r.service.protocol << ',' << r.service.dst_port << ",allow,"
        << r.evidence_count << '\n';
  }
}

RuleSet read_ruleset(std::istream& in) {
  RuleSet rs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto view = trim(line);
    if (view.empty() || view == kRuleSetHeader) continue;
    auto f = split(view, ',');
    auto bad = [&] { return DataError("rule_synth", "ruleset line " + std::to_string(line_no) + " is malformed"); };
    if (f.size() != 6 || f[4] != "allow") throw bad();
    FirewallRule r;
    r.src = EntityRef::parse(f[0]);
    r.dst = EntityRef::parse(f[1]);
    r.service.protocol = std::string(f[2]);
    unsigned port = 0;
    auto [p, ec] = std::from_chars(f[3].data(), f[3].data() + f[3].size(), port);
    if (ec != std::errc{} || port > 65535) throw bad();
    r.service.dst_port = static_cast<std::uint16_t>(port);
    auto [q, ec2] = std::from_chars(f[5].data(), f[5].data() + f[5].size(), r.evidence_count);
    if (ec2 != std::errc{} || r.evidence_count < 1) throw bad();
    rs.rules.push_back(std::move(r));
  }
  return rs;
}

}  // namespace mseg
