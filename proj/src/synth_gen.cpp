#include "mseg/synth_gen.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <tuple>

#include "mseg/error.hpp"
#include "mseg/util.hpp"

namespace mseg {

namespace {

struct Service {
  std::string protocol;
  std::uint16_t port;
  auto operator<=>(const Service&) const = default;
};

Service group_service(std::size_t g) {
  return {g % 5 == 4 ? "UDP" : "TCP", static_cast<std::uint16_t>(20000 + g)};
}

const std::vector<NetworkObject>& default_objects() {
  static const std::vector<NetworkObject> objects = {
      {*Cidr::parse("192.0.2.0/24"), "partner"},
      {*Cidr::parse("198.51.100.0/24"), "saas"},
      {*Cidr::parse("203.0.113.0/24"), "public-dns"},
  };
  return objects;
}

void validate(const ScenarioSpec& spec) {
  auto fail = [](const std::string& why) { return DataError("synth_gen", why); };
  if (spec.group_count < 1) throw fail("group_count must be >= 1");
  if (spec.endpoints_per_group.size() != 1 && spec.endpoints_per_group.size() != spec.group_count) {
    throw fail("endpoints_per_group needs one entry or one per group");
  }
  for (auto n : spec.endpoints_per_group) {
    if (n < 1) throw fail("every group needs at least one endpoint");
  }
  if (spec.profiles.size() != spec.group_count) throw fail("need exactly one behavior profile per group");
  if (!(spec.noise_rate >= 0.0 && spec.noise_rate < 1.0)) throw fail("noise_rate must lie in [0, 1)");
  if (!(spec.unknown_rate >= 0.0 && spec.unknown_rate + spec.noise_rate < 1.0)) {
    throw fail("unknown_rate must be >= 0 and unknown_rate + noise_rate < 1");
  }
  if (spec.window_seconds < 1) throw fail("window_seconds must be >= 1");
  if (spec.windows < 1 || spec.flows_per_endpoint_window < 1) throw fail("windows and flows must be >= 1");
  for (std::size_t g = 0; g < spec.profiles.size(); ++g) {
    const auto& profile = spec.profiles[g];
    if (profile.templates.empty()) throw fail("profile of group " + std::to_string(g) + " has no templates");
    for (const auto& t : profile.templates) {
      if (!(t.weight > 0.0)) throw fail("template weights must be positive");
      if (t.packets < 1) throw fail("template packet count must be >= 1");
      if (t.peer.kind == TemplatePeer::Kind::group && t.peer.group >= spec.group_count) {
        throw fail("profile of group " + std::to_string(g) + " references nonexistent group " +
                   std::to_string(t.peer.group));
      }
      if (t.peer.kind == TemplatePeer::Kind::object) {
        bool known = std::any_of(spec.objects.begin(), spec.objects.end(),
                                 [&](const NetworkObject& o) { return o.name == t.peer.object; });
        if (!known) throw fail("profile references unknown network object '" + t.peer.object + "'");
      }
    }
  }
}

Ipv4 object_address(const NetworkObject& obj, Rng& rng) {
  const std::uint64_t span = std::uint64_t{1} << (32 - obj.block.prefix_len());
  const std::uint64_t host = span > 2 ? 1 + rng.index(static_cast<std::size_t>(span - 2)) : 0;
  return Ipv4(obj.block.base().value() + static_cast<std::uint32_t>(host));
}

}  // namespace

GeneratedScenario generate(const ScenarioSpec& spec) {
  validate(spec);
  const Cidr member_block = *Cidr::parse(kSyntheticMemberBlock);

  // Endpoint addresses, grouped.
  std::vector<std::vector<Ipv4>> members(spec.group_count);
  std::vector<std::pair<Ipv4, std::size_t>> endpoints;  // (address, group)
  std::uint32_t next = member_block.base().value() + 1;
  for (std::size_t g = 0; g < spec.group_count; ++g) {
    auto count = spec.endpoints_per_group.size() == 1 ? spec.endpoints_per_group[0] : spec.endpoints_per_group[g];
    for (std::size_t i = 0; i < count; ++i) {
      Ipv4 addr(next++);
      if (!member_block.contains(addr)) throw DataError("synth_gen", "too many endpoints for " + member_block.str());
      members[g].push_back(addr);
      endpoints.emplace_back(addr, g);
    }
  }

  // Catalogs for noise draws.
  std::set<Service> catalog_set;
  std::set<std::string> used_objects;
  for (const auto& p : spec.profiles) {
    for (const auto& t : p.templates) {
      catalog_set.insert({to_upper(t.protocol), is_portless(t.protocol) ? std::uint16_t{0} : t.port});
      if (t.peer.kind == TemplatePeer::Kind::object) used_objects.insert(t.peer.object);
    }
  }
  const std::vector<Service> catalog(catalog_set.begin(), catalog_set.end());
  std::vector<const NetworkObject*> noise_objects;
  for (const auto& o : spec.objects) {
    if (used_objects.count(o.name)) noise_objects.push_back(&o);
  }

  GeneratedScenario out{{}, {}, MemberScope({member_block}, spec.objects), 0, 0};
  for (const auto& [addr, g] : endpoints) out.truth.emplace(addr, "g" + std::to_string(g));

  Rng rng(spec.seed);
  const auto F = spec.flows_per_endpoint_window;
  out.flows.reserve(spec.windows * endpoints.size() * F);
  for (std::size_t w = 0; w < spec.windows; ++w) {
    for (std::size_t e = 0; e < endpoints.size(); ++e) {
      const auto [src, g] = endpoints[e];
      const auto& profile = spec.profiles[g];
      std::vector<double> weights;
      for (const auto& t : profile.templates) weights.push_back(t.weight);
      std::vector<std::size_t> sent(profile.templates.size(), 0);

      for (std::size_t i = 0; i < F; ++i) {
        FlowRecord rec;
        rec.timestamp = spec.start_time + static_cast<std::int64_t>(w) * spec.window_seconds +
                        static_cast<std::int64_t>(i) * spec.window_seconds / static_cast<std::int64_t>(F);
        rec.src = src;

        const double roll = rng.uniform();
        if (roll < spec.unknown_rate) {
          // 100.64.0.0/10 is never placed in the object table.
          rec.dst = Ipv4((100u << 24) | (64u << 16) | static_cast<std::uint32_t>(rng.index(1u << 22)));
          const auto& svc = catalog[rng.index(catalog.size())];
          rec.protocol = svc.protocol;
          rec.dst_port = svc.port;
          rec.packets = static_cast<std::uint64_t>(rng.between(1, 30));
          rec.bytes = rec.packets * static_cast<std::uint64_t>(rng.between(60, 1460));
          ++out.unknown_flows;
        } else if (roll < spec.unknown_rate + spec.noise_rate) {
          const std::size_t peers = endpoints.size() - 1 + noise_objects.size();
          if (peers == 0) throw DataError("synth_gen", "noise needs at least one possible peer");
          auto pick = rng.index(peers);
          if (pick < endpoints.size() - 1) {
            rec.dst = endpoints[pick >= e ? pick + 1 : pick].first;
          } else {
            rec.dst = object_address(*noise_objects[pick - (endpoints.size() - 1)], rng);
          }
          const auto& svc = catalog[rng.index(catalog.size())];
          rec.protocol = svc.protocol;
          rec.dst_port = svc.port;
          rec.packets = static_cast<std::uint64_t>(rng.between(1, 30));
          rec.bytes = rec.packets * static_cast<std::uint64_t>(rng.between(60, 1460));
          ++out.noise_flows;
        } else {
          auto ti = rng.weighted(weights);
          const auto& t = profile.templates[ti];
          if (t.peer.kind == TemplatePeer::Kind::group) {
            std::vector<Ipv4> candidates;
            for (auto a : members[t.peer.group]) {
              if (a != src) candidates.push_back(a);
            }
            if (candidates.empty()) {
              throw DataError("synth_gen", "group " + std::to_string(g) + " targets group " +
                                              std::to_string(t.peer.group) + " which has no other endpoint");
            }
            rec.dst = candidates[(e + sent[ti]) % candidates.size()];
          } else {
            auto it = std::find_if(spec.objects.begin(), spec.objects.end(),
                                   [&](const NetworkObject& o) { return o.name == t.peer.object; });
            rec.dst = object_address(*it, rng);
          }
          ++sent[ti];
          rec.protocol = to_upper(t.protocol);
          rec.dst_port = is_portless(rec.protocol) ? 0 : t.port;
          rec.packets = t.packets;
          rec.bytes = t.bytes;
        }
        out.flows.push_back(std::move(rec));
      }
    }
  }
  return out;
}

ScenarioSpec standard_scenario(const StandardScenarioOptions& o) {
  if (o.groups < 1) throw DataError("synth_gen", "groups must be >= 1");
  if (!(o.object_rate >= 0.0 && o.object_rate < 1.0)) throw DataError("synth_gen", "object_rate must lie in [0, 1)");

  ScenarioSpec spec;
  spec.group_count = o.groups;
  spec.endpoints_per_group = {o.endpoints_per_group};
  spec.windows = o.windows;
  spec.flows_per_endpoint_window = o.flows_per_endpoint_window;
  spec.noise_rate = o.noise_rate;
  spec.unknown_rate = o.unknown_rate;
  spec.objects = default_objects();
  spec.seed = o.seed;

  const std::vector<std::pair<std::size_t, double>> offsets =
      o.disjoint ? std::vector<std::pair<std::size_t, double>>{{1, 1.0}}
                 : std::vector<std::pair<std::size_t, double>>{{1, 3.0}, {7, 2.0}, {31, 1.0}};
  for (std::size_t g = 0; g < o.groups; ++g) {
    BehaviorProfile profile;
    std::set<std::size_t> targets;
    double member_weight = 0.0;
    for (auto [offset, weight] : offsets) {
      std::size_t h = (g + offset) % o.groups;
      if (!targets.insert(h).second) continue;
      if (h == g && o.endpoints_per_group < 2) continue;
      auto svc = group_service(h);
      std::uint64_t packets = 4 + svc.port % 13;
      profile.templates.push_back(
          {TemplatePeer::to_group(h), svc.protocol, svc.port, weight, packets, packets * (200 + (svc.port % 7) * 150)});
      member_weight += weight;
    }
    if (profile.templates.empty()) {
      throw DataError("synth_gen", "a single-endpoint scenario has no peer to talk to");
    }
    if (o.object_rate > 0.0) {
      const double object_weight = member_weight * o.object_rate / (1.0 - o.object_rate);
      const auto& objs = spec.objects;
      profile.templates.push_back({TemplatePeer::to_object(objs[g % objs.size()].name), "TCP",
                                   static_cast<std::uint16_t>(g % 2 == 0 ? 443 : 8443), object_weight * 0.75, 12,
                                   12 * 900});
      profile.templates.push_back({TemplatePeer::to_object("public-dns"), "UDP", 53, object_weight * 0.25, 1, 80});
    }
    spec.profiles.push_back(std::move(profile));
  }
  return spec;
}

double template_overlap(const BehaviorProfile& a, const BehaviorProfile& b) {
  using Key = std::tuple<int, std::size_t, std::string, std::string, std::uint16_t>;
  auto keys = [](const BehaviorProfile& p) {
    std::set<Key> out;
    for (const auto& t : p.templates) {
      out.emplace(static_cast<int>(t.peer.kind), t.peer.group, t.peer.object, to_upper(t.protocol), t.port);
    }
    return out;
  };
  auto ka = keys(a), kb = keys(b);
  std::size_t common = 0;
  for (const auto& k : ka) common += kb.count(k);
  const auto united = ka.size() + kb.size() - common;
  return united == 0 ? 0.0 : static_cast<double>(common) / static_cast<double>(united);
}

void write_scenario(const GeneratedScenario& scenario, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path base(dir);
  {
    std::ofstream out(base / "flows.csv", std::ios::binary);
    if (!out) throw DataError("synth_gen", "cannot write flows.csv in '" + dir + "'");
    write_flow_log(out, scenario.flows);
  }
  {
    std::ofstream out(base / "scope.txt", std::ios::binary);
    if (!out) throw DataError("synth_gen", "cannot write scope.txt in '" + dir + "'");
    out << "# synthetic scenario scope\n" << scenario.scope.to_text();
  }
  save_ground_truth(scenario.truth, (base / "ground_truth.csv").string());
}

}  // namespace mseg
