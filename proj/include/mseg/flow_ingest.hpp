#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mseg/ipv4.hpp"

namespace mseg {

/// One logged communication event.
struct FlowRecord {
  std::int64_t timestamp = 0;
  Ipv4 src;
  Ipv4 dst;
  std::string protocol;  // upper-case token
  std::uint16_t dst_port = 0;
  std::uint64_t packets = 0;
  std::uint64_t bytes = 0;

  friend bool operator==(const FlowRecord&, const FlowRecord&) = default;
};

/// TCP, UDP and SCTP carry ports; everything else is portless (port 0).
bool is_portless(std::string_view protocol);

struct ParseOptions {
  bool strict = false;
  /// Fatal when malformed lines exceed this fraction of non-header lines.
  double max_malformed_fraction = 0.5;
};

struct ParseResult {
  std::vector<FlowRecord> records;
  std::size_t lines_read = 0;  // non-empty, non-header lines
  std::size_t malformed = 0;
  std::vector<std::size_t> malformed_line_numbers;  // 1-based, first 20 only
};

/// Parses one `timestamp,src,dst,protocol,dst_port,packets,bytes` line.
/// Returns nullopt for anything malformed. Ports on portless protocols are
/// normalized to 0.
std::optional<FlowRecord> parse_flow_line(std::string_view line);

/// Reads a whole comma-separated flow log. A first line whose leading field is
/// not numeric is treated as a header. Throws DataError on an unreadable stream,
/// on any malformed line in strict mode, and when the malformed fraction exceeds
/// the tolerance.
ParseResult parse_flow_log(std::istream& in, const ParseOptions& options = {});
ParseResult parse_flow_log_file(const std::string& path, const ParseOptions& options = {});

void write_flow_log(std::ostream& out, std::span<const FlowRecord> records, bool header = true);

struct NetworkObject {
  Cidr block;
  std::string name;

  friend bool operator==(const NetworkObject&, const NetworkObject&) = default;
};

/// How a single communication peer relates to the protected network.
struct PeerClass {
  enum class Kind { member, network_object, unknown };

  Kind kind = Kind::unknown;
  Ipv4 address;        // set for member
  std::string object;  // set for network_object

  static PeerClass member(Ipv4 addr) { return {Kind::member, addr, {}}; }
  static PeerClass network_object(std::string name) { return {Kind::network_object, {}, std::move(name)}; }
  static PeerClass unknown() { return {}; }

  bool is_member() const { return kind == Kind::member; }
  bool is_object() const { return kind == Kind::network_object; }
  bool is_unknown() const { return kind == Kind::unknown; }

  friend bool operator==(const PeerClass&, const PeerClass&) = default;
};

/// Membership CIDRs plus the ordered external object table. Member blocks are
/// consulted before objects; objects are first-match.
class MemberScope {
 public:
  /// Throws DataError when `members` is empty or an object entry strictly
  /// contains a later one (which would make the later entry unreachable).
  MemberScope(std::vector<Cidr> members, std::vector<NetworkObject> objects);

  PeerClass classify(Ipv4 addr) const;
  bool is_member(Ipv4 addr) const;

  const std::vector<Cidr>& members() const { return members_; }
  const std::vector<NetworkObject>& objects() const { return objects_; }
  bool has_object(std::string_view name) const;
  /// All blocks registered under an object name, in table order.
  std::vector<Cidr> object_blocks(std::string_view name) const;

  std::string to_text() const;

 private:
  std::vector<Cidr> members_;
  std::vector<NetworkObject> objects_;
};

inline PeerClass classify_peer(Ipv4 addr, const MemberScope& scope) { return scope.classify(addr); }

/// Reads `member <CIDR>` / `object <CIDR> <name>` lines; `#` starts a comment.
MemberScope parse_scope(std::istream& in);
MemberScope parse_scope_file(const std::string& path);

enum class UnknownPolicy { drop_unknown, map_to_objects };

std::string_view to_string(UnknownPolicy policy);
UnknownPolicy parse_unknown_policy(std::string_view text);

/// A flow with both peers classified.
struct ClassifiedFlow {
  FlowRecord record;
  PeerClass src_class;
  PeerClass dst_class;

  friend bool operator==(const ClassifiedFlow&, const ClassifiedFlow&) = default;
};

struct IngestReport {
  std::size_t records_read = 0;
  std::size_t records_kept = 0;
  std::size_t records_dropped_unknown = 0;
  std::size_t records_mapped_to_objects = 0;  // kept records with an object peer
  std::size_t distinct_endpoints = 0;          // member addresses in kept records
};

struct FilterResult {
  std::vector<ClassifiedFlow> kept;
  IngestReport report;
};

/// drop_unknown keeps member-to-member traffic only. map_to_objects keeps
/// records with at least one member side whose other side is a member or a
/// known object. Input order is preserved.
FilterResult filter_flows(std::span<const FlowRecord> records, const MemberScope& scope,
                          UnknownPolicy policy);

}  // namespace mseg
