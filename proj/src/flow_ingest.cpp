#include "mseg/flow_ingest.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "mseg/error.hpp"
#include "mseg/util.hpp"

namespace mseg {

namespace {

template <typename T>
bool parse_uint(std::string_view text, T& out) {
  text = trim(text);
  if (text.empty()) return false;
  auto [next, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc{} && next == text.data() + text.size();
}

bool looks_numeric(std::string_view field) {
  field = trim(field);
  if (field.empty()) return false;
  for (char c : field) {
    if (c < '0' || c > '9') return false;
  }
  return true;
}

}  // namespace

bool is_portless(std::string_view protocol) {
  auto up = to_upper(protocol);
  return !(up == "TCP" || up == "UDP" || up == "SCTP");
}

std::optional<FlowRecord> parse_flow_line(std::string_view line) {
  auto fields = split(trim(line), ',');
  if (fields.size() != 7) return std::nullopt;

  FlowRecord rec;
  std::uint64_t ts = 0;
  if (!parse_uint(fields[0], ts) || ts > static_cast<std::uint64_t>(INT64_MAX)) return std::nullopt;
  rec.timestamp = static_cast<std::int64_t>(ts);

  auto src = Ipv4::parse(trim(fields[1]));
  auto dst = Ipv4::parse(trim(fields[2]));
  if (!src || !dst) return std::nullopt;
  rec.src = *src;
  rec.dst = *dst;

  auto proto = trim(fields[3]);
  if (proto.empty()) return std::nullopt;
  for (char c : proto) {
    if (c == ' ' || c == '\t') return std::nullopt;
  }
  rec.protocol = to_upper(proto);

  std::uint32_t port = 0;
  if (!parse_uint(fields[4], port) || port > 65535) return std::nullopt;
  rec.dst_port = is_portless(rec.protocol) ? 0 : static_cast<std::uint16_t>(port);

  if (!parse_uint(fields[5], rec.packets) || rec.packets < 1) return std::nullopt;
  if (!parse_uint(fields[6], rec.bytes)) return std::nullopt;
  return rec;
}

ParseResult parse_flow_log(std::istream& in, const ParseOptions& options) {
  if (!in) throw DataError("flow_ingest", "input stream is not readable");

  ParseResult result;
  std::string line;
  std::size_t line_no = 0;
  bool first_content_line = true;
  while (std::getline(in, line)) {
    ++line_no;
    auto view = trim(line);
    if (view.empty()) continue;
    if (first_content_line) {
      first_content_line = false;
      if (!looks_numeric(split(view, ',').front())) continue;  // header
    }
    ++result.lines_read;
    if (auto rec = parse_flow_line(view)) {
      result.records.push_back(std::move(*rec));
      continue;
    }
    ++result.malformed;
    if (result.malformed_line_numbers.size() < 20) result.malformed_line_numbers.push_back(line_no);
    if (options.strict) {
      throw DataError("flow_ingest", "malformed flow record at line " + std::to_string(line_no));
    }
  }
  if (in.bad()) throw DataError("flow_ingest", "I/O error while reading flow log");

  if (result.lines_read > 0 &&
      static_cast<double>(result.malformed) >
          options.max_malformed_fraction * static_cast<double>(result.lines_read)) {
    throw DataError("flow_ingest", "corrupt input: " + std::to_string(result.malformed) + " of " +
                                       std::to_string(result.lines_read) + " lines malformed");
  }
  return result;
}

ParseResult parse_flow_log_file(const std::string& path, const ParseOptions& options) {
  std::ifstream in(path);
  if (!in) throw DataError("flow_ingest", "cannot open flow log '" + path + "'");
  return parse_flow_log(in, options);
}

void write_flow_log(std::ostream& out, std::span<const FlowRecord> records, bool header) {
  if (header) out << "timestamp,src_addr,dst_addr,protocol,dst_port,packets,bytes\n";
  for (const auto& r : records) {
    out << r.timestamp << ',' << r.src.str() << ',' << r.dst.str() << ',' << r.protocol << ','
        << r.dst_port << ',' << r.packets << ',' << r.bytes << '\n';
  }
}

MemberScope::MemberScope(std::vector<Cidr> members, std::vector<NetworkObject> objects)
    : members_(std::move(members)), objects_(std::move(objects)) {
  if (members_.empty()) throw DataError("flow_ingest", "member scope has no member CIDRs");
  for (std::size_t i = 0; i < objects_.size(); ++i) {
    if (objects_[i].name.empty()) throw DataError("flow_ingest", "network object with empty name");
    for (std::size_t j = i + 1; j < objects_.size(); ++j) {
      if (objects_[i].block.strictly_contains(objects_[j].block)) {
        throw DataError("flow_ingest", "object table entry " + objects_[i].block.str() + " (" +
                                           objects_[i].name + ") shadows later entry " +
                                           objects_[j].block.str() + " (" + objects_[j].name +
                                           "); order narrower blocks first");
      }
    }
  }
}

bool MemberScope::is_member(Ipv4 addr) const {
  for (const auto& block : members_) {
    if (block.contains(addr)) return true;
  }
  return false;
}

PeerClass MemberScope::classify(Ipv4 addr) const {
  if (is_member(addr)) return PeerClass::member(addr);
  for (const auto& obj : objects_) {
    if (obj.block.contains(addr)) return PeerClass::network_object(obj.name);
  }
  return PeerClass::unknown();
}

bool MemberScope::has_object(std::string_view name) const {
  for (const auto& obj : objects_) {
    if (obj.name == name) return true;
  }
  return false;
}

std::vector<Cidr> MemberScope::object_blocks(std::string_view name) const {
  std::vector<Cidr> blocks;
  for (const auto& obj : objects_) {
    if (obj.name == name) blocks.push_back(obj.block);
  }
  return blocks;
}

std::string MemberScope::to_text() const {
  std::ostringstream out;
  for (const auto& m : members_) out << "member " << m.str() << '\n';
  for (const auto& o : objects_) out << "object " << o.block.str() << ' ' << o.name << '\n';
  return out.str();
}

MemberScope parse_scope(std::istream& in) {
  if (!in) throw DataError("flow_ingest", "scope stream is not readable");
  std::vector<Cidr> members;
  std::vector<NetworkObject> objects;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    std::istringstream words{std::string(trim(view))};
    std::string keyword, cidr_text, name, extra;
    if (!(words >> keyword)) continue;
    auto bad = [&](const std::string& why) {
      return DataError("flow_ingest", "scope line " + std::to_string(line_no) + ": " + why);
    };
    if (!(words >> cidr_text)) throw bad("missing CIDR");
    auto cidr = Cidr::parse(cidr_text);
    if (!cidr) throw bad("invalid CIDR '" + cidr_text + "'");
    if (keyword == "member") {
      if (words >> extra) throw bad("unexpected trailing text");
      members.push_back(*cidr);
    } else if (keyword == "object") {
      if (!(words >> name)) throw bad("object without a name");
      if (words >> extra) throw bad("unexpected trailing text");
      objects.push_back({*cidr, name});
    } else {
      throw bad("unknown keyword '" + keyword + "'");
    }
  }
  return MemberScope(std::move(members), std::move(objects));
}

MemberScope parse_scope_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("flow_ingest", "cannot open scope file '" + path + "'");
  return parse_scope(in);
}

std::string_view to_string(UnknownPolicy policy) {
  return policy == UnknownPolicy::drop_unknown ? "drop_unknown" : "map_to_objects";
}

UnknownPolicy parse_unknown_policy(std::string_view text) {
  if (text == "drop_unknown") return UnknownPolicy::drop_unknown;
  if (text == "map_to_objects") return UnknownPolicy::map_to_objects;
  throw UsageError("flow_ingest", "unknown_policy must be drop_unknown or map_to_objects, got '" +
                                      std::string(text) + "'");
}

FilterResult filter_flows(std::span<const FlowRecord> records, const MemberScope& scope,
                          UnknownPolicy policy) {
  FilterResult out;
  out.report.records_read = records.size();
  std::set<Ipv4> endpoints;
  for (const auto& rec : records) {
    auto src = scope.classify(rec.src);
    auto dst = scope.classify(rec.dst);
    bool keep = false;
    if (src.is_member() && dst.is_member()) {
      keep = true;
    } else if (policy == UnknownPolicy::map_to_objects) {
      keep = (src.is_member() && dst.is_object()) || (src.is_object() && dst.is_member());
    }
    if (!keep) {
      ++out.report.records_dropped_unknown;
      continue;
    }
    if (src.is_object() || dst.is_object()) ++out.report.records_mapped_to_objects;
    if (src.is_member()) endpoints.insert(rec.src);
    if (dst.is_member()) endpoints.insert(rec.dst);
    out.kept.push_back({rec, std::move(src), std::move(dst)});
  }
  out.report.records_kept = out.kept.size();
  out.report.distinct_endpoints = endpoints.size();
  return out;
}

}  // namespace mseg
