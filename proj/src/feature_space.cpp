#include "mseg/feature_space.hpp"

#include <cmath>
#include <ostream>
#include <set>
#include <tuple>

#include "mseg/error.hpp"
#include "mseg/util.hpp"

namespace mseg {

namespace {

void add_one_hot(Eigen::Ref<Eigen::VectorXd> block, std::size_t index) { block[static_cast<Eigen::Index>(index)] += 1.0; }

}  // namespace

std::vector<std::string> FeatureSchema::column_names() const {
  std::vector<std::string> names;
  names.reserve(dimension());
  for (const char* dir : {"out", "in"}) {
    for (const auto& p : protocol_vocab) names.push_back(std::string(dir) + "_proto_" + p);
    names.push_back(std::string(dir) + "_proto_other");
  }
  for (const char* dir : {"out", "in"}) {
    for (auto port : port_vocab) names.push_back(std::string(dir) + "_port_" + std::to_string(port));
    names.push_back(std::string(dir) + "_port_other");
  }
  for (const auto& obj : peer_vocab) names.push_back("peer_object_" + obj);
  names.push_back("peer_member");
  names.push_back("unique_services");
  names.push_back("flow_count");
  names.push_back("log_bytes");
  return names;
}

std::string FeatureSchema::fingerprint() const {
  Fnv1a h;
  h.update("protocols");
  for (const auto& p : protocol_vocab) h.update(p).update("\x1f");
  h.update("ports");
  for (auto port : port_vocab) h.update_u64(port);
  h.update("peers");
  for (const auto& o : peer_vocab) h.update(o).update("\x1f");
  return h.hex();
}

FeatureSchema build_schema(std::span<const ClassifiedFlow> flows, std::size_t top_k_ports) {
  if (flows.empty()) throw DataError("feature_space", "cannot build a schema from zero flows");

  std::set<std::string> protocols;
  std::set<std::string> objects;
  std::map<std::uint16_t, std::size_t> port_counts;
  for (const auto& f : flows) {
    protocols.insert(f.record.protocol);
    if (!is_portless(f.record.protocol)) ++port_counts[f.record.dst_port];
    if (f.src_class.is_object()) objects.insert(f.src_class.object);
    if (f.dst_class.is_object()) objects.insert(f.dst_class.object);
  }

  std::vector<std::pair<std::uint16_t, std::size_t>> ranked(port_counts.begin(), port_counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (ranked.size() > top_k_ports) ranked.resize(top_k_ports);

  FeatureSchema schema;
  schema.protocol_vocab.assign(protocols.begin(), protocols.end());
  schema.peer_vocab.assign(objects.begin(), objects.end());
  for (const auto& [port, count] : ranked) schema.port_vocab.push_back(port);
  std::sort(schema.port_vocab.begin(), schema.port_vocab.end());
  return schema;
}

WindowedFlows windowize(std::span<const ClassifiedFlow> flows, std::int64_t window_seconds) {
  if (window_seconds < 1) throw UsageError("feature_space", "window_seconds must be >= 1");
  WindowedFlows out;
  if (flows.empty()) return out;

  std::int64_t t0 = flows.front().record.timestamp;
  for (const auto& f : flows) t0 = std::min(t0, f.record.timestamp);

  for (const auto& f : flows) {
    const auto& r = f.record;
    std::int64_t window = (r.timestamp - t0) / window_seconds;
    if (f.src_class.is_member()) {
      out[{r.src, window}].push_back({Direction::outbound, r.protocol, r.dst_port, r.bytes, f.dst_class});
    }
    if (f.dst_class.is_member()) {
      out[{r.dst, window}].push_back({Direction::inbound, r.protocol, r.dst_port, r.bytes, f.src_class});
    }
  }
  return out;
}

SampleVector encode(const WindowKey& key, std::span<const EndpointFlow> flows, const FeatureSchema& schema) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(schema.dimension()));
  const std::span<const std::string> protocols(schema.protocol_vocab);
  const std::span<const std::uint16_t> ports(schema.port_vocab);
  const std::span<const std::string> peers(schema.peer_vocab);

  auto segment = [&](std::size_t offset, std::size_t length) {
    return v.segment(static_cast<Eigen::Index>(offset), static_cast<Eigen::Index>(length));
  };

  std::set<std::tuple<int, std::string, std::uint16_t, std::string>> services;
  std::uint64_t total_bytes = 0;
  for (const auto& f : flows) {
    const bool out = f.direction == Direction::outbound;
    add_one_hot(segment(out ? schema.out_protocol_offset() : schema.in_protocol_offset(), schema.protocol_block()),
                one_hot_index(f.protocol, protocols));
    if (!is_portless(f.protocol)) {
      add_one_hot(segment(out ? schema.out_port_offset() : schema.in_port_offset(), schema.port_block()),
                  one_hot_index(f.dst_port, ports));
    }
    // Unseen objects share the trailing member slot.
    std::size_t peer_slot = f.peer.is_object() ? one_hot_index(f.peer.object, peers) : peers.size();
    add_one_hot(segment(schema.peer_offset(), schema.peer_block()), peer_slot);

    services.emplace(out ? 0 : 1, f.protocol, f.dst_port, f.peer.is_object() ? f.peer.object : std::string());
    total_bytes += f.bytes;
  }

  const auto tail = static_cast<Eigen::Index>(schema.numeric_offset());
  v[tail] = static_cast<double>(services.size());
  v[tail + 1] = static_cast<double>(flows.size());
  v[tail + 2] = std::log1p(static_cast<double>(total_bytes));

  return {key.endpoint, key.window, std::vector<double>(v.data(), v.data() + v.size())};
}

Eigen::MatrixXd Standardization::apply(const Eigen::MatrixXd& raw) const {
  if (raw.cols() != mean.size()) throw DataError("feature_space", "standardization dimension mismatch");
  return (raw.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
}

Eigen::MatrixXd Standardization::invert(const Eigen::MatrixXd& standardized) const {
  if (standardized.cols() != mean.size()) throw DataError("feature_space", "standardization dimension mismatch");
  return (standardized.array().rowwise() * scale.transpose().array()).rowwise() + mean.transpose().array();
}

SampleVector SampleMatrix::row(std::size_t i) const {
  const auto r = values.row(static_cast<Eigen::Index>(i));
  std::vector<double> vals(static_cast<std::size_t>(r.size()));
  for (Eigen::Index j = 0; j < r.size(); ++j) vals[static_cast<std::size_t>(j)] = r[j];
  return {keys[i].endpoint, keys[i].window, std::move(vals)};
}

SampleMatrix build_samples(const WindowedFlows& windows, const FeatureSchema& schema) {
  SampleMatrix m;
  m.values.resize(static_cast<Eigen::Index>(windows.size()), static_cast<Eigen::Index>(schema.dimension()));
  Eigen::Index row = 0;
  for (const auto& [key, flows] : windows) {
    auto sample = encode(key, flows, schema);
    m.values.row(row++) = Eigen::Map<const Eigen::RowVectorXd>(sample.values.data(),
                                                              static_cast<Eigen::Index>(sample.values.size()));
    m.keys.push_back(key);
  }
  return m;
}

SampleMatrix standardize(const SampleMatrix& raw) {
  const auto n = raw.values.rows();
  if (n < 2) throw DataError("feature_space", "standardization needs at least two samples");

  Standardization st;
  st.mean = raw.values.colwise().mean().transpose();
  st.scale.resize(raw.values.cols());
  for (Eigen::Index j = 0; j < raw.values.cols(); ++j) {
    double ss = (raw.values.col(j).array() - st.mean[j]).square().sum();
    double sd = std::sqrt(ss / static_cast<double>(n));
    st.scale[j] = sd < 1e-12 ? 1.0 : sd;
  }

  SampleMatrix out;
  out.keys = raw.keys;
  out.values = st.apply(raw.values);
  out.standardization = std::move(st);
  return out;
}

void write_feature_csv(std::ostream& out, const SampleMatrix& matrix) {
  out << "endpoint,window";
  for (Eigen::Index j = 0; j < matrix.values.cols(); ++j) out << ",f" << j;
  out << '\n';
  for (std::size_t i = 0; i < matrix.rows(); ++i) {
    out << matrix.keys[i].endpoint.str() << ',' << matrix.keys[i].window;
    for (Eigen::Index j = 0; j < matrix.values.cols(); ++j) {
      out << ',' << format_double(matrix.values(static_cast<Eigen::Index>(i), j));
    }
    out << '\n';
  }
}

}  // namespace mseg
