#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mseg/flow_ingest.hpp"

namespace mseg {

/// Vocabularies behind the one-hot blocks of a sample vector.
///
/// Layout of a vector (each categorical block has a trailing overflow slot):
///   [out protocol | in protocol | out port | in port | peer class | 3 numeric]
/// The peer-class block lists network objects followed by the member bucket.
/// The numeric tail is: distinct service tuples, flow count, log(1 + bytes).
struct FeatureSchema {
  std::vector<std::string> protocol_vocab;
  std::vector<std::uint16_t> port_vocab;
  std::vector<std::string> peer_vocab;

  std::size_t protocol_block() const { return protocol_vocab.size() + 1; }
  std::size_t port_block() const { return port_vocab.size() + 1; }
  std::size_t peer_block() const { return peer_vocab.size() + 1; }

  std::size_t out_protocol_offset() const { return 0; }
  std::size_t in_protocol_offset() const { return protocol_block(); }
  std::size_t out_port_offset() const { return 2 * protocol_block(); }
  std::size_t in_port_offset() const { return 2 * protocol_block() + port_block(); }
  std::size_t peer_offset() const { return 2 * protocol_block() + 2 * port_block(); }
  std::size_t numeric_offset() const { return peer_offset() + peer_block(); }
  std::size_t dimension() const { return numeric_offset() + 3; }

  std::vector<std::string> column_names() const;
  std::string fingerprint() const;

  friend bool operator==(const FeatureSchema&, const FeatureSchema&) = default;
};

inline constexpr std::size_t kDefaultTopKPorts = 64;
inline constexpr std::int64_t kDefaultWindowSeconds = 3600;

/// Protocols and object names observed; the top_k_ports most frequent
/// destination ports of port-carrying flows (ties to the lower port number).
/// Vocabularies are sorted. Throws DataError on empty input.
FeatureSchema build_schema(std::span<const ClassifiedFlow> flows, std::size_t top_k_ports);

/// Position of `value` in `vocab`, or vocab.size() (the overflow slot).
template <typename T>
std::size_t one_hot_index(const T& value, std::span<const T> vocab) {
  auto it = std::find(vocab.begin(), vocab.end(), value);
  return static_cast<std::size_t>(it - vocab.begin());
}

template <typename T>
std::vector<double> one_hot(const T& value, std::span<const T> vocab) {
  std::vector<double> out(vocab.size() + 1, 0.0);
  out[one_hot_index(value, vocab)] = 1.0;
  return out;
}

enum class Direction { outbound, inbound };

/// A flow as seen from one endpoint.
struct EndpointFlow {
  Direction direction = Direction::outbound;
  std::string protocol;
  std::uint16_t dst_port = 0;
  std::uint64_t bytes = 0;
  PeerClass peer;  // the other side
};

struct WindowKey {
  Ipv4 endpoint;
  std::int64_t window = 0;

  friend auto operator<=>(const WindowKey&, const WindowKey&) = default;
};

using WindowedFlows = std::map<WindowKey, std::vector<EndpointFlow>>;

/// Buckets flows by (endpoint, floor((t - t_min) / window_seconds)). Each flow
/// is attributed to a member source as outbound and to a member destination as
/// inbound. Throws UsageError when window_seconds < 1.
WindowedFlows windowize(std::span<const ClassifiedFlow> flows, std::int64_t window_seconds);

struct SampleVector {
  Ipv4 endpoint;
  std::int64_t window_index = 0;
  std::vector<double> values;
};

SampleVector encode(const WindowKey& key, std::span<const EndpointFlow> flows, const FeatureSchema& schema);

/// Per-column affine transform x -> (x - mean) / scale.
struct Standardization {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;

  Eigen::MatrixXd apply(const Eigen::MatrixXd& raw) const;
  Eigen::MatrixXd invert(const Eigen::MatrixXd& standardized) const;
};

struct SampleMatrix {
  std::vector<WindowKey> keys;  // one per row
  Eigen::MatrixXd values;       // rows x dimension
  std::optional<Standardization> standardization;

  std::size_t rows() const { return keys.size(); }
  SampleVector row(std::size_t i) const;
};

/// Encodes every (endpoint, window) bucket in key order.
SampleMatrix build_samples(const WindowedFlows& windows, const FeatureSchema& schema);

/// Population-std standardization; columns with std < 1e-12 get scale 1.
/// Throws DataError with fewer than two rows.
SampleMatrix standardize(const SampleMatrix& raw);

/// `endpoint,window,f0..f{d-1}` with a header row.
void write_feature_csv(std::ostream& out, const SampleMatrix& matrix);

}  // namespace mseg
