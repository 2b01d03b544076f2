#include "mseg/ipv4.hpp"

#include <charconv>

#include "mseg/error.hpp"

namespace mseg {

std::optional<Ipv4> Ipv4::parse(std::string_view text) {
  std::uint32_t value = 0;
  const char* p = text.data();
  const char* end = text.data() + text.size();
  for (int octet = 0; octet < 4; ++octet) {
    if (octet > 0) {
      if (p == end || *p != '.') return std::nullopt;
      ++p;
    }
    if (p == end || *p < '0' || *p > '9') return std::nullopt;
    unsigned part = 0;
    auto [next, ec] = std::from_chars(p, end, part);
    if (ec != std::errc{} || part > 255 || next - p > 3) return std::nullopt;
    value = (value << 8) | part;
    p = next;
  }
  if (p != end) return std::nullopt;
  return Ipv4(value);
}

std::string Ipv4::str() const {
  return std::to_string(value_ >> 24) + '.' + std::to_string((value_ >> 16) & 0xff) + '.' +
         std::to_string((value_ >> 8) & 0xff) + '.' + std::to_string(value_ & 0xff);
}

Cidr::Cidr(Ipv4 base, int prefix_len) : prefix_len_(prefix_len) {
  if (prefix_len < 0 || prefix_len > 32) {
    throw DataError("ipv4", "prefix length out of range: " + std::to_string(prefix_len));
  }
  base_ = Ipv4(base.value() & mask());
}

std::optional<Cidr> Cidr::parse(std::string_view text) {
  auto slash = text.find('/');
  auto addr = Ipv4::parse(text.substr(0, slash));
  if (!addr) return std::nullopt;
  if (slash == std::string_view::npos) return Cidr(*addr, 32);
  auto len_text = text.substr(slash + 1);
  int len = -1;
  auto [next, ec] = std::from_chars(len_text.data(), len_text.data() + len_text.size(), len);
  if (ec != std::errc{} || next != len_text.data() + len_text.size() || len < 0 || len > 32) {
    return std::nullopt;
  }
  return Cidr(*addr, len);
}

std::uint32_t Cidr::mask() const {
  return prefix_len_ == 0 ? 0u : ~std::uint32_t{0} << (32 - prefix_len_);
}

bool Cidr::contains(Ipv4 addr) const { return (addr.value() & mask()) == base_.value(); }

bool Cidr::contains(const Cidr& other) const {
  return other.prefix_len_ >= prefix_len_ && contains(other.base_);
}

bool Cidr::strictly_contains(const Cidr& other) const {
  return other.prefix_len_ > prefix_len_ && contains(other.base_);
}

std::string Cidr::str() const { return base_.str() + '/' + std::to_string(prefix_len_); }

}  // namespace mseg
