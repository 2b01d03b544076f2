#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace mseg {

class Ipv4 {
 public:
  constexpr Ipv4() = default;
  constexpr explicit Ipv4(std::uint32_t value) : value_(value) {}

  /// Dotted-quad parse; rejects leading/trailing junk and octets > 255.
  static std::optional<Ipv4> parse(std::string_view text);

  constexpr std::uint32_t value() const { return value_; }
  std::string str() const;

  friend constexpr auto operator<=>(Ipv4, Ipv4) = default;

 private:
  std::uint32_t value_ = 0;
};

class Cidr {
 public:
  constexpr Cidr() = default;
  /// Host bits of `base` are cleared.
  Cidr(Ipv4 base, int prefix_len);

  /// Accepts "a.b.c.d/n" or a bare address (treated as /32).
  static std::optional<Cidr> parse(std::string_view text);

  Ipv4 base() const { return base_; }
  int prefix_len() const { return prefix_len_; }
  std::uint32_t mask() const;

  bool contains(Ipv4 addr) const;
  bool contains(const Cidr& other) const;
  bool strictly_contains(const Cidr& other) const;
  bool is_universal() const { return prefix_len_ == 0; }

  std::string str() const;

  friend auto operator<=>(const Cidr&, const Cidr&) = default;

 private:
  Ipv4 base_;
  int prefix_len_ = 32;
};

}  // namespace mseg
