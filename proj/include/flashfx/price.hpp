#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace flashfx {

// Fixed-point price in ten-thousandths of a dollar. Tick comparisons in the
// detector and the classifier must be exact, so prices never go through a
// double on the hot path.
class Price {
public:
    static constexpr std::int64_t kScale = 10'000;

    constexpr Price() = default;
    constexpr explicit Price(std::int64_t units) : units_(units) {}

    static constexpr Price from_units(std::int64_t units) { return Price(units); }
    static constexpr Price from_cents(std::int64_t cents) { return Price(cents * 100); }
    // Rounds to the nearest unit.
    static Price from_dollars(double dollars);

    constexpr std::int64_t units() const { return units_; }
    constexpr double dollars() const { return static_cast<double>(units_) / kScale; }
    constexpr bool positive() const { return units_ > 0; }

    constexpr auto operator<=>(const Price&) const = default;

    constexpr Price operator+(Price o) const { return Price(units_ + o.units_); }
    constexpr Price operator-(Price o) const { return Price(units_ - o.units_); }
    constexpr Price operator*(std::int64_t k) const { return Price(units_ * k); }

private:
    std::int64_t units_ = 0;
};

// Parses "121.35", "121.3500", "0" or "-1.00". At most four significant
// decimal places; extra trailing zeros are accepted.
std::optional<Price> parse_price(std::string_view text);

// Canonical four-decimal rendering, e.g. "121.3500".
std::string format_price(Price p);
void append_price(std::string& out, Price p);

// Exact test of |to/from - 1| * 100 > pct, with pct given in millionths of a
// percent (0.8% == 800'000).
bool relative_move_exceeds(Price from, Price to, std::int64_t pct_micro);

std::int64_t pct_to_micro(double pct);

}  // namespace flashfx
