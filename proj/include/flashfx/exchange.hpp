#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace flashfx {

// Numeric codes double as the Exch regressor of the logit model.
enum class ExchangeId : std::uint8_t {
    Other = 0,
    NYSE = 1,
    NASDAQ = 2,
    ARCA = 3,
    AMEX = 4,
    BATS = 5,
    ISE = 6,
};

inline constexpr std::size_t kVenueCount = 7;

inline constexpr std::array<ExchangeId, kVenueCount> kAllVenues = {
    ExchangeId::Other, ExchangeId::NYSE, ExchangeId::NASDAQ, ExchangeId::ARCA,
    ExchangeId::AMEX,  ExchangeId::BATS, ExchangeId::ISE,
};

constexpr std::size_t venue_index(ExchangeId e) { return static_cast<std::size_t>(e); }
constexpr int exchange_code(ExchangeId e) { return static_cast<int>(e); }

// Case-insensitive; unknown names map to Other.
ExchangeId parse_exchange(std::string_view name);
std::string_view exchange_name(ExchangeId e);

}  // namespace flashfx
