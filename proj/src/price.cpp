#include "flashfx/price.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>

#include "flashfx/exchange.hpp"

namespace flashfx {

Price Price::from_dollars(double dollars) {
    return Price(static_cast<std::int64_t>(std::llround(dollars * kScale)));
}

std::optional<Price> parse_price(std::string_view text) {
    if (text.empty()) return std::nullopt;
    bool negative = false;
    std::size_t i = 0;
    if (text[0] == '-' || text[0] == '+') {
        negative = text[0] == '-';
        ++i;
    }
    std::int64_t whole = 0;
    std::size_t whole_digits = 0;
    for (; i < text.size() && text[i] != '.'; ++i) {
        char c = text[i];
        if (c < '0' || c > '9') return std::nullopt;
        if (whole > 100'000'000'000LL) return std::nullopt;
        whole = whole * 10 + (c - '0');
        ++whole_digits;
    }
    std::int64_t frac = 0;
    std::size_t frac_digits = 0;
    if (i < text.size()) {
        ++i;  // '.'
        for (; i < text.size(); ++i) {
            char c = text[i];
            if (c < '0' || c > '9') return std::nullopt;
            if (frac_digits < 4) {
                frac = frac * 10 + (c - '0');
            } else if (c != '0') {
                return std::nullopt;
            }
            ++frac_digits;
        }
        if (frac_digits == 0 && whole_digits == 0) return std::nullopt;
    } else if (whole_digits == 0) {
        return std::nullopt;
    }
    for (std::size_t d = std::min<std::size_t>(frac_digits, 4); d < 4; ++d) frac *= 10;
    std::int64_t units = whole * Price::kScale + frac;
    return Price(negative ? -units : units);
}

void append_price(std::string& out, Price p) {
    std::int64_t u = p.units();
    if (u < 0) {
        out.push_back('-');
        u = -u;
    }
    std::array<char, 24> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), u / Price::kScale);
    (void)ec;
    out.append(buf.data(), end);
    out.push_back('.');
    std::int64_t frac = u % Price::kScale;
    char digits[4];
    for (int k = 3; k >= 0; --k) {
        digits[k] = static_cast<char>('0' + frac % 10);
        frac /= 10;
    }
    out.append(digits, 4);
}

std::string format_price(Price p) {
    std::string s;
    append_price(s, p);
    return s;
}

__extension__ typedef __int128 wide_int;

bool relative_move_exceeds(Price from, Price to, std::int64_t pct_micro) {
    // |to - from| / from * 100 > pct_micro / 1e6  <=>  |to - from| * 1e8 > pct_micro * from
    wide_int diff = static_cast<wide_int>(to.units()) - from.units();
    if (diff < 0) diff = -diff;
    return diff * 100'000'000 > static_cast<wide_int>(pct_micro) * from.units();
}

std::int64_t pct_to_micro(double pct) { return static_cast<std::int64_t>(std::llround(pct * 1e6)); }

namespace {

constexpr std::array<std::string_view, kVenueCount> kNames = {
    "OTHER", "NYSE", "NASDAQ", "ARCA", "AMEX", "BATS", "ISE",
};

bool iequals(std::string_view a, std::string_view b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::toupper(static_cast<unsigned char>(a[i])) != b[i]) return false;
    }
    return true;
}

}  // namespace

ExchangeId parse_exchange(std::string_view name) {
    for (std::size_t i = 1; i < kNames.size(); ++i) {
        if (iequals(name, kNames[i])) return static_cast<ExchangeId>(i);
    }
    return ExchangeId::Other;
}

std::string_view exchange_name(ExchangeId e) { return kNames[venue_index(e)]; }

}  // namespace flashfx
