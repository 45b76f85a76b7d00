#pragma once

// Fixture builders and independent reference implementations used by the
// unit and acceptance suites.

#include <algorithm>
#include <cstdlib>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "flashfx/detect.hpp"
#include "flashfx/nbbo.hpp"
#include "flashfx/tape.hpp"

namespace flashfx::fixture {

inline TradeRecord trade(std::int64_t ts, std::int64_t units, ExchangeId ex = ExchangeId::NYSE, bool iso = false,
                         std::int64_t size = 100, const std::string& symbol = "T") {
    TradeRecord t;
    t.ts = ts;
    t.symbol = symbol;
    t.exchange = ex;
    t.price = Price(units);
    t.size = size;
    t.is_iso = iso;
    t.condition = iso ? "F" : "@";
    return t;
}

inline QuoteRecord quote(std::int64_t ts, ExchangeId ex, std::int64_t bid, std::int64_t bid_size, std::int64_t offer,
                         std::int64_t offer_size, const std::string& symbol = "T") {
    QuoteRecord q;
    q.ts = ts;
    q.symbol = symbol;
    q.exchange = ex;
    q.bid = Price(bid_size > 0 ? bid : 0);
    q.bid_size = bid_size;
    q.offer = Price(offer_size > 0 ? offer : 0);
    q.offer_size = offer_size;
    return q;
}

// Gives trades consecutive sequence numbers in list order.
inline std::vector<TradeRecord> sequenced(std::vector<TradeRecord> v) {
    for (std::size_t i = 0; i < v.size(); ++i) v[i].seq = i + 1;
    return v;
}

// ---- detector reference -----------------------------------------------------

struct OracleCrash {
    std::size_t first;
    std::size_t last;
    CrashDirection direction;
    bool operator==(const OracleCrash&) const = default;
};

// Exhaustive window test. The move threshold is the exact rational
// pct_num / pct_den percent.
struct OracleThresholds {
    int min_ticks = 10;
    std::int64_t max_window_ms = 1500;
    std::int64_t pct_num = 8;
    std::int64_t pct_den = 10;
};

inline bool oracle_window_qualifies(const std::vector<TradeRecord>& t, std::size_t i, std::size_t j,
                                    CrashDirection dir, const OracleThresholds& th) {
    if (t[j].ts - t[i].ts > th.max_window_ms) return false;
    int ticks = 0;
    for (std::size_t k = i + 1; k <= j; ++k) {
        const auto a = t[k - 1].price.units();
        const auto b = t[k].price.units();
        if (dir == CrashDirection::Down ? b > a : b < a) return false;
        if (a != b) ++ticks;
    }
    if (ticks < th.min_ticks) return false;
    // |move| / first * 100 > num / den   <=>   |move| * 100 * den > num * first
    __extension__ typedef __int128 wide;
    const wide lhs = static_cast<wide>(std::llabs(t[j].price.units() - t[i].price.units())) * 100 * th.pct_den;
    const wide rhs = static_cast<wide>(th.pct_num) * t[i].price.units();
    if (lhs <= rhs) return false;
    return dir == CrashDirection::Down ? t[j].price < t[i].price : t[j].price > t[i].price;
}

// Greedy selection over all (i, j) windows of one venue's trades: the
// earliest start with any qualifying window opens a crash ending at its last
// qualifying end, and the search resumes after that end.
inline std::vector<OracleCrash> oracle_crashes(const std::vector<TradeRecord>& t, CrashDirection dir,
                                               const OracleThresholds& th = {}) {
    std::vector<OracleCrash> out;
    std::size_t s = 0;
    while (s < t.size()) {
        std::optional<OracleCrash> found;
        for (std::size_t i = s; i < t.size() && !found; ++i) {
            std::optional<std::size_t> best;
            for (std::size_t j = i + 1; j < t.size(); ++j) {
                if (t[j].ts - t[i].ts > th.max_window_ms) break;
                if (oracle_window_qualifies(t, i, j, dir, th)) best = j;
            }
            if (best) found = OracleCrash{i, *best, dir};
        }
        if (!found) break;
        out.push_back(*found);
        s = found->last + 1;
    }
    return out;
}

// ---- NBBO reference --------------------------------------------------------

struct OracleNbbo {
    std::optional<std::int64_t> bid, offer;
    std::int64_t bid_size = 0, offer_size = 0;
    NbboStatus status = NbboStatus::Empty;
};

// Recomputes the consolidated quote from a plain map of venue tops.
class OracleBook {
public:
    void apply(const QuoteRecord& q) {
        tops_[q.exchange] = q;
        if (q.bid_size == 0 && q.offer_size == 0) tops_.erase(q.exchange);
    }

    OracleNbbo nbbo() const {
        OracleNbbo n;
        for (const auto& [ex, q] : tops_) {
            if (q.bid_size > 0) {
                if (!n.bid || q.bid.units() > *n.bid) {
                    n.bid = q.bid.units();
                    n.bid_size = 0;
                }
                if (q.bid.units() == *n.bid) n.bid_size += q.bid_size;
            }
            if (q.offer_size > 0) {
                if (!n.offer || q.offer.units() < *n.offer) {
                    n.offer = q.offer.units();
                    n.offer_size = 0;
                }
                if (q.offer.units() == *n.offer) n.offer_size += q.offer_size;
            }
        }
        if (!n.bid && !n.offer) {
            n.status = NbboStatus::Empty;
        } else if (!n.bid || !n.offer) {
            n.status = NbboStatus::OneSided;
        } else if (*n.bid > *n.offer) {
            n.status = NbboStatus::Crossed;
        } else if (*n.bid == *n.offer) {
            n.status = NbboStatus::Locked;
        } else {
            n.status = NbboStatus::Normal;
        }
        return n;
    }

private:
    std::map<ExchangeId, QuoteRecord> tops_;
};

inline bool same_nbbo(const Nbbo& got, const OracleNbbo& want) {
    if (got.status != want.status) return false;
    if (got.has_bid() != want.bid.has_value() || got.has_offer() != want.offer.has_value()) return false;
    if (want.bid && (got.best_bid.units() != *want.bid || got.best_bid_size != want.bid_size)) return false;
    if (want.offer && (got.best_offer.units() != *want.offer || got.best_offer_size != want.offer_size)) return false;
    return true;
}

// Random quote stream over a narrow price band so ties, locks and crosses are
// frequent.
inline std::vector<QuoteRecord> random_quotes(std::mt19937_64& rng, std::size_t n) {
    std::vector<QuoteRecord> out;
    out.reserve(n);
    std::int64_t ts = 0;
    for (std::size_t i = 0; i < n; ++i) {
        ts += static_cast<std::int64_t>(rng() % 3);
        const auto ex = static_cast<ExchangeId>(rng() % kVenueCount);
        const std::int64_t mid = 100'000 + static_cast<std::int64_t>(rng() % 8) * 100;
        const bool bid_on = rng() % 8 != 0;
        const bool offer_on = rng() % 8 != 0;
        const std::int64_t bid = mid - static_cast<std::int64_t>(rng() % 5) * 100;
        const std::int64_t offer = mid + static_cast<std::int64_t>(rng() % 5) * 100 - 200;
        out.push_back(quote(ts, ex, bid, bid_on ? 100 * static_cast<std::int64_t>(1 + rng() % 9) : 0, offer,
                            offer_on ? 100 * static_cast<std::int64_t>(1 + rng() % 9) : 0));
    }
    return out;
}

// ---- random trade tapes ----------------------------------------------------

// Single-venue tape mixing quiet random walk with steep same-direction
// bursts of varying slope, pace and zero-tick content, so that windows land
// on both sides of every threshold.
inline std::vector<TradeRecord> random_tape(std::mt19937_64& rng, std::size_t n, ExchangeId ex = ExchangeId::NYSE) {
    std::vector<TradeRecord> out;
    out.reserve(n);
    std::int64_t ts = 1000;
    std::int64_t px = 500'000;  // $50
    while (out.size() < n) {
        const bool burst = rng() % 4 == 0;
        const int len = burst ? 5 + static_cast<int>(rng() % 20) : 1 + static_cast<int>(rng() % 10);
        const int dir = rng() % 2 == 0 ? -1 : 1;
        const std::int64_t step = burst ? 100 * static_cast<std::int64_t>(1 + rng() % 12) : 100;
        const std::int64_t gap = burst ? static_cast<std::int64_t>(rng() % 180) : static_cast<std::int64_t>(rng() % 400);
        for (int k = 0; k < len && out.size() < n; ++k) {
            ts += static_cast<std::int64_t>(rng() % (gap + 1));
            const auto r = rng() % 10;
            if (burst) {
                if (r < 8) px += dir * step;  // else a zero tick
            } else {
                if (r < 4) px += 100;
                else if (r < 8) px -= 100;
            }
            px = std::max<std::int64_t>(px, 10'000);
            out.push_back(trade(ts, px, ex, rng() % 3 == 0, 100 * static_cast<std::int64_t>(1 + rng() % 10)));
        }
    }
    return sequenced(std::move(out));
}

}  // namespace flashfx::fixture

namespace flashfx::fixture {

// Trades at evenly spaced timestamps with the given prices in cents.
inline std::vector<TradeRecord> tape_from_cents(std::int64_t start_ts, std::int64_t step_ms,
                                                const std::vector<std::int64_t>& cents, bool iso = false) {
    std::vector<TradeRecord> out;
    for (std::size_t i = 0; i < cents.size(); ++i) {
        out.push_back(trade(start_ts + static_cast<std::int64_t>(i) * step_ms, cents[i] * 100, ExchangeId::NYSE, iso));
    }
    return sequenced(std::move(out));
}

// Random walk capped at max_run consecutive same-direction ticks.
inline std::vector<TradeRecord> capped_walk(std::mt19937_64& rng, std::size_t n, int max_run) {
    std::vector<TradeRecord> out;
    std::int64_t ts = 0, px = 500'000;
    int run = 0, last = 0;
    for (std::size_t i = 0; i < n; ++i) {
        ts += static_cast<std::int64_t>(rng() % 50);
        int d = static_cast<int>(rng() % 3) - 1;
        if (d != 0 && d == last && run >= max_run) d = -d;
        if (d != 0) {
            run = d == last ? run + 1 : 1;
            last = d;
        }
        px += d * 500;
        out.push_back(trade(ts, px));
    }
    return sequenced(std::move(out));
}

struct CrashKey {
    std::uint64_t first_seq;
    std::uint64_t last_seq;
    CrashDirection direction;
    auto operator<=>(const CrashKey&) const = default;
};

inline std::vector<CrashKey> crash_keys(const std::vector<CrashEvent>& crashes) {
    std::vector<CrashKey> out;
    for (const auto& c : crashes) out.push_back({c.trades.front().seq, c.trades.back().seq, c.direction});
    std::sort(out.begin(), out.end());
    return out;
}

inline std::vector<CrashKey> oracle_keys(const std::vector<TradeRecord>& t, const OracleThresholds& th = {}) {
    std::vector<CrashKey> out;
    for (auto dir : {CrashDirection::Down, CrashDirection::Up}) {
        for (const auto& c : oracle_crashes(t, dir, th)) out.push_back({t[c.first].seq, t[c.last].seq, dir});
    }
    std::sort(out.begin(), out.end());
    return out;
}

// Bundled fixture files, e.g. the replayed Goldman Sachs tape.
inline std::string data_path(const std::string& name) { return std::string(FLASHFX_TEST_DATA_DIR) + "/" + name; }

}  // namespace flashfx::fixture
