#include "flashfx/detect.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <tuple>

namespace flashfx {

std::string_view to_string(CrashDirection d) { return d == CrashDirection::Down ? "Down" : "Up"; }

CrashEvent make_crash(std::vector<TradeRecord> trades, CrashDirection direction, bool truncated) {
    CrashEvent c;
    c.direction = direction;
    c.truncated = truncated;
    if (!trades.empty()) {
        const TradeRecord& first = trades.front();
        const TradeRecord& last = trades.back();
        c.symbol = first.symbol;
        c.exchange = first.exchange;
        c.start_ts = first.ts;
        c.end_ts = last.ts;
        c.duration_ms = last.ts - first.ts;
        c.pct_change = (static_cast<double>(last.price.units()) /
                            static_cast<double>(first.price.units()) -
                        1.0) *
                       100.0;
        const TickDirection want =
            direction == CrashDirection::Down ? TickDirection::Down : TickDirection::Up;
        int iso = 0;
        for (std::size_t i = 0; i < trades.size(); ++i) {
            c.total_volume += trades[i].size;
            if (trades[i].is_iso) ++iso;
            if (i > 0 && tick_direction(trades[i - 1].price, trades[i].price) == want) ++c.tick_count;
        }
        c.n_trades = static_cast<int>(trades.size());
        c.iso_trades = iso;
        c.iso_fraction = static_cast<double>(iso) / static_cast<double>(trades.size());
    }
    c.trades = std::move(trades);
    return c;
}

// ---------------------------------------------------------------------------

bool CrashDetector::Run::qualifies(const Entry& start, const Entry& end) const {
    if (end.directional - start.directional < cfg_.min_ticks) return false;
    if (end.trade.ts - start.trade.ts > cfg_.max_window_ms) return false;
    const Price from = start.trade.price;
    const Price to = end.trade.price;
    if (dir_ == CrashDirection::Down ? !(to < from) : !(to > from)) return false;
    return relative_move_exceeds(from, to, move_micro_);
}

void CrashDetector::Run::restart(const TradeRecord& t) {
    buf_.clear();
    buf_.push_back({t, 0});
    pending_ = false;
}

void CrashDetector::Run::emit(std::vector<CrashEvent>& out, bool truncated) {
    std::vector<TradeRecord> trades;
    trades.reserve(buf_.size());
    for (auto& e : buf_) trades.push_back(std::move(e.trade));
    out.push_back(make_crash(std::move(trades), dir_, truncated));
    buf_.clear();
    pending_ = false;
}

void CrashDetector::Run::on_trade(const TradeRecord& t, TickDirection tick,
                                  std::vector<CrashEvent>& out) {
    const TickDirection with = dir_ == CrashDirection::Down ? TickDirection::Down : TickDirection::Up;
    const TickDirection against = dir_ == CrashDirection::Down ? TickDirection::Up : TickDirection::Down;
    if (buf_.empty()) {
        restart(t);
        return;
    }
    if (tick == against) {
        if (pending_) emit(out, false);
        restart(t);
        return;
    }
    const std::int64_t directional = buf_.back().directional + (tick == with ? 1 : 0);
    if (pending_) {
        if (t.ts - buf_.front().trade.ts <= cfg_.max_window_ms) {
            buf_.push_back({t, directional});
        } else {
            emit(out, false);
            restart(t);
        }
        return;
    }
    buf_.push_back({t, directional});
    while (t.ts - buf_.front().trade.ts > cfg_.max_window_ms) buf_.pop_front();
    // The earliest start has the largest move and the most ticks to t, so it
    // is the only candidate worth testing.
    if (buf_.size() >= 2 && qualifies(buf_.front(), buf_.back())) pending_ = true;
}

void CrashDetector::Run::finish(std::vector<CrashEvent>& out) {
    if (pending_) emit(out, true);
    buf_.clear();
    pending_ = false;
}

CrashDetector::CrashDetector(DetectorConfig config)
    : config_(config),
      move_micro_(pct_to_micro(config.min_move_pct)),
      down_(CrashDirection::Down, config_, move_micro_),
      up_(CrashDirection::Up, config_, move_micro_) {}

void CrashDetector::on_trade(const TradeRecord& t, std::vector<CrashEvent>& out) {
    const TickDirection tick = last_price_ ? tick_direction(*last_price_, t.price) : TickDirection::Zero;
    last_price_ = t.price;
    down_.on_trade(t, tick, out);
    up_.on_trade(t, tick, out);
}

void CrashDetector::finish(std::vector<CrashEvent>& out) {
    down_.finish(out);
    up_.finish(out);
}

std::vector<CrashEvent> detect_crashes(std::span<const TradeRecord> trades,
                                       const DetectorConfig& config) {
    CrashDetector det(config);
    std::vector<CrashEvent> out;
    for (const auto& t : trades) det.on_trade(t, out);
    det.finish(out);
    std::stable_sort(out.begin(), out.end(), [](const CrashEvent& a, const CrashEvent& b) {
        return std::tie(a.start_ts, a.direction) < std::tie(b.start_ts, b.direction);
    });
    return out;
}

void StreamDetector::on_trade(const TradeRecord& t) {
    auto key = std::make_pair(t.symbol, t.exchange);
    auto it = detectors_.find(key);
    if (it == detectors_.end()) it = detectors_.emplace(std::move(key), CrashDetector(config_)).first;
    it->second.on_trade(t, crashes_);
}

std::vector<CrashEvent> StreamDetector::finish() {
    for (auto& [key, det] : detectors_) det.finish(crashes_);
    std::vector<CrashEvent> out = std::move(crashes_);
    crashes_.clear();
    sort_crashes(out);
    return out;
}

void sort_crashes(std::vector<CrashEvent>& crashes) {
    std::stable_sort(crashes.begin(), crashes.end(), [](const CrashEvent& a, const CrashEvent& b) {
        const auto sa = a.first_seq();
        const auto sb = b.first_seq();
        return std::tie(a.symbol, a.start_ts, a.exchange, a.direction, sa) <
               std::tie(b.symbol, b.start_ts, b.exchange, b.direction, sb);
    });
}

bool crash_invariants_hold(const CrashEvent& c, const DetectorConfig& config) {
    if (c.trades.size() < 2 || c.n_trades != static_cast<int>(c.trades.size())) return false;
    if (c.tick_count < config.min_ticks) return false;
    if (c.duration_ms > config.max_window_ms || c.duration_ms != c.end_ts - c.start_ts) return false;
    if (!relative_move_exceeds(c.trades.front().price, c.trades.back().price,
                               pct_to_micro(config.min_move_pct))) {
        return false;
    }
    const TickDirection against =
        c.direction == CrashDirection::Down ? TickDirection::Up : TickDirection::Down;
    std::int64_t volume = 0;
    for (std::size_t i = 0; i < c.trades.size(); ++i) {
        volume += c.trades[i].size;
        if (c.trades[i].exchange != c.exchange || c.trades[i].symbol != c.symbol) return false;
        if (i > 0 && tick_direction(c.trades[i - 1].price, c.trades[i].price) == against) return false;
        if (i > 0 && c.trades[i].ts < c.trades[i - 1].ts) return false;
    }
    return volume == c.total_volume;
}

CrashStats crash_stats(std::span<const CrashEvent> crashes) {
    CrashStats s;
    s.total = crashes.size();
    if (crashes.empty()) return s;
    double pct_sum = 0.0;
    std::size_t pct_n = 0;
    double dur = 0.0, vol = 0.0, trades = 0.0, iso = 0.0;
    std::array<std::size_t, kVenueCount> per_venue{};
    for (const auto& c : crashes) {
        (c.direction == CrashDirection::Up ? s.up : s.down)++;
        const bool penny = !c.trades.empty() && c.trades.front().price < Price::from_cents(100);
        if (!penny && std::abs(c.pct_change) <= 100.0) {
            pct_sum += std::abs(c.pct_change);
            ++pct_n;
        }
        dur += static_cast<double>(c.duration_ms);
        vol += static_cast<double>(c.total_volume);
        trades += c.n_trades;
        iso += c.iso_trades;
        ++per_venue[venue_index(c.exchange)];
    }
    const double n = static_cast<double>(crashes.size());
    if (pct_n > 0) s.avg_pct_change = pct_sum / static_cast<double>(pct_n);
    s.avg_duration_ms = dur / n;
    s.avg_volume = vol / n;
    s.avg_trades = trades / n;
    if (trades > 0) s.iso_trade_pct = iso / trades * 100.0;
    for (std::size_t v = 0; v < kVenueCount; ++v) {
        s.exchange_share_pct[v] = static_cast<double>(per_venue[v]) / n * 100.0;
    }
    return s;
}

std::string format_crash_line(const CrashEvent& c) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%s,%.*s,%.*s,%lld,%lld,%d,%d,%.6f,%lld,%.6f", c.symbol.c_str(),
                  static_cast<int>(exchange_name(c.exchange).size()), exchange_name(c.exchange).data(),
                  static_cast<int>(to_string(c.direction).size()), to_string(c.direction).data(),
                  static_cast<long long>(c.start_ts), static_cast<long long>(c.end_ts), c.n_trades,
                  c.tick_count, c.pct_change, static_cast<long long>(c.total_volume), c.iso_fraction);
    return buf;
}

}  // namespace flashfx
