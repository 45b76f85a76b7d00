#include "flashfx/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace flashfx {

// ---- ExchangeBook ----------------------------------------------------------

void ExchangeBook::add(Side side, Price price, std::int64_t size) {
    if (!price.positive() || size <= 0) {
        throw Error(ErrorCode::DomainError, "book levels need a positive price and size");
    }
    (side == Side::Bid ? bids_ : offers_)[price].push_back(size);
}

void ExchangeBook::clear() {
    bids_.clear();
    offers_.clear();
}

namespace {

std::int64_t level_total(const std::deque<std::int64_t>& orders) {
    std::int64_t s = 0;
    for (auto q : orders) s += q;
    return s;
}

}  // namespace

std::optional<BookLevel> ExchangeBook::top(Side side) const {
    if (side == Side::Bid) {
        if (bids_.empty()) return std::nullopt;
        auto it = bids_.rbegin();
        return BookLevel{it->first, level_total(it->second)};
    }
    if (offers_.empty()) return std::nullopt;
    auto it = offers_.begin();
    return BookLevel{it->first, level_total(it->second)};
}

std::vector<BookLevel> ExchangeBook::levels(Side side) const {
    std::vector<BookLevel> out;
    if (side == Side::Bid) {
        for (auto it = bids_.rbegin(); it != bids_.rend(); ++it) out.push_back({it->first, level_total(it->second)});
    } else {
        for (const auto& [p, q] : offers_) out.push_back({p, level_total(q)});
    }
    return out;
}

std::int64_t ExchangeBook::take_top(Side side, std::int64_t qty) {
    Ladder& ladder = side == Side::Bid ? bids_ : offers_;
    if (ladder.empty() || qty <= 0) return 0;
    auto it = side == Side::Bid ? std::prev(ladder.end()) : ladder.begin();
    auto& orders = it->second;
    std::int64_t filled = 0;
    while (qty > 0 && !orders.empty()) {
        const std::int64_t f = std::min(qty, orders.front());
        orders.front() -= f;
        qty -= f;
        filled += f;
        if (orders.front() == 0) orders.pop_front();
    }
    if (orders.empty()) ladder.erase(it);
    return filled;
}

ExchangeTop ExchangeBook::display() const {
    ExchangeTop t;
    if (auto b = top(Side::Bid)) {
        t.bid = b->price;
        t.bid_size = b->size;
    }
    if (auto o = top(Side::Offer)) {
        t.offer = o->price;
        t.offer_size = o->size;
    }
    return t;
}

bool ExchangeBook::invariants_hold() const {
    for (const Ladder* l : {&bids_, &offers_}) {
        for (const auto& [p, orders] : *l) {
            if (!p.positive() || orders.empty()) return false;
            for (auto q : orders) {
                if (q <= 0) return false;
            }
        }
    }
    return true;
}

// ---- Market ----------------------------------------------------------------

Market::Market(std::string symbol, std::vector<ExchangeId> venues, std::int64_t sip_latency_ms)
    : symbol_(std::move(symbol)), venues_(std::move(venues)), latency_(sip_latency_ms) {
    for (ExchangeId v : venues_) {
        books_[v];
        shown_[v];
    }
}

ExchangeBook& Market::book(ExchangeId v) {
    auto it = books_.find(v);
    if (it == books_.end()) throw Error(ErrorCode::InvalidSpec, "venue not in market");
    return it->second;
}

const ExchangeBook& Market::book(ExchangeId v) const {
    auto it = books_.find(v);
    if (it == books_.end()) throw Error(ErrorCode::InvalidSpec, "venue not in market");
    return it->second;
}

void Market::publish(std::int64_t ts) {
    for (ExchangeId v : venues_) {
        ExchangeTop now = books_.at(v).display();
        ExchangeTop& last = shown_.at(v);
        if (now.bid == last.bid && now.bid_size == last.bid_size && now.offer == last.offer &&
            now.offer_size == last.offer_size) {
            continue;
        }
        last = now;
        QuoteRecord q;
        q.ts = ts + latency_;
        q.symbol = symbol_;
        q.exchange = v;
        q.bid = now.bid;
        q.bid_size = now.bid_size;
        q.offer = now.offer;
        q.offer_size = now.offer_size;
        quotes_.push_back(std::move(q));
    }
}

void Market::print(std::int64_t ts, ExchangeId v, Price price, std::int64_t size, bool iso) {
    TradeRecord t;
    t.ts = ts;
    t.symbol = symbol_;
    t.exchange = v;
    t.price = price;
    t.size = size;
    t.is_iso = iso;
    t.condition = iso ? "F" : "@";
    trades_.push_back(std::move(t));
}

// ---- order entry -----------------------------------------------------------

namespace {

Side hit_side(CrashDirection d) { return d == CrashDirection::Down ? Side::Bid : Side::Offer; }

// Whether a is a better price than b for the side being hit.
bool better(Side side, Price a, Price b) { return side == Side::Bid ? a > b : a < b; }

bool within_limit(Side side, Price p, Price limit) { return side == Side::Bid ? p >= limit : p <= limit; }

// Takes the target's best level once per interval, starting at first_ts.
void walk_ladder(Market& m, ExchangeId venue, Side side, std::optional<Price> limit, std::int64_t& remaining,
                 std::int64_t first_ts, std::int64_t interval, bool iso, std::vector<TradeRecord>& out) {
    std::int64_t ts = first_ts;
    while (remaining > 0) {
        auto top = m.book(venue).top(side);
        if (!top || (limit && !within_limit(side, top->price, *limit))) break;
        const std::int64_t filled = m.book(venue).take_top(side, remaining);
        remaining -= filled;
        m.print(ts, venue, top->price, filled, iso);
        out.push_back(m.trades().back());
        m.publish(ts);
        ts += interval;
    }
}

}  // namespace

IsoPackage make_iso_package(const Market& m, CrashDirection dir, ExchangeId target, Price limit,
                            std::int64_t size, std::int64_t ts, std::int64_t fill_interval_ms) {
    IsoPackage pkg;
    pkg.direction = dir;
    pkg.target = target;
    pkg.limit = limit;
    pkg.size = size;
    pkg.ts = ts;
    pkg.fill_interval_ms = fill_interval_ms;
    const Side side = hit_side(dir);
    for (ExchangeId v : m.venues()) {
        if (v == target) continue;
        auto top = m.book(v).top(side);
        if (top && better(side, top->price, limit)) pkg.companions.push_back({v, top->price, top->size});
    }
    return pkg;
}

std::vector<TradeRecord> submit_iso_package(Market& m, const IsoPackage& pkg) {
    const Side side = hit_side(pkg.direction);
    if (m.book(pkg.target).empty(side)) {
        throw Error(ErrorCode::EmptyBook, std::string("no resting ") + (side == Side::Bid ? "bids" : "offers") +
                                              " at " + std::string(exchange_name(pkg.target)));
    }
    std::vector<TradeRecord> out;
    std::int64_t remaining = pkg.size;

    if (pkg.depth_protection) {
        // Every displayed level anywhere is protected, so the order consumes
        // the consolidated book in price priority.
        std::int64_t ts = pkg.ts + pkg.fill_interval_ms;
        while (remaining > 0) {
            std::optional<std::pair<ExchangeId, BookLevel>> best;
            for (ExchangeId v : m.venues()) {
                auto top = m.book(v).top(side);
                if (top && (!best || better(side, top->price, best->second.price))) best = {{v, *top}};
            }
            if (!best || !within_limit(side, best->second.price, pkg.limit)) break;
            const std::int64_t filled = m.book(best->first).take_top(side, remaining);
            remaining -= filled;
            m.print(ts, best->first, best->second.price, filled, true);
            out.push_back(m.trades().back());
            m.publish(ts);
            ts += pkg.fill_interval_ms;
        }
        return out;
    }

    for (const CompanionOrder& c : pkg.companions) {
        auto top = m.book(c.venue).top(side);
        if (!top || top->price != c.price) continue;
        const std::int64_t filled = m.book(c.venue).take_top(side, c.size);
        if (filled == 0) continue;
        m.print(pkg.ts, c.venue, c.price, filled, true);
        out.push_back(m.trades().back());
    }
    if (!pkg.companions.empty()) m.publish(pkg.ts);
    walk_ladder(m, pkg.target, side, pkg.limit, remaining, pkg.ts + pkg.fill_interval_ms, pkg.fill_interval_ms,
                true, out);
    return out;
}

std::vector<TradeRecord> submit_routable_order(Market& m, const RoutableOrder& order) {
    const Side side = hit_side(order.direction);
    const auto local = m.book(order.venue).top(side);

    std::vector<std::pair<ExchangeId, BookLevel>> away;
    for (ExchangeId v : m.venues()) {
        if (v == order.venue) continue;
        auto top = m.book(v).top(side);
        if (!top) continue;
        if (local && !better(side, top->price, local->price)) continue;
        if (order.limit && !within_limit(side, top->price, *order.limit)) continue;
        away.emplace_back(v, *top);
    }
    if (!local && away.empty()) {
        throw Error(ErrorCode::EmptyBook, "nothing to execute against for a routable order");
    }
    std::stable_sort(away.begin(), away.end(),
                     [side](const auto& a, const auto& b) { return better(side, a.second.price, b.second.price); });

    std::vector<TradeRecord> out;
    std::int64_t remaining = order.size;
    for (const auto& [v, top] : away) {
        if (remaining == 0) break;
        const std::int64_t filled = m.book(v).take_top(side, std::min(remaining, top.size));
        remaining -= filled;
        m.print(order.ts, v, top.price, filled, false);
        out.push_back(m.trades().back());
    }
    if (!out.empty()) m.publish(order.ts);
    walk_ladder(m, order.venue, side, order.limit, remaining, order.ts + order.fill_interval_ms,
                order.fill_interval_ms, false, out);
    return out;
}

// ---- scenario spec ---------------------------------------------------------

std::string_view to_string(ScenarioKind k) {
    switch (k) {
        case ScenarioKind::IsoSweep: return "IsoSweep";
        case ScenarioKind::AutoRouting: return "AutoRouting";
        case ScenarioKind::BenignRandomWalk: return "BenignRandomWalk";
        case ScenarioKind::Mixed: return "Mixed";
    }
    return "IsoSweep";
}

namespace {

using json = nlohmann::json;

[[noreturn]] void bad_spec(const std::string& msg) { throw Error(ErrorCode::InvalidSpec, msg); }

ScenarioKind parse_kind(const std::string& s) {
    for (auto k : {ScenarioKind::IsoSweep, ScenarioKind::AutoRouting, ScenarioKind::BenignRandomWalk,
                   ScenarioKind::Mixed}) {
        if (s == to_string(k)) return k;
    }
    bad_spec("unknown scenario kind '" + s + "'");
}

ExchangeId parse_venue(const std::string& s) {
    const ExchangeId e = parse_exchange(s);
    if (e == ExchangeId::Other) bad_spec("unknown venue '" + s + "'");
    return e;
}

CrashDirection parse_direction(const std::string& s) {
    if (s == "down" || s == "Down") return CrashDirection::Down;
    if (s == "up" || s == "Up") return CrashDirection::Up;
    bad_spec("direction must be 'down' or 'up', got '" + s + "'");
}

template <class T>
void read(const json& j, const char* key, T& dst) {
    if (!j.contains(key)) return;
    try {
        dst = j.at(key).get<T>();
    } catch (const json::exception& e) {
        bad_spec(std::string("field '") + key + "': " + e.what());
    }
}

void check_keys(const json& j, std::initializer_list<std::string_view> allowed, const char* where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
            bad_spec(std::string("unknown field '") + it.key() + "' in " + where);
        }
    }
}

void validate(const ScenarioSpec& s) {
    if (s.venues.empty()) bad_spec("at least one venue is required");
    for (std::size_t i = 0; i < s.venues.size(); ++i) {
        for (std::size_t j = i + 1; j < s.venues.size(); ++j) {
            if (s.venues[i] == s.venues[j]) bad_spec("duplicate venue");
        }
    }
    if (s.symbol.empty()) bad_spec("symbol must not be empty");
    if (!(s.start_price >= 1.0)) bad_spec("start_price must be at least 1");
    if (!(s.spread_pct > 0.0 && s.spread_pct < 50.0)) bad_spec("spread_pct must be in (0, 50)");
    if (!(s.post_spread_widening_pct >= 0.0 && s.spread_pct + s.post_spread_widening_pct < 50.0)) {
        bad_spec("post_spread_widening_pct out of range");
    }
    if (s.quote_interval_ms < 2) bad_spec("quote_interval_ms must be at least 2");
    if (s.duration_ms <= 0 || s.duration_ms > kSessionEndMs) bad_spec("duration_ms out of range");
    if (!(s.trade_probability >= 0.0 && s.trade_probability <= 1.0)) bad_spec("trade_probability must be in [0, 1]");
    if (s.run_cap < 1) bad_spec("run_cap must be positive");
    if (s.sip_latency_ms < 0) bad_spec("sip_latency_ms must be non-negative");
    const CrashParams& c = s.crash;
    if (c.venue && std::find(s.venues.begin(), s.venues.end(), *c.venue) == s.venues.end()) {
        bad_spec("crash venue is not among the venues");
    }
    if (c.levels < 1 || c.level_size <= 0 || c.protected_size <= 0 || c.deep_levels < 0 || c.deep_size <= 0) {
        bad_spec("crash ladder parameters must be positive");
    }
    if (!(c.level_step_pct > 0.0 && c.level_step_pct * c.levels < 50.0)) bad_spec("level_step_pct out of range");
    if (c.fill_interval_ms < 1) bad_spec("fill_interval_ms must be at least 1");
    if (s.kind == ScenarioKind::IsoSweep || s.kind == ScenarioKind::AutoRouting) {
        if (c.time_ms < 2000 || c.time_ms + 2000 > s.duration_ms) {
            bad_spec("crash time must leave 2000 ms of background on each side");
        }
    }
    if (s.kind == ScenarioKind::Mixed) {
        if (s.mixed_crashes < 1) bad_spec("mixed_crashes must be positive");
        if (s.duration_ms / (s.mixed_crashes + 1) < 6000) bad_spec("too many crashes for the duration");
    }
}

}  // namespace

ScenarioSpec parse_scenario_spec(std::string_view text) {
    json j;
    try {
        j = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::InvalidSpec, "invalid JSON at byte " + std::to_string(e.byte) + ": " + e.what());
    }
    if (!j.is_object()) bad_spec("scenario spec must be a JSON object");
    check_keys(j,
               {"kind", "seed", "symbol", "venues", "start_price", "spread_pct", "post_spread_widening_pct",
                "duration_ms", "quote_interval_ms", "trade_probability", "run_cap", "sip_latency_ms",
                "depth_protection", "mixed_crashes", "crash"},
               "scenario");
    if (!j.contains("kind")) bad_spec("missing field 'kind'");

    ScenarioSpec s;
    std::string kind;
    read(j, "kind", kind);
    s.kind = parse_kind(kind);
    read(j, "seed", s.seed);
    read(j, "symbol", s.symbol);
    if (j.contains("venues")) {
        std::vector<std::string> names;
        read(j, "venues", names);
        s.venues.clear();
        for (const auto& n : names) s.venues.push_back(parse_venue(n));
    }
    read(j, "start_price", s.start_price);
    read(j, "spread_pct", s.spread_pct);
    read(j, "post_spread_widening_pct", s.post_spread_widening_pct);
    read(j, "duration_ms", s.duration_ms);
    read(j, "quote_interval_ms", s.quote_interval_ms);
    read(j, "trade_probability", s.trade_probability);
    read(j, "run_cap", s.run_cap);
    read(j, "sip_latency_ms", s.sip_latency_ms);
    read(j, "depth_protection", s.depth_protection);
    read(j, "mixed_crashes", s.mixed_crashes);
    if (j.contains("crash")) {
        const json& c = j.at("crash");
        if (!c.is_object()) bad_spec("'crash' must be an object");
        check_keys(c,
                   {"venue", "direction", "time_ms", "levels", "level_step_pct", "level_size", "protected_size",
                    "deep_levels", "deep_size", "fill_interval_ms"},
                   "crash");
        if (c.contains("venue")) {
            std::string v;
            read(c, "venue", v);
            s.crash.venue = parse_venue(v);
        }
        if (c.contains("direction")) {
            std::string d;
            read(c, "direction", d);
            s.crash.direction = parse_direction(d);
        }
        read(c, "time_ms", s.crash.time_ms);
        read(c, "levels", s.crash.levels);
        read(c, "level_step_pct", s.crash.level_step_pct);
        read(c, "level_size", s.crash.level_size);
        read(c, "protected_size", s.crash.protected_size);
        read(c, "deep_levels", s.crash.deep_levels);
        read(c, "deep_size", s.crash.deep_size);
        read(c, "fill_interval_ms", s.crash.fill_interval_ms);
    }
    validate(s);
    return s;
}

ScenarioSpec load_scenario_spec(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_scenario_spec(ss.str());
}

// ---- generation ------------------------------------------------------------

namespace {

constexpr std::int64_t kCent = 100;        // price units
constexpr std::int64_t kQuietMs = 2000;    // no background around a crash
constexpr std::int64_t kSetupLeadMs = 1200;

struct CrashPlan {
    ScenarioKind kind;
    ExchangeId venue;
    CrashDirection direction;
    std::int64_t time_ms;
};

// Caps same-direction trade-to-trade ticks per venue so background prints can
// never form a crash.
class RunCap {
public:
    explicit RunCap(int cap) : cap_(cap) {}

    bool allows(ExchangeId v, Price p) const {
        const State& s = state_[venue_index(v)];
        if (!s.last) return true;
        const TickDirection d = tick_direction(*s.last, p);
        return d == TickDirection::Zero || d != s.dir || s.count < cap_;
    }

    void record(ExchangeId v, Price p) {
        State& s = state_[venue_index(v)];
        if (s.last) {
            const TickDirection d = tick_direction(*s.last, p);
            if (d != TickDirection::Zero) {
                s.count = d == s.dir ? s.count + 1 : 1;
                s.dir = d;
            }
        }
        s.last = p;
    }

private:
    struct State {
        std::optional<Price> last;
        TickDirection dir = TickDirection::Zero;
        int count = 0;
    };
    int cap_;
    std::array<State, kVenueCount> state_{};
};

class Generator {
public:
    explicit Generator(const ScenarioSpec& spec)
        : spec_(spec),
          rng_(spec.seed),
          market_(spec.symbol, spec.venues, spec.sip_latency_ms),
          cap_(spec.run_cap),
          mid_(Price::from_dollars(spec.start_price).units()),
          spread_pct_(spec.spread_pct) {}

    ScenarioOutput run();

private:
    std::uint64_t draw(std::uint64_t n) { return rng_() % n; }

    std::vector<CrashPlan> plan();
    Price bid_around(std::int64_t mid) const {
        return Price(std::llround(static_cast<double>(mid) * (1.0 - spread_pct_ / 200.0)));
    }
    Price offer_around(std::int64_t mid) const {
        return Price(std::llround(static_cast<double>(mid) * (1.0 + spread_pct_ / 200.0)));
    }
    void requote(std::int64_t ts);
    void background_trades(std::int64_t from, std::int64_t to);
    std::int64_t run_crash(const CrashPlan& p);
    void record_prints(std::size_t from);
    void label_fleeting(std::vector<QuoteRecord>& quotes);

    const ScenarioSpec& spec_;
    std::mt19937_64 rng_;
    Market market_;
    RunCap cap_;
    std::int64_t mid_;
    double spread_pct_;
    std::vector<CrashLabel> labels_;
    std::vector<std::vector<TradeRecord>> crash_trades_;
};

std::vector<CrashPlan> Generator::plan() {
    std::vector<CrashPlan> plans;
    const ExchangeId first = spec_.crash.venue.value_or(spec_.venues.front());
    switch (spec_.kind) {
        case ScenarioKind::BenignRandomWalk: break;
        case ScenarioKind::IsoSweep:
        case ScenarioKind::AutoRouting:
            plans.push_back({spec_.kind, first, spec_.crash.direction, spec_.crash.time_ms});
            break;
        case ScenarioKind::Mixed: {
            const std::int64_t spacing = spec_.duration_ms / (spec_.mixed_crashes + 1);
            for (int i = 0; i < spec_.mixed_crashes; ++i) {
                CrashPlan p;
                p.kind = draw(2) == 0 ? ScenarioKind::IsoSweep : ScenarioKind::AutoRouting;
                p.venue = spec_.venues[draw(spec_.venues.size())];
                p.direction = draw(2) == 0 ? CrashDirection::Down : CrashDirection::Up;
                p.time_ms = spacing * (i + 1);
                plans.push_back(p);
            }
            break;
        }
    }
    return plans;
}

void Generator::requote(std::int64_t ts) {
    const Price bid = bid_around(mid_);
    const Price offer = offer_around(mid_);
    for (ExchangeId v : spec_.venues) {
        ExchangeBook& b = market_.book(v);
        b.clear();
        b.add(Side::Bid, bid, 100 * static_cast<std::int64_t>(1 + draw(10)));
        b.add(Side::Offer, offer, 100 * static_cast<std::int64_t>(1 + draw(10)));
    }
    market_.publish(ts);
}

void Generator::background_trades(std::int64_t from, std::int64_t to) {
    if (to - from < 2) return;
    const auto threshold = static_cast<std::uint64_t>(std::llround(spec_.trade_probability * 1000.0));
    for (ExchangeId v : spec_.venues) {
        if (draw(1000) >= threshold) continue;
        const std::int64_t ts = from + 1 + static_cast<std::int64_t>(draw(static_cast<std::uint64_t>(to - from - 1)));
        const Side side = draw(2) == 0 ? Side::Bid : Side::Offer;
        const std::int64_t size = 100 * static_cast<std::int64_t>(1 + draw(5));
        const bool iso = draw(10) == 0;
        auto top = market_.book(v).top(side);
        if (!top || !cap_.allows(v, top->price)) continue;
        cap_.record(v, top->price);
        market_.print(ts, v, top->price, size, iso);
    }
}

void Generator::record_prints(std::size_t from) {
    const auto& t = market_.trades();
    for (std::size_t i = from; i < t.size(); ++i) cap_.record(t[i].exchange, t[i].price);
}

std::int64_t Generator::run_crash(const CrashPlan& p) {
    const CrashParams& c = spec_.crash;
    const bool down = p.direction == CrashDirection::Down;
    const Side side = down ? Side::Bid : Side::Offer;
    const Side other = down ? Side::Offer : Side::Bid;

    // Setup: the crash venue's ladder starts one step behind the protected
    // quotes shown by every other venue.
    const Price bid0 = bid_around(mid_);
    const Price offer0 = offer_around(mid_);
    const Price inside = down ? bid0 : offer0;
    const Price opposite = down ? offer0 : bid0;
    const std::int64_t step = std::max<std::int64_t>(
        1, std::llround(static_cast<double>(inside.units()) * c.level_step_pct / 100.0));
    const std::int64_t dir = down ? -1 : 1;
    auto level = [&](int i) { return Price(inside.units() + dir * step * i); };
    if (!level(c.levels).positive() || !level(1).positive() ||
        Price(level(1).units() + dir * kCent * c.deep_levels).units() <= 0) {
        throw Error(ErrorCode::InvalidSpec, "crash ladder reaches a non-positive price");
    }

    for (ExchangeId v : spec_.venues) {
        ExchangeBook& b = market_.book(v);
        b.clear();
        b.add(other, opposite, c.protected_size);
        if (v == p.venue) {
            for (int i = 1; i <= c.levels; ++i) b.add(side, level(i), c.level_size);
        } else {
            b.add(side, inside, c.protected_size);
            for (int j = 1; j <= c.deep_levels; ++j) {
                b.add(side, Price(level(1).units() + dir * kCent * j), c.deep_size);
            }
        }
    }
    market_.publish(p.time_ms - kSetupLeadMs);

    const std::size_t first_print = market_.trades().size();
    std::vector<TradeRecord> fills;
    const std::int64_t sweep_size = c.levels * c.level_size;
    if (p.kind == ScenarioKind::IsoSweep) {
        IsoPackage pkg = make_iso_package(market_, p.direction, p.venue, level(c.levels), sweep_size, p.time_ms,
                                          c.fill_interval_ms);
        pkg.depth_protection = spec_.depth_protection;
        fills = submit_iso_package(market_, pkg);
    } else {
        RoutableOrder o;
        o.direction = p.direction;
        o.venue = p.venue;
        o.ts = p.time_ms;
        o.fill_interval_ms = c.fill_interval_ms;
        o.limit = level(c.levels);
        std::int64_t routed = 0;
        for (ExchangeId v : spec_.venues) {
            if (v == p.venue) continue;
            if (auto top = market_.book(v).top(side)) {
                if (better(side, top->price, level(1))) routed += top->size;
            }
        }
        o.size = routed + sweep_size;
        fills = submit_routable_order(market_, o);
    }
    record_prints(first_print);

    std::vector<TradeRecord> at_venue;
    std::int64_t end = p.time_ms;
    for (const auto& t : fills) {
        end = std::max(end, t.ts);
        if (t.exchange == p.venue) at_venue.push_back(t);
    }

    CrashLabel label;
    label.kind = p.kind;
    label.symbol = spec_.symbol;
    label.venue = p.venue;
    label.direction = p.direction;
    if (!at_venue.empty()) {
        label.start_ts = at_venue.front().ts;
        label.end_ts = at_venue.back().ts;
        label.n_trades = static_cast<int>(at_venue.size());
        // Expected detection from the construction itself: one level per
        // trade, default thresholds.
        const DetectorConfig d;
        const bool detectable = !spec_.depth_protection && label.n_trades - 1 >= d.min_ticks &&
                                label.end_ts - label.start_ts <= d.max_window_ms &&
                                relative_move_exceeds(at_venue.front().price, at_venue.back().price,
                                                      pct_to_micro(d.min_move_pct));
        if (detectable) {
            label.expected_type =
                p.kind == ScenarioKind::IsoSweep ? CrashType::IsoInitiated : CrashType::AutoRoutingInitiated;
        }
        mid_ = at_venue.back().price.units();
    }
    labels_.push_back(label);
    crash_trades_.push_back(std::move(at_venue));

    spread_pct_ = spec_.spread_pct + spec_.post_spread_widening_pct;
    requote(end + 1);
    return end;
}

// A crash is fleeting when none of its trades printed at or through the
// crash-side best quote the consolidated feed showed at that moment. Quotes
// stamped at the trade's own millisecond are not yet visible.
void Generator::label_fleeting(std::vector<QuoteRecord>& quotes) {
    for (std::size_t k = 0; k < labels_.size(); ++k) {
        const bool down = labels_[k].direction == CrashDirection::Down;
        bool hit = false;
        for (const TradeRecord& t : crash_trades_[k]) {
            std::array<std::optional<ExchangeTop>, kVenueCount> shown{};
            for (const QuoteRecord& q : quotes) {
                if (q.ts >= t.ts) break;
                ExchangeTop top;
                top.bid = q.bid;
                top.bid_size = q.bid_size;
                top.offer = q.offer;
                top.offer_size = q.offer_size;
                shown[venue_index(q.exchange)] = top;
            }
            std::optional<Price> best;
            for (const auto& s : shown) {
                if (!s) continue;
                if (down && s->has_bid() && (!best || s->bid > *best)) best = s->bid;
                if (!down && s->has_offer() && (!best || s->offer < *best)) best = s->offer;
            }
            if (best && (down ? t.price >= *best : t.price <= *best)) {
                hit = true;
                break;
            }
        }
        labels_[k].fleeting = !crash_trades_[k].empty() && !hit;
    }
}

ScenarioOutput Generator::run() {
    const std::vector<CrashPlan> plans = plan();
    std::size_t next = 0;
    std::int64_t t = 0;
    while (t < spec_.duration_ms) {
        if (next < plans.size() && t >= plans[next].time_ms - kQuietMs) {
            const std::int64_t end = run_crash(plans[next++]);
            const std::int64_t resume = end + kQuietMs;
            t = (resume + spec_.quote_interval_ms - 1) / spec_.quote_interval_ms * spec_.quote_interval_ms;
            continue;
        }
        if (t > 0) {
            const std::int64_t move = draw(2) == 0 ? -kCent : kCent;
            mid_ = std::max<std::int64_t>(mid_ + move, Price::kScale);
        }
        requote(t);
        std::int64_t until = std::min(t + spec_.quote_interval_ms, spec_.duration_ms);
        if (next < plans.size()) until = std::min(until, plans[next].time_ms - kQuietMs);
        background_trades(t, until);
        t += spec_.quote_interval_ms;
    }

    ScenarioOutput out;
    out.spec = spec_;
    out.trades = market_.trades();
    out.quotes = market_.quotes();
    auto by_ts = [](const auto& a, const auto& b) { return a.ts < b.ts; };
    std::stable_sort(out.trades.begin(), out.trades.end(), by_ts);
    std::stable_sort(out.quotes.begin(), out.quotes.end(), by_ts);
    label_fleeting(out.quotes);
    out.labels = labels_;
    return out;
}

}  // namespace

ScenarioOutput generate_scenario(const ScenarioSpec& spec) {
    validate(spec);
    Generator g(spec);
    return g.run();
}

std::string ScenarioOutput::trades_csv() const {
    std::string s(kTradeHeader);
    s += '\n';
    for (const auto& t : trades) {
        s += format_trade_line(t);
        s += '\n';
    }
    return s;
}

std::string ScenarioOutput::quotes_csv() const {
    std::string s(kQuoteHeader);
    s += '\n';
    for (const auto& q : quotes) {
        s += format_quote_line(q);
        s += '\n';
    }
    return s;
}

std::string ScenarioOutput::label_json() const {
    nlohmann::ordered_json j;
    j["kind"] = std::string(to_string(spec.kind));
    j["seed"] = spec.seed;
    j["symbol"] = spec.symbol;
    j["sip_latency_ms"] = spec.sip_latency_ms;
    j["depth_protection"] = spec.depth_protection;
    j["post_spread_widening_pct"] = spec.post_spread_widening_pct;
    auto crashes = nlohmann::ordered_json::array();
    for (const auto& l : labels) {
        nlohmann::ordered_json c;
        c["kind"] = std::string(to_string(l.kind));
        c["symbol"] = l.symbol;
        c["exchange"] = std::string(exchange_name(l.venue));
        c["direction"] = std::string(to_string(l.direction));
        c["start_ts"] = l.start_ts;
        c["end_ts"] = l.end_ts;
        c["n_trades"] = l.n_trades;
        if (l.expected_type) {
            c["expected_type"] = std::string(to_string(*l.expected_type));
            c["expected_type_code"] = static_cast<int>(*l.expected_type);
        } else {
            c["expected_type"] = nullptr;
            c["expected_type_code"] = nullptr;
        }
        c["fleeting"] = l.fleeting;
        crashes.push_back(std::move(c));
    }
    j["crashes"] = std::move(crashes);
    return j.dump(2) + "\n";
}

std::vector<std::filesystem::path> write_scenario(const ScenarioOutput& out, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const std::vector<std::pair<std::filesystem::path, std::string>> files = {
        {dir / "trades.csv", out.trades_csv()},
        {dir / "quotes.csv", out.quotes_csv()},
        {dir / "label.json", out.label_json()},
    };
    std::vector<std::filesystem::path> paths;
    for (const auto& [path, content] : files) {
        std::ofstream f(path, std::ios::binary);
        f << content;
        if (!f) throw Error(ErrorCode::IoError, "cannot write " + path.string());
        paths.push_back(path);
    }
    return paths;
}

}  // namespace flashfx
