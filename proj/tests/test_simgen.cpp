#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <set>

#include <unistd.h>

#include "flashfx/simgen.hpp"
#include "scenario_check.hpp"
#include "support.hpp"

using namespace flashfx;
namespace fs = std::filesystem;

namespace {

constexpr std::int64_t c(std::int64_t cents) { return cents * 100; }

// NYSE holds n bid levels from 100.00 down in 0.1% steps; ARCA shows a
// protected bid of 500 at `away_bid`.
Market ladder_market(int n, std::int64_t away_bid, std::int64_t latency = 10) {
    Market m("SIM", {ExchangeId::NYSE, ExchangeId::ARCA}, latency);
    for (int i = 0; i < n; ++i) m.book(ExchangeId::NYSE).add(Side::Bid, Price(c(10000) - i * 1000), 500);
    m.book(ExchangeId::NYSE).add(Side::Offer, Price::from_cents(10010), 500);
    m.book(ExchangeId::ARCA).add(Side::Bid, Price::from_cents(away_bid), 500);
    m.book(ExchangeId::ARCA).add(Side::Offer, Price::from_cents(10010), 500);
    m.publish(0);
    return m;
}

std::vector<TradeRecord> at(const std::vector<TradeRecord>& t, ExchangeId v) {
    std::vector<TradeRecord> out;
    for (const auto& x : t) {
        if (x.exchange == v) out.push_back(x);
    }
    return out;
}

std::int64_t resting(const Market& m, Side s) {
    std::int64_t n = 0;
    for (ExchangeId v : m.venues()) {
        for (const auto& l : m.book(v).levels(s)) n += l.size;
    }
    return n;
}

ScenarioSpec spec(ScenarioKind kind, std::uint64_t seed) {
    ScenarioSpec s;
    s.kind = kind;
    s.seed = seed;
    return s;
}

}  // namespace

TEST(ExchangeBook, FifoWithinLevel) {
    ExchangeBook b;
    b.add(Side::Bid, Price::from_cents(100), 300);
    b.add(Side::Bid, Price::from_cents(100), 200);
    b.add(Side::Bid, Price::from_cents(99), 100);
    b.add(Side::Offer, Price::from_cents(101), 100);
    EXPECT_EQ(b.top(Side::Bid)->size, 500);
    EXPECT_EQ(b.take_top(Side::Bid, 350), 350);
    EXPECT_EQ(b.top(Side::Bid)->size, 150);
    EXPECT_EQ(b.take_top(Side::Bid, 1000), 150);
    EXPECT_EQ(b.top(Side::Bid)->price, Price::from_cents(99));
    const auto d = b.display();
    EXPECT_EQ(d.bid, Price::from_cents(99));
    EXPECT_EQ(d.offer_size, 100);
    EXPECT_TRUE(b.invariants_hold());
    const auto lv = b.levels(Side::Bid);
    ASSERT_EQ(lv.size(), 1u);
}

TEST(IsoPackage, CompanionsMatchProtectedDepth) {
    Market m = ladder_market(12, 10001);
    const Price limit(c(10000) - 11 * 1000);
    const auto pkg = make_iso_package(m, CrashDirection::Down, ExchangeId::NYSE, limit, 6000, 100);
    ASSERT_EQ(pkg.companions.size(), 1u);
    EXPECT_EQ(pkg.companions[0].venue, ExchangeId::ARCA);
    EXPECT_EQ(pkg.companions[0].size, 500);
    const std::int64_t before = resting(m, Side::Bid);
    const auto trades = submit_iso_package(m, pkg);
    ASSERT_EQ(trades.size(), 13u);
    std::int64_t filled = 0;
    for (const auto& t : trades) {
        EXPECT_TRUE(t.is_iso);
        EXPECT_GE(t.price, limit);
        filled += t.size;
    }
    EXPECT_EQ(before - resting(m, Side::Bid), filled);
    const auto sweep = at(trades, ExchangeId::NYSE);
    ASSERT_EQ(sweep.size(), 12u);
    for (std::size_t i = 1; i < sweep.size(); ++i) {
        EXPECT_LT(sweep[i].price, sweep[i - 1].price);
        EXPECT_EQ(sweep[i].ts, sweep[i - 1].ts + 1);
    }
    EXPECT_NEAR((sweep.back().price.dollars() / sweep.front().price.dollars() - 1) * 100, -1.1, 1e-9);
    EXPECT_EQ(detect_crashes(fixture::sequenced(sweep)).size(), 1u);
    EXPECT_TRUE(m.book(ExchangeId::NYSE).invariants_hold());
}

TEST(IsoPackage, LimitAtThirdLevel) {
    Market m = ladder_market(12, 9970);
    const Price limit(c(10000) - 2 * 1000);
    const auto trades = submit_iso_package(m, make_iso_package(m, CrashDirection::Down, ExchangeId::NYSE, limit, 6000, 100));
    ASSERT_EQ(trades.size(), 3u);
    for (const auto& t : trades) EXPECT_GE(t.price, limit);
    EXPECT_EQ(m.book(ExchangeId::NYSE).top(Side::Bid)->price, Price(c(10000) - 3 * 1000));
}

TEST(IsoPackage, SmallSweepIsOneTrade) {
    Market m = ladder_market(12, 8900);
    const auto trades =
        submit_iso_package(m, make_iso_package(m, CrashDirection::Down, ExchangeId::NYSE, Price(c(9000)), 300, 100));
    ASSERT_EQ(trades.size(), 1u);
    EXPECT_EQ(trades[0].size, 300);
    EXPECT_TRUE(detect_crashes(fixture::sequenced(trades)).empty());
}

TEST(IsoPackage, EmptyBookThrows) {
    Market m("SIM", {ExchangeId::NYSE}, 0);
    try {
        submit_iso_package(m, make_iso_package(m, CrashDirection::Down, ExchangeId::NYSE, Price(c(9000)), 300, 1));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::EmptyBook);
    }
}

TEST(IsoPackage, DepthProtectionRespectsEveryLevel) {
    Market m = ladder_market(12, 10001);
    for (int j = 1; j <= 5; ++j) m.book(ExchangeId::ARCA).add(Side::Bid, Price(c(10000) - j * 250), 5000);
    auto pkg = make_iso_package(m, CrashDirection::Down, ExchangeId::NYSE, Price(c(10000) - 11 * 1000), 6000, 100);
    pkg.depth_protection = true;
    const auto trades = submit_iso_package(m, pkg);
    ASSERT_FALSE(trades.empty());
    for (std::size_t i = 1; i < trades.size(); ++i) EXPECT_LE(trades[i].price, trades[i - 1].price);
    for (ExchangeId v : m.venues()) {
        for (const auto& l : m.book(v).levels(Side::Bid)) EXPECT_LE(l.price, trades.back().price);
    }
    EXPECT_TRUE(detect_crashes(fixture::sequenced(at(trades, ExchangeId::NYSE))).empty());
}

TEST(RoutableOrder, RoutesProtectedSliceThenWalks) {
    // NYSE ladder starts one step below ARCA's 500 protected shares.
    Market m("SIM", {ExchangeId::NYSE, ExchangeId::ARCA}, 10);
    for (int i = 1; i <= 12; ++i) m.book(ExchangeId::NYSE).add(Side::Bid, Price(c(10000) - i * 1000), 500);
    m.book(ExchangeId::ARCA).add(Side::Bid, Price::from_cents(10000), 500);
    m.publish(0);
    RoutableOrder o;
    o.venue = ExchangeId::NYSE;
    o.size = 5000;
    o.ts = 100;
    const auto trades = submit_routable_order(m, o);
    ASSERT_EQ(trades.size(), 10u);
    EXPECT_EQ(trades[0].exchange, ExchangeId::ARCA);
    EXPECT_EQ(trades[0].size, 500);
    EXPECT_EQ(trades[0].ts, 100);
    std::int64_t local = 0;
    for (std::size_t i = 1; i < trades.size(); ++i) {
        EXPECT_EQ(trades[i].exchange, ExchangeId::NYSE);
        EXPECT_FALSE(trades[i].is_iso);
        local += trades[i].size;
    }
    EXPECT_EQ(local, 4500);
}

TEST(RoutableOrder, ProtectedSizeOnlyIsOneAwayTrade) {
    Market m("SIM", {ExchangeId::NYSE, ExchangeId::ARCA}, 10);
    m.book(ExchangeId::NYSE).add(Side::Bid, Price::from_cents(9990), 500);
    m.book(ExchangeId::ARCA).add(Side::Bid, Price::from_cents(10000), 500);
    RoutableOrder o;
    o.venue = ExchangeId::NYSE;
    o.size = 400;
    const auto trades = submit_routable_order(m, o);
    ASSERT_EQ(trades.size(), 1u);
    EXPECT_EQ(trades[0].exchange, ExchangeId::ARCA);
}

TEST(RoutableOrder, LocalVenueAtTheBestNeedsNoRouting) {
    Market m("SIM", {ExchangeId::NYSE, ExchangeId::ARCA}, 10);
    m.book(ExchangeId::NYSE).add(Side::Bid, Price::from_cents(10000), 500);
    m.book(ExchangeId::NYSE).add(Side::Bid, Price::from_cents(9990), 500);
    m.book(ExchangeId::ARCA).add(Side::Bid, Price::from_cents(10000), 500);
    RoutableOrder o;
    o.venue = ExchangeId::NYSE;
    o.size = 800;
    const auto trades = submit_routable_order(m, o);
    ASSERT_EQ(trades.size(), 2u);
    for (const auto& t : trades) EXPECT_EQ(t.exchange, ExchangeId::NYSE);
}

TEST(Market, PublishesOnlyChangesAfterLatency) {
    Market m("SIM", {ExchangeId::NYSE, ExchangeId::ARCA}, 10);
    m.book(ExchangeId::NYSE).add(Side::Bid, Price::from_cents(10000), 500);
    m.publish(5);
    m.publish(6);
    ASSERT_EQ(m.quotes().size(), 1u);
    EXPECT_EQ(m.quotes()[0].ts, 15);
    EXPECT_EQ(m.quotes()[0].exchange, ExchangeId::NYSE);
}

TEST(Scenario, IsoSweepMatchesLabel) {
    const auto out = generate_scenario(spec(ScenarioKind::IsoSweep, 3));
    ASSERT_EQ(out.labels.size(), 1u);
    EXPECT_EQ(out.labels[0].expected_type, CrashType::IsoInitiated);
    const auto check = fixture::check_labels(out, fixture::analyze_scenario(out));
    EXPECT_TRUE(check.ok) << check.detail;
}

TEST(Scenario, AutoRoutingMatchesLabel) {
    for (auto dir : {CrashDirection::Down, CrashDirection::Up}) {
        auto s = spec(ScenarioKind::AutoRouting, 4);
        s.crash.direction = dir;
        const auto out = generate_scenario(s);
        ASSERT_EQ(out.labels[0].expected_type, CrashType::AutoRoutingInitiated);
        const auto r = fixture::analyze_scenario(out);
        const auto check = fixture::check_labels(out, r);
        EXPECT_TRUE(check.ok) << check.detail;
        ASSERT_EQ(r.kinds.size(), 1u);
        EXPECT_TRUE(r.kinds[0].top_cleared);
    }
}

TEST(Scenario, MixedMatchesLabels) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto s = spec(ScenarioKind::Mixed, seed);
        s.duration_ms = 300'000;
        const auto out = generate_scenario(s);
        const auto check = fixture::check_labels(out, fixture::analyze_scenario(out));
        EXPECT_EQ(check.expected, 4u);
        EXPECT_TRUE(check.ok) << "seed " << seed << ": " << check.detail;
    }
}

TEST(Scenario, BenignWalkHasNoCrash) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto out = generate_scenario(spec(ScenarioKind::BenignRandomWalk, seed));
        EXPECT_TRUE(out.labels.empty());
        EXPECT_FALSE(out.trades.empty());
        std::map<ExchangeId, std::vector<TradeRecord>> by_venue;
        for (const auto& t : merge_records(out.trades, {})) {
            const auto& tr = std::get<TradeRecord>(t);
            by_venue[tr.exchange].push_back(tr);
        }
        for (const auto& [v, t] : by_venue) {
            EXPECT_TRUE(detect_crashes(t).empty());
            EXPECT_TRUE(fixture::oracle_keys(t).empty());
        }
    }
}

TEST(Scenario, DepthProtectionPreventsTheCrash) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto s = spec(ScenarioKind::IsoSweep, seed);
        s.depth_protection = true;
        const auto out = generate_scenario(s);
        ASSERT_EQ(out.labels.size(), 1u);
        EXPECT_FALSE(out.labels[0].expected_type);
        EXPECT_TRUE(fixture::analyze_scenario(out).crashes.empty());
    }
}

TEST(Scenario, FleetingFollowsLatency) {
    for (std::int64_t latency : {0, 1, 5, 11, 20, 50}) {
        auto s = spec(ScenarioKind::IsoSweep, 7);
        s.sip_latency_ms = latency;
        const auto out = generate_scenario(s);
        const auto& l = out.labels.at(0);
        const std::int64_t sweep = l.end_ts - s.crash.time_ms;
        if (latency == 0) EXPECT_FALSE(l.fleeting);
        if (latency > sweep) EXPECT_TRUE(l.fleeting) << latency;
        const auto check = fixture::check_labels(out, fixture::analyze_scenario(out));
        EXPECT_TRUE(check.ok) << check.detail;
    }
}

TEST(Scenario, DeterministicPerSeedAndDistinctAcrossSeeds) {
    std::set<std::string> tapes;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto a = generate_scenario(spec(ScenarioKind::IsoSweep, seed));
        const auto b = generate_scenario(spec(ScenarioKind::IsoSweep, seed));
        EXPECT_EQ(a.trades_csv(), b.trades_csv());
        EXPECT_EQ(a.quotes_csv(), b.quotes_csv());
        EXPECT_EQ(a.label_json(), b.label_json());
        tapes.insert(a.trades_csv());
    }
    EXPECT_EQ(tapes.size(), 10u);
}

TEST(Scenario, OutputIsValidTape) {
    const auto out = generate_scenario(spec(ScenarioKind::Mixed, 2));
    for (std::size_t i = 1; i < out.trades.size(); ++i) ASSERT_LE(out.trades[i - 1].ts, out.trades[i].ts);
    for (std::size_t i = 1; i < out.quotes.size(); ++i) ASSERT_LE(out.quotes[i - 1].ts, out.quotes[i].ts);
    std::istringstream in(out.trades_csv());
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, kTradeHeader);
    while (std::getline(in, line)) ASSERT_NO_THROW(parse_trade_line(line));
}

TEST(ScenarioSpec, ParsesAndRejects) {
    const auto s = parse_scenario_spec(
        R"({"kind":"AutoRouting","seed":9,"venues":["nyse","bats"],"sip_latency_ms":0,"crash":{"direction":"up","venue":"BATS"}})");
    EXPECT_EQ(s.kind, ScenarioKind::AutoRouting);
    EXPECT_EQ(s.seed, 9u);
    EXPECT_EQ(s.venues.size(), 2u);
    EXPECT_EQ(s.crash.direction, CrashDirection::Up);
    EXPECT_EQ(*s.crash.venue, ExchangeId::BATS);

    auto code = [](const std::string& text) {
        try {
            parse_scenario_spec(text);
        } catch (const Error& e) {
            return std::make_pair(e.code(), std::string(e.what()));
        }
        return std::make_pair(ErrorCode::InvalidConfig, std::string());
    };
    const auto bad = code(R"({"kind": "IsoSweep", )");
    EXPECT_EQ(bad.first, ErrorCode::InvalidSpec);
    EXPECT_NE(bad.second.find("byte"), std::string::npos);
    EXPECT_EQ(code(R"({"kind":"Nope"})").first, ErrorCode::InvalidSpec);
    EXPECT_EQ(code(R"({"kind":"IsoSweep","colour":1})").first, ErrorCode::InvalidSpec);
    EXPECT_EQ(code(R"({"seed":1})").first, ErrorCode::InvalidSpec);
    EXPECT_EQ(code(R"({"kind":"IsoSweep","venues":["NYSE","NYSE"]})").first, ErrorCode::InvalidSpec);
    EXPECT_EQ(code(R"({"kind":"IsoSweep","crash":{"time_ms":100}})").first, ErrorCode::InvalidSpec);
}

TEST(ScenarioSpec, WritesThreeFiles) {
    const fs::path dir = fs::temp_directory_path() / ("flashfx_sim_" + std::to_string(::getpid()));
    const auto out = generate_scenario(spec(ScenarioKind::IsoSweep, 1));
    const auto paths = write_scenario(out, dir);
    EXPECT_EQ(paths.size(), 3u);
    for (const auto& p : paths) EXPECT_TRUE(fs::exists(p));
    std::ifstream in(dir / "label.json");
    const auto j = nlohmann::json::parse(in);
    EXPECT_EQ(j["crashes"][0]["expected_type"], "IsoInitiated");
    fs::remove_all(dir);
}
