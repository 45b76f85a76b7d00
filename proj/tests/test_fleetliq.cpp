#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "flashfx/fleetliq.hpp"
#include "support.hpp"

using namespace flashfx;
using fixture::quote;
using fixture::trade;

namespace {

constexpr std::int64_t c(std::int64_t cents) { return cents * 100; }

const Coefficients kTruth = {0.5, -0.001, 0.3, -0.1, 1e-5, 0.4, -0.01, 0.2};

std::vector<FeatureVector> synthetic_rows(std::mt19937_64& rng, std::size_t n, const Coefficients& alpha) {
    std::uniform_real_distribution<double> time(0.0, 1500.0), pct(0.8, 5.0), vol(1000.0, 100000.0), u(0.0, 1.0);
    std::vector<FeatureVector> rows;
    for (std::size_t i = 0; i < n; ++i) {
        FeatureVector r;
        r.time_ms = time(rng);
        r.pct_price_change = pct(rng);
        r.exch = 1 + static_cast<int>(rng() % 6);
        r.vol = vol(rng);
        r.updown = static_cast<int>(rng() % 2);
        r.no_trades = 11 + static_cast<int>(rng() % 90);
        r.type = 1 + static_cast<int>(rng() % 3);
        r.fleet_liq = u(rng) < logistic(linear_predictor(alpha, r)) ? 1 : 0;
        rows.push_back(r);
    }
    return rows;
}

struct CrashFixture {
    QuoteTimeline quotes;
    CrashEvent crash;
};

// Down crash on NYSE at 100.00 and below, one trade per ms from ts 1000.
CrashFixture down_crash(std::vector<QuoteRecord> q, std::int64_t first_cents) {
    std::vector<TradeRecord> t;
    for (int i = 0; i < 12; ++i) t.push_back(trade(1000 + i, c(first_cents - 10 * i)));
    auto stream = merge_records(t, std::move(q));
    CrashFixture f{QuoteTimeline(stream), {}};
    std::vector<TradeRecord> seqd;
    for (const auto& e : stream) {
        if (const auto* tr = std::get_if<TradeRecord>(&e)) seqd.push_back(*tr);
    }
    f.crash = make_crash(seqd, CrashDirection::Down, false);
    return f;
}

}  // namespace

TEST(FleetingLiquidity, TradesBelowTheDisplayedBidAreFleeting) {
    const auto f = down_crash({quote(0, ExchangeId::NYSE, c(10005), 500, c(10010), 500)}, 10000);
    EXPECT_TRUE(detect_fleeting_liquidity(f.crash, f.quotes));
}

TEST(FleetingLiquidity, FirstTradeAtTheBidIsAHit) {
    const auto f = down_crash({quote(0, ExchangeId::NYSE, c(10000), 500, c(10010), 500)}, 10000);
    EXPECT_FALSE(detect_fleeting_liquidity(f.crash, f.quotes));
}

TEST(FleetingLiquidity, LaterQuoteIsHit) {
    // The SIP catches up mid-crash and a trade prints at the new bid.
    const auto f = down_crash({quote(0, ExchangeId::NYSE, c(10005), 500, c(10010), 500),
                               quote(1003, ExchangeId::NYSE, c(9960), 500, c(10010), 500)},
                              10000);
    EXPECT_FALSE(detect_fleeting_liquidity(f.crash, f.quotes));
}

TEST(FleetingLiquidity, NoCrashSideQuoteIsVacuous) {
    const auto f = down_crash({quote(0, ExchangeId::NYSE, 0, 0, c(10010), 500)}, 10000);
    EXPECT_TRUE(detect_fleeting_liquidity(f.crash, f.quotes));
}

TEST(FleetingLiquidity, NeedsQuoteHistory) {
    const auto f = down_crash({}, 10000);
    try {
        detect_fleeting_liquidity(f.crash, f.quotes);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::InsufficientQuoteHistory);
    }
}

TEST(FleetingLiquidity, IgnoresQuotesOutsideTheCrash) {
    std::vector<QuoteRecord> base = {quote(0, ExchangeId::NYSE, c(10005), 500, c(10010), 500)};
    const bool a = detect_fleeting_liquidity(down_crash(base, 10000).crash, down_crash(base, 10000).quotes);
    base.push_back(quote(5000, ExchangeId::ARCA, c(9000), 100, c(9001), 100));
    base.push_back(quote(6000, ExchangeId::NYSE, c(8000), 100, c(8001), 100));
    const auto f = down_crash(base, 10000);
    EXPECT_EQ(detect_fleeting_liquidity(f.crash, f.quotes), a);
}

TEST(FeatureRows, Encodings) {
    const EventStream st = load_merged_stream(fixture::data_path("gs_20081007_trades.csv"), "");
    std::vector<TradeRecord> trades;
    for (const auto& e : st) trades.push_back(std::get<TradeRecord>(e));
    const auto crashes = detect_crashes(trades);
    ASSERT_EQ(crashes.size(), 1u);
    CrashClassification k;
    k.kind = CrashType::IsoInitiated;
    const auto row = make_feature_row(crashes[0], k, true);
    EXPECT_LT(row.time_ms, 400.0);
    EXPECT_NEAR(row.pct_price_change, 1.6, 0.1);
    EXPECT_EQ(row.exch, 1);
    EXPECT_EQ(row.vol, 86'000.0);
    EXPECT_EQ(row.updown, 0);
    EXPECT_EQ(row.no_trades, 58);
    EXPECT_EQ(row.type, 1);
    EXPECT_EQ(row.fleet_liq, 1);

    CrashEvent up = crashes[0];
    up.direction = CrashDirection::Up;
    up.exchange = ExchangeId::ARCA;
    const auto r2 = make_feature_row(up, CrashClassification{}, false);
    EXPECT_EQ(r2.updown, 1);
    EXPECT_EQ(r2.exch, 3);
    EXPECT_EQ(r2.type, 3);

    const std::vector<CrashEvent> cs{crashes[0], up};
    const std::vector<CrashClassification> ks{k, CrashClassification{}};
    const bool fl[] = {true, false};
    EXPECT_EQ(build_feature_rows(cs, ks, fl).size(), 2u);
    EXPECT_THROW(build_feature_rows(cs, std::span(ks).first(1), fl), Error);
}

TEST(Logit, LogisticAtOriginAndLimit) {
    EXPECT_EQ(logistic(0.0), 0.5);
    EXPECT_GT(logistic(10.0), 0.999);
    EXPECT_LT(logistic(-10.0), 0.001);
    LogitModel m;
    FeatureVector r;
    r.time_ms = 123;
    r.vol = 5000;
    EXPECT_EQ(predict(m, r), 0.5);
}

TEST(Logit, GradientMatchesFiniteDifferences) {
    std::mt19937_64 rng(1);
    const auto rows = synthetic_rows(rng, 300, kTruth);
    // Per-term scales keep the linear predictor in a moderate range.
    const Coefficients scale = {1.0, 1e-3, 0.3, 0.2, 1e-5, 1.0, 1e-2, 0.5};
    std::normal_distribution<double> z(0.0, 1.0);
    for (int point = 0; point < 20; ++point) {
        Coefficients a;
        for (std::size_t j = 0; j < kLogitTerms; ++j) a[j] = scale[j] * z(rng);
        const auto g = score(rows, a);
        for (std::size_t j = 0; j < kLogitTerms; ++j) {
            const double h = 1e-4 * scale[j];
            auto up = a, dn = a;
            up[j] += h;
            dn[j] -= h;
            const double fd = (log_likelihood(rows, up) - log_likelihood(rows, dn)) / (2 * h);
            ASSERT_LT(std::abs(fd - g[j]), 1e-5 * std::max(1.0, std::abs(g[j]))) << "term " << j;
        }
    }
}

TEST(Logit, RecoversKnownCoefficients) {
    std::mt19937_64 rng(99);
    const auto rows = synthetic_rows(rng, 5000, kTruth);
    const auto m = fit_logit(rows);
    EXPECT_TRUE(m.converged);
    EXPECT_EQ(m.n_rows, 5000u);
    for (std::size_t j = 0; j < kLogitTerms; ++j) {
        ASSERT_TRUE(m.included[j]);
        EXPECT_LT(std::abs(m.alpha[j] - kTruth[j]), 3 * m.std_errors[j]) << kLogitTermNames[j];
        EXPECT_NEAR(m.z_stats[j], m.alpha[j] / m.std_errors[j], 1e-12 * std::abs(m.z_stats[j]) + 1e-15);
    }
    const auto g = score(rows, m.alpha);
    for (double v : g) EXPECT_LT(std::abs(v), 1e-6);
    EXPECT_NEAR(m.log_likelihood, log_likelihood(rows, m.alpha), 1e-9);
    EXPECT_GT(m.classification_precision, 0.5);
}

TEST(Logit, DropsConstantRegressor) {
    std::mt19937_64 rng(5);
    auto rows = synthetic_rows(rng, 2000, kTruth);
    for (auto& r : rows) r.updown = 1;
    const auto m = fit_logit(rows);
    EXPECT_FALSE(m.included[5]);
    EXPECT_TRUE(std::isnan(m.std_errors[5]));
    EXPECT_EQ(m.alpha[5], 0.0);
    EXPECT_FALSE(m.warnings.empty());
    const auto g = score(rows, m.alpha);
    for (std::size_t j = 0; j < kLogitTerms; ++j) {
        if (m.included[j]) EXPECT_LT(std::abs(g[j]), 1e-6);
    }
}

TEST(Logit, SeparableDataThrows) {
    std::mt19937_64 rng(3);
    auto rows = synthetic_rows(rng, 200, kTruth);
    for (auto& r : rows) r.fleet_liq = r.time_ms < 700 ? 1 : 0;
    try {
        fit_logit(rows);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::Separation);
    }
    for (auto& r : rows) r.fleet_liq = 1;
    EXPECT_THROW(fit_logit(rows), Error);
    EXPECT_THROW(fit_logit({}), Error);
}

TEST(Logit, PredictIsMonotoneInEachRegressor) {
    LogitModel m;
    m.alpha = {0.1, -0.2065, 0.3, -0.1, 1e-5, 0.4, -0.01, 0.2};
    FeatureVector r;
    r.time_ms = 5;
    r.pct_price_change = 1.0;
    r.exch = 2;
    r.vol = 1000;
    r.no_trades = 20;
    r.type = 2;
    const double p = predict(m, r);
    auto t = r;
    t.time_ms = 4;
    EXPECT_GT(predict(m, t), p);
    t = r;
    t.pct_price_change = 2.0;
    EXPECT_GT(predict(m, t), p);
    t = r;
    t.exch = 3;
    EXPECT_LT(predict(m, t), p);
    t = r;
    t.updown = 1;
    EXPECT_GT(predict(m, t), p);
    t = r;
    t.no_trades = 21;
    EXPECT_LT(predict(m, t), p);
}

TEST(Logit, ClassificationPrecision) {
    std::vector<FeatureVector> rows(10);
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i].fleet_liq = i < 4 ? 1 : 0;
    LogitModel m;
    m.alpha[0] = -1e-9;
    EXPECT_DOUBLE_EQ(classification_precision(m, rows), 0.6);

    // A model keyed on the label's own encoding.
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i].updown = rows[i].fleet_liq;
    LogitModel perfect;
    perfect.alpha[0] = -1.0;
    perfect.alpha[5] = 2.0;
    EXPECT_DOUBLE_EQ(classification_precision(perfect, rows), 1.0);
    try {
        classification_precision(m, {});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::EmptyInput);
    }
}

TEST(Logit, Stars) {
    EXPECT_EQ(significance_stars(2.6), "**");
    EXPECT_EQ(significance_stars(-2.6), "**");
    EXPECT_EQ(significance_stars(2.0), "*");
    EXPECT_EQ(significance_stars(1.9), "");
}

TEST(Logit, FitIsDeterministic) {
    std::mt19937_64 rng(21);
    const auto rows = synthetic_rows(rng, 1000, kTruth);
    const auto a = fit_logit(rows), b = fit_logit(rows);
    EXPECT_EQ(a.alpha, b.alpha);
    EXPECT_EQ(a.iterations, b.iterations);
}
