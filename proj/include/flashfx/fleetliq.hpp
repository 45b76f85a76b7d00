#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "flashfx/classify.hpp"
#include "flashfx/detect.hpp"
#include "flashfx/timeline.hpp"

namespace flashfx {

// True iff no constituent trade printed at or through the crash-side best
// quote the SIP was displaying just before it. For a down crash a trade hits
// the displayed bid when its price is at or above the NBB; up crashes mirror
// this against the NBO. A missing crash-side quote cannot be hit.
// Throws InsufficientQuoteHistory when no NBBO precedes the crash.
bool detect_fleeting_liquidity(const CrashEvent& c, const QuoteTimeline& quotes);

struct FeatureVector {
    double time_ms = 0.0;
    double pct_price_change = 0.0;  // absolute
    int exch = 0;                   // 1..6, Other encodes as 0
    double vol = 0.0;
    int updown = 0;                 // 0 down, 1 up
    int no_trades = 0;
    int type = 3;                   // CrashType code
    int fleet_liq = 0;
    std::string session;
};

inline constexpr std::size_t kLogitTerms = 8;
inline constexpr std::array<std::string_view, kLogitTerms> kLogitTermNames = {
    "Intercept", "Time", "%PriceChange", "Exch", "Vol", "UpDown", "NoTrades", "Type",
};

using Coefficients = std::array<double, kLogitTerms>;

// Intercept first, then the regressors in model order.
Coefficients design_row(const FeatureVector& row);

FeatureVector make_feature_row(const CrashEvent& c, const CrashClassification& k, bool fleeting);

// Parallel spans of equal length.
std::vector<FeatureVector> build_feature_rows(std::span<const CrashEvent> crashes,
                                              std::span<const CrashClassification> kinds,
                                              std::span<const bool> fleeting);

double logistic(double f);
double linear_predictor(const Coefficients& alpha, const FeatureVector& row);

double log_likelihood(std::span<const FeatureVector> rows, const Coefficients& alpha);
// Gradient of log_likelihood with respect to alpha.
Coefficients score(std::span<const FeatureVector> rows, const Coefficients& alpha);

struct LogitModel {
    Coefficients alpha{};
    Coefficients std_errors{};  // NaN for dropped terms
    Coefficients z_stats{};
    std::array<bool, kLogitTerms> included{};
    double log_likelihood = 0.0;
    bool converged = false;
    int iterations = 0;
    double classification_precision = 0.0;
    std::size_t n_rows = 0;
    std::vector<std::string> warnings;
};

struct LogitOptions {
    int max_iterations = 100;
    double score_tolerance = 1e-8;
    double ridge = 1e-8;
};

// Maximum likelihood by iteratively reweighted least squares. Regressors that
// are constant across rows are dropped with a warning. Throws EmptyInput,
// Separation (including a single label, whose likelihood has no maximum) or
// Singular.
LogitModel fit_logit(std::span<const FeatureVector> rows, const LogitOptions& opts = {});

double predict(const LogitModel& model, const FeatureVector& row);

// Share of rows whose thresholded prediction (p > 0.5) equals the label.
// Throws EmptyInput on an empty span.
double classification_precision(const LogitModel& model, std::span<const FeatureVector> rows);

// "**" past the 1% two-sided normal critical value, "*" past 5%.
std::string_view significance_stars(double z);

}  // namespace flashfx
