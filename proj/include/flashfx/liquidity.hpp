#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "flashfx/detect.hpp"
#include "flashfx/nbbo.hpp"
#include "flashfx/timeline.hpp"

namespace flashfx {

// (offer + bid) / 2 in dollars. Throws MissingSide unless both are positive.
double midprice(Price bid, Price offer);

// (offer - bid) / midprice * 100, in percent. Throws MissingSide.
double relative_spread(Price bid, Price offer);

// NBBO variant: 0 when locked or crossed, absent when one-sided or empty.
std::optional<double> nbbo_relative_spread(const Nbbo& n);

enum class Metric : std::uint8_t {
    NbboSpread,
    ExchangeSpread,
    NbboBidVolume,
    NbboOfferVolume,
    VenueBidVolume,
    VenueOfferVolume,
    LockedCrossed,  // per bucket: % of two-sided NBBO updates that are locked or crossed
};

inline constexpr std::array<Metric, 7> kAllMetrics = {
    Metric::NbboSpread,     Metric::ExchangeSpread,   Metric::NbboBidVolume, Metric::NbboOfferVolume,
    Metric::VenueBidVolume, Metric::VenueOfferVolume, Metric::LockedCrossed,
};

std::string_view metric_name(Metric m);

struct StudyConfig {
    std::int64_t window_ms = 60'000;
    std::int64_t bucket_ms = 100;

    int buckets_per_side() const { return static_cast<int>(window_ms / bucket_ms); }
};

// Bucket b covers [start + b*bucket, start + (b+1)*bucket); offset 0 holds
// the crash start. Values use the last state at or before the bucket's
// final millisecond.
struct EventWindowSeries {
    std::string crash_id;
    Metric metric = Metric::NbboSpread;
    std::int64_t bucket_ms = 100;
    int first_offset = -600;
    std::vector<std::optional<double>> values;

    int offset_of(std::size_t i) const { return first_offset + static_cast<int>(i); }
};

// Bucket offset holding ts, or nullopt outside the study window.
std::optional<int> bucket_offset(std::int64_t ts, std::int64_t start_ts, const StudyConfig& cfg);

EventWindowSeries event_window_series(std::int64_t start_ts, const QuoteTimeline& quotes, Metric metric,
                                      ExchangeId venue, const StudyConfig& cfg = {});

enum class VolumeScope : std::uint8_t { Nbbo, Venue };

EventWindowSeries quoted_volume_series(std::int64_t start_ts, const QuoteTimeline& quotes, Side side,
                                       VolumeScope scope, ExchangeId venue, const StudyConfig& cfg = {});

// 100 * (# locked or crossed NBBO updates) / (# two-sided NBBO updates), over
// updates with ts in [from, to). Throws EmptyWindow when no two-sided update
// falls inside.
double locked_crossed_fraction(std::span<const NbboSnapshot> history, std::int64_t from_ms,
                               std::int64_t to_ms);

struct AggregateSeries {
    Metric metric = Metric::NbboSpread;
    std::int64_t bucket_ms = 100;
    int first_offset = -600;
    std::vector<std::optional<double>> mean;
    std::vector<std::size_t> count;
    std::optional<double> pre_mean;   // over offsets < 0
    std::optional<double> post_mean;  // over offsets >= 0

    std::optional<double> pct_change() const;
};

// Running per-offset sums. Merging accumulators in a fixed order gives the
// same result however the series were distributed across workers.
class EventStudyAccumulator {
public:
    explicit EventStudyAccumulator(Metric metric = Metric::NbboSpread) : metric_(metric) {}

    void add(const EventWindowSeries& s);
    void merge(const EventStudyAccumulator& other);
    AggregateSeries result() const;
    std::size_t events() const { return events_; }

private:
    bool shaped_ = false;
    Metric metric_ = Metric::NbboSpread;
    std::int64_t bucket_ms_ = 100;
    int first_offset_ = -600;
    std::vector<double> sum_;
    std::vector<std::size_t> count_;
    std::size_t events_ = 0;
};

// Per-offset mean over series with data, summed in input order.
AggregateSeries aggregate_event_study(std::span<const EventWindowSeries> series);

// "offset_ms,mean,count"
std::string format_aggregate_csv(const AggregateSeries& a);
// {"pre_mean":..,"post_mean":..,"pct_change":..}
std::string format_aggregate_summary_json(const AggregateSeries& a);

}  // namespace flashfx
