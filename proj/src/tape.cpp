#include "flashfx/tape.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <map>

namespace flashfx {

namespace {

// Splits on ',' into at most N fields; returns the field count found.
template <std::size_t N>
std::size_t split_fields(std::string_view line, std::array<std::string_view, N>& out) {
    std::size_t count = 0;
    std::size_t start = 0;
    while (true) {
        std::size_t comma = line.find(',', start);
        std::string_view field =
            line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
        if (count < N) out[count] = field;
        ++count;
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return count;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

[[noreturn]] void malformed(const std::string& detail) { throw Error(ErrorCode::MalformedRecord, detail); }
[[noreturn]] void domain(const std::string& detail) { throw Error(ErrorCode::DomainError, detail); }

std::int64_t parse_int(std::string_view field, const char* name) {
    field = trim(field);
    std::int64_t v = 0;
    const char* first = field.data();
    if (!field.empty() && field.front() == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, field.data() + field.size(), v);
    if (field.empty() || ec != std::errc() || ptr != field.data() + field.size()) {
        malformed(std::string("unparseable ") + name + " '" + std::string(field) + "'");
    }
    return v;
}

Price parse_price_field(std::string_view field, const char* name) {
    auto p = parse_price(trim(field));
    if (!p) malformed(std::string("unparseable ") + name + " '" + std::string(field) + "'");
    return *p;
}

std::int64_t parse_ts(std::string_view field) {
    std::int64_t ts = parse_int(field, "ts");
    if (ts < 0 || ts > kSessionEndMs) domain("ts out of range: " + std::to_string(ts));
    return ts;
}

std::string parse_symbol(std::string_view field) {
    field = trim(field);
    if (field.empty()) malformed("empty symbol");
    return std::string(field);
}

bool is_header(std::string_view line) { return line.substr(0, 5) == "ts_ms"; }

bool is_blank(std::string_view line) { return trim(line).empty(); }

}  // namespace

TradeRecord parse_trade_line(std::string_view line) {
    std::array<std::string_view, 6> f;
    std::size_t n = split_fields(line, f);
    if (n != 6) malformed("trade record needs 6 fields, got " + std::to_string(n));
    TradeRecord t;
    t.ts = parse_ts(f[0]);
    t.symbol = parse_symbol(f[1]);
    t.exchange = parse_exchange(trim(f[2]));
    t.price = parse_price_field(f[3], "price");
    t.size = parse_int(f[4], "size");
    t.condition = std::string(trim(f[5]));
    t.is_iso = t.condition.find('F') != std::string::npos;
    if (!t.price.positive()) domain("price must be positive");
    if (t.size <= 0) domain("size must be positive");
    return t;
}

QuoteRecord parse_quote_line(std::string_view line) {
    std::array<std::string_view, 7> f;
    std::size_t n = split_fields(line, f);
    if (n != 7) malformed("quote record needs 7 fields, got " + std::to_string(n));
    QuoteRecord q;
    q.ts = parse_ts(f[0]);
    q.symbol = parse_symbol(f[1]);
    q.exchange = parse_exchange(trim(f[2]));
    q.bid = parse_price_field(f[3], "bid");
    q.bid_size = parse_int(f[4], "bid_size");
    q.offer = parse_price_field(f[5], "offer");
    q.offer_size = parse_int(f[6], "offer_size");
    if (q.bid.units() < 0 || q.offer.units() < 0) domain("negative quote price");
    if (q.bid_size < 0 || q.offer_size < 0) domain("negative quote size");
    if (q.bid_size > 0 && !q.bid.positive()) domain("bid size without bid price");
    if (q.offer_size > 0 && !q.offer.positive()) domain("offer size without offer price");
    if (q.bid_size == 0) q.bid = Price();
    if (q.offer_size == 0) q.offer = Price();
    return q;
}

std::string format_trade_line(const TradeRecord& t) {
    std::string s;
    s.reserve(48);
    s += std::to_string(t.ts);
    s += ',';
    s += t.symbol;
    s += ',';
    s += exchange_name(t.exchange);
    s += ',';
    append_price(s, t.price);
    s += ',';
    s += std::to_string(t.size);
    s += ',';
    s += t.condition;
    return s;
}

std::string format_quote_line(const QuoteRecord& q) {
    std::string s;
    s.reserve(64);
    s += std::to_string(q.ts);
    s += ',';
    s += q.symbol;
    s += ',';
    s += exchange_name(q.exchange);
    s += ',';
    append_price(s, q.bid);
    s += ',';
    s += std::to_string(q.bid_size);
    s += ',';
    append_price(s, q.offer);
    s += ',';
    s += std::to_string(q.offer_size);
    return s;
}

std::int64_t event_ts(const Event& e) {
    return std::visit([](const auto& r) { return r.ts; }, e);
}

std::uint64_t event_seq(const Event& e) {
    return std::visit([](const auto& r) { return r.seq; }, e);
}

const std::string& event_symbol(const Event& e) {
    return std::visit([](const auto& r) -> const std::string& { return r.symbol; }, e);
}

// ---------------------------------------------------------------------------
// LineReader

struct LineReader::Impl {
    gzFile file = nullptr;
    std::string buffer;
    std::size_t pos = 0;
    bool eof = false;

    bool refill() {
        if (eof) return false;
        if (pos > 0) {
            buffer.erase(0, pos);
            pos = 0;
        }
        constexpr std::size_t kChunk = 1 << 18;
        std::size_t old = buffer.size();
        buffer.resize(old + kChunk);
        int got = gzread(file, buffer.data() + old, static_cast<unsigned>(kChunk));
        if (got < 0) {
            int errnum = 0;
            const char* msg = gzerror(file, &errnum);
            throw Error(ErrorCode::IoError, std::string("read failed: ") + msg);
        }
        buffer.resize(old + static_cast<std::size_t>(got));
        if (got == 0) eof = true;
        return got > 0;
    }
};

LineReader::LineReader(const std::string& path) : impl_(std::make_unique<Impl>()), path_(path) {
    impl_->file = gzopen(path.c_str(), "rb");
    if (impl_->file == nullptr) {
        throw InputError(ErrorCode::IoError, path, 0, "cannot open file");
    }
    gzbuffer(impl_->file, 1 << 17);
}

LineReader::~LineReader() {
    if (impl_ && impl_->file) gzclose(impl_->file);
}

bool LineReader::next(std::string_view& line) {
    Impl& s = *impl_;
    while (true) {
        std::size_t nl = s.buffer.find('\n', s.pos);
        if (nl != std::string::npos) {
            line = std::string_view(s.buffer).substr(s.pos, nl - s.pos);
            s.pos = nl + 1;
            ++line_no_;
            return true;
        }
        if (!s.refill()) {
            if (s.pos < s.buffer.size()) {
                line = std::string_view(s.buffer).substr(s.pos);
                s.pos = s.buffer.size();
                ++line_no_;
                return true;
            }
            return false;
        }
    }
}

// ---------------------------------------------------------------------------
// MergedReader

template <class Record>
struct MergedReader::Source {
    LineReader reader;
    std::optional<Record> pending;
    std::int64_t last_ts = -1;
    std::uint64_t* read = nullptr;
    std::uint64_t* kept = nullptr;
    std::uint64_t* rejected = nullptr;
    std::uint64_t* crossed = nullptr;

    explicit Source(const std::string& path) : reader(path) {}
};

MergedReader::MergedReader(const std::string& trades_path, const std::string& quotes_path,
                           LoadOptions options)
    : options_(std::move(options)) {
    if (!trades_path.empty()) {
        trades_ = std::make_unique<Source<TradeRecord>>(trades_path);
        trades_->read = &summary_.trades_read;
        trades_->kept = &summary_.trades_kept;
        trades_->rejected = &summary_.trades_rejected;
    }
    if (!quotes_path.empty()) {
        quotes_ = std::make_unique<Source<QuoteRecord>>(quotes_path);
        quotes_->read = &summary_.quotes_read;
        quotes_->kept = &summary_.quotes_kept;
        quotes_->rejected = &summary_.quotes_rejected;
        quotes_->crossed = &summary_.crossed_quote_warnings;
    }
    fill_trade();
    fill_quote();
}

MergedReader::~MergedReader() = default;

namespace {

template <class Record, class Parse, class Keep, class OnValid>
std::optional<Record> read_next(LineReader& reader, std::int64_t& last_ts, std::uint64_t& read,
                                std::uint64_t& rejected, Parse parse, Keep keep, OnValid on_valid) {
    std::string_view line;
    while (reader.next(line)) {
        if (is_blank(line)) continue;
        if (reader.line_number() == 1 && is_header(line)) continue;
        ++read;
        Record rec;
        try {
            rec = parse(line);
        } catch (const Error&) {
            ++rejected;
            continue;
        }
        if (rec.ts < last_ts) {
            throw InputError(ErrorCode::UnsortedInput, reader.path(), reader.line_number(),
                             "ts " + std::to_string(rec.ts) + " after " + std::to_string(last_ts));
        }
        last_ts = rec.ts;
        on_valid(rec);
        if (keep(rec)) return rec;
    }
    return std::nullopt;
}

}  // namespace

void MergedReader::fill_trade() {
    if (!trades_) return;
    auto keep = [this](const TradeRecord& t) {
        return options_.range.contains(t.ts) &&
               (options_.symbols.empty() || options_.symbols.count(t.symbol) > 0);
    };
    trades_->pending = read_next<TradeRecord>(trades_->reader, trades_->last_ts, *trades_->read,
                                              *trades_->rejected, parse_trade_line, keep,
                                              [](const TradeRecord&) {});
    if (trades_->pending) ++*trades_->kept;
}

void MergedReader::fill_quote() {
    if (!quotes_) return;
    auto keep = [this](const QuoteRecord& q) {
        return options_.range.contains(q.ts) &&
               (options_.symbols.empty() || options_.symbols.count(q.symbol) > 0);
    };
    auto warn = [this](const QuoteRecord& q) {
        if (q.has_bid() && q.has_offer() && q.bid > q.offer) ++*quotes_->crossed;
    };
    quotes_->pending = read_next<QuoteRecord>(quotes_->reader, quotes_->last_ts, *quotes_->read,
                                              *quotes_->rejected, parse_quote_line, keep, warn);
    if (quotes_->pending) ++*quotes_->kept;
}

void MergedReader::check_reject_rate() const {
    auto check = [this](const auto& src, std::uint64_t read, std::uint64_t rejected) {
        if (!src || rejected == 0) return;
        if (static_cast<double>(rejected) > options_.max_reject_rate * static_cast<double>(read)) {
            throw InputError(ErrorCode::TooManyRejects, src->reader.path(), src->reader.line_number(),
                             std::to_string(rejected) + " of " + std::to_string(read) +
                                 " records rejected");
        }
    };
    check(trades_, summary_.trades_read, summary_.trades_rejected);
    check(quotes_, summary_.quotes_read, summary_.quotes_rejected);
}

std::optional<Event> MergedReader::next() {
    bool have_trade = trades_ && trades_->pending;
    bool have_quote = quotes_ && quotes_->pending;
    if (!have_trade && !have_quote) {
        check_reject_rate();
        return std::nullopt;
    }
    if (have_trade && (!have_quote || trades_->pending->ts <= quotes_->pending->ts)) {
        Event e(std::move(*trades_->pending));
        std::get<TradeRecord>(e).seq = next_seq_++;
        fill_trade();
        return e;
    }
    Event e(std::move(*quotes_->pending));
    std::get<QuoteRecord>(e).seq = next_seq_++;
    fill_quote();
    return e;
}

EventStream load_merged_stream(const std::string& trades_path, const std::string& quotes_path,
                               const LoadOptions& options, LoadSummary* summary) {
    MergedReader reader(trades_path, quotes_path, options);
    EventStream out;
    while (auto e = reader.next()) out.push_back(std::move(*e));
    if (summary) *summary = reader.summary();
    return out;
}

EventStream merge_records(std::vector<TradeRecord> trades, std::vector<QuoteRecord> quotes) {
    EventStream out;
    out.reserve(trades.size() + quotes.size());
    std::size_t i = 0, j = 0;
    std::uint64_t seq = 1;
    while (i < trades.size() || j < quotes.size()) {
        if (i < trades.size() && (j == quotes.size() || trades[i].ts <= quotes[j].ts)) {
            trades[i].seq = seq++;
            out.emplace_back(std::move(trades[i++]));
        } else {
            quotes[j].seq = seq++;
            out.emplace_back(std::move(quotes[j++]));
        }
    }
    return out;
}

std::vector<std::pair<std::string, EventStream>> split_by_symbol(EventStream stream) {
    std::map<std::string, EventStream> by_symbol;
    for (auto& e : stream) {
        const std::string& sym = event_symbol(e);
        by_symbol[sym].push_back(std::move(e));
    }
    std::vector<std::pair<std::string, EventStream>> out;
    out.reserve(by_symbol.size());
    for (auto& [sym, events] : by_symbol) out.emplace_back(sym, std::move(events));
    return out;
}

}  // namespace flashfx
