#include "flashfx/report.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <set>

#include <fmt/format.h>

namespace flashfx {

std::string month_label(std::string_view date) {
    auto digits = [&](std::size_t from, std::size_t n) {
        for (std::size_t i = from; i < from + n; ++i) {
            if (!std::isdigit(static_cast<unsigned char>(date[i]))) return false;
        }
        return true;
    };
    const bool ok = (date.size() == 7 || date.size() == 10) && digits(0, 4) && date[4] == '-' && digits(5, 2) &&
                    (date.size() == 7 || (date[7] == '-' && digits(8, 2)));
    const int month = ok ? (date[5] - '0') * 10 + (date[6] - '0') : 0;
    if (!ok || month < 1 || month > 12) {
        throw Error(ErrorCode::InvalidConfig, "date must look like YYYY-MM-DD or YYYY-MM, got '" +
                                                  std::string(date) + "'");
    }
    return std::string(date.substr(0, 7));
}

namespace {

constexpr int kLabelWidth = 26;
constexpr int kColWidth = 18;

// Distinct non-empty sessions in sorted order.
std::vector<std::string> sessions_of(std::span<const CrashEvent> crashes) {
    std::set<std::string> s;
    for (const auto& c : crashes) {
        if (!c.session.empty()) s.insert(c.session);
    }
    return {s.begin(), s.end()};
}

class TextTable {
public:
    explicit TextTable(std::vector<std::string> columns) : columns_(std::move(columns)) {
        std::string head = fmt::format("{:<{}}", "", kLabelWidth);
        for (const auto& c : columns_) head += fmt::format("{:>{}}", c, kColWidth);
        lines_.push_back(std::move(head));
        rule();
    }

    void row(std::string_view label, const std::vector<std::string>& cells) {
        std::string line = fmt::format("{:<{}}", label, kLabelWidth);
        for (const auto& c : cells) line += fmt::format("{:>{}}", c, kColWidth);
        while (!line.empty() && line.back() == ' ') line.pop_back();
        lines_.push_back(std::move(line));
    }
    void blank() { lines_.emplace_back(); }
    void rule() { lines_.push_back(std::string(kLabelWidth + kColWidth * columns_.size(), '-')); }

    std::string str() const {
        std::string out;
        for (const auto& l : lines_) {
            out += l;
            out += '\n';
        }
        return out;
    }

private:
    std::vector<std::string> columns_;
    std::vector<std::string> lines_;
};

std::string count_pct(std::size_t n, std::size_t total) {
    if (total == 0) return fmt::format("{}", n);
    return fmt::format("{} ({:.2f}%)", n, 100.0 * static_cast<double>(n) / static_cast<double>(total));
}

std::string opt_fixed(const std::optional<double>& v, int decimals, std::string_view suffix = "") {
    if (!v) return "-";
    return fmt::format("{:.{}f}{}", *v, decimals, suffix);
}

// Index lists for each session column followed by the Total column.
std::vector<std::vector<std::size_t>> column_members(std::span<const CrashEvent> crashes,
                                                     const std::vector<std::string>& sessions) {
    std::vector<std::vector<std::size_t>> cols(sessions.size() + 1);
    for (std::size_t i = 0; i < crashes.size(); ++i) {
        for (std::size_t s = 0; s < sessions.size(); ++s) {
            if (crashes[i].session == sessions[s]) cols[s].push_back(i);
        }
        cols.back().push_back(i);
    }
    return cols;
}

std::vector<std::string> with_total(std::vector<std::string> sessions) {
    sessions.emplace_back("Total");
    return sessions;
}

}  // namespace

std::string format_table1(std::span<const CrashEvent> crashes, std::span<const CrashClassification> kinds) {
    const auto sessions = sessions_of(crashes);
    const auto members = column_members(crashes, sessions);
    TextTable t(with_total(sessions));

    std::vector<CrashStats> stats;
    std::vector<std::array<std::size_t, 4>> types;
    for (const auto& idx : members) {
        std::vector<CrashEvent> subset;
        std::array<std::size_t, 4> n{};
        for (auto i : idx) {
            subset.push_back(crashes[i]);
            ++n[static_cast<std::size_t>(kinds[i].kind)];
        }
        stats.push_back(crash_stats(subset));
        types.push_back(n);
    }
    auto cells = [&](auto f) {
        std::vector<std::string> out;
        for (std::size_t c = 0; c < members.size(); ++c) out.push_back(f(c));
        return out;
    };

    t.row("Total Crashes", cells([&](std::size_t c) { return fmt::format("{}", stats[c].total); }));
    t.row("  Up Crashes", cells([&](std::size_t c) { return fmt::format("{}", stats[c].up); }));
    t.row("  Down Crashes", cells([&](std::size_t c) { return fmt::format("{}", stats[c].down); }));
    t.blank();
    const std::pair<const char*, CrashType> type_rows[] = {
        {"ISO initiated", CrashType::IsoInitiated},
        {"auto-routing initiated", CrashType::AutoRoutingInitiated},
        {"unclassified", CrashType::Unclassified},
    };
    for (const auto& [label, type] : type_rows) {
        t.row(label, cells([&](std::size_t c) {
                  return count_pct(types[c][static_cast<std::size_t>(type)], stats[c].total);
              }));
    }
    t.rule();
    t.row("Avg % Change", cells([&](std::size_t c) { return opt_fixed(stats[c].avg_pct_change, 2, "%"); }));
    t.row("Avg Time (ms)", cells([&](std::size_t c) { return opt_fixed(stats[c].avg_duration_ms, 0); }));
    t.row("Avg Trade Vol", cells([&](std::size_t c) { return opt_fixed(stats[c].avg_volume, 2); }));
    t.row("Avg No of Trades", cells([&](std::size_t c) { return opt_fixed(stats[c].avg_trades, 2); }));
    t.row("  ISO Trades", cells([&](std::size_t c) { return opt_fixed(stats[c].iso_trade_pct, 2, "%"); }));
    t.blank();
    t.row("by Exchanges", {});
    for (ExchangeId v : kAllVenues) {
        const bool used = stats.back().exchange_share_pct[venue_index(v)] > 0.0;
        if (v == ExchangeId::Other && !used) continue;
        t.row(fmt::format("  {}", exchange_name(v)), cells([&](std::size_t c) {
                  if (stats[c].total == 0) return std::string("-");
                  return fmt::format("{:.2f}%", stats[c].exchange_share_pct[venue_index(v)]);
              }));
    }
    return t.str();
}

std::string format_table2(std::span<const CrashEvent> crashes, std::span<const std::optional<bool>> fleeting,
                          const std::optional<LogitModel>& model, std::string_view note) {
    const auto sessions = sessions_of(crashes);
    const auto members = column_members(crashes, sessions);
    std::string out;
    {
        TextTable t(with_total(sessions));
        std::vector<std::string> total, up, down, fl, unl;
        bool any_unlabeled = false;
        for (const auto& idx : members) {
            std::size_t n_up = 0, n_fl = 0, n_unl = 0;
            for (auto i : idx) {
                if (crashes[i].direction == CrashDirection::Up) ++n_up;
                if (!fleeting[i]) {
                    ++n_unl;
                } else if (*fleeting[i]) {
                    ++n_fl;
                }
            }
            any_unlabeled = any_unlabeled || n_unl > 0;
            total.push_back(fmt::format("{}", idx.size()));
            up.push_back(fmt::format("{}", n_up));
            down.push_back(fmt::format("{}", idx.size() - n_up));
            fl.push_back(count_pct(n_fl, idx.size()));
            unl.push_back(fmt::format("{}", n_unl));
        }
        t.row("Total Crashes", total);
        t.row("  Up Crashes", up);
        t.row("  Down Crashes", down);
        t.blank();
        t.row("Fleeting Liquidity", fl);
        if (any_unlabeled) t.row("  no quote coverage", unl);
        out += t.str();
    }
    out += '\n';

    TextTable t({"FleetLiq"});
    if (!model) {
        t.row("Logit model", {"not fitted"});
        out += t.str();
        out += fmt::format("note: {}\n", note);
        return out;
    }
    for (std::size_t j = 0; j < kLogitTerms; ++j) {
        if (!model->included[j]) {
            t.row(kLogitTermNames[j], {"dropped"});
            continue;
        }
        t.row(kLogitTermNames[j],
              {fmt::format("{:.4e}{}", model->alpha[j], significance_stars(model->z_stats[j]))});
        t.row("", {fmt::format("({:.4f})", model->z_stats[j])});
    }
    t.rule();
    t.row("Observations", {fmt::format("{}", model->n_rows)});
    t.row("Log-likelihood", {fmt::format("{:.4f}", model->log_likelihood)});
    t.row("Classification Precision", {fmt::format("{:.2f}%", model->classification_precision * 100.0)});
    t.rule();
    out += t.str();
    out += "** significant at the 1% level\n";
    out += "*  significant at the 5% level\n";
    if (!model->converged) out += "warning: the fit did not reach the score tolerance\n";
    for (const auto& w : model->warnings) out += fmt::format("note: {}\n", w);
    return out;
}

std::string format_logit_csv(const std::optional<LogitModel>& model) {
    std::string out = "term,coef,std_err,z,stars,included\n";
    if (!model) return out;
    for (std::size_t j = 0; j < kLogitTerms; ++j) {
        if (!model->included[j]) {
            out += fmt::format("{},,,,,0\n", kLogitTermNames[j]);
            continue;
        }
        out += fmt::format("{},{:.10e},{:.10e},{:.6f},{},1\n", kLogitTermNames[j], model->alpha[j],
                           model->std_errors[j], model->z_stats[j], significance_stars(model->z_stats[j]));
    }
    return out;
}

std::string format_fleetliq_csv(std::span<const CrashEvent> crashes, std::span<const CrashClassification> kinds,
                                std::span<const std::optional<bool>> fleeting) {
    std::string out =
        "symbol,exchange,direction,start_ts,Time,PctPriceChange,Exch,Vol,UpDown,NoTrades,Type,FleetLiq\n";
    for (std::size_t i = 0; i < crashes.size(); ++i) {
        const FeatureVector f = make_feature_row(crashes[i], kinds[i], fleeting[i].value_or(false));
        out += fmt::format("{},{},{},{},{:.0f},{:.6f},{},{:.0f},{},{},{},{}\n", crashes[i].symbol,
                           exchange_name(crashes[i].exchange), to_string(crashes[i].direction),
                           crashes[i].start_ts, f.time_ms, f.pct_price_change, f.exch, f.vol, f.updown,
                           f.no_trades, f.type, fleeting[i] ? (*fleeting[i] ? "1" : "0") : "");
    }
    return out;
}

std::string format_crashes_csv(std::span<const CrashEvent> crashes) {
    std::string out(kCrashHeader);
    out += '\n';
    for (const auto& c : crashes) {
        out += format_crash_line(c);
        out += '\n';
    }
    return out;
}

std::string format_classified_csv(std::span<const CrashEvent> crashes, std::span<const CrashClassification> kinds) {
    std::string out(kClassifiedHeader);
    out += '\n';
    for (std::size_t i = 0; i < crashes.size(); ++i) {
        out += format_classified_line(crashes[i], kinds[i]);
        out += '\n';
    }
    return out;
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) throw Error(ErrorCode::IoError, "cannot write " + path.string());
}

}  // namespace flashfx
