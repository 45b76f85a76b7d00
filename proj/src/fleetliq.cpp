#include "flashfx/fleetliq.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "flashfx/log.hpp"

namespace flashfx {

bool detect_fleeting_liquidity(const CrashEvent& c, const QuoteTimeline& quotes) {
    if (c.trades.empty()) return true;
    if (quotes.nbbo_before_seq(c.first_seq()) == nullptr) {
        throw Error(ErrorCode::InsufficientQuoteHistory,
                    "no NBBO before crash at ts " + std::to_string(c.start_ts));
    }
    const bool down = c.direction == CrashDirection::Down;
    for (const TradeRecord& t : c.trades) {
        const NbboSnapshot* s = quotes.nbbo_before_seq(t.seq);
        const Nbbo& n = s->nbbo;
        if (down) {
            if (n.has_bid() && t.price >= n.best_bid) return false;
        } else {
            if (n.has_offer() && t.price <= n.best_offer) return false;
        }
    }
    return true;
}

Coefficients design_row(const FeatureVector& r) {
    return {1.0,
            r.time_ms,
            r.pct_price_change,
            static_cast<double>(r.exch),
            r.vol,
            static_cast<double>(r.updown),
            static_cast<double>(r.no_trades),
            static_cast<double>(r.type)};
}

FeatureVector make_feature_row(const CrashEvent& c, const CrashClassification& k, bool fleeting) {
    FeatureVector f;
    f.time_ms = static_cast<double>(c.duration_ms);
    f.pct_price_change = std::fabs(c.pct_change);
    f.exch = exchange_code(c.exchange);
    f.vol = static_cast<double>(c.total_volume);
    f.updown = c.direction == CrashDirection::Up ? 1 : 0;
    f.no_trades = c.n_trades;
    f.type = static_cast<int>(k.kind);
    f.fleet_liq = fleeting ? 1 : 0;
    f.session = c.session;
    return f;
}

std::vector<FeatureVector> build_feature_rows(std::span<const CrashEvent> crashes,
                                              std::span<const CrashClassification> kinds,
                                              std::span<const bool> fleeting) {
    if (crashes.size() != kinds.size() || crashes.size() != fleeting.size()) {
        throw Error(ErrorCode::InvalidConfig, "feature inputs differ in length");
    }
    std::vector<FeatureVector> rows;
    rows.reserve(crashes.size());
    for (std::size_t i = 0; i < crashes.size(); ++i) {
        rows.push_back(make_feature_row(crashes[i], kinds[i], fleeting[i]));
    }
    return rows;
}

double logistic(double f) {
    if (f >= 0) return 1.0 / (1.0 + std::exp(-f));
    const double e = std::exp(f);
    return e / (1.0 + e);
}

double linear_predictor(const Coefficients& alpha, const FeatureVector& row) {
    const Coefficients x = design_row(row);
    double f = 0.0;
    for (std::size_t j = 0; j < kLogitTerms; ++j) f += alpha[j] * x[j];
    return f;
}

namespace {

// log(1 + e^f) without overflow.
double softplus(double f) { return f > 0 ? f + std::log1p(std::exp(-f)) : std::log1p(std::exp(f)); }

}  // namespace

double log_likelihood(std::span<const FeatureVector> rows, const Coefficients& alpha) {
    double ll = 0.0;
    for (const auto& r : rows) {
        const double f = linear_predictor(alpha, r);
        ll += r.fleet_liq * f - softplus(f);
    }
    return ll;
}

Coefficients score(std::span<const FeatureVector> rows, const Coefficients& alpha) {
    Coefficients g{};
    for (const auto& r : rows) {
        const Coefficients x = design_row(r);
        const double resid = r.fleet_liq - logistic(linear_predictor(alpha, r));
        for (std::size_t j = 0; j < kLogitTerms; ++j) g[j] += x[j] * resid;
    }
    return g;
}

LogitModel fit_logit(std::span<const FeatureVector> rows, const LogitOptions& opts) {
    if (rows.empty()) throw Error(ErrorCode::EmptyInput, "no rows to fit");
    const auto n = static_cast<Eigen::Index>(rows.size());

    Eigen::VectorXd y(n);
    Eigen::MatrixXd raw(n, static_cast<Eigen::Index>(kLogitTerms));
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& r = rows[static_cast<std::size_t>(i)];
        y(i) = r.fleet_liq;
        const Coefficients x = design_row(r);
        for (std::size_t j = 0; j < kLogitTerms; ++j) raw(i, static_cast<Eigen::Index>(j)) = x[j];
    }
    const double positives = y.sum();
    if (positives == 0.0 || positives == static_cast<double>(n)) {
        throw Error(ErrorCode::Separation, "only one label present");
    }

    LogitModel m;
    m.n_rows = rows.size();
    std::vector<Eigen::Index> cols;
    std::vector<double> scale;
    for (std::size_t j = 0; j < kLogitTerms; ++j) {
        const auto col = raw.col(static_cast<Eigen::Index>(j));
        if (j > 0 && col.maxCoeff() == col.minCoeff()) {
            m.warnings.push_back(std::string(kLogitTermNames[j]) + " is constant; dropped");
            log_warn(m.warnings.back());
            continue;
        }
        m.included[j] = true;
        cols.push_back(static_cast<Eigen::Index>(j));
        // Columns are rescaled to unit max magnitude so raw volumes and
        // indicator codes share one numerical range.
        scale.push_back(j == 0 ? 1.0 : col.cwiseAbs().maxCoeff());
    }
    const auto p = static_cast<Eigen::Index>(cols.size());
    Eigen::MatrixXd X(n, p);
    for (Eigen::Index k = 0; k < p; ++k) X.col(k) = raw.col(cols[k]) / scale[k];

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    if (qr.rank() < p) throw Error(ErrorCode::Singular, "regressors are collinear");

    auto loglik = [&](const Eigen::VectorXd& eta) {
        double ll = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) ll += y(i) * eta(i) - softplus(eta(i));
        return ll;
    };
    auto separated = [&](const Eigen::VectorXd& eta) {
        for (Eigen::Index i = 0; i < n; ++i) {
            const double margin = y(i) > 0.5 ? eta(i) : -eta(i);
            if (margin < 15.0) return false;
        }
        return true;
    };

    // Largest score component in the original column units.
    auto raw_score = [&](const Eigen::VectorXd& g) {
        double worst = 0.0;
        for (Eigen::Index k = 0; k < p; ++k) worst = std::max(worst, std::abs(g(k) * scale[k]));
        return worst;
    };

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd eta = X * beta;
    Eigen::MatrixXd info(p, p);
    double ll = loglik(eta);
    double max_score = std::numeric_limits<double>::infinity();

    for (int it = 1; it <= opts.max_iterations; ++it) {
        m.iterations = it;
        Eigen::VectorXd prob(n), w(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            prob(i) = logistic(eta(i));
            w(i) = prob(i) * (1.0 - prob(i));
        }
        const Eigen::VectorXd g = X.transpose() * (y - prob);
        info = X.transpose() * w.asDiagonal() * X;
        max_score = raw_score(g);
        if (max_score < opts.score_tolerance) break;

        Eigen::LLT<Eigen::MatrixXd> llt(info);
        if (llt.info() != Eigen::Success) {
            llt.compute(info + opts.ridge * Eigen::MatrixXd::Identity(p, p));
            if (llt.info() != Eigen::Success) throw Error(ErrorCode::Singular, "information matrix is singular");
        }
        Eigen::VectorXd step = llt.solve(g);

        // Halve the step while it lowers the likelihood.
        Eigen::VectorXd next = beta + step;
        Eigen::VectorXd next_eta = X * next;
        double next_ll = loglik(next_eta);
        // Near the optimum the gain drops below rounding noise in the
        // likelihood, so a change within that noise still counts as progress.
        const double noise = 1e-12 * std::max(1.0, std::abs(ll));
        for (int h = 0; h < 30 && next_ll < ll - noise; ++h) {
            step *= 0.5;
            next = beta + step;
            next_eta = X * next;
            next_ll = loglik(next_eta);
        }
        const double step_size = step.cwiseAbs().maxCoeff();
        if (next_ll >= ll - noise) {
            beta = next;
            eta = next_eta;
            ll = next_ll;
        }
        if (separated(eta)) throw Error(ErrorCode::Separation, "labels are perfectly separable");
        if (step_size <= 1e-12 * (1.0 + beta.cwiseAbs().maxCoeff())) break;
    }

    // Final score and information at the accepted coefficients.
    {
        Eigen::VectorXd prob(n), w(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            prob(i) = logistic(eta(i));
            w(i) = prob(i) * (1.0 - prob(i));
        }
        max_score = raw_score(X.transpose() * (y - prob));
        info = X.transpose() * w.asDiagonal() * X;
    }
    m.converged = max_score < opts.score_tolerance;
    if (!m.converged) {
        if (eta.cwiseAbs().maxCoeff() > 30.0) {
            throw Error(ErrorCode::Separation, "coefficients diverge; labels are quasi-separable");
        }
        m.warnings.push_back("IRLS stopped before the score tolerance was met");
        log_warn(m.warnings.back());
    }

    Eigen::FullPivLU<Eigen::MatrixXd> lu(info);
    if (!lu.isInvertible()) throw Error(ErrorCode::Singular, "information matrix is singular at the optimum");
    const Eigen::MatrixXd cov = lu.inverse();

    const double nan = std::numeric_limits<double>::quiet_NaN();
    m.std_errors.fill(nan);
    m.z_stats.fill(nan);
    for (Eigen::Index k = 0; k < p; ++k) {
        const auto j = static_cast<std::size_t>(cols[k]);
        m.alpha[j] = beta(k) / scale[k];
        m.std_errors[j] = std::sqrt(cov(k, k)) / scale[k];
        m.z_stats[j] = m.alpha[j] / m.std_errors[j];
    }
    m.log_likelihood = log_likelihood(rows, m.alpha);
    m.classification_precision = classification_precision(m, rows);
    return m;
}

double predict(const LogitModel& model, const FeatureVector& row) {
    return logistic(linear_predictor(model.alpha, row));
}

double classification_precision(const LogitModel& model, std::span<const FeatureVector> rows) {
    if (rows.empty()) throw Error(ErrorCode::EmptyInput, "no rows to score");
    std::size_t hits = 0;
    for (const auto& r : rows) {
        const int label = predict(model, r) > 0.5 ? 1 : 0;
        if (label == r.fleet_liq) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(rows.size());
}

std::string_view significance_stars(double z) {
    const double a = std::fabs(z);
    if (a > 2.576) return "**";
    if (a > 1.960) return "*";
    return "";
}

}  // namespace flashfx
