#pragma once

// Hourly aggregation of temperature/humidity sensors and iterative one-hour
// ahead linear forecasting with same-hour historical profile features.

#include "farmintel/common.hpp"
#include "farmintel/ols.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <span>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace farmintel::envforecast {

struct SensorReading {
    Timestamp timestamp = 0;
    std::string sensor_id;
    double temperature = 0.0;  // deg C
    double humidity = 0.0;     // %RH
};

enum class Variable { temperature, humidity };

inline const char* to_string(Variable v) { return v == Variable::temperature ? "temperature" : "humidity"; }

inline Variable parse_variable(const std::string& s)
{
    if (s == "temperature" || s == "temp") return Variable::temperature;
    if (s == "humidity" || s == "hum") return Variable::humidity;
    throw ValidationError("unknown target variable '" + s + "'");
}

struct HourlyValue {
    double temperature = 0.0;
    double humidity = 0.0;

    double get(Variable v) const { return v == Variable::temperature ? temperature : humidity; }
};

/// Dense hourly grid from the first to the last observed hour; missing hours are gaps.
class HourlySeries {
public:
    HourlySeries() = default;

    bool empty() const { return values_.empty(); }
    std::size_t size() const { return values_.size(); }
    Timestamp first_hour() const { return first_; }
    Timestamp last_hour() const { return first_ + static_cast<Timestamp>(values_.size() - 1) * kSecondsPerHour; }
    Timestamp end_hour() const { return first_ + static_cast<Timestamp>(values_.size()) * kSecondsPerHour; }

    void set(Timestamp hour, HourlyValue v)
    {
        hour = hour_start(hour);
        if (values_.empty()) {
            first_ = hour;
            values_.emplace_back(v);
            return;
        }
        if (hour < first_) {
            const auto shift = static_cast<std::size_t>((first_ - hour) / kSecondsPerHour);
            values_.insert(values_.begin(), shift, std::nullopt);
            first_ = hour;
        }
        const auto idx = static_cast<std::size_t>((hour - first_) / kSecondsPerHour);
        if (idx >= values_.size()) values_.resize(idx + 1);
        values_[idx] = v;
    }

    std::optional<HourlyValue> at(Timestamp hour) const
    {
        if (values_.empty() || hour < first_ || hour % kSecondsPerHour != 0) return std::nullopt;
        const auto idx = static_cast<std::size_t>((hour - first_) / kSecondsPerHour);
        if (idx >= values_.size()) return std::nullopt;
        return values_[idx];
    }

    std::optional<double> value(Timestamp hour, Variable v) const
    {
        auto h = at(hour);
        if (!h) return std::nullopt;
        return h->get(v);
    }

    std::size_t gap_count() const
    {
        return static_cast<std::size_t>(std::count(values_.begin(), values_.end(), std::nullopt));
    }

private:
    Timestamp first_ = 0;
    std::vector<std::optional<HourlyValue>> values_;
};

inline double median(std::vector<double> v)
{
    if (v.empty()) throw ValidationError("median of empty set");
    std::sort(v.begin(), v.end());
    const auto m = v.size() / 2;
    return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

/// Per sensor and hour: mean of its readings. Per hour: median across the
/// sensors that reported. Temperature and humidity are aggregated independently.
inline HourlySeries aggregate_hourly(const std::vector<SensorReading>& readings)
{
    struct Acc {
        double t = 0.0, h = 0.0;
        int n = 0;
    };
    std::map<Timestamp, std::map<std::string, Acc>> buckets;
    for (const auto& r : readings) {
        auto& a = buckets[hour_start(r.timestamp)][r.sensor_id];
        a.t += r.temperature;
        a.h += r.humidity;
        ++a.n;
    }
    HourlySeries series;
    for (const auto& [hour, sensors] : buckets) {
        std::vector<double> ts, hs;
        for (const auto& [id, a] : sensors) {
            ts.push_back(a.t / a.n);
            hs.push_back(a.h / a.n);
        }
        series.set(hour, {median(ts), median(hs)});
    }
    return series;
}

inline constexpr std::array<int, 3> kProfileWindows{3, 7, 14};

/// Same-hour means over the previous 3, 7 and 14 days; nullopt where no day
/// in the window has data.
inline std::array<std::optional<double>, 3> historical_profile(const HourlySeries& series, Timestamp target_hour,
                                                               Variable var, Timestamp observed_until)
{
    std::array<std::optional<double>, 3> out{};
    double sum = 0.0;
    int count = 0;
    int day = 1;
    for (std::size_t w = 0; w < kProfileWindows.size(); ++w) {
        for (; day <= kProfileWindows[w]; ++day) {
            const Timestamp h = target_hour - day * kSecondsPerDay;
            if (h >= observed_until) continue;
            if (auto v = series.value(h, var)) {
                sum += *v;
                ++count;
            }
        }
        if (count > 0) out[w] = sum / count;
    }
    return out;
}

struct ForecastModel {
    Variable target = Variable::temperature;
    int lookback = 3;
    bool use_profile = true;
    std::vector<double> weights;
    double intercept = 0.0;
    bool rank_deficient = false;

    std::size_t feature_count() const { return static_cast<std::size_t>(lookback) + (use_profile ? 3 : 0); }

    void validate() const
    {
        if (lookback < 1 || lookback > 5) throw ValidationError("lookback must lie in [1, 5]");
        if (!weights.empty() && weights.size() != feature_count())
            throw ValidationError("model has " + std::to_string(weights.size()) + " weights, expected " +
                                  std::to_string(feature_count()));
    }

    double predict(std::span<const double> row) const
    {
        double y = intercept;
        for (std::size_t i = 0; i < row.size(); ++i) y += weights.at(i) * row[i];
        return y;
    }
};

/// Thrown when the lag window reaches into a gap or before the series.
class InsufficientHistory : public ValidationError {
public:
    InsufficientHistory(Timestamp requested, std::optional<Timestamp> earliest)
        : ValidationError(message(requested, earliest)), requested_(requested), earliest_(earliest)
    {
    }
    Timestamp requested() const { return requested_; }
    std::optional<Timestamp> earliest_usable() const { return earliest_; }

private:
    static std::string message(Timestamp requested, std::optional<Timestamp> earliest)
    {
        std::string m = "insufficient history for " + format_iso8601(requested);
        if (earliest)
            m += "; earliest usable hour is " + format_iso8601(*earliest);
        else
            m += "; no hour in the series has a complete look-back window";
        return m;
    }
    Timestamp requested_;
    std::optional<Timestamp> earliest_;
};

/// First hour whose `lookback` preceding hours are all present.
inline std::optional<Timestamp> earliest_usable_hour(const HourlySeries& series, int lookback, Variable var)
{
    if (series.empty()) return std::nullopt;
    int run = 0;
    for (Timestamp h = series.first_hour(); h <= series.end_hour(); h += kSecondsPerHour) {
        if (run >= lookback) return h;
        run = series.value(h, var) ? run + 1 : 0;
    }
    return std::nullopt;
}

namespace detail {

/// Builds one feature row. Lag hours at or after `rollout_start` are read from
/// `rolled` (predictions of earlier rollout steps); profiles only ever see
/// observations before `observed_until`.
inline std::vector<double> feature_row(const HourlySeries& series, Timestamp t, const ForecastModel& model,
                                       Timestamp observed_until, Timestamp rollout_start,
                                       const std::vector<double>& rolled)
{
    std::vector<double> row;
    row.reserve(model.feature_count());
    for (int lag = 1; lag <= model.lookback; ++lag) {
        const Timestamp h = t - lag * kSecondsPerHour;
        if (h >= rollout_start) {
            const auto idx = static_cast<std::size_t>((h - rollout_start) / kSecondsPerHour);
            row.push_back(rolled.at(idx));
            continue;
        }
        auto v = series.value(h, model.target);
        if (!v) throw InsufficientHistory(t, earliest_usable_hour(series, model.lookback, model.target));
        row.push_back(*v);
    }
    if (model.use_profile) {
        const auto prof = historical_profile(series, t, model.target, observed_until);
        for (const auto& m : prof) row.push_back(m ? *m : row.front());  // no data in window: fall back to lag-1
    }
    return row;
}

}  // namespace detail

/// Features for target hour `t`: lags t-1..t-L, then (optionally) the 3/7/14-day
/// same-hour means.
inline std::vector<double> build_features(const HourlySeries& series, Timestamp t, const ForecastModel& model)
{
    model.validate();
    return detail::feature_row(series, hour_start(t), model, hour_start(t), std::numeric_limits<Timestamp>::max(), {});
}

/// One training pair per hour in [from, to) with a complete lag window and an observed target.
inline std::pair<std::vector<std::vector<double>>, std::vector<double>> training_set(const HourlySeries& series,
                                                                                     const ForecastModel& model,
                                                                                     Timestamp from, Timestamp to)
{
    std::vector<std::vector<double>> rows;
    std::vector<double> targets;
    for (Timestamp t = hour_start(from); t < to; t += kSecondsPerHour) {
        auto y = series.value(t, model.target);
        if (!y) continue;
        try {
            rows.push_back(build_features(series, t, model));
            targets.push_back(*y);
        } catch (const InsufficientHistory&) {
        }
    }
    return {std::move(rows), std::move(targets)};
}

inline ForecastModel fit_model(const HourlySeries& series, Variable target, int lookback, bool use_profile,
                               Timestamp from, Timestamp to)
{
    ForecastModel m;
    m.target = target;
    m.lookback = lookback;
    m.use_profile = use_profile;
    m.validate();
    auto [rows, targets] = training_set(series, m, from, to);
    if (rows.size() < m.feature_count() + 1)
        throw ValidationError("not enough complete training hours (" + std::to_string(rows.size()) + ")");
    const auto f = ols::fit(rows, targets);
    m.weights = f.coefficients;
    m.intercept = f.intercept;
    m.rank_deficient = f.rank_deficient;
    return m;
}

/// Predicts hours t0 .. t0+H-1. Each step feeds earlier predictions back in as
/// lag features; profile features use observations before t0 only.
inline std::vector<double> forecast_iterative(const ForecastModel& model, const HourlySeries& series, Timestamp t0,
                                              int horizon)
{
    model.validate();
    if (horizon < 1) throw ValidationError("forecast horizon must be at least 1");
    if (model.weights.size() != model.feature_count()) throw ValidationError("model is not fitted");
    t0 = hour_start(t0);
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(horizon));
    for (int k = 0; k < horizon; ++k) {
        const Timestamp t = t0 + k * kSecondsPerHour;
        const auto row = detail::feature_row(series, t, model, t0, t0, out);
        out.push_back(model.predict(row));
    }
    return out;
}

inline nlohmann::json model_to_json(const ForecastModel& m)
{
    return {{"target", to_string(m.target)},
            {"lookback", m.lookback},
            {"use_profile", m.use_profile},
            {"weights", m.weights},
            {"intercept", m.intercept}};
}

inline ForecastModel model_from_json(const nlohmann::json& j)
{
    try {
        ForecastModel m;
        m.target = parse_variable(j.at("target").get<std::string>());
        m.lookback = j.at("lookback").get<int>();
        m.use_profile = j.at("use_profile").get<bool>();
        m.weights = j.at("weights").get<std::vector<double>>();
        m.intercept = j.at("intercept").get<double>();
        m.validate();
        if (m.weights.size() != m.feature_count()) throw ValidationError("model weights do not match its configuration");
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("model file: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// Configuration grid: {profile off/on} x {lookback 1..5} x horizons, per variable.
// ---------------------------------------------------------------------------

struct GridOptions {
    std::vector<int> lookbacks{1, 2, 3, 4, 5};
    std::vector<int> horizons{2, 3, 4, 5};
    double train_fraction = 0.8;
    int warmup_days = 14;  // hours before this are never targets, so both profile settings see the same samples
};

struct GridRow {
    Variable target = Variable::temperature;
    bool use_profile = false;
    int lookback = 1;
    std::map<int, double> rmse;  // horizon (hours) -> RMSE of the h-step-ahead value
};

/// Chronological split: hours before the split train, rollouts start at each
/// test hour with all targets observed. The h-hour column scores the h-th step.
inline GridRow evaluate_configuration(const HourlySeries& series, Variable target, bool use_profile, int lookback,
                                      const GridOptions& opt)
{
    if (series.empty()) throw ValidationError("empty series");
    const Timestamp start = series.first_hour() + opt.warmup_days * kSecondsPerDay;
    const auto hours = static_cast<Timestamp>(series.size());
    const Timestamp split = series.first_hour() +
                            static_cast<Timestamp>(std::floor(opt.train_fraction * static_cast<double>(hours))) *
                                kSecondsPerHour;
    if (split <= start) throw ValidationError("series too short for the warm-up period and split");

    const auto model = fit_model(series, target, lookback, use_profile, start, split);
    const int max_h = *std::max_element(opt.horizons.begin(), opt.horizons.end());

    std::map<int, std::pair<std::vector<double>, std::vector<double>>> pairs;
    for (Timestamp t0 = split; t0 + (max_h - 1) * kSecondsPerHour < series.end_hour(); t0 += kSecondsPerHour) {
        std::vector<double> actual;
        for (int k = 0; k < max_h; ++k) {
            auto v = series.value(t0 + k * kSecondsPerHour, target);
            if (!v) break;
            actual.push_back(*v);
        }
        if (static_cast<int>(actual.size()) < max_h) continue;
        std::vector<double> pred;
        try {
            pred = forecast_iterative(model, series, t0, max_h);
        } catch (const InsufficientHistory&) {
            continue;
        }
        for (int h : opt.horizons) {
            pairs[h].first.push_back(pred[static_cast<std::size_t>(h - 1)]);
            pairs[h].second.push_back(actual[static_cast<std::size_t>(h - 1)]);
        }
    }
    GridRow row;
    row.target = target;
    row.use_profile = use_profile;
    row.lookback = lookback;
    for (int h : opt.horizons) {
        if (pairs[h].first.empty()) throw ValidationError("no complete test windows for horizon " + std::to_string(h));
        row.rmse[h] = ols::rmse(pairs[h].first, pairs[h].second);
    }
    return row;
}

inline std::vector<GridRow> forecast_grid(const HourlySeries& series, const GridOptions& opt = {})
{
    std::vector<GridRow> rows;
    for (bool profile : {false, true})
        for (int l : opt.lookbacks)
            for (Variable v : {Variable::temperature, Variable::humidity})
                rows.push_back(evaluate_configuration(series, v, profile, l, opt));
    return rows;
}

/// Renders the grid as a fixed-width table: one line per (profile, lookback),
/// T/H columns per horizon.
inline std::string format_grid(const std::vector<GridRow>& rows, const GridOptions& opt = {})
{
    std::string out = "Model              Profile  Look-back";
    char buf[64];
    for (int h : opt.horizons) {
        std::snprintf(buf, sizeof buf, "  %dh T   %dh H ", h, h);
        out += buf;
    }
    out += '\n';
    for (std::size_t i = 0; i + 1 < rows.size(); i += 2) {
        const auto& t = rows[i].target == Variable::temperature ? rows[i] : rows[i + 1];
        const auto& hm = rows[i].target == Variable::temperature ? rows[i + 1] : rows[i];
        std::snprintf(buf, sizeof buf, "LinearRegression   %-7s  %d hour%s ", t.use_profile ? "yes" : "no", t.lookback,
                      t.lookback == 1 ? " " : "s");
        out += buf;
        for (int h : opt.horizons) {
            std::snprintf(buf, sizeof buf, "  %6.3f %6.3f", t.rmse.at(h), hm.rmse.at(h));
            out += buf;
        }
        out += '\n';
    }
    return out;
}

}  // namespace farmintel::envforecast
