#pragma once

// Egg production forecasting: the 40 hand-engineered daily features, a
// 10-day-ahead per-bird productivity model fitted by OLS, cost per egg, and
// the data-source ablation harness.

#include "farmintel/common.hpp"
#include "farmintel/envforecast.hpp"
#include "farmintel/ols.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace farmintel::production {

using nlohmann::json;
using Day = std::int64_t;  // days since 1970-01-01

struct DailyRecord {
    Day date = 0;
    double eggs = 0.0;
    double deaths = 0.0;
    double flock_size = 0.0;
    double age_weeks = 0.0;

    void validate() const
    {
        if (!(eggs >= 0.0 && deaths >= 0.0 && flock_size >= 0.0 && age_weeks >= 0.0))
            throw ValidationError("production record " + format_date(date) + " has a negative value");
    }
};

struct EnvDay {
    double t_avg = 0.0, t_max = 0.0, t_min = 0.0;
    double h_avg = 0.0, h_max = 0.0, h_min = 0.0;
};

/// Daily temperature/humidity summaries over the hours present in each day.
inline std::map<Day, EnvDay> env_days(const envforecast::HourlySeries& series)
{
    std::map<Day, std::vector<envforecast::HourlyValue>> per_day;
    if (!series.empty())
        for (Timestamp h = series.first_hour(); h < series.end_hour(); h += kSecondsPerHour)
            if (auto v = series.at(h)) per_day[day_index(h)].push_back(*v);
    std::map<Day, EnvDay> out;
    for (const auto& [d, vals] : per_day) {
        EnvDay e{0.0, vals[0].temperature, vals[0].temperature, 0.0, vals[0].humidity, vals[0].humidity};
        for (const auto& v : vals) {
            e.t_avg += v.temperature;
            e.h_avg += v.humidity;
            e.t_max = std::max(e.t_max, v.temperature);
            e.t_min = std::min(e.t_min, v.temperature);
            e.h_max = std::max(e.h_max, v.humidity);
            e.h_min = std::min(e.h_min, v.humidity);
        }
        e.t_avg /= static_cast<double>(vals.size());
        e.h_avg /= static_cast<double>(vals.size());
        out[d] = e;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Indicator periods
// ---------------------------------------------------------------------------

enum Period { feed = 0, night = 1, rest = 2, whole = 3 };
enum Channel { audio = 0, video = 1 };

struct MinuteRange {
    int start = 0;  // minute of day, inclusive
    int end = 0;    // exclusive; end < start wraps past midnight

    bool contains(int m) const { return start <= end ? (m >= start && m < end) : (m >= start || m < end); }
};

/// Feeding windows and lights-off period; everything else is rest.
struct PeriodSchedule {
    std::vector<MinuteRange> feeding{{6 * 60, 7 * 60}, {12 * 60, 13 * 60}, {17 * 60, 18 * 60}};
    MinuteRange night{20 * 60, 5 * 60};

    void validate() const
    {
        auto check = [](const MinuteRange& r) {
            if (r.start < 0 || r.start >= 1440 || r.end < 0 || r.end > 1440 || r.start == r.end)
                throw ValidationError("schedule ranges must be non-empty minute ranges within a day");
        };
        for (const auto& r : feeding) check(r);
        check(night);
    }

    Period classify(int minute) const
    {
        for (const auto& r : feeding)
            if (r.contains(minute)) return feed;
        return night.contains(minute) ? Period::night : rest;
    }
};

struct IndicatorDay {
    std::array<std::array<std::vector<double>, 4>, 2> values;  // [channel][period]
};

/// Buckets indicator samples by calendar day, channel and period.
/// Channels other than audio/video are ignored.
template <class Sample>
std::map<Day, IndicatorDay> indicator_days(const std::vector<Sample>& samples, const PeriodSchedule& schedule)
{
    std::map<Day, IndicatorDay> out;
    for (const auto& s : samples) {
        int ch = -1;
        if (s.channel == "audio") ch = audio;
        if (s.channel == "video") ch = video;
        if (ch < 0) continue;
        auto& day = out[day_index(s.ts)];
        const auto c = static_cast<std::size_t>(ch);
        day.values[c][static_cast<std::size_t>(schedule.classify(minute_of_day(s.ts)))].push_back(s.value);
        day.values[c][whole].push_back(s.value);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Features
// ---------------------------------------------------------------------------

inline constexpr std::size_t kFeatureCount = 40;
using FeatureMask = std::array<bool, kFeatureCount>;

/// Mask from 1-based feature numbers.
inline FeatureMask mask_of(std::initializer_list<int> numbers)
{
    FeatureMask m{};
    for (int n : numbers) {
        if (n < 1 || n > static_cast<int>(kFeatureCount)) throw ValidationError("feature number out of range");
        m[static_cast<std::size_t>(n - 1)] = true;
    }
    return m;
}

inline FeatureMask default_mask() { return mask_of({1, 4, 7, 8, 10, 14, 15, 17, 19, 20, 28, 30, 31, 32, 33}); }
inline FeatureMask production_mask() { return mask_of({7, 14, 15, 17}); }
inline FeatureMask environment_mask() { return mask_of({1, 4, 7, 14, 15, 17}); }

inline std::string feature_name(std::size_t i) { return "f" + std::to_string(i + 1); }

struct FeatureVector {
    Day day = 0;
    std::array<std::optional<double>, kFeatureCount> values{};
    std::array<std::string, kFeatureCount> missing_reason{};

    std::vector<double> select(const FeatureMask& mask) const
    {
        std::vector<double> out;
        for (std::size_t i = 0; i < kFeatureCount; ++i)
            if (mask[i]) out.push_back(values[i].value());
        return out;
    }

    std::vector<std::string> missing(const FeatureMask& mask) const
    {
        std::vector<std::string> out;
        for (std::size_t i = 0; i < kFeatureCount; ++i)
            if (mask[i] && !values[i]) out.push_back(feature_name(i) + " (" + missing_reason[i] + ")");
        return out;
    }
};

class InsufficientHistory : public ValidationError {
public:
    using ValidationError::ValidationError;
};

struct FarmHistory {
    std::map<Day, DailyRecord> records;
    std::map<Day, EnvDay> env;
    std::map<Day, IndicatorDay> indicators;

    static FarmHistory from(const std::vector<DailyRecord>& records, std::map<Day, EnvDay> env = {},
                            std::map<Day, IndicatorDay> indicators = {})
    {
        FarmHistory h;
        for (const auto& r : records) {
            r.validate();
            if (!h.records.emplace(r.date, r).second)
                throw ValidationError("duplicate production record for " + format_date(r.date));
        }
        h.env = std::move(env);
        h.indicators = std::move(indicators);
        return h;
    }
};

inline constexpr int kLongestWindow = 15;
inline constexpr int kHorizonDays = 10;

namespace detail {

inline double mean(const std::vector<double>& v)
{
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

/// Mean of the k largest (top) or smallest values; all values when fewer than k.
inline double extreme_mean(std::vector<double> v, std::size_t k, bool top)
{
    k = std::min(k, v.size());
    if (top)
        std::partial_sort(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end(), std::greater<>());
    else
        std::partial_sort(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
    double s = 0.0;
    for (std::size_t i = 0; i < k; ++i) s += v[i];
    return s / static_cast<double>(k);
}

}  // namespace detail

/// All 40 features for a forecast issued on day `d`; windows cover d-n .. d-1.
/// Throws InsufficientHistory listing every feature of `required` that cannot be computed.
inline FeatureVector build_features(const FarmHistory& h, Day d, const FeatureMask& required = default_mask())
{
    FeatureVector fv;
    fv.day = d;
    auto set = [&](int n, std::optional<double> v, const std::string& why) {
        const auto i = static_cast<std::size_t>(n - 1);
        fv.values[i] = v;
        if (!v) fv.missing_reason[i] = why;
    };
    const Day first_record = h.records.empty() ? d : h.records.begin()->first;
    const Day first_indicator = h.indicators.empty() ? d : h.indicators.begin()->first;

    auto record_window = [&](int days, double DailyRecord::*field) -> std::optional<double> {
        if (d - days < first_record) return std::nullopt;
        std::vector<double> v;
        for (Day k = d - days; k < d; ++k)
            if (auto it = h.records.find(k); it != h.records.end()) v.push_back(it->second.*field);
        if (v.empty()) return std::nullopt;
        return detail::mean(v);
    };
    auto pooled = [&](int days, int ch, int period) {
        std::vector<double> v;
        if (d - days < first_indicator) return v;
        for (Day k = d - days; k < d; ++k)
            if (auto it = h.indicators.find(k); it != h.indicators.end()) {
                const auto& src = it->second.values[static_cast<std::size_t>(ch)][static_cast<std::size_t>(period)];
                v.insert(v.end(), src.begin(), src.end());
            }
        return v;
    };
    auto window_mean = [&](int days, int ch, int period) -> std::optional<double> {
        auto v = pooled(days, ch, period);
        if (v.empty()) return std::nullopt;
        return detail::mean(v);
    };
    auto extreme = [&](int ch, int period, bool top) -> std::optional<double> {
        auto v = pooled(3, ch, period);
        if (v.empty()) return std::nullopt;
        return detail::extreme_mean(std::move(v), 5, top);
    };

    // environment, previous day
    const auto env = h.env.find(d - 1);
    const std::string no_env = "no environment data for " + format_date(d - 1);
    auto env_value = [&](double EnvDay::*f) -> std::optional<double> {
        if (env == h.env.end()) return std::nullopt;
        return env->second.*f;
    };
    set(1, env_value(&EnvDay::t_avg), no_env);
    set(2, env_value(&EnvDay::t_max), no_env);
    set(3, env_value(&EnvDay::t_min), no_env);
    set(4, env_value(&EnvDay::h_avg), no_env);
    set(5, env_value(&EnvDay::h_max), no_env);
    set(6, env_value(&EnvDay::h_min), no_env);

    // latest record before d: age (advanced by the elapsed days) and flock size
    const auto latest = h.records.lower_bound(d);
    std::optional<double> age, flock;
    if (latest != h.records.begin()) {
        const auto& r = std::prev(latest)->second;
        age = r.age_weeks + static_cast<double>(d - 1 - r.date) / 7.0;
        flock = r.flock_size;
    }
    set(7, age, "no production record before " + format_date(d));

    const std::string short_ind = "indicator history shorter than the window";
    const std::string short_prod = "production history shorter than the window";
    set(8, window_mean(15, audio, whole), short_ind);
    set(9, window_mean(15, video, whole), short_ind);
    set(10, window_mean(7, audio, whole), short_ind);
    set(11, window_mean(7, video, whole), short_ind);
    set(12, window_mean(3, audio, whole), short_ind);
    set(13, window_mean(3, video, whole), short_ind);
    set(14, record_window(7, &DailyRecord::eggs), short_prod);
    set(15, record_window(3, &DailyRecord::eggs), short_prod);
    set(16, record_window(7, &DailyRecord::deaths), short_prod);
    set(17, record_window(3, &DailyRecord::deaths), short_prod);
    int n = 18;
    for (int period : {feed, night, rest})
        for (int days : {7, 3})
            for (int ch : {audio, video}) set(n++, window_mean(days, ch, period), short_ind);
    set(30, extreme(audio, feed, true), short_ind);
    set(31, extreme(video, feed, true), short_ind);
    set(32, extreme(audio, feed, false), short_ind);
    set(33, extreme(video, feed, false), short_ind);
    set(34, extreme(audio, night, true), short_ind);
    set(35, extreme(video, night, true), short_ind);
    set(36, extreme(audio, rest, true), short_ind);
    set(37, extreme(video, rest, true), short_ind);
    set(38, extreme(audio, rest, false), short_ind);
    set(39, extreme(video, rest, false), short_ind);
    set(40, flock, "no production record before " + format_date(d));

    const auto miss = fv.missing(required);
    if (!miss.empty()) {
        std::string msg = "insufficient history for " + format_date(d) + ": missing";
        for (const auto& m : miss) msg += " " + m;
        throw InsufficientHistory(msg);
    }
    return fv;
}

/// Mean eggs over d+1 .. d+10 divided by the flock size known on d-1;
/// nullopt when no day in the horizon has a record.
inline std::optional<double> productivity_target(const FarmHistory& h, Day d, double flock_size)
{
    std::vector<double> eggs;
    for (Day k = d + 1; k <= d + kHorizonDays; ++k)
        if (auto it = h.records.find(k); it != h.records.end()) eggs.push_back(it->second.eggs);
    if (eggs.empty() || !(flock_size > 0.0)) return std::nullopt;
    return detail::mean(eggs) / flock_size;
}

struct Sample {
    Day day = 0;
    std::vector<double> x;
    double y = 0.0;
    std::size_t target_days = 0;
};

/// Samples for every day in [from, to] with complete masked features and at least one target day.
inline std::vector<Sample> build_samples(const FarmHistory& h, const FeatureMask& mask, Day from, Day to)
{
    std::vector<Sample> out;
    for (Day d = from; d <= to; ++d) {
        FeatureVector fv;
        try {
            fv = build_features(h, d, mask);
        } catch (const InsufficientHistory&) {
            continue;
        }
        const auto y = productivity_target(h, d, *fv.values[39]);
        if (!y) continue;
        std::size_t support = 0;
        for (Day k = d + 1; k <= d + kHorizonDays; ++k) support += h.records.count(k);
        out.push_back({d, fv.select(mask), *y, support});
    }
    return out;
}

struct ProductionModel {
    FeatureMask mask = default_mask();
    std::vector<double> weights;
    double intercept = 0.0;
    bool rank_deficient = false;

    double predict(const FeatureVector& fv) const
    {
        const auto x = fv.select(mask);
        if (x.size() != weights.size()) throw ValidationError("production model is not fitted for this mask");
        double y = intercept;
        for (std::size_t i = 0; i < x.size(); ++i) y += weights[i] * x[i];
        return y;
    }
};

inline ProductionModel fit_production_model(const std::vector<Sample>& samples, const FeatureMask& mask)
{
    std::vector<std::vector<double>> rows;
    std::vector<double> y;
    for (const auto& s : samples) {
        rows.push_back(s.x);
        y.push_back(s.y);
    }
    const auto f = ols::fit(rows, y);
    return {mask, f.coefficients, f.intercept, f.rank_deficient};
}

inline json model_to_json(const ProductionModel& m)
{
    std::vector<std::string> feats;
    for (std::size_t i = 0; i < kFeatureCount; ++i)
        if (m.mask[i]) feats.push_back(feature_name(i));
    return {{"features", feats}, {"weights", m.weights}, {"intercept", m.intercept}, {"rank_deficient", m.rank_deficient}};
}

struct Productivity {
    double eggs_10day_avg = 0.0;
    double per_bird = 0.0;
    bool out_of_range = false;  // per-bird rate outside [0, 1]; reported, never clamped
};

/// `per_bird` is the model output; absolute eggs scale it by the flock.
inline Productivity predict_productivity(double per_bird, double flock_size)
{
    if (!(flock_size > 0.0)) throw ValidationError("flock size must be positive");
    return {per_bird * flock_size, per_bird, per_bird < 0.0 || per_bird > 1.0};
}

inline Productivity productivity_from_eggs(double eggs_per_day, double flock_size)
{
    if (!(flock_size > 0.0)) throw ValidationError("flock size must be positive");
    return predict_productivity(eggs_per_day / flock_size, flock_size);
}

// ---------------------------------------------------------------------------
// Feed cost
// ---------------------------------------------------------------------------

struct FeedPurchase {
    int year = 0;
    int month = 0;
    double kg = 0.0;
    double cost = 0.0;
};

struct FeedLedger {
    std::vector<FeedPurchase> purchases;
    Day cycle_start = 0;
};

struct FeedCost {
    double daily_feed_kg = 0.0;
    double daily_feed_cost = 0.0;
    std::optional<double> cost_per_egg;
    bool no_data = false;
    std::string note;
};

/// Purchases from the cycle-start month through today's month, spread over
/// the days elapsed in the cycle (start day counts as day 1).
inline FeedCost cost_per_egg(const FeedLedger& ledger, Day today, double predicted_daily_eggs)
{
    if (today < ledger.cycle_start) throw ValidationError("today precedes the production cycle start");
    const auto start = civil_from_days(ledger.cycle_start);
    const auto now = civil_from_days(today);
    const auto key = [](std::int64_t y, unsigned m) { return y * 12 + static_cast<std::int64_t>(m); };
    double kg = 0.0, cost = 0.0;
    std::size_t used = 0;
    for (const auto& p : ledger.purchases) {
        if (p.kg < 0.0 || p.cost < 0.0) throw ValidationError("feed quantities and costs must be non-negative");
        const auto k = key(p.year, static_cast<unsigned>(p.month));
        if (k < key(start.year, start.month) || k > key(now.year, now.month)) continue;
        kg += p.kg;
        cost += p.cost;
        ++used;
    }
    const double days = static_cast<double>(today - ledger.cycle_start + 1);
    FeedCost out;
    out.daily_feed_kg = kg / days;
    out.daily_feed_cost = cost / days;
    if (used == 0) {
        out.no_data = true;
        out.cost_per_egg = 0.0;
        out.note = "no feed purchases in the current cycle";
    } else if (!(predicted_daily_eggs > 0.0)) {
        out.note = "cost per egg undefined: predicted egg count is zero";
    } else {
        out.cost_per_egg = out.daily_feed_cost / predicted_daily_eggs;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Evaluation harness
// ---------------------------------------------------------------------------

struct Split {
    std::vector<Sample> train, test;
};

/// First 80% of sample days train, the rest test. Training samples whose
/// target window reaches the first test day are dropped, so no test-period
/// day feeds any training row or label.
inline Split chronological_split(const std::vector<Sample>& samples, double train_fraction = 0.8)
{
    Split s;
    if (samples.empty()) return s;
    const auto cut = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(samples.size())));
    if (cut == 0 || cut >= samples.size()) throw ValidationError("split leaves an empty train or test set");
    const Day first_test = samples[cut].day;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (i >= cut)
            s.test.push_back(samples[i]);
        else if (samples[i].day + kHorizonDays < first_test)
            s.train.push_back(samples[i]);
    }
    return s;
}

struct EvalResult {
    ProductionModel model;
    double mae = 0.0;
    std::size_t train_size = 0, test_size = 0;
};

inline EvalResult evaluate(const std::vector<Sample>& samples, const FeatureMask& mask, double train_fraction = 0.8)
{
    const auto split = chronological_split(samples, train_fraction);
    if (split.train.size() <= static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true)))
        throw ValidationError("not enough training samples for the feature set");
    EvalResult r;
    r.model = fit_production_model(split.train, mask);
    std::vector<double> pred, actual;
    for (const auto& s : split.test) {
        double y = r.model.intercept;
        for (std::size_t i = 0; i < s.x.size(); ++i) y += r.model.weights[i] * s.x[i];
        pred.push_back(y);
        actual.push_back(s.y);
    }
    r.mae = ols::mae(pred, actual);
    r.train_size = split.train.size();
    r.test_size = split.test.size();
    return r;
}

struct AblationRow {
    std::string name;
    bool production = false, sensor = false, audio_video = false;
    FeatureMask mask{};
    double mae = 0.0;
    std::size_t train_size = 0, test_size = 0;
};

/// Production-only, + environment, + audio/video (the full used set), all on
/// the same days so the rows are comparable.
inline std::vector<AblationRow> ablation(const FarmHistory& h, Day from, Day to)
{
    const std::array<std::tuple<const char*, bool, bool, bool, FeatureMask>, 3> configs{{
        {"production", true, false, false, production_mask()},
        {"production+sensor", true, true, false, environment_mask()},
        {"production+sensor+audio/video", true, true, true, default_mask()},
    }};
    // common day set: days where the full mask is computable
    const auto full = build_samples(h, default_mask(), from, to);
    std::vector<AblationRow> rows;
    for (const auto& [name, p, s, av, mask] : configs) {
        std::vector<Sample> samples;
        for (const auto& base : full) {
            auto fv = build_features(h, base.day, mask);
            samples.push_back({base.day, fv.select(mask), base.y, base.target_days});
        }
        const auto r = evaluate(samples, mask);
        rows.push_back({name, p, s, av, mask, r.mae, r.train_size, r.test_size});
    }
    return rows;
}

inline std::string format_ablation(const std::vector<AblationRow>& rows)
{
    std::string out = "Model              Production  Sensor  Audio/Video  Train  Test  Test MAE\n";
    char buf[160];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "LinearRegression   %-10s  %-6s  %-11s  %5zu  %4zu  %.4f\n", r.production ? "used" : "-",
                      r.sensor ? "used" : "-", r.audio_video ? "used" : "-", r.train_size, r.test_size, r.mae);
        out += buf;
    }
    return out;
}

}  // namespace farmintel::production
