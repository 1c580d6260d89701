#pragma once

// Static environment thresholds, time-of-day indicator bands, feeder
// majority-vote smoothing and the alert sink (JSONL log, optional webhook,
// dead-letter file).

#include "farmintel/common.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace farmintel::alerting {

using nlohmann::json;

struct ThresholdConfig {
    double temp_high = 35.0;
    double temp_low = 18.0;
    double humidity_low = 40.0;
    double humidity_high = 60.0;

    void validate() const
    {
        if (!(temp_low < temp_high)) throw ValidationError("temp_low must be below temp_high");
        if (!(humidity_low < humidity_high)) throw ValidationError("humidity_low must be below humidity_high");
    }
};

enum class Source { observed, forecast };

inline const char* to_string(Source s) { return s == Source::observed ? "observed" : "forecast"; }

struct Alert {
    Timestamp ts = 0;
    std::string kind;  // heat|cold|humidity-low|humidity-high|indicator-high|indicator-low|feeder-anomaly
    std::optional<std::string> channel;
    double value = 0.0;
    double threshold = 0.0;
    Source source = Source::observed;

    bool operator==(const Alert&) const = default;
};

inline json alert_to_json(const Alert& a)
{
    json j;
    j["ts"] = format_iso8601(a.ts);
    j["kind"] = a.kind;
    j["channel"] = a.channel ? json(*a.channel) : json(nullptr);
    j["value"] = a.value;
    j["threshold"] = a.threshold;
    j["source"] = to_string(a.source);
    return j;
}

inline Alert alert_from_json(const json& j)
{
    try {
        Alert a;
        const auto ts = parse_iso8601(j.at("ts").get<std::string>());
        if (!ts) throw ValidationError("alert record has a malformed timestamp");
        a.ts = *ts;
        a.kind = j.at("kind").get<std::string>();
        if (!j.at("channel").is_null()) a.channel = j.at("channel").get<std::string>();
        a.value = j.at("value").get<double>();
        a.threshold = j.at("threshold").get<double>();
        const auto src = j.at("source").get<std::string>();
        if (src == "observed")
            a.source = Source::observed;
        else if (src == "forecast")
            a.source = Source::forecast;
        else
            throw ValidationError("alert source must be observed or forecast");
        return a;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("alert record: ") + e.what());
    }
}

/// One alert per violated bound. Values equal to a bound are inside.
inline std::vector<Alert> check_static(Timestamp ts, double temperature, double humidity, const ThresholdConfig& cfg,
                                       Source source = Source::observed)
{
    std::vector<Alert> out;
    if (temperature > cfg.temp_high) out.push_back({ts, "heat", std::nullopt, temperature, cfg.temp_high, source});
    if (temperature < cfg.temp_low) out.push_back({ts, "cold", std::nullopt, temperature, cfg.temp_low, source});
    if (humidity > cfg.humidity_high)
        out.push_back({ts, "humidity-high", std::nullopt, humidity, cfg.humidity_high, source});
    if (humidity < cfg.humidity_low)
        out.push_back({ts, "humidity-low", std::nullopt, humidity, cfg.humidity_low, source});
    return out;
}

/// Checks every step of a forecast starting at `t0` (hourly) and keeps the
/// earliest violation of each kind.
inline std::vector<Alert> check_forecast(Timestamp t0, const std::vector<double>& temperature,
                                         const std::vector<double>& humidity, const ThresholdConfig& cfg)
{
    if (temperature.size() != humidity.size())
        throw ValidationError("temperature and humidity forecasts differ in length");
    std::vector<Alert> out;
    for (std::size_t k = 0; k < temperature.size(); ++k) {
        for (auto& a : check_static(t0 + static_cast<Timestamp>(k) * kSecondsPerHour, temperature[k], humidity[k], cfg,
                                    Source::forecast)) {
            const bool seen = std::any_of(out.begin(), out.end(), [&](const Alert& b) { return b.kind == a.kind; });
            if (!seen) out.push_back(std::move(a));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Dynamic indicator bands
// ---------------------------------------------------------------------------

struct IndicatorSample {
    Timestamp ts = 0;
    std::string channel;
    double value = 0.0;
};

inline constexpr int kMinutesPerDay = 1440;

struct BandConfig {
    int half_window_minutes = 60;
    double upper_quantile = 0.95;
    double lower_quantile = 0.25;

    void validate() const
    {
        if (half_window_minutes < 1 || half_window_minutes > kMinutesPerDay / 2)
            throw ValidationError("band half window must lie in [1, 720] minutes");
        if (!(lower_quantile > 0.0 && lower_quantile < upper_quantile && upper_quantile <= 1.0))
            throw ValidationError("band quantiles must satisfy 0 < lower < upper <= 1");
    }
};

struct DynamicBand {
    std::string channel;
    std::vector<double> center = std::vector<double>(kMinutesPerDay);
    std::vector<double> upper = std::vector<double>(kMinutesPerDay);
    std::vector<double> lower = std::vector<double>(kMinutesPerDay);
};

inline int circular_minute_distance(int a, int b)
{
    const int d = std::abs(a - b) % kMinutesPerDay;
    return std::min(d, kMinutesPerDay - d);
}

/// Value at the first position whose cumulative weight reaches q * total.
/// `items` is sorted by value in place.
inline double weighted_quantile(std::vector<std::pair<double, double>>& items, double q)
{
    if (items.empty()) throw ValidationError("weighted quantile of empty set");
    std::sort(items.begin(), items.end());
    double total = 0.0;
    for (const auto& [v, w] : items) total += w;
    const double target = q * total;
    double cum = 0.0;
    for (const auto& [v, w] : items) {
        cum += w;
        if (cum >= target) return v;
    }
    return items.back().first;
}

/// Pools every sample of `channel` by minute-of-day. For each minute the
/// samples within the window get weight 1 - |d|/half_window; the band edges are
/// weighted percentiles of that pool, widened to contain the weighted mean.
inline DynamicBand build_dynamic_band(const std::vector<IndicatorSample>& history, const std::string& channel,
                                      const BandConfig& cfg = {})
{
    cfg.validate();
    std::array<std::vector<double>, kMinutesPerDay> by_minute;
    std::size_t n = 0;
    for (const auto& s : history) {
        if (s.channel != channel) continue;
        if (!std::isfinite(s.value) || s.value < 0.0)
            throw ValidationError("indicator value must be finite and non-negative");
        by_minute[static_cast<std::size_t>(minute_of_day(s.ts))].push_back(s.value);
        ++n;
    }
    if (n == 0) throw ValidationError("no indicator history for channel '" + channel + "'");
    // sorted per-minute values make the pooled order independent of input order
    for (auto& v : by_minute) std::sort(v.begin(), v.end());

    DynamicBand band;
    band.channel = channel;
    const int hw = cfg.half_window_minutes;
    std::vector<std::pair<double, double>> pool;
    for (int m = 0; m < kMinutesPerDay; ++m) {
        pool.clear();
        double wsum = 0.0, vmin = std::numeric_limits<double>::infinity();
        for (int d = -hw + 1; d <= hw - 1; ++d) {
            const double w = 1.0 - std::abs(d) / static_cast<double>(hw);
            const int src = ((m + d) % kMinutesPerDay + kMinutesPerDay) % kMinutesPerDay;
            for (double v : by_minute[static_cast<std::size_t>(src)]) {
                pool.emplace_back(v, w);
                wsum += w;
                vmin = std::min(vmin, v);
            }
        }
        const auto i = static_cast<std::size_t>(m);
        if (pool.empty()) {
            // no samples near this minute: an open band never fires
            band.center[i] = 0.0;
            band.lower[i] = 0.0;
            band.upper[i] = std::numeric_limits<double>::infinity();
            continue;
        }
        // offset from the minimum keeps a constant pool exactly constant
        double excess = 0.0;
        for (const auto& [v, w] : pool) excess += w * (v - vmin);
        const double center = vmin + excess / wsum;
        band.center[i] = center;
        band.upper[i] = std::max(weighted_quantile(pool, cfg.upper_quantile), center);
        band.lower[i] = std::min(weighted_quantile(pool, cfg.lower_quantile), center);
    }
    return band;
}

/// indicator-high above the upper edge, indicator-low below the lower edge.
inline std::optional<Alert> check_dynamic(const IndicatorSample& s, const DynamicBand& band)
{
    const auto m = static_cast<std::size_t>(minute_of_day(s.ts));
    if (s.value > band.upper[m]) return Alert{s.ts, "indicator-high", s.channel, s.value, band.upper[m], Source::observed};
    if (s.value < band.lower[m]) return Alert{s.ts, "indicator-low", s.channel, s.value, band.lower[m], Source::observed};
    return std::nullopt;
}

inline json band_to_json(const DynamicBand& b)
{
    auto arr = [](const std::vector<double>& v) {
        json a = json::array();
        for (double x : v) a.push_back(std::isfinite(x) ? json(x) : json(nullptr));
        return a;
    };
    return {{"channel", b.channel}, {"center", arr(b.center)}, {"upper", arr(b.upper)}, {"lower", arr(b.lower)}};
}

inline DynamicBand band_from_json(const json& j)
{
    try {
        DynamicBand b;
        b.channel = j.at("channel").get<std::string>();
        auto read = [&](const char* key, std::vector<double>& out, double null_value) {
            const auto& a = j.at(key);
            if (!a.is_array() || a.size() != kMinutesPerDay)
                throw ValidationError(std::string("band '") + key + "' must hold 1440 values");
            for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i].is_null() ? null_value : a[i].get<double>();
        };
        read("center", b.center, 0.0);
        read("upper", b.upper, std::numeric_limits<double>::infinity());
        read("lower", b.lower, 0.0);
        return b;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("band file: ") + e.what());
    }
}

/// Band file: {"bands": [band, ...]} with one entry per channel.
inline json bands_to_json(const std::vector<DynamicBand>& bands)
{
    json arr = json::array();
    for (const auto& b : bands) arr.push_back(band_to_json(b));
    return {{"bands", arr}};
}

inline std::map<std::string, DynamicBand> bands_from_json(const json& j)
{
    std::map<std::string, DynamicBand> out;
    if (!j.contains("bands") || !j["bands"].is_array()) throw ValidationError("band file needs a 'bands' array");
    for (const auto& b : j["bands"]) {
        auto band = band_from_json(b);
        out[band.channel] = std::move(band);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Feeder smoothing
// ---------------------------------------------------------------------------

struct FeederInterval {
    Timestamp open_start = 0;
    Timestamp open_end = 0;  // exclusive

    bool operator==(const FeederInterval&) const = default;
};

/// Tumbling windows of `window` labels from the stream start; a window is open
/// on a strict majority of open labels. Consecutive open windows merge.
inline std::vector<FeederInterval> smooth_feeder(const std::vector<bool>& open_labels, Timestamp start = 0,
                                                 int clip_seconds = 2, int window = 27)
{
    if (window < 1) throw ValidationError("feeder window must be at least 1");
    if (clip_seconds < 1) throw ValidationError("clip length must be at least 1 second");
    std::vector<FeederInterval> out;
    const std::size_t n = open_labels.size();
    const auto w = static_cast<std::size_t>(window);
    bool extending = false;
    for (std::size_t begin = 0; begin < n; begin += w) {
        const std::size_t end = std::min(begin + w, n);
        const auto open = static_cast<std::size_t>(std::count(open_labels.begin() + static_cast<std::ptrdiff_t>(begin),
                                                              open_labels.begin() + static_cast<std::ptrdiff_t>(end), true));
        if (2 * open > end - begin) {
            const Timestamp t_end = start + static_cast<Timestamp>(end) * clip_seconds;
            if (extending)
                out.back().open_end = t_end;
            else
                out.push_back({start + static_cast<Timestamp>(begin) * clip_seconds, t_end});
            extending = true;
        } else {
            extending = false;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Sink
// ---------------------------------------------------------------------------

/// Posts a JSON body; returns the HTTP status, or a negative value when the
/// request could not be sent.
using Transport = std::function<int(const std::string& body)>;
using Sleeper = std::function<void(std::chrono::milliseconds)>;

struct RetryPolicy {
    int max_attempts = 3;
    std::chrono::milliseconds base_delay{200};
    std::chrono::milliseconds max_delay{2000};

    void validate() const
    {
        if (max_attempts < 1) throw ValidationError("webhook max_attempts must be at least 1");
        if (base_delay.count() < 0 || max_delay < base_delay) throw ValidationError("invalid webhook backoff delays");
    }

    std::chrono::milliseconds delay_after(int attempt) const
    {
        auto d = base_delay;
        for (int i = 1; i < attempt && d < max_delay; ++i) d *= 2;
        return std::min(d, max_delay);
    }
};

struct SinkConfig {
    std::string log_path;
    std::string dead_letter_path;
    int dedup_minutes = 30;
    RetryPolicy retry;
};

struct DeliveryRecord {
    bool suppressed = false;
    bool logged = false;
    int webhook_attempts = 0;
    int last_status = 0;
    bool delivered = false;
    bool dead_lettered = false;
};

/// Thread-safe: detection pipelines may emit concurrently; writes are serialized.
class AlertSink {
public:
    explicit AlertSink(SinkConfig cfg, Transport transport = {}, Sleeper sleeper = {})
        : cfg_(std::move(cfg)), transport_(std::move(transport)), sleeper_(std::move(sleeper))
    {
        cfg_.retry.validate();
        if (cfg_.dedup_minutes < 0) throw ValidationError("dedup window must be non-negative");
        if (cfg_.log_path.empty()) throw ValidationError("alert log path is required");
        if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
        log_.open(cfg_.log_path, std::ios::app | std::ios::binary);
        if (!log_) throw RuntimeFault("cannot open alert log " + cfg_.log_path);
    }

    /// Never throws for delivery problems; they show up in the record.
    DeliveryRecord emit(const Alert& a)
    {
        std::lock_guard lock(mu_);
        DeliveryRecord rec;
        const auto key = std::make_pair(a.kind, a.channel.value_or(""));
        const auto it = last_emit_.find(key);
        if (it != last_emit_.end() && a.ts >= it->second && a.ts - it->second < cfg_.dedup_minutes * kSecondsPerMinute) {
            rec.suppressed = true;
            ++suppressed_;
            return rec;
        }
        last_emit_[key] = a.ts;

        const std::string line = alert_to_json(a).dump();
        log_ << line << '\n';
        log_.flush();
        rec.logged = static_cast<bool>(log_);
        ++logged_;

        if (transport_) {
            for (int attempt = 1; attempt <= cfg_.retry.max_attempts; ++attempt) {
                rec.webhook_attempts = attempt;
                try {
                    rec.last_status = transport_(line);
                } catch (const std::exception&) {
                    rec.last_status = -1;
                }
                if (rec.last_status >= 200 && rec.last_status < 300) {
                    rec.delivered = true;
                    break;
                }
                if (attempt < cfg_.retry.max_attempts) sleeper_(cfg_.retry.delay_after(attempt));
            }
            if (!rec.delivered) {
                rec.dead_lettered = dead_letter(line);
                ++dead_lettered_;
            }
        }
        return rec;
    }

    void flush()
    {
        std::lock_guard lock(mu_);
        log_.flush();
    }

    std::size_t logged() const { return logged_; }
    std::size_t suppressed() const { return suppressed_; }
    std::size_t dead_lettered() const { return dead_lettered_; }

private:
    bool dead_letter(const std::string& line)
    {
        if (cfg_.dead_letter_path.empty()) return false;
        std::ofstream f(cfg_.dead_letter_path, std::ios::app | std::ios::binary);
        f << line << '\n';
        return static_cast<bool>(f);
    }

    SinkConfig cfg_;
    Transport transport_;
    Sleeper sleeper_;
    std::ofstream log_;
    std::mutex mu_;
    std::map<std::pair<std::string, std::string>, Timestamp> last_emit_;
    std::size_t logged_ = 0, suppressed_ = 0, dead_lettered_ = 0;
};

}  // namespace farmintel::alerting
