#pragma once

// Rule-based recommendations from weather outlook, farm conditions,
// activity indicators and predicted productivity.

#include "farmintel/alerting.hpp"
#include "farmintel/common.hpp"

#include <json.hpp>

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

namespace farmintel::recommend {

using nlohmann::json;

struct WeatherDay {
    std::string date;
    double temp_min = 0.0, temp_max = 0.0;
    double wind_kmh = 0.0;
    double cloud_pct = 0.0;
    double rain_pct = 0.0;

    bool operator==(const WeatherDay&) const = default;
};

struct WeatherForecast {
    std::optional<Timestamp> issued;
    std::vector<WeatherDay> days;

    bool operator==(const WeatherForecast&) const = default;
};

struct WeatherRules {
    double heat_above = 35.0;
    double cold_below = 10.0;
    double wind_above = 29.0;
    double cloud_above = 70.0;
    double rain_above = 50.0;
};

struct RuleConfig {
    WeatherRules weather;
    alerting::ThresholdConfig farm;
    double productivity_below = 0.70;
    Timestamp stale_after = 24 * kSecondsPerHour;
};

enum class Severity { critical = 0, warning = 1, info = 2 };

inline const char* to_string(Severity s)
{
    switch (s) {
    case Severity::critical: return "critical";
    case Severity::warning: return "warning";
    default: return "info";
    }
}

struct Fact {
    std::string source;  // weather|farm|indicators|productivity
    std::string name;
    double value = 0.0;
    std::string op;  // ">" or "<"
    double threshold = 0.0;
    bool stale = false;

    bool holds() const { return op == ">" ? value > threshold : value < threshold; }
};

struct Recommendation {
    std::string code;
    Severity severity = Severity::info;
    std::string message;
    std::vector<Fact> facts;
};

struct RuleInfo {
    Severity severity;
    const char* message;
};

/// Message catalog keyed by rule code.
inline const std::map<std::string, RuleInfo>& catalog()
{
    static const std::map<std::string, RuleInfo> c{
        {"HEAT", {Severity::critical, "Hot days are expected in the area. Make sure fans and sprayers work before the heat arrives."}},
        {"COLD", {Severity::critical, "Cold days are expected in the area. Check the heaters and close gaps that let drafts in."}},
        {"WIND", {Severity::warning, "Strong wind is expected. Secure doors, curtains and loose equipment around the house."}},
        {"CLOUD", {Severity::info, "Heavy cloud cover is expected. Switch on the house lighting to keep the light schedule."}},
        {"RAIN", {Severity::warning, "Rain is likely. Check the roof and drainage, and keep litter dry near doors."}},
        {"PRODUCTIVITY-WARNING", {Severity::warning, "Predicted laying rate is below the target. Review feed, health and flock age, and plan replacement if the trend holds."}},
        {"FARM-TEMP-HIGH", {Severity::critical, "The house is too warm. Turn on the fans and increase ventilation."}},
        {"FARM-TEMP-LOW", {Severity::critical, "The house is too cold. Turn on the heaters."}},
        {"FARM-HUM-HIGH", {Severity::warning, "Humidity in the house is high. Improve ventilation and add fresh dry bedding."}},
        {"FARM-HUM-LOW", {Severity::warning, "Humidity in the house is very low. Run the sprayers for a while."}},
        {"INDICATOR-HIGH", {Severity::warning, "The flock is louder or moving more than usual for this time of day. Look for a disturbance or stress source."}},
        {"INDICATOR-LOW", {Severity::warning, "The flock is quieter than usual for this time of day. Check food, water and signs of illness."}},
    };
    return c;
}

struct FarmPoint {
    std::optional<Timestamp> ts;
    std::optional<double> temperature;
    std::optional<double> humidity;
};

enum class IndicatorState { normal, high, low };

struct IndicatorStatus {
    std::optional<Timestamp> ts;
    std::string channel;
    IndicatorState state = IndicatorState::normal;
    double value = 0.0;
    double threshold = 0.0;
};

struct ProductivityInput {
    std::optional<Timestamp> ts;
    double per_bird = 0.0;
};

struct Context {
    std::optional<Timestamp> now;
    std::optional<WeatherForecast> weather;
    std::vector<FarmPoint> farm;
    std::vector<IndicatorStatus> indicators;
    std::optional<ProductivityInput> productivity;
};

struct Output {
    std::vector<Recommendation> recommendations;
    std::vector<std::string> notes;
};

namespace detail {

inline void add(std::map<std::string, Recommendation>& out, const std::string& code, Fact f)
{
    auto& r = out[code];
    if (r.code.empty()) {
        const auto& info = catalog().at(code);
        r.code = code;
        r.severity = info.severity;
        r.message = info.message;
    }
    r.facts.push_back(std::move(f));
}

inline bool is_stale(const Context& ctx, std::optional<Timestamp> ts, Timestamp limit)
{
    return ctx.now && ts && *ctx.now - *ts > limit;
}

}  // namespace detail

inline std::vector<Recommendation> ordered(std::map<std::string, Recommendation> m)
{
    std::vector<Recommendation> v;
    for (auto& [code, r] : m) v.push_back(std::move(r));
    std::stable_sort(v.begin(), v.end(), [](const Recommendation& a, const Recommendation& b) {
        return std::tie(a.severity, a.code) < std::tie(b.severity, b.code);
    });
    return v;
}

inline void weather_rules_into(std::map<std::string, Recommendation>& out, const WeatherForecast& w,
                               const WeatherRules& r, bool stale)
{
    for (const auto& d : w.days) {
        auto check = [&](const char* code, const char* name, double v, const char* op, double t) {
            Fact f{"weather", std::string(name) + "[" + d.date + "]", v, op, t, stale};
            if (f.holds()) detail::add(out, code, std::move(f));
        };
        check("HEAT", "temp_max", d.temp_max, ">", r.heat_above);
        check("COLD", "temp_min", d.temp_min, "<", r.cold_below);
        check("WIND", "wind_kmh", d.wind_kmh, ">", r.wind_above);
        check("CLOUD", "cloud_pct", d.cloud_pct, ">", r.cloud_above);
        check("RAIN", "rain_pct", d.rain_pct, ">", r.rain_above);
    }
}

inline std::vector<Recommendation> weather_rules(const WeatherForecast& w, const WeatherRules& r = {})
{
    std::map<std::string, Recommendation> out;
    weather_rules_into(out, w, r, false);
    return ordered(std::move(out));
}

inline std::optional<Recommendation> productivity_rule(double per_bird, double below = 0.70)
{
    Fact f{"productivity", "per_bird", per_bird, "<", below, false};
    if (!f.holds()) return std::nullopt;
    std::map<std::string, Recommendation> out;
    detail::add(out, "PRODUCTIVITY-WARNING", f);
    return out.begin()->second;
}

/// Union of all rules whose inputs are present; ordered by severity, then code.
inline Output recommend(const Context& ctx, const RuleConfig& cfg = {})
{
    std::map<std::string, Recommendation> out;
    Output o;
    auto stale_note = [&](const char* what, std::optional<Timestamp> ts) {
        const bool s = detail::is_stale(ctx, ts, cfg.stale_after);
        if (s) o.notes.push_back(std::string(what) + " data is older than 24 hours (" + format_iso8601(*ts) + ")");
        return s;
    };

    if (ctx.weather) {
        weather_rules_into(out, *ctx.weather, cfg.weather, stale_note("weather", ctx.weather->issued));
    } else {
        o.notes.push_back("no weather forecast; weather rules skipped");
    }

    if (ctx.productivity) {
        const bool s = stale_note("productivity", ctx.productivity->ts);
        Fact f{"productivity", "per_bird", ctx.productivity->per_bird, "<", cfg.productivity_below, s};
        if (f.holds()) detail::add(out, "PRODUCTIVITY-WARNING", f);
    } else {
        o.notes.push_back("no productivity forecast; productivity rule skipped");
    }

    if (ctx.farm.empty()) o.notes.push_back("no farm temperature/humidity data; farm rules skipped");
    for (const auto& p : ctx.farm) {
        const bool s = stale_note("farm", p.ts);
        const std::string at = p.ts ? "[" + format_iso8601(*p.ts) + "]" : "";
        auto check = [&](const char* code, const char* name, double v, const char* op, double t) {
            Fact f{"farm", name + at, v, op, t, s};
            if (f.holds()) detail::add(out, code, std::move(f));
        };
        if (p.temperature) {
            check("FARM-TEMP-HIGH", "temperature", *p.temperature, ">", cfg.farm.temp_high);
            check("FARM-TEMP-LOW", "temperature", *p.temperature, "<", cfg.farm.temp_low);
        }
        if (p.humidity) {
            check("FARM-HUM-HIGH", "humidity", *p.humidity, ">", cfg.farm.humidity_high);
            check("FARM-HUM-LOW", "humidity", *p.humidity, "<", cfg.farm.humidity_low);
        }
    }

    if (ctx.indicators.empty()) o.notes.push_back("no indicator status; indicator rules skipped");
    for (const auto& ind : ctx.indicators) {
        const bool s = stale_note("indicator", ind.ts);
        if (ind.state == IndicatorState::high)
            detail::add(out, "INDICATOR-HIGH", {"indicators", ind.channel, ind.value, ">", ind.threshold, s});
        else if (ind.state == IndicatorState::low)
            detail::add(out, "INDICATOR-LOW", {"indicators", ind.channel, ind.value, "<", ind.threshold, s});
    }

    o.recommendations = ordered(std::move(out));
    return o;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

namespace detail {

inline std::optional<Timestamp> optional_ts(const json& j, const char* key, const std::string& where)
{
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    const auto t = parse_iso8601(j[key].get<std::string>());
    if (!t) throw ValidationError(where + "." + key + " is not an ISO-8601 timestamp");
    return t;
}

inline double number(const json& j, const char* key, const std::string& where)
{
    if (!j.is_object() || !j.contains(key)) throw ValidationError(where + ": missing field '" + key + "'");
    if (!j[key].is_number()) throw ValidationError(where + ": field '" + key + "' must be a number");
    return j[key].get<double>();
}

inline void check_day(const WeatherDay& d, const std::string& where)
{
    auto pct = [&](double v, const char* name) {
        if (!(v >= 0.0 && v <= 100.0)) throw ValidationError(where + ": " + name + " must lie in [0,100]");
    };
    pct(d.cloud_pct, "cloud_pct");
    pct(d.rain_pct, "rain_pct");
    if (!(d.temp_min <= d.temp_max)) throw ValidationError(where + ": temp_min exceeds temp_max");
    if (!(d.wind_kmh >= 0.0)) throw ValidationError(where + ": wind_kmh must be non-negative");
}

}  // namespace detail

inline constexpr std::size_t kForecastDays = 3;

/// Accepts the native fixture form {"issued", "days": [{date, temp_min,
/// temp_max, wind_kmh, cloud_pct, rain_pct}]} or an Open-Meteo style
/// {"daily": {time, temperature_2m_min, ...}} payload. Keeps the first 3 days.
inline WeatherForecast parse_weather(const json& j)
{
    WeatherForecast w;
    if (!j.is_object()) throw ValidationError("weather payload must be a JSON object");
    if (j.contains("daily")) {
        const auto& d = j["daily"];
        auto column = [&](const char* key) -> const json& {
            if (!d.contains(key) || !d[key].is_array()) throw ValidationError("weather payload: missing field 'daily." + std::string(key) + "'");
            return d[key];
        };
        const auto& time = column("time");
        const auto& tmin = column("temperature_2m_min");
        const auto& tmax = column("temperature_2m_max");
        const auto& wind = column("wind_speed_10m_max");
        const auto& cloud = column("cloud_cover_max");
        const auto& rain = column("precipitation_probability_max");
        const std::size_t n = std::min(time.size(), kForecastDays);
        for (std::size_t i = 0; i < n; ++i) {
            const std::string where = "weather payload daily[" + std::to_string(i) + "]";
            for (const json* c : {&tmin, &tmax, &wind, &cloud, &rain})
                if (i >= c->size() || !(*c)[i].is_number()) throw ValidationError(where + ": missing or non-numeric value");
            WeatherDay day{time[i].get<std::string>(), tmin[i].get<double>(), tmax[i].get<double>(), wind[i].get<double>(),
                           cloud[i].get<double>(), rain[i].get<double>()};
            detail::check_day(day, where);
            w.days.push_back(day);
        }
    } else {
        if (!j.contains("days") || !j["days"].is_array()) throw ValidationError("weather payload: missing field 'days'");
        w.issued = detail::optional_ts(j, "issued", "weather payload");
        const auto& days = j["days"];
        for (std::size_t i = 0; i < std::min(days.size(), kForecastDays); ++i) {
            const std::string where = "weather payload days[" + std::to_string(i) + "]";
            const auto& d = days[i];
            WeatherDay day;
            if (!d.is_object() || !d.contains("date") || !d["date"].is_string())
                throw ValidationError(where + ": missing field 'date'");
            day.date = d["date"].get<std::string>();
            day.temp_min = detail::number(d, "temp_min", where);
            day.temp_max = detail::number(d, "temp_max", where);
            day.wind_kmh = detail::number(d, "wind_kmh", where);
            day.cloud_pct = detail::number(d, "cloud_pct", where);
            day.rain_pct = detail::number(d, "rain_pct", where);
            detail::check_day(day, where);
            w.days.push_back(day);
        }
    }
    if (w.days.empty()) throw ValidationError("weather payload has no forecast days");
    return w;
}

inline json weather_to_json(const WeatherForecast& w)
{
    json days = json::array();
    for (const auto& d : w.days)
        days.push_back({{"date", d.date},
                        {"temp_min", d.temp_min},
                        {"temp_max", d.temp_max},
                        {"wind_kmh", d.wind_kmh},
                        {"cloud_pct", d.cloud_pct},
                        {"rain_pct", d.rain_pct}});
    json j{{"days", days}};
    if (w.issued) j["issued"] = format_iso8601(*w.issued);
    return j;
}

/// Context file. Every section is optional:
///   now: ISO timestamp used for staleness checks
///   weather: weather payload (see parse_weather)
///   farm: [{ts?, temperature?, humidity?}] observed or forecast farm values
///   indicators: [{ts?, channel, state: high|low|normal, value?, threshold?}]
///   alerts: [alert records]; indicator-high/low records become indicator entries
///   productivity: {ts?, per_bird}
inline Context parse_context(const json& j)
{
    if (!j.is_object()) throw ValidationError("context must be a JSON object");
    Context c;
    c.now = detail::optional_ts(j, "now", "context");
    if (j.contains("weather") && !j["weather"].is_null()) c.weather = parse_weather(j["weather"]);
    if (j.contains("farm"))
        for (std::size_t i = 0; i < j["farm"].size(); ++i) {
            const auto& p = j["farm"][i];
            const std::string where = "context.farm[" + std::to_string(i) + "]";
            FarmPoint fp;
            fp.ts = detail::optional_ts(p, "ts", where);
            if (p.contains("temperature")) fp.temperature = detail::number(p, "temperature", where);
            if (p.contains("humidity")) fp.humidity = detail::number(p, "humidity", where);
            c.farm.push_back(fp);
        }
    if (j.contains("indicators"))
        for (std::size_t i = 0; i < j["indicators"].size(); ++i) {
            const auto& p = j["indicators"][i];
            const std::string where = "context.indicators[" + std::to_string(i) + "]";
            IndicatorStatus s;
            s.ts = detail::optional_ts(p, "ts", where);
            s.channel = p.value("channel", "");
            const auto state = p.value("state", "normal");
            if (state == "high")
                s.state = IndicatorState::high;
            else if (state == "low")
                s.state = IndicatorState::low;
            else if (state != "normal")
                throw ValidationError(where + ": state must be high, low or normal");
            s.value = p.value("value", 0.0);
            s.threshold = p.value("threshold", 0.0);
            c.indicators.push_back(s);
        }
    if (j.contains("alerts"))
        for (const auto& a : j["alerts"]) {
            const auto alert = alerting::alert_from_json(a);
            if (alert.kind != "indicator-high" && alert.kind != "indicator-low") continue;
            c.indicators.push_back({alert.ts, alert.channel.value_or(""),
                                    alert.kind == "indicator-high" ? IndicatorState::high : IndicatorState::low, alert.value,
                                    alert.threshold});
        }
    if (j.contains("productivity") && !j["productivity"].is_null()) {
        const auto& p = j["productivity"];
        c.productivity = ProductivityInput{detail::optional_ts(p, "ts", "context.productivity"),
                                           detail::number(p, "per_bird", "context.productivity")};
    }
    return c;
}

inline json output_to_json(const Output& o)
{
    json recs = json::array();
    for (const auto& r : o.recommendations) {
        json facts = json::array();
        for (const auto& f : r.facts)
            facts.push_back({{"source", f.source},
                             {"name", f.name},
                             {"value", f.value},
                             {"op", f.op},
                             {"threshold", f.threshold},
                             {"stale", f.stale}});
        recs.push_back({{"code", r.code}, {"severity", to_string(r.severity)}, {"message", r.message}, {"facts", facts}});
    }
    return {{"recommendations", recs}, {"notes", o.notes}};
}

}  // namespace farmintel::recommend
