#pragma once

// Application configuration, its semantic hash, file digests and the run manifest.

#include "farmintel/alerting.hpp"
#include "farmintel/common.hpp"
#include "farmintel/eggcount.hpp"
#include "farmintel/production.hpp"
#include "farmintel/recommend.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace farmintel::config {

using nlohmann::json;

inline constexpr const char* kVersion = "0.1.0";

inline std::string to_hex(const unsigned char* p, std::size_t n)
{
    static const char* digits = "0123456789abcdef";
    std::string s(2 * n, '0');
    for (std::size_t i = 0; i < n; ++i) {
        s[2 * i] = digits[p[i] >> 4];
        s[2 * i + 1] = digits[p[i] & 15];
    }
    return s;
}

class Sha256 {
public:
    Sha256() : ctx_(EVP_MD_CTX_new(), &EVP_MD_CTX_free)
    {
        if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) throw RuntimeFault("SHA-256 init failed");
    }
    void update(const void* data, std::size_t n)
    {
        if (EVP_DigestUpdate(ctx_.get(), data, n) != 1) throw RuntimeFault("SHA-256 update failed");
    }
    std::string hex()
    {
        std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
        unsigned int len = 0;
        if (EVP_DigestFinal_ex(ctx_.get(), md.data(), &len) != 1) throw RuntimeFault("SHA-256 final failed");
        return to_hex(md.data(), len);
    }

private:
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

inline std::string sha256_hex(const std::string& data)
{
    Sha256 h;
    h.update(data.data(), data.size());
    return h.hex();
}

inline std::string file_sha256(const std::string& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ValidationError("cannot read '" + path + "' for hashing");
    Sha256 h;
    std::array<char, 1 << 16> buf{};
    while (f) {
        f.read(buf.data(), buf.size());
        h.update(buf.data(), static_cast<std::size_t>(f.gcount()));
    }
    return h.hex();
}

// ---------------------------------------------------------------------------
// AppConfig
// ---------------------------------------------------------------------------

struct OptimizerBlock {
    std::string algorithm = "cmaes";  // cmaes | map-elites
    std::int64_t max_evaluations = 200000;
    int population = 1500;
    double sigma0 = 0.3;
    int batch = 64;
    int init_random = 2000;
    double mutation_sigma = 0.1;
    double mutation_rate = 1.0 / 6.0;
    int threads = 1;
};

struct WebhookBlock {
    std::string url;
    int max_attempts = 3;
    int base_delay_ms = 200;
    int max_delay_ms = 2000;
};

struct ClockBlock {
    std::string mode = "real";  // real | fixed
    std::optional<Timestamp> fixed;
};

struct AppConfig {
    std::uint64_t seed = 42;
    std::string layout;  // optional path to a layout file
    OptimizerBlock optimizer;
    alerting::ThresholdConfig thresholds;
    alerting::BandConfig band;
    int dedup_minutes = 30;
    WebhookBlock webhook;
    std::string dead_letter = "alerts.deadletter.jsonl";
    int forecast_horizon = 3;
    eggcount::TrackerConfig tracker;
    eggcount::CalibrationConfig calibration;
    production::PeriodSchedule schedule;
    std::optional<production::Day> cycle_start;
    recommend::RuleConfig rules;
    ClockBlock clock;

    void validate() const
    {
        if (optimizer.algorithm != "cmaes" && optimizer.algorithm != "map-elites")
            throw ValidationError("optimizer.algorithm must be 'cmaes' or 'map-elites'");
        if (optimizer.max_evaluations < 1) throw ValidationError("optimizer.max_evaluations must be positive");
        if (optimizer.population < 0) throw ValidationError("optimizer.population must be non-negative");
        if (!(optimizer.sigma0 > 0.0)) throw ValidationError("optimizer.sigma0 must be positive");
        if (optimizer.batch < 1 || optimizer.init_random < 1) throw ValidationError("optimizer batch sizes must be positive");
        if (!(optimizer.mutation_sigma > 0.0)) throw ValidationError("optimizer.mutation_sigma must be positive");
        if (!(optimizer.mutation_rate > 0.0 && optimizer.mutation_rate <= 1.0))
            throw ValidationError("optimizer.mutation_rate must lie in (0, 1]");
        if (optimizer.threads < 1) throw ValidationError("optimizer.threads must be at least 1");
        thresholds.validate();
        band.validate();
        if (dedup_minutes < 0) throw ValidationError("alerting.dedup_minutes must be non-negative");
        if (webhook.max_attempts < 1 || webhook.base_delay_ms < 0 || webhook.max_delay_ms < webhook.base_delay_ms)
            throw ValidationError("invalid webhook retry settings");
        if (forecast_horizon < 1) throw ValidationError("alerting.forecast_horizon must be at least 1");
        tracker.validate();
        calibration.validate();
        schedule.validate();
        rules.farm.validate();
        if (!(rules.productivity_below > 0.0 && rules.productivity_below <= 1.0))
            throw ValidationError("recommend.productivity_below must lie in (0, 1]");
        if (clock.mode != "real" && clock.mode != "fixed") throw ValidationError("clock.mode must be 'real' or 'fixed'");
        if (clock.mode == "fixed" && !clock.fixed) throw ValidationError("clock.fixed is required when clock.mode is 'fixed'");
    }
};

namespace detail {

inline int parse_hhmm(const json& v, const std::string& where)
{
    if (!v.is_string()) throw ValidationError(where + " must be an \"HH:MM\" string");
    const auto s = v.get<std::string>();
    int h = 0, m = 0;
    if (s.size() != 5 || s[2] != ':' || std::sscanf(s.c_str(), "%2d:%2d", &h, &m) != 2 || h < 0 || h > 24 || m < 0 ||
        m > 59 || (h == 24 && m != 0))
        throw ValidationError(where + " must be an \"HH:MM\" string, got '" + s + "'");
    return h * 60 + m;
}

inline std::string format_hhmm(int minutes)
{
    char buf[16];
    std::snprintf(buf, sizeof buf, "%02d:%02d", minutes / 60, minutes % 60);
    return buf;
}

/// Reads `key` into `out` when present, rejecting wrong types.
template <class T>
void read(const json& obj, const char* key, T& out, const std::string& where)
{
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ValidationError(where + "." + key + " has the wrong type");
    }
}

inline void reject_unknown(const json& obj, std::initializer_list<const char*> known, const std::string& where)
{
    if (!obj.is_object()) throw ValidationError(where + " must be a JSON object");
    for (const auto& [k, v] : obj.items()) {
        bool ok = false;
        for (const char* n : known) ok = ok || k == n;
        if (!ok) throw ValidationError("unknown configuration key '" + where + "." + k + "'");
    }
}

}  // namespace detail

inline AppConfig parse_config(const json& j)
{
    using detail::read;
    AppConfig c;
    detail::reject_unknown(j, {"seed", "layout", "optimizer", "alerting", "tracker", "calibration", "production", "recommend", "clock"}, "config");
    read(j, "seed", c.seed, "config");
    read(j, "layout", c.layout, "config");
    if (j.contains("optimizer")) {
        const auto& o = j["optimizer"];
        detail::reject_unknown(o, {"algorithm", "max_evaluations", "population", "sigma0", "batch", "init_random", "mutation_sigma", "mutation_rate", "threads"}, "optimizer");
        read(o, "algorithm", c.optimizer.algorithm, "optimizer");
        read(o, "max_evaluations", c.optimizer.max_evaluations, "optimizer");
        read(o, "population", c.optimizer.population, "optimizer");
        read(o, "sigma0", c.optimizer.sigma0, "optimizer");
        read(o, "batch", c.optimizer.batch, "optimizer");
        read(o, "init_random", c.optimizer.init_random, "optimizer");
        read(o, "mutation_sigma", c.optimizer.mutation_sigma, "optimizer");
        read(o, "mutation_rate", c.optimizer.mutation_rate, "optimizer");
        read(o, "threads", c.optimizer.threads, "optimizer");
    }
    if (j.contains("alerting")) {
        const auto& a = j["alerting"];
        detail::reject_unknown(a, {"temp_high", "temp_low", "humidity_low", "humidity_high", "band", "dedup_minutes", "webhook", "dead_letter", "forecast_horizon"}, "alerting");
        read(a, "temp_high", c.thresholds.temp_high, "alerting");
        read(a, "temp_low", c.thresholds.temp_low, "alerting");
        read(a, "humidity_low", c.thresholds.humidity_low, "alerting");
        read(a, "humidity_high", c.thresholds.humidity_high, "alerting");
        read(a, "dedup_minutes", c.dedup_minutes, "alerting");
        read(a, "dead_letter", c.dead_letter, "alerting");
        read(a, "forecast_horizon", c.forecast_horizon, "alerting");
        if (a.contains("band")) {
            const auto& b = a["band"];
            detail::reject_unknown(b, {"half_window_minutes", "upper_quantile", "lower_quantile"}, "alerting.band");
            read(b, "half_window_minutes", c.band.half_window_minutes, "alerting.band");
            read(b, "upper_quantile", c.band.upper_quantile, "alerting.band");
            read(b, "lower_quantile", c.band.lower_quantile, "alerting.band");
        }
        if (a.contains("webhook")) {
            const auto& w = a["webhook"];
            detail::reject_unknown(w, {"url", "max_attempts", "base_delay_ms", "max_delay_ms"}, "alerting.webhook");
            read(w, "url", c.webhook.url, "alerting.webhook");
            read(w, "max_attempts", c.webhook.max_attempts, "alerting.webhook");
            read(w, "base_delay_ms", c.webhook.base_delay_ms, "alerting.webhook");
            read(w, "max_delay_ms", c.webhook.max_delay_ms, "alerting.webhook");
        }
    }
    if (j.contains("tracker")) {
        const auto& t = j["tracker"];
        detail::reject_unknown(t, {"max_dist", "max_missed"}, "tracker");
        read(t, "max_dist", c.tracker.max_dist, "tracker");
        read(t, "max_missed", c.tracker.max_missed, "tracker");
    }
    if (j.contains("calibration")) {
        const auto& k = j["calibration"];
        detail::reject_unknown(k, {"eps", "min_pts", "rho_res", "theta_res_deg", "votes_min", "max_tilt_deg", "merge_gap", "roi_half_width", "lane_margin", "labels"}, "calibration");
        read(k, "eps", c.calibration.eps, "calibration");
        read(k, "min_pts", c.calibration.min_pts, "calibration");
        read(k, "rho_res", c.calibration.rho_res, "calibration");
        read(k, "theta_res_deg", c.calibration.theta_res_deg, "calibration");
        read(k, "votes_min", c.calibration.votes_min, "calibration");
        read(k, "max_tilt_deg", c.calibration.max_tilt_deg, "calibration");
        read(k, "merge_gap", c.calibration.merge_gap, "calibration");
        read(k, "roi_half_width", c.calibration.roi_half_width, "calibration");
        read(k, "lane_margin", c.calibration.lane_margin, "calibration");
        read(k, "labels", c.calibration.labels, "calibration");
    }
    if (j.contains("production")) {
        const auto& p = j["production"];
        detail::reject_unknown(p, {"cycle_start", "feeding", "night"}, "production");
        if (p.contains("cycle_start")) {
            std::string s;
            read(p, "cycle_start", s, "production");
            c.cycle_start = parse_date(s);
            if (!c.cycle_start) throw ValidationError("production.cycle_start must be a YYYY-MM-DD date");
        }
        if (p.contains("feeding")) {
            c.schedule.feeding.clear();
            for (const auto& r : p["feeding"]) {
                if (!r.is_array() || r.size() != 2) throw ValidationError("production.feeding entries must be [\"HH:MM\", \"HH:MM\"]");
                c.schedule.feeding.push_back({detail::parse_hhmm(r[0], "production.feeding"),
                                              detail::parse_hhmm(r[1], "production.feeding")});
            }
        }
        if (p.contains("night")) {
            const auto& r = p["night"];
            if (!r.is_array() || r.size() != 2) throw ValidationError("production.night must be [\"HH:MM\", \"HH:MM\"]");
            c.schedule.night = {detail::parse_hhmm(r[0], "production.night"), detail::parse_hhmm(r[1], "production.night")};
        }
    }
    if (j.contains("recommend")) {
        const auto& r = j["recommend"];
        detail::reject_unknown(r, {"heat_above", "cold_below", "wind_above", "cloud_above", "rain_above", "productivity_below", "stale_after_hours"}, "recommend");
        read(r, "heat_above", c.rules.weather.heat_above, "recommend");
        read(r, "cold_below", c.rules.weather.cold_below, "recommend");
        read(r, "wind_above", c.rules.weather.wind_above, "recommend");
        read(r, "cloud_above", c.rules.weather.cloud_above, "recommend");
        read(r, "rain_above", c.rules.weather.rain_above, "recommend");
        read(r, "productivity_below", c.rules.productivity_below, "recommend");
        if (r.contains("stale_after_hours")) {
            double h = 24;
            read(r, "stale_after_hours", h, "recommend");
            c.rules.stale_after = static_cast<Timestamp>(h * kSecondsPerHour);
        }
    }
    if (j.contains("clock")) {
        const auto& k = j["clock"];
        detail::reject_unknown(k, {"mode", "fixed"}, "clock");
        read(k, "mode", c.clock.mode, "clock");
        if (k.contains("fixed")) {
            std::string s;
            read(k, "fixed", s, "clock");
            c.clock.fixed = parse_iso8601(s);
            if (!c.clock.fixed) throw ValidationError("clock.fixed must be an ISO-8601 timestamp");
        }
    }
    c.rules.farm = c.thresholds;
    c.validate();
    return c;
}

/// Fully expanded configuration (defaults filled in). Its hash is the config hash.
inline json normalized(const AppConfig& c)
{
    json feeding = json::array();
    for (const auto& r : c.schedule.feeding) feeding.push_back({detail::format_hhmm(r.start), detail::format_hhmm(r.end)});
    return {
        {"seed", c.seed},
        {"layout", c.layout},
        {"optimizer",
         {{"algorithm", c.optimizer.algorithm},
          {"max_evaluations", c.optimizer.max_evaluations},
          {"population", c.optimizer.population},
          {"sigma0", c.optimizer.sigma0},
          {"batch", c.optimizer.batch},
          {"init_random", c.optimizer.init_random},
          {"mutation_sigma", c.optimizer.mutation_sigma},
          {"mutation_rate", c.optimizer.mutation_rate},
          {"threads", c.optimizer.threads}}},
        {"alerting",
         {{"temp_high", c.thresholds.temp_high},
          {"temp_low", c.thresholds.temp_low},
          {"humidity_low", c.thresholds.humidity_low},
          {"humidity_high", c.thresholds.humidity_high},
          {"dedup_minutes", c.dedup_minutes},
          {"dead_letter", c.dead_letter},
          {"forecast_horizon", c.forecast_horizon},
          {"band",
           {{"half_window_minutes", c.band.half_window_minutes},
            {"upper_quantile", c.band.upper_quantile},
            {"lower_quantile", c.band.lower_quantile}}},
          {"webhook",
           {{"url", c.webhook.url},
            {"max_attempts", c.webhook.max_attempts},
            {"base_delay_ms", c.webhook.base_delay_ms},
            {"max_delay_ms", c.webhook.max_delay_ms}}}}},
        {"tracker", {{"max_dist", c.tracker.max_dist}, {"max_missed", c.tracker.max_missed}}},
        {"calibration",
         {{"eps", c.calibration.eps},
          {"min_pts", c.calibration.min_pts},
          {"rho_res", c.calibration.rho_res},
          {"theta_res_deg", c.calibration.theta_res_deg},
          {"votes_min", c.calibration.votes_min},
          {"max_tilt_deg", c.calibration.max_tilt_deg},
          {"merge_gap", c.calibration.merge_gap},
          {"roi_half_width", c.calibration.roi_half_width},
          {"lane_margin", c.calibration.lane_margin},
          {"labels", c.calibration.labels}}},
        {"production",
         {{"cycle_start", c.cycle_start ? json(format_date(*c.cycle_start)) : json(nullptr)},
          {"feeding", feeding},
          {"night", {detail::format_hhmm(c.schedule.night.start), detail::format_hhmm(c.schedule.night.end)}}}},
        {"recommend",
         {{"heat_above", c.rules.weather.heat_above},
          {"cold_below", c.rules.weather.cold_below},
          {"wind_above", c.rules.weather.wind_above},
          {"cloud_above", c.rules.weather.cloud_above},
          {"rain_above", c.rules.weather.rain_above},
          {"productivity_below", c.rules.productivity_below},
          {"stale_after_hours", static_cast<double>(c.rules.stale_after) / kSecondsPerHour}}},
        {"clock", {{"mode", c.clock.mode}, {"fixed", c.clock.fixed ? json(format_iso8601(*c.clock.fixed)) : json(nullptr)}}},
    };
}

inline std::string config_hash(const AppConfig& c) { return sha256_hex(normalized(c).dump()); }

inline AppConfig load_config(const std::string& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ValidationError("cannot open config file '" + path + "'");
    try {
        return parse_config(json::parse(f));
    } catch (const json::parse_error& e) {
        throw ValidationError("config file '" + path + "': " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

struct RunManifest {
    std::string command;
    std::string config_hash;
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, std::string>> inputs;   // path, sha256
    std::vector<std::pair<std::string, std::string>> outputs;  // path, sha256

    void add_input(const std::string& path) { inputs.emplace_back(path, file_sha256(path)); }
    void add_output(const std::string& path) { outputs.emplace_back(path, file_sha256(path)); }
};

inline json manifest_to_json(const RunManifest& m)
{
    auto files = [](const auto& v) {
        json a = json::array();
        for (const auto& [p, h] : v) a.push_back({{"path", p}, {"sha256", h}});
        return a;
    };
    return {{"command", m.command},
            {"version", kVersion},
            {"config_hash", m.config_hash},
            {"seed", m.seed},
            {"inputs", files(m.inputs)},
            {"outputs", files(m.outputs)}};
}

}  // namespace farmintel::config
