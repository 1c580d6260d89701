#pragma once

// Alert loop: tails the environment and indicator CSVs, runs the static,
// forecast and dynamic checks, and hands alerts to the sink.

#include "farmintel/alerting.hpp"
#include "farmintel/common.hpp"
#include "farmintel/envforecast.hpp"
#include "farmintel/io.hpp"

#include <spdlog/spdlog.h>

#include <atomic>
#include <chrono>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace farmintel::daemon {

/// Returns complete lines appended to a file since the last poll.
class LineTailer {
public:
    explicit LineTailer(std::string path) : path_(std::move(path)) {}

    /// false when the file cannot be opened; already-read lines are kept.
    bool poll(std::vector<std::pair<std::size_t, std::string>>& out)
    {
        std::ifstream f(path_, std::ios::binary);
        if (!f) return false;
        f.seekg(0, std::ios::end);
        const auto size = static_cast<std::uint64_t>(f.tellg());
        if (size < offset_) {
            // truncated or replaced: start over
            offset_ = 0;
            line_no_ = 0;
            partial_.clear();
        }
        f.seekg(static_cast<std::streamoff>(offset_));
        std::string chunk(size - offset_, '\0');
        f.read(chunk.data(), static_cast<std::streamsize>(chunk.size()));
        chunk.resize(static_cast<std::size_t>(f.gcount()));
        offset_ += chunk.size();
        partial_ += chunk;
        std::size_t start = 0;
        for (std::size_t nl; (nl = partial_.find('\n', start)) != std::string::npos; start = nl + 1)
            out.emplace_back(++line_no_, partial_.substr(start, nl - start));
        partial_.erase(0, start);
        return true;
    }

    /// Hands out a final line without a trailing newline (end of a batch run).
    void drain(std::vector<std::pair<std::size_t, std::string>>& out)
    {
        if (!partial_.empty()) out.emplace_back(++line_no_, partial_);
        partial_.clear();
    }

    const std::string& path() const { return path_; }

private:
    std::string path_;
    std::uint64_t offset_ = 0;
    std::size_t line_no_ = 0;
    std::string partial_;
};

/// Parses CSV lines of one stream against its header.
class CsvStream {
public:
    CsvStream(std::string path, const std::vector<std::string>& columns) : tailer_(std::move(path)), columns_(columns) {}

    template <class F>
    void feed(const std::vector<std::pair<std::size_t, std::string>>& lines, F&& on_row)
    {
        for (const auto& [no, text] : lines) {
            if (io::trim(text).empty()) continue;
            auto cells = io::split_csv(text);
            for (auto& c : cells) c = io::trim(c);
            if (!header_seen_) {
                if (cells != columns_) throw ValidationError(tailer_.path() + ": line " + std::to_string(no) + ": unexpected header");
                header_seen_ = true;
                continue;
            }
            if (cells.size() != columns_.size())
                throw io::RowError(tailer_.path(), no, columns_.back(), "wrong number of fields");
            on_row(io::Row(tailer_.path(), no, columns_, std::move(cells)));
        }
    }

    LineTailer& tailer() { return tailer_; }

    // retry bookkeeping for unreadable streams
    int failures = 0;
    int skip_polls = 0;
    bool ever_failed = false;

private:
    LineTailer tailer_;
    std::vector<std::string> columns_;
    bool header_seen_ = false;
};

/// Hour-by-hour environment checks. An hour is evaluated once a reading from
/// a later hour arrives, or on flush.
class EnvPipeline {
public:
    EnvPipeline(alerting::ThresholdConfig cfg, std::optional<envforecast::ForecastModel> temp_model,
                std::optional<envforecast::ForecastModel> hum_model, int horizon)
        : cfg_(cfg), temp_model_(std::move(temp_model)), hum_model_(std::move(hum_model)), horizon_(horizon)
    {
    }

    template <class Emit>
    void push(const envforecast::SensorReading& r, Emit&& emit)
    {
        const Timestamp h = hour_start(r.timestamp);
        if (current_ && h < *current_) {
            ++late_;
            return;
        }
        if (current_ && h > *current_) close_hour(emit);
        current_ = h;
        pending_.push_back(r);
    }

    template <class Emit>
    void flush(Emit&& emit)
    {
        if (current_ && !pending_.empty()) close_hour(emit);
    }

    std::size_t late_readings() const { return late_; }

private:
    template <class Emit>
    void close_hour(Emit&& emit)
    {
        const auto agg = envforecast::aggregate_hourly(pending_);
        pending_.clear();
        const Timestamp h = *current_;
        const auto v = agg.at(h);
        if (!v) return;
        series_.set(h, *v);
        for (const auto& a : alerting::check_static(h, v->temperature, v->humidity, cfg_)) emit(a);
        if (temp_model_ && hum_model_) {
            try {
                const auto t = envforecast::forecast_iterative(*temp_model_, series_, h + kSecondsPerHour, horizon_);
                const auto u = envforecast::forecast_iterative(*hum_model_, series_, h + kSecondsPerHour, horizon_);
                for (const auto& a : alerting::check_forecast(h + kSecondsPerHour, t, u, cfg_)) emit(a);
            } catch (const envforecast::InsufficientHistory&) {
                // not enough hours yet for the look-back window
            }
        }
    }

    alerting::ThresholdConfig cfg_;
    std::optional<envforecast::ForecastModel> temp_model_, hum_model_;
    int horizon_;
    envforecast::HourlySeries series_;
    std::optional<Timestamp> current_;
    std::vector<envforecast::SensorReading> pending_;
    std::size_t late_ = 0;
};

struct Options {
    std::string env_path;        // empty: no environment stream
    std::string indicator_path;  // empty: no indicator stream
    std::map<std::string, alerting::DynamicBand> bands;
    alerting::ThresholdConfig thresholds;
    std::optional<envforecast::ForecastModel> temp_model, hum_model;
    int forecast_horizon = 3;
    bool follow = false;
    std::chrono::milliseconds poll_interval{500};
    int max_retry_polls = 16;            // cap on the per-stream retry backoff, in polls
    const std::atomic<bool>* stop = nullptr;  // set by a signal handler in follow mode
    std::optional<int> max_polls;        // bound for tests
};

struct Summary {
    std::size_t env_rows = 0, indicator_rows = 0;
    std::size_t alerts = 0, suppressed = 0, dead_lettered = 0;
    std::vector<std::string> unavailable_streams;
};

inline Summary run(const Options& opt, alerting::AlertSink& sink)
{
    Summary s;
    EnvPipeline env(opt.thresholds, opt.temp_model, opt.hum_model, opt.forecast_horizon);
    std::vector<std::string> warned_channels;
    auto emit = [&](const alerting::Alert& a) {
        const auto rec = sink.emit(a);
        if (rec.suppressed)
            ++s.suppressed;
        else
            ++s.alerts;
        if (rec.dead_lettered || (rec.webhook_attempts > 0 && !rec.delivered)) ++s.dead_lettered;
    };

    std::optional<CsvStream> env_stream, ind_stream;
    if (!opt.env_path.empty()) env_stream.emplace(opt.env_path, io::kSensorColumns);
    if (!opt.indicator_path.empty()) ind_stream.emplace(opt.indicator_path, io::kIndicatorColumns);

    auto on_env = [&](const io::Row& r) {
        ++s.env_rows;
        env.push(io::sensor_row(r), emit);
    };
    auto on_ind = [&](const io::Row& r) {
        ++s.indicator_rows;
        const auto sample = io::indicator_row(r);
        const auto band = opt.bands.find(sample.channel);
        if (band == opt.bands.end()) {
            if (std::find(warned_channels.begin(), warned_channels.end(), sample.channel) == warned_channels.end()) {
                spdlog::warn("no band for channel '{}'; its samples are skipped", sample.channel);
                warned_channels.push_back(sample.channel);
            }
            return;
        }
        if (auto a = alerting::check_dynamic(sample, band->second)) emit(*a);
    };

    auto service = [&](std::optional<CsvStream>& st, auto& on_row, bool final_pass) {
        if (!st) return;
        if (st->skip_polls > 0) {
            --st->skip_polls;
            return;
        }
        std::vector<std::pair<std::size_t, std::string>> lines;
        if (!st->tailer().poll(lines)) {
            ++st->failures;
            st->ever_failed = true;
            st->skip_polls = std::min(1 << std::min(st->failures, 10), opt.max_retry_polls);
            spdlog::warn("stream {} unavailable; retrying after {} polls", st->tailer().path(), st->skip_polls);
            return;
        }
        st->failures = 0;
        if (final_pass) st->tailer().drain(lines);
        st->feed(lines, on_row);
    };

    for (int polls = 0;; ++polls) {
        const bool last = !opt.follow || (opt.stop && opt.stop->load()) || (opt.max_polls && polls + 1 >= *opt.max_polls);
        service(env_stream, on_env, last);
        service(ind_stream, on_ind, last);
        if (last) break;
        std::this_thread::sleep_for(opt.poll_interval);
    }
    env.flush(emit);
    sink.flush();
    if (env.late_readings() > 0) spdlog::warn("{} environment readings arrived after their hour closed", env.late_readings());
    for (auto* st : {&env_stream, &ind_stream})
        if (*st && (*st)->ever_failed) s.unavailable_streams.push_back((*st)->tailer().path());
    return s;
}

}  // namespace farmintel::daemon
