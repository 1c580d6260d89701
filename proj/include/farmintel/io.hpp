#pragma once

// CSV ingestion with schema validation for every tabular input.

#include "farmintel/alerting.hpp"
#include "farmintel/common.hpp"
#include "farmintel/envforecast.hpp"
#include "farmintel/production.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace farmintel::io {

template <class T>
struct Ingested {
    std::vector<T> rows;
    std::vector<std::string> warnings;
};

/// Splits one CSV line. Double-quoted fields may contain commas; "" is a literal quote.
inline std::vector<std::string> split_csv(std::string_view line)
{
    std::vector<std::string> out(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                out.back() += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                out.back() += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.emplace_back();
        } else {
            out.back() += c;
        }
    }
    return out;
}

inline std::string trim(std::string s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

class RowError : public ValidationError {
public:
    RowError(const std::string& file, std::size_t line, const std::string& column, const std::string& what)
        : ValidationError(file + ": line " + std::to_string(line) + ", column " + column + ": " + what), line_(line),
          column_(column)
    {
    }
    std::size_t line() const { return line_; }
    const std::string& column() const { return column_; }

private:
    std::size_t line_;
    std::string column_;
};

/// A parsed row with typed accessors that report line and column on failure.
class Row {
public:
    Row(const std::string& file, std::size_t line, const std::vector<std::string>& header, std::vector<std::string> cells)
        : file_(file), line_(line), header_(header), cells_(std::move(cells))
    {
    }

    std::size_t line() const { return line_; }
    const std::string& text(std::size_t i) const { return cells_.at(i); }

    [[noreturn]] void fail(std::size_t i, const std::string& what) const { throw RowError(file_, line_, header_.at(i), what); }

    double number(std::size_t i) const
    {
        const auto& s = cells_.at(i);
        double v = 0.0;
        const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || p != s.data() + s.size() || s.empty()) fail(i, "'" + s + "' is not a number");
        if (!std::isfinite(v)) fail(i, "value must be finite");
        return v;
    }

    std::int64_t integer(std::size_t i) const
    {
        const auto& s = cells_.at(i);
        std::int64_t v = 0;
        const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || p != s.data() + s.size() || s.empty()) fail(i, "'" + s + "' is not an integer");
        return v;
    }

    Timestamp timestamp(std::size_t i) const
    {
        const auto t = parse_iso8601(cells_.at(i));
        if (!t) fail(i, "'" + cells_.at(i) + "' is not an ISO-8601 timestamp");
        return *t;
    }

    std::int64_t date(std::size_t i) const
    {
        const auto d = parse_date(cells_.at(i));
        if (!d) fail(i, "'" + cells_.at(i) + "' is not a YYYY-MM-DD date");
        return *d;
    }

private:
    const std::string& file_;
    std::size_t line_;
    const std::vector<std::string>& header_;
    std::vector<std::string> cells_;
};

/// Reads `text` (named `file` in messages), checks the header equals
/// `columns`, and calls `on_row` for each non-blank data line.
template <class F>
std::vector<std::string> parse_csv(const std::string& file, std::istream& in, const std::vector<std::string>& columns, F&& on_row)
{
    std::vector<std::string> warnings;
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto cells = split_csv(line);
        for (auto& c : cells) c = trim(c);
        if (header.empty()) {
            header = cells;
            if (header != columns) {
                std::string expected;
                for (const auto& c : columns) expected += (expected.empty() ? "" : ",") + c;
                throw ValidationError(file + ": line " + std::to_string(line_no) + ": header must be '" + expected + "'");
            }
            continue;
        }
        if (cells.size() != columns.size())
            throw RowError(file, line_no, cells.size() < columns.size() ? columns[cells.size()] : columns.back(),
                           "expected " + std::to_string(columns.size()) + " fields, found " + std::to_string(cells.size()));
        on_row(Row(file, line_no, header, std::move(cells)));
    }
    if (header.empty()) warnings.push_back(file + ": file is empty");
    return warnings;
}

inline std::ifstream open_input(const std::string& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ValidationError("cannot open input file '" + path + "'");
    return f;
}

inline const std::vector<std::string> kSensorColumns{"timestamp_iso8601", "sensor_id", "temperature_c", "humidity_pct"};
inline const std::vector<std::string> kIndicatorColumns{"timestamp_iso8601", "channel", "value"};
inline const std::vector<std::string> kProductionColumns{"date", "eggs", "deaths", "flock_size", "age_weeks"};
inline const std::vector<std::string> kFeedColumns{"month", "kg", "cost"};

inline envforecast::SensorReading sensor_row(const Row& r)
{
    envforecast::SensorReading s;
    s.timestamp = r.timestamp(0);
    s.sensor_id = r.text(1);
    if (s.sensor_id.empty()) r.fail(1, "sensor id is empty");
    s.temperature = r.number(2);
    s.humidity = r.number(3);
    if (s.humidity < 0.0 || s.humidity > 100.0) r.fail(3, "humidity must lie in [0,100]");
    return s;
}

inline alerting::IndicatorSample indicator_row(const Row& r)
{
    alerting::IndicatorSample s;
    s.ts = r.timestamp(0);
    s.channel = r.text(1);
    if (s.channel.empty()) r.fail(1, "channel is empty");
    s.value = r.number(2);
    if (s.value < 0.0) r.fail(2, "indicator value must be non-negative");
    return s;
}

inline Ingested<envforecast::SensorReading> read_sensors(std::istream& in, const std::string& name)
{
    Ingested<envforecast::SensorReading> out;
    out.warnings = parse_csv(name, in, kSensorColumns, [&](const Row& r) { out.rows.push_back(sensor_row(r)); });
    return out;
}

inline Ingested<envforecast::SensorReading> read_sensors(const std::string& path)
{
    auto f = open_input(path);
    return read_sensors(f, path);
}

inline Ingested<alerting::IndicatorSample> read_indicators(std::istream& in, const std::string& name)
{
    Ingested<alerting::IndicatorSample> out;
    out.warnings = parse_csv(name, in, kIndicatorColumns, [&](const Row& r) { out.rows.push_back(indicator_row(r)); });
    return out;
}

inline Ingested<alerting::IndicatorSample> read_indicators(const std::string& path)
{
    auto f = open_input(path);
    return read_indicators(f, path);
}

inline Ingested<production::DailyRecord> read_production(std::istream& in, const std::string& name)
{
    Ingested<production::DailyRecord> out;
    out.warnings = parse_csv(name, in, kProductionColumns, [&](const Row& r) {
        production::DailyRecord d;
        d.date = r.date(0);
        d.eggs = r.number(1);
        d.deaths = r.number(2);
        d.flock_size = r.number(3);
        d.age_weeks = r.number(4);
        for (std::size_t i = 1; i <= 4; ++i)
            if (r.number(i) < 0.0) r.fail(i, "value must be non-negative");
        if (!out.rows.empty() && d.date <= out.rows.back().date) r.fail(0, "dates must be unique and increasing");
        out.rows.push_back(d);
    });
    return out;
}

inline Ingested<production::DailyRecord> read_production(const std::string& path)
{
    auto f = open_input(path);
    return read_production(f, path);
}

inline Ingested<production::FeedPurchase> read_feed(std::istream& in, const std::string& name)
{
    Ingested<production::FeedPurchase> out;
    out.warnings = parse_csv(name, in, kFeedColumns, [&](const Row& r) {
        production::FeedPurchase p;
        const auto& m = r.text(0);
        const auto d = parse_date(m + "-01");
        if (m.size() != 7 || !d) r.fail(0, "'" + m + "' is not a YYYY-MM month");
        const auto c = civil_from_days(*d);
        p.year = static_cast<int>(c.year);
        p.month = static_cast<int>(c.month);
        p.kg = r.number(1);
        p.cost = r.number(2);
        if (p.kg < 0.0) r.fail(1, "quantity must be non-negative");
        if (p.cost < 0.0) r.fail(2, "cost must be non-negative");
        out.rows.push_back(p);
    });
    return out;
}

inline Ingested<production::FeedPurchase> read_feed(const std::string& path)
{
    auto f = open_input(path);
    return read_feed(f, path);
}

inline std::string read_text(const std::string& path)
{
    auto f = open_input(path);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

}  // namespace farmintel::io
