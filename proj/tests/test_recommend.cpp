#include "farmintel/recommend.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace farmintel;
using namespace farmintel::recommend;

namespace {

std::set<std::string> codes(const std::vector<Recommendation>& v)
{
    std::set<std::string> out;
    for (const auto& r : v) out.insert(r.code);
    return out;
}

WeatherForecast days(std::initializer_list<WeatherDay> d) { return {std::nullopt, d}; }

WeatherForecast case1_weather() { return days({{"d1", 15, 27, 22, 98, 0}}); }
WeatherForecast case2_weather() { return days({{"d1", 24, 36, 10, 20, 10}}); }
WeatherForecast case3_weather() { return days({{"d1", 5, 20, 30, 95, 85}}); }

Context case1()
{
    Context c;
    c.weather = case1_weather();
    c.farm = {{std::nullopt, 26.0, 36.0}};
    c.indicators = {{std::nullopt, "audio", IndicatorState::low, 0.4, 1.2}};
    c.productivity = ProductivityInput{std::nullopt, 0.77};
    return c;
}

Context case2()
{
    Context c;
    c.weather = case2_weather();
    c.farm = {{std::nullopt, 38.0, 65.0}};
    c.indicators = {{std::nullopt, "video", IndicatorState::high, 9.0, 4.0}};
    c.productivity = ProductivityInput{std::nullopt, 0.65};
    return c;
}

Context case3()
{
    Context c;
    c.weather = case3_weather();
    c.farm = {{std::nullopt, 22.0, 50.0}};
    c.productivity = ProductivityInput{std::nullopt, 0.72};
    return c;
}

}  // namespace

TEST(Weather, Examples)
{
    EXPECT_EQ(codes(weather_rules(case1_weather())), (std::set<std::string>{"CLOUD"}));
    EXPECT_EQ(codes(weather_rules(case3_weather())), (std::set<std::string>{"COLD", "CLOUD", "RAIN", "WIND"}));
    EXPECT_TRUE(weather_rules(days({{"d", 10, 35, 29, 70, 50}})).empty());
    EXPECT_EQ(codes(weather_rules(days({{"d", 9.99, 35.01, 29.01, 70.01, 50.01}}))),
              (std::set<std::string>{"HEAT", "COLD", "WIND", "CLOUD", "RAIN"}));
}

TEST(Weather, AnyDayTriggers)
{
    const auto r = weather_rules(days({{"d1", 15, 20, 5, 10, 10}, {"d2", 15, 20, 5, 10, 10}, {"d3", 15, 36, 5, 10, 10}}));
    ASSERT_EQ(r.size(), 1u);
    EXPECT_EQ(r[0].code, "HEAT");
    EXPECT_EQ(r[0].facts[0].name, "temp_max[d3]");
}

TEST(Productivity, Threshold)
{
    EXPECT_TRUE(productivity_rule(0.65));
    EXPECT_FALSE(productivity_rule(0.72));
    EXPECT_FALSE(productivity_rule(0.70));
}

TEST(Golden, Case1)
{
    EXPECT_EQ(codes(recommend::recommend(case1()).recommendations), (std::set<std::string>{"CLOUD", "FARM-HUM-LOW", "INDICATOR-LOW"}));
}

TEST(Golden, Case2)
{
    EXPECT_EQ(codes(recommend::recommend(case2()).recommendations),
              (std::set<std::string>{"PRODUCTIVITY-WARNING", "HEAT", "FARM-TEMP-HIGH", "FARM-HUM-HIGH", "INDICATOR-HIGH"}));
}

TEST(Golden, Case3ContainsListedCodes)
{
    const auto c = codes(recommend::recommend(case3()).recommendations);
    EXPECT_TRUE(c.count("WIND"));
    EXPECT_TRUE(c.count("COLD"));
    EXPECT_FALSE(c.count("PRODUCTIVITY-WARNING"));
}

TEST(Engine, EmptyContextGivesNothing)
{
    const auto o = recommend::recommend({});
    EXPECT_TRUE(o.recommendations.empty());
    EXPECT_EQ(o.notes.size(), 4u);
}

TEST(Engine, OrderingAndFacts)
{
    for (const auto& ctx : {case1(), case2(), case3()}) {
        const auto o = recommend::recommend(ctx);
        for (std::size_t i = 1; i < o.recommendations.size(); ++i) {
            const auto& a = o.recommendations[i - 1];
            const auto& b = o.recommendations[i];
            EXPECT_TRUE(a.severity < b.severity || (a.severity == b.severity && a.code < b.code));
        }
        for (const auto& r : o.recommendations) {
            ASSERT_FALSE(r.facts.empty());
            for (const auto& f : r.facts) EXPECT_TRUE(f.holds()) << r.code;
            EXPECT_FALSE(r.message.empty());
        }
        EXPECT_EQ(output_to_json(o).dump(), output_to_json(recommend::recommend(ctx)).dump());
    }
}

TEST(Engine, RemovingOneSourceRemovesOnlyItsRules)
{
    auto full = case2();
    const auto all = codes(recommend::recommend(full).recommendations);
    auto no_prod = full;
    no_prod.productivity.reset();
    auto expected = all;
    expected.erase("PRODUCTIVITY-WARNING");
    EXPECT_EQ(codes(recommend::recommend(no_prod).recommendations), expected);

    auto no_ind = full;
    no_ind.indicators.clear();
    expected = all;
    expected.erase("INDICATOR-HIGH");
    EXPECT_EQ(codes(recommend::recommend(no_ind).recommendations), expected);

    auto no_weather = full;
    no_weather.weather.reset();
    expected = all;
    expected.erase("HEAT");
    EXPECT_EQ(codes(recommend::recommend(no_weather).recommendations), expected);

    auto no_hum = full;
    no_hum.farm[0].humidity.reset();
    expected = all;
    expected.erase("FARM-HUM-HIGH");
    EXPECT_EQ(codes(recommend::recommend(no_hum).recommendations), expected);
}

TEST(Engine, StaleInputsFlagged)
{
    auto c = case1();
    c.now = 1'700'000'000;
    c.farm[0].ts = *c.now - 25 * kSecondsPerHour;
    const auto o = recommend::recommend(c);
    bool stale = false;
    for (const auto& r : o.recommendations)
        for (const auto& f : r.facts)
            if (f.source == "farm") stale = f.stale;
    EXPECT_TRUE(stale);
    EXPECT_FALSE(o.notes.empty());
}

TEST(WeatherIo, FixtureRoundTrip)
{
    const auto w = case3_weather();
    EXPECT_EQ(parse_weather(weather_to_json(w)), w);
}

TEST(WeatherIo, TruncatedPayloadNamesField)
{
    json j = weather_to_json(case3_weather());
    j["days"][0].erase("rain_pct");
    try {
        parse_weather(j);
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("rain_pct"), std::string::npos);
    }
    EXPECT_THROW(parse_weather(json::parse(R"({"days":[{"date":"x","temp_min":1,"temp_max":0,"wind_kmh":1,"cloud_pct":1,"rain_pct":1}]})")),
                 ValidationError);
    json truncated;
    EXPECT_THROW(truncated = json::parse(R"({"days":[{"date":"x","temp_min":1)"), json::parse_error);
}

TEST(WeatherIo, KeepsFirstThreeDays)
{
    json native{{"days", json::array()}};
    for (int i = 0; i < 5; ++i)
        native["days"].push_back({{"date", "d" + std::to_string(i)}, {"temp_min", 5}, {"temp_max", 20}, {"wind_kmh", 1}, {"cloud_pct", 1}, {"rain_pct", 1}});
    EXPECT_EQ(parse_weather(native).days.size(), 3u);

    json om{{"daily",
             {{"time", {"a", "b", "c", "d", "e"}},
              {"temperature_2m_min", {1, 2, 3, 4, 5}},
              {"temperature_2m_max", {11, 12, 13, 14, 15}},
              {"wind_speed_10m_max", {30, 2, 3, 4, 5}},
              {"cloud_cover_max", {1, 2, 3, 4, 5}},
              {"precipitation_probability_max", {1, 2, 3, 4, 5}}}}};
    const auto w = parse_weather(om);
    ASSERT_EQ(w.days.size(), 3u);
    EXPECT_EQ(w.days[2].date, "c");
    EXPECT_EQ(w.days[0].wind_kmh, 30);
    om["daily"].erase("cloud_cover_max");
    try {
        parse_weather(om);
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("cloud_cover_max"), std::string::npos);
    }
}

TEST(ContextIo, AlertsBecomeIndicatorEntries)
{
    const auto j = json::parse(R"({
        "productivity": {"per_bird": 0.65},
        "farm": [{"temperature": 38, "humidity": 65}],
        "alerts": [{"ts": "2024-01-01T10:00:00Z", "kind": "indicator-high", "channel": "audio", "value": 9, "threshold": 4, "source": "observed"}]
    })");
    const auto c = parse_context(j);
    ASSERT_EQ(c.indicators.size(), 1u);
    EXPECT_EQ(c.indicators[0].state, IndicatorState::high);
    EXPECT_TRUE(codes(recommend::recommend(c).recommendations).count("INDICATOR-HIGH"));
    EXPECT_THROW(parse_context(json::parse(R"({"indicators":[{"state":"loud"}]})")), ValidationError);
}
