#include "farmintel/production.hpp"
#include "synthetic.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace farmintel;
using namespace farmintel::production;

namespace {

constexpr Day D0 = 19723;  // 2024-01-01

FarmHistory constant_history(int days, double eggs)
{
    std::vector<DailyRecord> r;
    for (int i = 0; i < days; ++i) r.push_back({D0 + i, eggs, 0, 1000, 30});
    return FarmHistory::from(r);
}

// 20 days where every quantity is a simple function of the day offset i:
// eggs 100+i, deaths i%2, flock 1000-i, age 30+i/7; indicator samples per
// period are {base+i, base+i+0.5} with bases audio/video feed 10/20, night
// 30/40, rest 50/60.
FarmHistory hand_fixture()
{
    FarmHistory h;
    for (int i = 0; i < 20; ++i) {
        const Day d = D0 + i;
        h.records[d] = {d, 100.0 + i, static_cast<double>(i % 2), 1000.0 - i, 30.0 + i / 7.0};
        IndicatorDay ind;
        const double base[2][3] = {{10, 30, 50}, {20, 40, 60}};
        for (std::size_t ch = 0; ch < 2; ++ch)
            for (std::size_t p = 0; p < 3; ++p)
                for (double off : {0.0, 0.5}) {
                    ind.values[ch][p].push_back(base[ch][p] + i + off);
                    ind.values[ch][whole].push_back(base[ch][p] + i + off);
                }
        h.indicators[d] = ind;
    }
    h.env[D0 + 19] = {21.5, 27.0, 16.0, 55.0, 70.0, 40.0};
    return h;
}

}  // namespace

TEST(Features, WorkedExamples)
{
    const auto h = constant_history(15, 600);
    const auto fv = build_features(h, D0 + 15, production_mask());
    EXPECT_EQ(*fv.values[13], 600.0);
    EXPECT_EQ(*fv.values[14], 600.0);

    FarmHistory a = constant_history(15, 600);
    for (int i = 0; i < 3; ++i) {
        IndicatorDay ind;
        for (int k = 1; k <= 3; ++k) ind.values[audio][feed].push_back(3 * i + k);
        a.indicators[D0 + 12 + i] = ind;
    }
    EXPECT_DOUBLE_EQ(*build_features(a, D0 + 15, mask_of({30})).values[29], 7.0);

    std::vector<DailyRecord> r;
    for (int i = 0; i < 15; ++i) r.push_back({D0 + i, 600, i == 14 ? 1.0 : 0.0, 1000, 30});
    EXPECT_DOUBLE_EQ(*build_features(FarmHistory::from(r), D0 + 15, mask_of({17})).values[16], 1.0 / 3.0);
}

TEST(Features, AllFortyMatchHandComputation)
{
    const auto h = hand_fixture();
    FeatureMask all;
    all.fill(true);
    const auto fv = build_features(h, D0 + 20, all);
    // windows: 15 days = i 5..19 (mean i 12), 7 days = 13..19 (16), 3 days = 17..19 (18)
    const double expected[40] = {
        21.5, 27.0, 16.0, 55.0, 70.0, 40.0,  // f1-f6, environment of the previous day
        30.0 + 19 / 7.0,                     // f7
        30 + 12 + 0.25, 40 + 12 + 0.25,      // f8-f9: whole-day means, period bases average 30 / 40
        30 + 16 + 0.25, 40 + 16 + 0.25,      // f10-f11
        30 + 18 + 0.25, 40 + 18 + 0.25,      // f12-f13
        116.0, 118.0,                        // f14-f15 eggs
        4.0 / 7.0, 2.0 / 3.0,                // f16-f17 deaths: i%2 over 13..19 and 17..19
        26.25, 36.25, 28.25, 38.25,          // f18-f21 feed
        46.25, 56.25, 48.25, 58.25,          // f22-f25 night
        66.25, 76.25, 68.25, 78.25,          // f26-f29 rest
        // 3-day pools are {b+17, b+17.5, b+18, b+18.5, b+19, b+19.5}
        28.5, 38.5, 28.0, 38.0,              // f30-f33 top/low feed
        48.5, 58.5,                          // f34-f35 top night
        68.5, 78.5, 68.0, 78.0,              // f36-f39 rest
        981.0,                               // f40 flock size on the last day
    };
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
        ASSERT_TRUE(fv.values[i]) << feature_name(i);
        EXPECT_NEAR(*fv.values[i], expected[i], 1e-12) << feature_name(i);
    }
}

TEST(Features, InsufficientHistoryListsMissing)
{
    const auto h = constant_history(5, 600);
    try {
        build_features(h, D0 + 5, production_mask());
        FAIL();
    } catch (const InsufficientHistory& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("f14"), std::string::npos);
        EXPECT_EQ(msg.find("f15"), std::string::npos);  // 3-day window is available
    }
    // absent features carry a reason even when not required
    const auto fv = build_features(h, D0 + 5, mask_of({15}));
    EXPECT_FALSE(fv.values[0]);
    EXPECT_FALSE(fv.missing_reason[0].empty());
}

TEST(Model, ExactLinearRecovery)
{
    Rng rng(3);
    std::vector<double> beta(15);
    for (auto& b : beta) b = rng.normal(0, 0.1);
    std::vector<Sample> samples;
    for (int i = 0; i < 200; ++i) {
        Sample s;
        s.day = D0 + i;
        double y = 0.4;
        for (std::size_t j = 0; j < 15; ++j) {
            s.x.push_back(rng.normal(0, 3));
            y += beta[j] * s.x.back();
        }
        s.y = y;
        samples.push_back(s);
    }
    const auto m = fit_production_model(samples, default_mask());
    EXPECT_NEAR(m.intercept, 0.4, 1e-8);
    for (std::size_t j = 0; j < 15; ++j) EXPECT_NEAR(m.weights[j], beta[j], 1e-8);
    EXPECT_EQ(model_to_json(m)["features"].size(), 15u);
}

TEST(Model, ZeroFeatureLeavesPredictionsUnchanged)
{
    Rng rng(4);
    std::vector<std::vector<double>> x, xz;
    std::vector<double> y;
    for (int i = 0; i < 100; ++i) {
        std::vector<double> row{rng.normal(), rng.normal(), rng.normal()};
        y.push_back(row[0] - 2 * row[1] + rng.normal(0, 0.3));
        x.push_back(row);
        row.push_back(0.0);
        xz.push_back(row);
    }
    const auto a = ols::fit(x, y), b = ols::fit(xz, y);
    for (int i = 0; i < 50; ++i) {
        std::vector<double> q{rng.normal(), rng.normal(), rng.normal()};
        const double pa = a.predict(q);
        q.push_back(rng.normal());  // any value: the weight of the null column must be 0
        EXPECT_NEAR(b.predict(q), pa, 1e-10);
    }
}

TEST(Productivity, PerBird)
{
    EXPECT_DOUBLE_EQ(productivity_from_eggs(600, 750).per_bird, 0.8);
    EXPECT_FALSE(productivity_from_eggs(600, 750).out_of_range);
    EXPECT_EQ(productivity_from_eggs(0, 750).per_bird, 0.0);
    const auto high = productivity_from_eggs(800, 750);
    EXPECT_NEAR(high.per_bird, 1.0667, 1e-4);
    EXPECT_TRUE(high.out_of_range);
    EXPECT_DOUBLE_EQ(predict_productivity(0.8, 750).eggs_10day_avg, 600.0);
    EXPECT_THROW(productivity_from_eggs(600, 0), ValidationError);
}

TEST(Cost, Examples)
{
    FeedLedger ledger;
    ledger.cycle_start = D0;  // 2024-01-01; day 100 is 2024-04-09
    ledger.purchases = {{2024, 1, 1000, 400}, {2024, 3, 2000, 800}, {2023, 12, 999, 999}, {2024, 5, 999, 999}};
    const auto c = cost_per_egg(ledger, D0 + 99, 750);
    EXPECT_DOUBLE_EQ(c.daily_feed_kg, 30.0);
    EXPECT_DOUBLE_EQ(c.daily_feed_cost, 12.0);
    EXPECT_DOUBLE_EQ(*c.cost_per_egg, 0.016);

    FeedLedger one{{{2024, 1, 500, 250}}, D0};
    EXPECT_DOUBLE_EQ(cost_per_egg(one, D0, 100).daily_feed_kg, 500.0);

    const auto empty = cost_per_egg(FeedLedger{{}, D0}, D0 + 10, 100);
    EXPECT_TRUE(empty.no_data);
    EXPECT_EQ(*empty.cost_per_egg, 0.0);
    EXPECT_EQ(empty.daily_feed_cost, 0.0);

    const auto zero = cost_per_egg(ledger, D0 + 99, 0);
    EXPECT_FALSE(zero.cost_per_egg);
    EXPECT_FALSE(zero.note.empty());
    EXPECT_THROW(cost_per_egg(ledger, D0 - 1, 10), ValidationError);
}

TEST(Metrics, Mae)
{
    EXPECT_EQ(ols::mae(std::vector<double>{0.8, 0.8}, std::vector<double>{0.8, 0.8}), 0.0);
    EXPECT_NEAR(ols::mae(std::vector<double>{0.8, 0.8}, std::vector<double>{0.7, 0.9}), 0.1, 1e-15);
    EXPECT_THROW(ols::mae(std::vector<double>{1}, std::vector<double>{}), ValidationError);
    Rng rng(9);
    for (int t = 0; t < 20; ++t) {
        std::vector<double> a(1 + rng.index(50)), b(a.size());
        double s = 0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            a[i] = rng.normal();
            b[i] = rng.normal();
            s += std::abs(a[i] - b[i]);
        }
        EXPECT_NEAR(ols::mae(a, b), s / static_cast<double>(a.size()), 1e-12);
    }
}

TEST(Split, NoTestDayReachesTraining)
{
    const auto f = synth::farm(2, 200);
    const auto samples = build_samples(f.history, default_mask(), f.first, f.last);
    const auto split = chronological_split(samples);
    ASSERT_FALSE(split.train.empty());
    ASSERT_FALSE(split.test.empty());
    const Day first_test = split.test.front().day;
    for (const auto& s : split.train) {
        EXPECT_LT(s.day, first_test);                // feature windows end at day-1
        EXPECT_LT(s.day + kHorizonDays, first_test);  // label window
    }
    for (std::size_t i = 1; i < split.test.size(); ++i) EXPECT_GT(split.test[i].day, split.test[i - 1].day);
}

TEST(Ablation, RowStructure)
{
    const auto f = synth::farm(1);
    const auto rows = ablation(f.history, f.first, f.last);
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[0].name, "production");
    EXPECT_EQ(rows[2].name, "production+sensor+audio/video");
    for (const auto& r : rows) {
        EXPECT_EQ(r.test_size, rows[0].test_size);
        EXPECT_GT(r.mae, 0.0);
    }
    EXPECT_LE(rows[2].mae, rows[0].mae);
    const auto text = format_ablation(rows);
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 4);
}
