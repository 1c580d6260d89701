#include "farmintel/eggcount.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numbers>
#include <set>

using namespace farmintel;
using namespace farmintel::eggcount;

namespace {

Detection det(std::int64_t f, double x, double y)
{
    Detection d;
    d.frame = f;
    d.cx = x;
    d.cy = y;
    d.w = 20;
    d.h = 25;
    d.conf = 0.9;
    return d;
}

std::vector<oracle::P> to_oracle(const std::vector<Point>& pts)
{
    std::vector<oracle::P> out;
    for (const auto& p : pts) out.push_back({p.x, p.y});
    return out;
}

// Minimum-total-distance matching by exhaustive search (tracks x detections).
std::vector<int> optimal_assignment(const std::vector<Point>& tracks, const std::vector<Point>& dets, double max_dist)
{
    std::vector<int> best(dets.size(), -1), cur(dets.size(), -1);
    double best_cost = 1e300;
    int best_matched = -1;
    std::vector<bool> used(tracks.size(), false);
    std::function<void(std::size_t, double, int)> rec = [&](std::size_t j, double cost, int matched) {
        if (j == dets.size()) {
            if (matched > best_matched || (matched == best_matched && cost < best_cost)) {
                best_matched = matched;
                best_cost = cost;
                best = cur;
            }
            return;
        }
        cur[j] = -1;
        rec(j + 1, cost, matched);
        for (std::size_t t = 0; t < tracks.size(); ++t) {
            const double d = std::hypot(tracks[t].x - dets[j].x, tracks[t].y - dets[j].y);
            if (used[t] || d > max_dist) continue;
            used[t] = true;
            cur[j] = static_cast<int>(t);
            rec(j + 1, cost + d, matched + 1);
            used[t] = false;
        }
        cur[j] = -1;
    };
    rec(0, 0.0, 0);
    return best;
}

}  // namespace

TEST(Tracker, SingleMovingEggKeepsOneId)
{
    TrackSet ts({40, 5});
    for (int f = 0; f < 30; ++f) EXPECT_EQ(ts.step(f, {det(f, 10 + 5.0 * f, 100)}), (std::vector<std::int64_t>{0}));
    EXPECT_EQ(ts.next_id(), 1);
}

TEST(Tracker, ParallelLanesNeverSwap)
{
    TrackSet ts({40, 5});
    for (int f = 0; f < 50; ++f) {
        const auto ids = ts.step(f, {det(f, 5.0 * f, 100), det(f, 5.0 * f + 2, 300)});
        EXPECT_EQ(ids, (std::vector<std::int64_t>{0, 1}));
    }
}

TEST(Tracker, DropoutResumesSameId)
{
    TrackSet ts({40, 5});
    ts.step(0, {det(0, 100, 100)});
    ts.step(1, {det(1, 105, 100)});
    ts.step(2, {});
    EXPECT_EQ(ts.step(3, {det(3, 115, 100)}), (std::vector<std::int64_t>{0}));
    for (int f = 4; f <= 9; ++f) ts.step(f, {});
    EXPECT_EQ(ts.step(10, {det(10, 118, 100)}), (std::vector<std::int64_t>{1}));  // retired after 6 missed frames
}

TEST(Tracker, OutOfOrderFrameRejected)
{
    TrackSet ts;
    ts.step(5, {});
    EXPECT_THROW(ts.step(5, {}), ValidationError);
    EXPECT_THROW(ts.step(4, {}), ValidationError);
}

TEST(Tracker, GreedyMatchesOptimalOnSeparatedScenes)
{
    Rng rng(12);
    for (int scene = 0; scene < 100; ++scene) {
        TrackSet ts({50, 5});
        // 1-5 eggs with starting points at least 150 px apart, moving < 15 px/frame
        std::vector<Point> pos, vel;
        while (pos.size() < 1 + rng.index(5)) {
            Point p{rng.uniform(50, 590), rng.uniform(50, 430)};
            if (std::all_of(pos.begin(), pos.end(), [&](const Point& q) { return std::hypot(p.x - q.x, p.y - q.y) > 150; })) {
                pos.push_back(p);
                vel.push_back({rng.uniform(-3, 3), rng.uniform(-3, 3)});
            }
        }
        std::vector<Point> last;
        for (int f = 0; f < 20; ++f) {
            std::vector<Detection> dets;
            std::vector<Point> now;
            for (std::size_t k = 0; k < pos.size(); ++k) {
                Point p{pos[k].x + vel[k].x * f, pos[k].y + vel[k].y * f};
                now.push_back(p);
                dets.push_back(det(f, p.x, p.y));
            }
            std::vector<Point> track_pos;
            std::vector<std::int64_t> track_ids;
            for (const auto& t : ts.active()) {
                track_pos.push_back(t.last);
                track_ids.push_back(t.id);
            }
            const auto expect = optimal_assignment(track_pos, now, 50);
            const auto ids = ts.step(f, dets);
            for (std::size_t j = 0; j < dets.size(); ++j)
                if (expect[j] >= 0) {
                    EXPECT_EQ(ids[j], track_ids[static_cast<std::size_t>(expect[j])]);
                }
        }
        EXPECT_EQ(ts.next_id(), static_cast<std::int64_t>(pos.size()));
    }
}

TEST(Polygon, Examples)
{
    const Polygon sq{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    EXPECT_TRUE(point_in_polygon({0.5, 0.5}, sq));
    EXPECT_FALSE(point_in_polygon({1.5, 0.5}, sq));
    EXPECT_TRUE(point_in_polygon({1.0, 0.5}, sq));  // boundary counts as inside
    EXPECT_TRUE(point_in_polygon({0.0, 0.0}, sq));
    EXPECT_THROW(point_in_polygon({0, 0}, Polygon{{0, 0}, {1, 1}}), ValidationError);
}

TEST(Polygon, MatchesWindingNumberOnConcaveShapes)
{
    const Polygon ell{{0, 0}, {4, 0}, {4, 1}, {1, 1}, {1, 4}, {0, 4}};
    EXPECT_FALSE(point_in_polygon({2.5, 2.5}, ell));  // the notch
    std::vector<oracle::P> ell_o;
    for (const auto& p : ell) ell_o.push_back({p.x, p.y});
    Rng rng(6);
    for (int i = 0; i < 20000; ++i) {
        const Point q{rng.uniform(-1, 5), rng.uniform(-1, 5)};
        EXPECT_EQ(point_in_polygon(q, ell), oracle::winding_number({q.x, q.y}, ell_o) != 0);
    }
    // random star-shaped polygons
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 3 + static_cast<int>(rng.index(10));
        Polygon poly;
        std::vector<oracle::P> po;
        for (int k = 0; k < n; ++k) {
            const double a = 2 * std::numbers::pi * (k + rng.uniform(0.1, 0.9)) / n, r = rng.uniform(1, 5);
            poly.push_back({r * std::cos(a), r * std::sin(a)});
            po.push_back({poly.back().x, poly.back().y});
        }
        for (int i = 0; i < 500; ++i) {
            const Point q{rng.uniform(-6, 6), rng.uniform(-6, 6)};
            EXPECT_EQ(point_in_polygon(q, poly), oracle::winding_number({q.x, q.y}, po) != 0);
        }
    }
}

TEST(Bins, CountedOnceEvenWhenOscillating)
{
    std::vector<WeightBin> bins{{"medium", {{100, 100}, {200, 100}, {200, 200}, {100, 200}}, 0}};
    TrackSet ts;
    for (int f = 0; f < 10; ++f) {
        ts.step(f, {det(f, f % 2 ? 99 : 101, 150)});
        count_update(ts, bins);
    }
    EXPECT_EQ(bins[0].tally, 1);
    // frozen track set: idempotent
    count_update(ts, bins);
    count_update(ts, bins);
    EXPECT_EQ(bins[0].tally, 1);
}

TEST(Bins, OverlappingBinsRaise)
{
    std::vector<WeightBin> bins{{"a", {{0, 0}, {10, 0}, {10, 10}, {0, 10}}, 0}, {"b", {{5, 0}, {15, 0}, {15, 10}, {5, 10}}, 0}};
    TrackSet ts;
    ts.step(0, {det(0, 7, 5)});
    EXPECT_THROW(count_update(ts, bins), RuntimeFault);
}

TEST(Dbscan, Examples)
{
    EXPECT_TRUE(dbscan({}, 1.0, 3).empty());
    EXPECT_EQ(dbscan({{5, 5}}, 1.0, 4), (std::vector<int>{kNoise}));
    Rng rng(1);
    std::vector<Point> pts;
    for (int i = 0; i < 60; ++i) pts.push_back({100 + rng.normal(0, 5), 100 + rng.normal(0, 5)});
    for (int i = 0; i < 60; ++i) pts.push_back({400 + rng.normal(0, 5), 100 + rng.normal(0, 5)});
    const auto l = dbscan(pts, 30, 4);
    for (int i = 0; i < 60; ++i) {
        EXPECT_EQ(l[static_cast<std::size_t>(i)], 0);
        EXPECT_EQ(l[static_cast<std::size_t>(i) + 60], 1);
    }
}

TEST(Dbscan, MatchesBruteForceOracle)
{
    Rng rng(99);
    for (int trial = 0; trial < 40; ++trial) {
        std::vector<Point> pts;
        const auto n = rng.index(150);
        for (std::size_t i = 0; i < n; ++i) pts.push_back({rng.uniform(0, 200), rng.uniform(0, 200)});
        const double eps = rng.uniform(5, 30);
        const int mp = 1 + static_cast<int>(rng.index(6));
        EXPECT_EQ(dbscan(pts, eps, mp), oracle::dbscan(to_oracle(pts), eps, mp));
    }
}

TEST(Dbscan, PermutationInvariantUpToRenaming)
{
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Point> pts;
        for (int i = 0; i < 120; ++i) pts.push_back({rng.uniform(0, 150), rng.uniform(0, 150)});
        const auto a = dbscan(pts, 15, 4);
        std::vector<std::size_t> perm(pts.size());
        std::iota(perm.begin(), perm.end(), 0);
        for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[rng.index(i)]);
        std::vector<Point> shuffled;
        for (auto i : perm) shuffled.push_back(pts[i]);
        const auto b = dbscan(shuffled, 15, 4);
        // compare core membership only: border points may legitimately change cluster
        std::vector<int> ca, cb;
        const auto core_a = oracle::dbscan(to_oracle(pts), 15, 4);
        for (std::size_t k = 0; k < perm.size(); ++k) {
            int nb = 0;
            for (const auto& q : pts) nb += std::hypot(q.x - pts[perm[k]].x, q.y - pts[perm[k]].y) <= 15;
            if (nb < 4) continue;
            ca.push_back(a[perm[k]]);
            cb.push_back(b[k]);
        }
        EXPECT_TRUE(oracle::same_partition(ca, cb));
        (void)core_a;
    }
}

TEST(Hough, AnalyticLines)
{
    std::vector<Point> v, h;
    for (int i = 0; i < 12; ++i) {
        v.push_back({100, 20.0 + 30 * i});
        h.push_back({20.0 + 40 * i, 50});
    }
    auto lv = hough_lines(v, 2, std::numbers::pi / 180, 6);
    ASSERT_EQ(lv.size(), 1u);
    EXPECT_NEAR(lv[0].theta, 0.0, 1e-12);
    EXPECT_NEAR(lv[0].rho, 100, 2);
    auto lh = hough_lines(h, 2, std::numbers::pi / 180, 6);
    ASSERT_EQ(lh.size(), 1u);
    EXPECT_NEAR(lh[0].theta, std::numbers::pi / 2, 1e-12);
    EXPECT_NEAR(lh[0].rho, 50, 2);
    std::vector<Point> both = v;
    both.insert(both.end(), h.begin(), h.end());
    EXPECT_EQ(hough_lines(both, 2, std::numbers::pi / 180, 6).size(), 2u);
    EXPECT_TRUE(hough_lines({}, 2, 0.1, 1).empty());
    EXPECT_THROW(hough_lines(v, 0, 0.1, 1), ValidationError);
}

TEST(Hough, ThetaNormalized)
{
    std::vector<Point> pts;
    for (int i = 0; i < 20; ++i) pts.push_back({300.0 - 10 * i, 10.0 + 10 * i});  // a 135 degree normal
    for (const auto& l : hough_lines(pts, 2, std::numbers::pi / 180, 5)) {
        EXPECT_GE(l.theta, 0.0);
        EXPECT_LT(l.theta, std::numbers::pi);
    }
}

TEST(Calibration, RecoversSpringColumns)
{
    for (double spurious : {0.0, 0.1}) {
        const auto log = synth::calibration_log(3, synth::spring_columns(), 12, 10, spurious);
        const auto c = calibrate(log.flat());
        ASSERT_EQ(c.rois.size(), 4u);
        for (std::size_t i = 0; i < 4; ++i) {
            const auto& p = c.rois[i].polygon;
            const double mid = 0.25 * (p[0].x + p[1].x + p[2].x + p[3].x);
            EXPECT_NEAR(mid, synth::spring_columns()[i], 2.0) << "spurious " << spurious;
            EXPECT_EQ(c.rois[i].label, default_labels()[i]);
            for (const auto& v : p) EXPECT_TRUE(c.in_detection_region(v));
        }
        EXPECT_EQ(calibration_to_json(calibration_from_json(calibration_to_json(c))), calibration_to_json(c));
    }
}

TEST(Calibration, ThreeColumnsFailsWithCount)
{
    const auto log = synth::calibration_log(4, {100, 250, 400});
    try {
        calibrate(log.flat());
        FAIL();
    } catch (const CalibrationFailure& e) {
        EXPECT_EQ(e.lines_found(), 3u);
        EXPECT_NE(std::string(e.what()).find('3'), std::string::npos);
    }
}

TEST(Counting, ScriptedSessionMatchesTruth)
{
    const auto log = synth::calibration_log(1, synth::spring_columns());
    const auto calib = calibrate(log.flat());
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto s = synth::counting_session(seed, 40, synth::spring_columns(), calib.lane_y_min, calib.lane_y_max);
        CountingSession session(calib);
        for (const auto& f : s.frames) session.process(f);
        for (std::size_t c = 0; c < 4; ++c) EXPECT_EQ(session.bins()[c].tally, s.truth[c]) << "seed " << seed;
        // total equals number of distinct counted ids
        std::set<std::int64_t> counted;
        for (const auto& t : session.tracks().active())
            if (t.counted_in) counted.insert(t.id);
        EXPECT_LE(static_cast<std::int64_t>(counted.size()), session.total());
    }
}

TEST(Io, FrameLineRoundTripAndErrors)
{
    FrameDetections f{7, {det(7, 10, 20)}};
    const auto back = parse_frame_line(frame_to_line(f), 1);
    EXPECT_EQ(back.frame, 7);
    EXPECT_EQ(back.detections[0].cx, 10.0);
    EXPECT_THROW(parse_frame_line(R"({"frame":1,"detections":[{"cx":700,"cy":1}]})", 3), ValidationError);
    try {
        parse_frame_line("{\"frame\":1}", 9);
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("line 9"), std::string::npos);
    }
}
