#pragma once

// Egg counting downstream of a detector: greedy centroid tracking, polygon
// bins, and self-calibration of the bins from a calibration run
// (DBSCAN halt clusters + Hough lines).

#include "farmintel/common.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

namespace farmintel::eggcount {

using nlohmann::json;

inline constexpr double kFrameWidth = 640.0;
inline constexpr double kFrameHeight = 480.0;

struct Point {
    double x = 0.0;
    double y = 0.0;
    bool operator==(const Point&) const = default;
};

using Polygon = std::vector<Point>;

struct Detection {
    std::int64_t frame = 0;
    double cx = 0.0, cy = 0.0;
    double w = 0.0, h = 0.0;
    double conf = 1.0;

    void validate() const
    {
        if (!(cx >= 0.0 && cx <= kFrameWidth && cy >= 0.0 && cy <= kFrameHeight))
            throw ValidationError("detection centroid outside the 640x480 frame at frame " + std::to_string(frame));
        if (!(conf >= 0.0 && conf <= 1.0)) throw ValidationError("detection confidence outside [0,1]");
        if (!(w >= 0.0 && h >= 0.0)) throw ValidationError("detection box has negative size");
    }
};

// ---------------------------------------------------------------------------
// Tracking
// ---------------------------------------------------------------------------

struct TrackerConfig {
    double max_dist = 50.0;
    int max_missed = 5;

    void validate() const
    {
        if (!(max_dist > 0.0)) throw ValidationError("tracker max_dist must be positive");
        if (max_missed < 0) throw ValidationError("tracker max_missed must be non-negative");
    }
};

struct Track {
    std::int64_t id = 0;
    Point last;
    std::int64_t last_seen = 0;
    std::optional<std::size_t> counted_in;
    std::vector<Point> path;
};

class TrackSet {
public:
    explicit TrackSet(TrackerConfig cfg = {}) : cfg_(cfg) { cfg_.validate(); }

    /// Greedy nearest-pair matching; returns the ids assigned to `dets` in order.
    std::vector<std::int64_t> step(std::int64_t frame, const std::vector<Detection>& dets)
    {
        if (started_ && frame <= frame_)
            throw ValidationError("frame " + std::to_string(frame) + " arrived after frame " + std::to_string(frame_));
        started_ = true;
        frame_ = frame;

        struct Pair {
            double d;
            std::int64_t id;
            std::size_t track, det;
        };
        std::vector<Pair> pairs;
        for (std::size_t t = 0; t < active_.size(); ++t)
            for (std::size_t j = 0; j < dets.size(); ++j) {
                const double d = std::hypot(active_[t].last.x - dets[j].cx, active_[t].last.y - dets[j].cy);
                if (d <= cfg_.max_dist) pairs.push_back({d, active_[t].id, t, j});
            }
        std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
            return std::tie(a.d, a.id, a.det) < std::tie(b.d, b.id, b.det);
        });

        std::vector<std::int64_t> assigned(dets.size(), -1);
        std::vector<bool> track_used(active_.size(), false);
        for (const auto& p : pairs) {
            if (track_used[p.track] || assigned[p.det] >= 0) continue;
            track_used[p.track] = true;
            assigned[p.det] = p.id;
            auto& tr = active_[p.track];
            tr.last = {dets[p.det].cx, dets[p.det].cy};
            tr.last_seen = frame;
            tr.path.push_back(tr.last);
        }
        for (std::size_t j = 0; j < dets.size(); ++j) {
            if (assigned[j] >= 0) continue;
            Track tr;
            tr.id = next_id_++;
            tr.last = {dets[j].cx, dets[j].cy};
            tr.last_seen = frame;
            tr.path.push_back(tr.last);
            assigned[j] = tr.id;
            active_.push_back(std::move(tr));
        }
        const auto keep = std::stable_partition(active_.begin(), active_.end(), [&](const Track& t) {
            return frame - t.last_seen <= cfg_.max_missed;
        });
        retired_ += static_cast<std::size_t>(active_.end() - keep);
        active_.erase(keep, active_.end());
        return assigned;
    }

    const std::vector<Track>& active() const { return active_; }
    std::vector<Track>& active() { return active_; }
    std::int64_t next_id() const { return next_id_; }
    std::size_t retired() const { return retired_; }
    std::int64_t frame() const { return frame_; }

private:
    TrackerConfig cfg_;
    std::vector<Track> active_;
    std::int64_t next_id_ = 0;
    std::int64_t frame_ = 0;
    bool started_ = false;
    std::size_t retired_ = 0;
};

// ---------------------------------------------------------------------------
// Bins
// ---------------------------------------------------------------------------

/// Ray-casting parity test; points on an edge or vertex count as inside.
inline bool point_in_polygon(Point p, const Polygon& poly)
{
    if (poly.size() < 3) throw ValidationError("polygon needs at least 3 vertices");
    constexpr double eps = 1e-9;
    const std::size_t n = poly.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Point a = poly[j], b = poly[i];
        const double cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
        const double len = std::hypot(b.x - a.x, b.y - a.y);
        if (std::abs(cross) <= eps * std::max(1.0, len) && p.x >= std::min(a.x, b.x) - eps &&
            p.x <= std::max(a.x, b.x) + eps && p.y >= std::min(a.y, b.y) - eps && p.y <= std::max(a.y, b.y) + eps)
            return true;
    }
    bool inside = false;
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Point a = poly[j], b = poly[i];
        if ((a.y > p.y) != (b.y > p.y)) {
            const double x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if (p.x < x_cross) inside = !inside;
        }
    }
    return inside;
}

inline const std::vector<std::string>& default_labels()
{
    static const std::vector<std::string> labels{"extra-large", "large", "medium", "small"};
    return labels;
}

struct WeightBin {
    std::string label;
    Polygon polygon;
    std::int64_t tally = 0;
};

/// Counts each track at most once, in the first bin its last centroid lies in.
/// Throws RuntimeFault when a centroid lies in two bins.
inline void count_update(TrackSet& tracks, std::vector<WeightBin>& bins)
{
    for (auto& tr : tracks.active()) {
        if (tr.counted_in) continue;
        std::optional<std::size_t> hit;
        for (std::size_t b = 0; b < bins.size(); ++b) {
            if (!point_in_polygon(tr.last, bins[b].polygon)) continue;
            if (hit)
                throw RuntimeFault("calibration fault: point (" + std::to_string(tr.last.x) + ", " +
                                   std::to_string(tr.last.y) + ") lies in bins '" + bins[*hit].label + "' and '" +
                                   bins[b].label + "'");
            hit = b;
        }
        if (hit) {
            ++bins[*hit].tally;
            tr.counted_in = hit;
        }
    }
}

// ---------------------------------------------------------------------------
// DBSCAN
// ---------------------------------------------------------------------------

inline constexpr int kNoise = -1;

/// Standard DBSCAN. A point is core when at least `min_pts` points (itself
/// included) lie within distance <= eps. Clusters are grown from the lowest
/// unvisited index, breadth first, so labels depend only on input order.
inline std::vector<int> dbscan(const std::vector<Point>& pts, double eps, int min_pts)
{
    if (!(eps > 0.0)) throw ValidationError("dbscan eps must be positive");
    if (min_pts < 1) throw ValidationError("dbscan min_pts must be at least 1");
    const std::size_t n = pts.size();
    std::vector<int> label(n, -2);  // -2 = unvisited
    if (n == 0) return {};

    auto cell_of = [&](const Point& p) {
        return std::make_pair(static_cast<std::int64_t>(std::floor(p.x / eps)),
                              static_cast<std::int64_t>(std::floor(p.y / eps)));
    };
    std::map<std::pair<std::int64_t, std::int64_t>, std::vector<std::size_t>> grid;
    for (std::size_t i = 0; i < n; ++i) grid[cell_of(pts[i])].push_back(i);
    const double eps2 = eps * eps;
    auto neighbors = [&](std::size_t i) {
        std::vector<std::size_t> out;
        const auto [cx, cy] = cell_of(pts[i]);
        for (std::int64_t dx = -1; dx <= 1; ++dx)
            for (std::int64_t dy = -1; dy <= 1; ++dy) {
                auto it = grid.find({cx + dx, cy + dy});
                if (it == grid.end()) continue;
                for (std::size_t j : it->second) {
                    const double ddx = pts[i].x - pts[j].x, ddy = pts[i].y - pts[j].y;
                    if (ddx * ddx + ddy * ddy <= eps2) out.push_back(j);
                }
            }
        std::sort(out.begin(), out.end());
        return out;
    };

    int cluster = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (label[i] != -2) continue;
        auto seeds = neighbors(i);
        if (static_cast<int>(seeds.size()) < min_pts) {
            label[i] = kNoise;
            continue;
        }
        label[i] = cluster;
        for (std::size_t k = 0; k < seeds.size(); ++k) {
            const std::size_t q = seeds[k];
            if (label[q] == kNoise) label[q] = cluster;
            if (label[q] != -2) continue;
            label[q] = cluster;
            auto nq = neighbors(q);
            if (static_cast<int>(nq.size()) >= min_pts) seeds.insert(seeds.end(), nq.begin(), nq.end());
        }
        ++cluster;
    }
    return label;
}

// ---------------------------------------------------------------------------
// Hough transform
// ---------------------------------------------------------------------------

struct Line {
    double rho = 0.0;    // signed, pixels
    double theta = 0.0;  // radians in [0, pi)
    int votes = 0;
};

/// Peaks of the (theta, rho) accumulator with at least `votes_min` votes that
/// are maximal in their 3x3 neighbourhood (theta wraps, flipping rho).
/// Equal-vote plateaus keep the cell with the lowest (theta, rho) index.
inline std::vector<Line> hough_lines(const std::vector<Point>& pts, double rho_res, double theta_res, int votes_min)
{
    if (!(rho_res > 0.0) || !(theta_res > 0.0)) throw ValidationError("Hough resolutions must be positive");
    if (pts.empty()) return {};
    const int n_theta = std::max(1, static_cast<int>(std::lround(std::numbers::pi / theta_res)));
    const double dtheta = std::numbers::pi / n_theta;
    double dmax = 0.0;
    for (const auto& p : pts) dmax = std::max(dmax, std::hypot(p.x, p.y));
    const int half = static_cast<int>(std::ceil(dmax / rho_res)) + 1;
    const int n_rho = 2 * half + 1;  // bin r holds rho = (r - half) * rho_res

    std::vector<int> acc(static_cast<std::size_t>(n_theta) * static_cast<std::size_t>(n_rho), 0);
    auto at = [&](int t, int r) -> int& { return acc[static_cast<std::size_t>(t) * static_cast<std::size_t>(n_rho) + static_cast<std::size_t>(r)]; };
    std::vector<double> cs(static_cast<std::size_t>(n_theta)), sn(static_cast<std::size_t>(n_theta));
    for (int t = 0; t < n_theta; ++t) {
        cs[static_cast<std::size_t>(t)] = std::cos(t * dtheta);
        sn[static_cast<std::size_t>(t)] = std::sin(t * dtheta);
    }
    for (const auto& p : pts)
        for (int t = 0; t < n_theta; ++t) {
            const double rho = p.x * cs[static_cast<std::size_t>(t)] + p.y * sn[static_cast<std::size_t>(t)];
            ++at(t, static_cast<int>(std::lround(rho / rho_res)) + half);
        }

    std::vector<Line> out;
    for (int t = 0; t < n_theta; ++t)
        for (int r = 0; r < n_rho; ++r) {
            const int v = at(t, r);
            if (v < votes_min || v == 0) continue;
            const long self = static_cast<long>(t) * n_rho + r;
            bool peak = true;
            for (int dt = -1; dt <= 1 && peak; ++dt)
                for (int dr = -1; dr <= 1 && peak; ++dr) {
                    if (dt == 0 && dr == 0) continue;
                    int tt = t + dt, rr = r + dr;
                    if (tt < 0 || tt >= n_theta) {
                        if (n_theta == 1) continue;
                        tt = (tt + n_theta) % n_theta;
                        rr = n_rho - 1 - rr;  // theta +/- pi flips the sign of rho
                    }
                    if (rr < 0 || rr >= n_rho) continue;
                    const int u = at(tt, rr);
                    const long other = static_cast<long>(tt) * n_rho + rr;
                    if (u > v || (u == v && other < self)) peak = false;
                }
            if (peak) out.push_back({(r - half) * rho_res, t * dtheta, v});
        }
    std::stable_sort(out.begin(), out.end(), [](const Line& a, const Line& b) { return a.votes > b.votes; });
    return out;
}

// ---------------------------------------------------------------------------
// Calibration
// ---------------------------------------------------------------------------

struct CalibrationConfig {
    double eps = 25.0;
    int min_pts = 8;
    double rho_res = 2.0;
    double theta_res_deg = 1.0;
    int votes_min = 6;
    double max_tilt_deg = 20.0;  // spring lines run across the lane, near vertical
    double merge_gap = 20.0;     // px between lines treated as one spring
    double roi_half_width = 30.0;
    double lane_margin = 30.0;
    std::vector<std::string> labels = default_labels();

    void validate() const
    {
        if (!(eps > 0.0) || min_pts < 1) throw ValidationError("invalid DBSCAN parameters");
        if (!(rho_res > 0.0) || !(theta_res_deg > 0.0)) throw ValidationError("invalid Hough resolutions");
        if (votes_min < 2) throw ValidationError("votes_min must be at least 2");
        if (!(roi_half_width > 0.0)) throw ValidationError("roi_half_width must be positive");
        if (labels.size() != 4) throw ValidationError("exactly 4 weight-class labels are required");
    }
};

struct SpringLine {
    double rho = 0.0;
    double theta = 0.0;
    int votes = 0;
    double x_at_mid = 0.0;  // lane-centre crossing, used for ordering
};

struct CalibrationResult {
    std::vector<SpringLine> lines;
    std::vector<WeightBin> rois;
    Polygon detection_region;
    double lane_y_min = 0.0, lane_y_max = kFrameHeight;

    bool in_detection_region(Point p) const { return point_in_polygon(p, detection_region); }
};

class CalibrationFailure : public RuntimeFault {
public:
    CalibrationFailure(const std::string& msg, std::size_t found) : RuntimeFault(msg), found_(found) {}
    std::size_t lines_found() const { return found_; }

private:
    std::size_t found_;
};

inline double line_x_at(double rho, double theta, double y) { return (rho - y * std::sin(theta)) / std::cos(theta); }

/// Halt clusters -> core-point centroids -> near-vertical Hough lines ->
/// merged springs (closest neighbours merged until 4 remain) -> ROIs.
inline CalibrationResult calibrate(const std::vector<Detection>& log, const CalibrationConfig& cfg = {})
{
    cfg.validate();
    std::vector<Point> pts;
    pts.reserve(log.size());
    for (const auto& d : log) pts.push_back({d.cx, d.cy});
    const auto labels = dbscan(pts, cfg.eps, cfg.min_pts);

    // centroids from core points only so pass-through detections do not bias them
    const double eps2 = cfg.eps * cfg.eps;
    std::map<int, std::pair<Point, int>> sums;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (labels[i] < 0) continue;
        int nb = 0;
        for (std::size_t j = 0; j < pts.size(); ++j) {
            if (labels[j] != labels[i]) continue;
            const double dx = pts[i].x - pts[j].x, dy = pts[i].y - pts[j].y;
            if (dx * dx + dy * dy <= eps2) ++nb;
        }
        if (nb < cfg.min_pts) continue;
        auto& s = sums[labels[i]];
        s.first.x += pts[i].x;
        s.first.y += pts[i].y;
        ++s.second;
    }
    std::vector<Point> centroids;
    for (const auto& [id, s] : sums) centroids.push_back({s.first.x / s.second, s.first.y / s.second});

    CalibrationResult res;
    if (centroids.empty()) throw CalibrationFailure("calibration failed: no halt clusters found (0 lines)", 0);
    double y_lo = centroids.front().y, y_hi = centroids.front().y;
    for (const auto& c : centroids) {
        y_lo = std::min(y_lo, c.y);
        y_hi = std::max(y_hi, c.y);
    }
    res.lane_y_min = std::max(0.0, y_lo - cfg.lane_margin);
    res.lane_y_max = std::min(kFrameHeight, y_hi + cfg.lane_margin);
    const double y_mid = 0.5 * (res.lane_y_min + res.lane_y_max);

    const double max_tilt = cfg.max_tilt_deg * std::numbers::pi / 180.0;
    std::vector<SpringLine> lines;
    for (const auto& l : hough_lines(centroids, cfg.rho_res, cfg.theta_res_deg * std::numbers::pi / 180.0, cfg.votes_min)) {
        const double tilt = std::min(l.theta, std::numbers::pi - l.theta);
        if (tilt > max_tilt) continue;
        lines.push_back({l.rho, l.theta, l.votes, line_x_at(l.rho, l.theta, y_mid)});
    }
    std::sort(lines.begin(), lines.end(), [](const SpringLine& a, const SpringLine& b) { return a.x_at_mid < b.x_at_mid; });

    auto merge_at = [&](std::size_t i) {
        auto& a = lines[i];
        const auto& b = lines[i + 1];
        const double wa = a.votes, wb = b.votes;
        // average in (x_mid, tilt) space so lines on either side of theta = 0 combine sanely
        auto signed_tilt = [](double th) { return th > std::numbers::pi / 2 ? th - std::numbers::pi : th; };
        const double x = (wa * a.x_at_mid + wb * b.x_at_mid) / (wa + wb);
        double th = (wa * signed_tilt(a.theta) + wb * signed_tilt(b.theta)) / (wa + wb);
        double rho = x * std::cos(th) + y_mid * std::sin(th);
        if (th < 0) {
            th += std::numbers::pi;
            rho = -rho;
        }
        a = {rho, th, a.votes + b.votes, x};
        lines.erase(lines.begin() + static_cast<std::ptrdiff_t>(i) + 1);
    };
    for (bool merged = true; merged;) {
        merged = false;
        for (std::size_t i = 0; i + 1 < lines.size(); ++i)
            if (lines[i + 1].x_at_mid - lines[i].x_at_mid <= cfg.merge_gap) {
                merge_at(i);
                merged = true;
                break;
            }
    }
    while (lines.size() > 4) {
        std::size_t best = 0;
        for (std::size_t i = 1; i + 1 < lines.size(); ++i)
            if (lines[i + 1].x_at_mid - lines[i].x_at_mid < lines[best + 1].x_at_mid - lines[best].x_at_mid) best = i;
        merge_at(best);
    }
    if (lines.size() < 4)
        throw CalibrationFailure("calibration failed: found " + std::to_string(lines.size()) +
                                     " spring lines, need 4",
                                 lines.size());

    const double hw = cfg.roi_half_width;
    for (std::size_t i = 0; i < 4; ++i) {
        const auto& l = lines[i];
        const double x_top = line_x_at(l.rho, l.theta, res.lane_y_min);
        const double x_bot = line_x_at(l.rho, l.theta, res.lane_y_max);
        auto clip_x = [](double x) { return std::clamp(x, 0.0, kFrameWidth); };
        WeightBin bin;
        bin.label = cfg.labels[i];
        bin.polygon = {{clip_x(x_top - hw), res.lane_y_min},
                       {clip_x(x_top + hw), res.lane_y_min},
                       {clip_x(x_bot + hw), res.lane_y_max},
                       {clip_x(x_bot - hw), res.lane_y_max}};
        res.rois.push_back(std::move(bin));
    }
    for (std::size_t i = 0; i + 1 < 4; ++i) {
        const auto& a = res.rois[i].polygon;
        const auto& b = res.rois[i + 1].polygon;
        if (!(a[1].x < b[0].x && a[2].x < b[3].x))
            throw CalibrationFailure("calibration failed: regions of '" + res.rois[i].label + "' and '" +
                                         res.rois[i + 1].label + "' overlap",
                                     lines.size());
    }
    res.lines = std::move(lines);
    const auto& first = res.rois.front().polygon;
    const auto& last = res.rois.back().polygon;
    res.detection_region = {{std::min(first[0].x, first[3].x), res.lane_y_min},
                            {std::max(last[1].x, last[2].x), res.lane_y_min},
                            {std::max(last[1].x, last[2].x), res.lane_y_max},
                            {std::min(first[0].x, first[3].x), res.lane_y_max}};
    return res;
}

// ---------------------------------------------------------------------------
// Counting session and file formats
// ---------------------------------------------------------------------------

struct FrameDetections {
    std::int64_t frame = 0;
    std::vector<Detection> detections;
};

/// Replays a detection log against calibrated bins. Detections outside the
/// detection region are masked before tracking.
class CountingSession {
public:
    CountingSession(const CalibrationResult& calib, TrackerConfig cfg = {}) : calib_(calib), tracks_(cfg)
    {
        bins_ = calib.rois;
        for (auto& b : bins_) b.tally = 0;
    }

    void process(const FrameDetections& f)
    {
        std::vector<Detection> kept;
        for (const auto& d : f.detections) {
            d.validate();
            if (calib_.in_detection_region({d.cx, d.cy})) kept.push_back(d);
        }
        tracks_.step(f.frame, kept);
        count_update(tracks_, bins_);
    }

    const std::vector<WeightBin>& bins() const { return bins_; }
    std::int64_t total() const
    {
        std::int64_t t = 0;
        for (const auto& b : bins_) t += b.tally;
        return t;
    }
    const TrackSet& tracks() const { return tracks_; }

private:
    CalibrationResult calib_;
    TrackSet tracks_;
    std::vector<WeightBin> bins_;
};

inline json polygon_to_json(const Polygon& p)
{
    json a = json::array();
    for (const auto& v : p) a.push_back({v.x, v.y});
    return a;
}

inline Polygon polygon_from_json(const json& j)
{
    Polygon p;
    for (const auto& v : j) p.push_back({v.at(0).get<double>(), v.at(1).get<double>()});
    if (p.size() < 3) throw ValidationError("polygon needs at least 3 vertices");
    return p;
}

inline json calibration_to_json(const CalibrationResult& c)
{
    json lines = json::array();
    for (const auto& l : c.lines) lines.push_back({{"rho", l.rho}, {"theta", l.theta}, {"votes", l.votes}, {"x_mid", l.x_at_mid}});
    json rois = json::array();
    for (const auto& b : c.rois) rois.push_back({{"label", b.label}, {"polygon", polygon_to_json(b.polygon)}});
    return {{"spring_lines", lines},
            {"rois", rois},
            {"detection_region", polygon_to_json(c.detection_region)},
            {"lane_y", {c.lane_y_min, c.lane_y_max}}};
}

inline CalibrationResult calibration_from_json(const json& j)
{
    try {
        CalibrationResult c;
        for (const auto& l : j.at("spring_lines"))
            c.lines.push_back({l.at("rho").get<double>(), l.at("theta").get<double>(), l.at("votes").get<int>(),
                               l.at("x_mid").get<double>()});
        for (const auto& r : j.at("rois")) c.rois.push_back({r.at("label").get<std::string>(), polygon_from_json(r.at("polygon")), 0});
        if (c.rois.size() != 4) throw ValidationError("calibration must define exactly 4 regions");
        c.detection_region = polygon_from_json(j.at("detection_region"));
        c.lane_y_min = j.at("lane_y").at(0).get<double>();
        c.lane_y_max = j.at("lane_y").at(1).get<double>();
        return c;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("calibration file: ") + e.what());
    }
}

/// Parses one line of the detection JSONL format.
inline FrameDetections parse_frame_line(const std::string& line, std::size_t line_no)
{
    try {
        const auto j = json::parse(line);
        FrameDetections f;
        f.frame = j.at("frame").get<std::int64_t>();
        for (const auto& d : j.at("detections")) {
            Detection det;
            det.frame = f.frame;
            det.cx = d.at("cx").get<double>();
            det.cy = d.at("cy").get<double>();
            det.w = d.value("w", 0.0);
            det.h = d.value("h", 0.0);
            det.conf = d.value("conf", 1.0);
            det.validate();
            f.detections.push_back(det);
        }
        return f;
    } catch (const json::exception& e) {
        throw ValidationError("detection log line " + std::to_string(line_no) + ": " + e.what());
    } catch (const ValidationError& e) {
        throw ValidationError("detection log line " + std::to_string(line_no) + ": " + e.what());
    }
}

inline std::string frame_to_line(const FrameDetections& f)
{
    json dets = json::array();
    for (const auto& d : f.detections) dets.push_back({{"cx", d.cx}, {"cy", d.cy}, {"w", d.w}, {"h", d.h}, {"conf", d.conf}});
    return json{{"frame", f.frame}, {"detections", dets}}.dump();
}

}  // namespace farmintel::eggcount
