#pragma once

// Poultry-house geometry: beams, camera poses, field-of-view triangles and the
// binary coverage raster used as the placement fitness.

#include "farmintel/common.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace farmintel::geometry {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

using Triangle = std::array<Point, 3>;

enum class BeamAxis { horizontal, vertical };

/// A mounting beam spanning the full farm. Horizontal beams sit at y = offset
/// and run along x; vertical beams sit at x = offset and run along y.
struct Beam {
    BeamAxis axis = BeamAxis::horizontal;
    double offset = 0.0;
};

struct FarmLayout {
    double length = 0.0;      // extent along x, meters
    double width = 0.0;       // extent along y, meters
    double pixel_size = 0.1;  // square cell edge, meters
    std::vector<Beam> beams;

    void validate() const
    {
        if (!(length > 0.0) || !(width > 0.0)) throw ValidationError("farm length and width must be positive");
        if (!(pixel_size > 0.0)) throw ValidationError("pixel_size must be positive");
        if (beams.empty()) throw ValidationError("layout needs at least one beam");
        for (std::size_t i = 0; i < beams.size(); ++i) {
            const auto& b = beams[i];
            const double limit = b.axis == BeamAxis::horizontal ? width : length;
            if (!(b.offset >= 0.0 && b.offset <= limit))
                throw ValidationError("beam " + std::to_string(i) + " offset lies outside the farm");
        }
    }

    // ceil with a small slack so 6.5 / 0.1 does not round up to 66
    std::size_t columns() const { return static_cast<std::size_t>(std::ceil(length / pixel_size - 1e-9)); }
    std::size_t rows() const { return static_cast<std::size_t>(std::ceil(width / pixel_size - 1e-9)); }
    double area() const { return length * width; }
};

struct CameraSpec {
    double fov_deg = 102.0;
    double depth = 5.0;
    int count = 1;

    void validate() const
    {
        if (!(fov_deg > 0.0 && fov_deg < 180.0))
            throw ValidationError("field of view must lie strictly inside (0, 180) degrees");
        if (!(depth > 0.0)) throw ValidationError("camera depth must be positive");
        if (count < 1) throw ValidationError("camera count must be at least 1");
    }

    double half_base() const { return depth * std::tan(fov_deg * std::numbers::pi / 360.0); }
};

struct CameraPose {
    double x = 0.0;
    double y = 0.0;
    double orientation_deg = 0.0;  // 0 = +x, counter-clockwise
    std::size_t beam_index = 0;
};

/// Default house: 20.5 x 6.5 m, 0.1 m cells, three horizontal and
/// five vertical beams with the outer ones on the perimeter.
inline FarmLayout reference_layout()
{
    FarmLayout l;
    l.length = 20.5;
    l.width = 6.5;
    l.pixel_size = 0.1;
    for (double y : {0.0, 3.25, 6.5}) l.beams.push_back({BeamAxis::horizontal, y});
    for (double x : {0.0, 5.125, 10.25, 15.375, 20.5}) l.beams.push_back({BeamAxis::vertical, x});
    return l;
}

inline CameraSpec reference_camera() { return CameraSpec{102.0, 5.0, 6}; }

inline double normalize_degrees(double deg)
{
    double r = std::fmod(deg, 360.0);
    if (r < 0.0) r += 360.0;
    if (r >= 360.0) r = 0.0;
    return r;
}

/// Projects (x, y) onto the nearest beam. Ties go to the lowest beam index.
inline CameraPose snap_to_beam(Point raw, const FarmLayout& layout)
{
    CameraPose best;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < layout.beams.size(); ++i) {
        const auto& b = layout.beams[i];
        Point p = b.axis == BeamAxis::horizontal ? Point{std::clamp(raw.x, 0.0, layout.length), b.offset}
                                                 : Point{b.offset, std::clamp(raw.y, 0.0, layout.width)};
        const double dx = p.x - raw.x;
        const double dy = p.y - raw.y;
        const double d2 = dx * dx + dy * dy;
        if (d2 < best_d2) {
            best_d2 = d2;
            best.x = p.x;
            best.y = p.y;
            best.beam_index = i;
        }
    }
    return best;
}

/// Genes come in (x, y, orientation) triples, each in [0, 1].
inline std::vector<CameraPose> decode_genotype(std::span<const double> genes, const FarmLayout& layout,
                                               const CameraSpec& spec)
{
    if (genes.size() % 3 != 0 || genes.size() / 3 != static_cast<std::size_t>(spec.count))
        throw ValidationError("genotype has " + std::to_string(genes.size()) + " genes, expected " +
                              std::to_string(3 * spec.count));
    if (layout.beams.empty()) throw ValidationError("layout needs at least one beam");
    std::vector<CameraPose> poses;
    poses.reserve(genes.size() / 3);
    for (std::size_t c = 0; c < genes.size(); c += 3) {
        for (std::size_t k = 0; k < 3; ++k)
            if (!(genes[c + k] >= 0.0 && genes[c + k] <= 1.0))
                throw ValidationError("gene " + std::to_string(c + k) + " outside [0, 1]");
        CameraPose pose = snap_to_beam({genes[c] * layout.length, genes[c + 1] * layout.width}, layout);
        pose.orientation_deg = normalize_degrees(genes[c + 2] * 360.0);
        poses.push_back(pose);
    }
    return poses;
}

/// Inverse of decode for a single pose, used to check that snapped poses are fixed points.
inline std::array<double, 3> encode_pose(const CameraPose& pose, const FarmLayout& layout)
{
    return {pose.x / layout.length, pose.y / layout.width, pose.orientation_deg / 360.0};
}

/// Isosceles field-of-view triangle: apex at the camera, height `depth` along
/// the orientation, half-base `depth * tan(fov / 2)`.
/// Vertex order: apex, right far corner, left far corner.
inline Triangle fov_triangle(const CameraPose& pose, const CameraSpec& spec)
{
    if (!(spec.fov_deg > 0.0 && spec.fov_deg < 180.0))
        throw ValidationError("field of view must lie strictly inside (0, 180) degrees");
    const double a = pose.orientation_deg * std::numbers::pi / 180.0;
    const double ux = std::cos(a), uy = std::sin(a);
    const double h = spec.depth, b = spec.half_base();
    const Point far{pose.x + h * ux, pose.y + h * uy};
    return {Point{pose.x, pose.y}, Point{far.x + b * uy, far.y - b * ux}, Point{far.x - b * uy, far.y + b * ux}};
}

/// Angular span [start, end] (degrees, normalized) covered by the camera, measured
/// counter-clockwise from start to end.
inline std::pair<double, double> fov_span(const CameraPose& pose, const CameraSpec& spec)
{
    return {normalize_degrees(pose.orientation_deg - spec.fov_deg / 2.0),
            normalize_degrees(pose.orientation_deg + spec.fov_deg / 2.0)};
}

/// Column-major bit raster of covered cells. Each column stores its rows in
/// 64-bit words, so a triangle is written as one vertical span per column.
class CoverageGrid {
public:
    CoverageGrid() = default;
    explicit CoverageGrid(const FarmLayout& layout)
        : columns_(layout.columns()), rows_(layout.rows()), words_((rows_ + 63) / 64),
          bits_(columns_ * words_, 0)
    {
    }

    std::size_t columns() const { return columns_; }
    std::size_t rows() const { return rows_; }
    std::size_t total() const { return columns_ * rows_; }

    void clear() { std::fill(bits_.begin(), bits_.end(), 0); }

    bool at(std::size_t col, std::size_t row) const
    {
        return (bits_[col * words_ + row / 64] >> (row % 64)) & 1ULL;
    }

    /// Sets rows [first, last] (inclusive) in one column.
    void set_span(std::size_t col, std::size_t first, std::size_t last)
    {
        std::uint64_t* w = bits_.data() + col * words_;
        for (std::size_t wi = first / 64; wi <= last / 64; ++wi) {
            const std::size_t lo = wi == first / 64 ? first % 64 : 0;
            const std::size_t hi = wi == last / 64 ? last % 64 : 63;
            const std::uint64_t upper = hi == 63 ? ~0ULL : ((1ULL << (hi + 1)) - 1);
            const std::uint64_t lower = (1ULL << lo) - 1;
            w[wi] |= upper & ~lower;
        }
    }

    std::size_t covered() const
    {
        std::size_t n = 0;
        for (auto w : bits_) n += static_cast<std::size_t>(std::popcount(w));
        return n;
    }

    double fraction() const { return total() == 0 ? 0.0 : static_cast<double>(covered()) / static_cast<double>(total()); }

private:
    std::size_t columns_ = 0;
    std::size_t rows_ = 0;
    std::size_t words_ = 0;
    std::vector<std::uint64_t> bits_;
};

/// Marks every cell whose center lies inside or on the triangle.
inline void rasterize_triangle(const Triangle& tri, double pixel_size, CoverageGrid& grid)
{
    constexpr double eps = 1e-9;
    const double min_x = std::min({tri[0].x, tri[1].x, tri[2].x});
    const double max_x = std::max({tri[0].x, tri[1].x, tri[2].x});
    const double first_col = std::ceil((min_x - eps) / pixel_size - 0.5);
    const double last_col = std::floor((max_x + eps) / pixel_size - 0.5);
    if (last_col < 0.0 || first_col > static_cast<double>(grid.columns()) - 1.0) return;
    const auto c0 = static_cast<std::size_t>(std::max(first_col, 0.0));
    const auto c1 = static_cast<std::size_t>(std::min(last_col, static_cast<double>(grid.columns()) - 1.0));
    const double max_row = static_cast<double>(grid.rows()) - 1.0;

    for (std::size_t c = c0; c <= c1; ++c) {
        const double x = (static_cast<double>(c) + 0.5) * pixel_size;
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (int e = 0; e < 3; ++e) {
            const Point& a = tri[e];
            const Point& b = tri[(e + 1) % 3];
            const double ex0 = std::min(a.x, b.x), ex1 = std::max(a.x, b.x);
            if (x < ex0 - eps || x > ex1 + eps) continue;
            if (ex1 - ex0 <= eps) {
                lo = std::min({lo, a.y, b.y});
                hi = std::max({hi, a.y, b.y});
                continue;
            }
            const double t = std::clamp((x - a.x) / (b.x - a.x), 0.0, 1.0);
            const double y = a.y + t * (b.y - a.y);
            lo = std::min(lo, y);
            hi = std::max(hi, y);
        }
        if (lo > hi) continue;
        const double r0 = std::max(std::ceil((lo - eps) / pixel_size - 0.5), 0.0);
        const double r1 = std::min(std::floor((hi + eps) / pixel_size - 0.5), max_row);
        if (r0 > r1) continue;
        grid.set_span(c, static_cast<std::size_t>(r0), static_cast<std::size_t>(r1));
    }
}

/// Reusable rasterizer; keeps one grid allocation across evaluations.
class CoverageRaster {
public:
    explicit CoverageRaster(const FarmLayout& layout) : layout_(layout), grid_(layout) {}

    double evaluate(std::span<const CameraPose> poses, const CameraSpec& spec)
    {
        grid_.clear();
        for (const auto& p : poses) rasterize_triangle(fov_triangle(p, spec), layout_.pixel_size, grid_);
        return grid_.fraction();
    }

    const CoverageGrid& grid() const { return grid_; }

private:
    FarmLayout layout_;
    CoverageGrid grid_;
};

inline double coverage_fraction(std::span<const CameraPose> poses, const CameraSpec& spec, const FarmLayout& layout)
{
    CoverageRaster raster(layout);
    return raster.evaluate(poses, spec);
}

using Descriptor = std::vector<std::uint8_t>;

inline Descriptor beam_usage_descriptor(std::span<const CameraPose> poses, const FarmLayout& layout)
{
    Descriptor bits(layout.beams.size(), 0);
    for (const auto& p : poses) {
        if (p.beam_index >= bits.size())
            throw ValidationError("beam index " + std::to_string(p.beam_index) + " out of range");
        bits[p.beam_index] = 1;
    }
    return bits;
}

inline std::string to_string(const Descriptor& d)
{
    std::string s;
    s.reserve(d.size());
    for (auto b : d) s.push_back(b ? '1' : '0');
    return s;
}

inline std::size_t popcount(const Descriptor& d)
{
    return static_cast<std::size_t>(std::count(d.begin(), d.end(), std::uint8_t{1}));
}

/// Lower bound on cameras: farm area over circular-sector area, rounded up.
inline int min_camera_estimate(const FarmLayout& layout, const CameraSpec& spec)
{
    const double sector = spec.fov_deg / 360.0 * std::numbers::pi * spec.depth * spec.depth;
    const double ratio = layout.area() / sector;
    return std::max(1, static_cast<int>(std::ceil(ratio - 1e-9)));
}

/// Coverage and descriptor evaluation of genotypes for one layout/camera pair.
/// Not thread-safe (owns a raster); make one per worker.
class PlacementProblem {
public:
    PlacementProblem(FarmLayout layout, CameraSpec spec) : layout_(std::move(layout)), spec_(spec), raster_(layout_)
    {
        layout_.validate();
        spec_.validate();
    }

    std::size_t dimension() const { return 3 * static_cast<std::size_t>(spec_.count); }
    const FarmLayout& layout() const { return layout_; }
    const CameraSpec& camera() const { return spec_; }

    double fitness(std::span<const double> genes)
    {
        const auto poses = decode_genotype(genes, layout_, spec_);
        return raster_.evaluate(poses, spec_);
    }

    Descriptor descriptor(std::span<const double> genes) const
    {
        return beam_usage_descriptor(decode_genotype(genes, layout_, spec_), layout_);
    }

private:
    FarmLayout layout_;
    CameraSpec spec_;
    CoverageRaster raster_;
};

}  // namespace farmintel::geometry
