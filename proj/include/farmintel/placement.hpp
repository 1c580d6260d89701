#pragma once

// Camera placement: ties the geometry model to the optimizers and handles the
// layout file, solution reports, archive export and SVG renders.

#include "farmintel/geometry.hpp"
#include "farmintel/optimize.hpp"

#include <json.hpp>

#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

namespace farmintel::placement {

using geometry::CameraPose;
using geometry::CameraSpec;
using geometry::FarmLayout;
using nlohmann::json;

/// Optimizer settings tuned for coverage problems; see README for the rationale.
inline optimize::OptimizerConfig default_config(const CameraSpec& spec, std::uint64_t seed)
{
    optimize::OptimizerConfig c;
    c.dim = 3 * spec.count;
    c.seed = seed;
    c.max_evaluations = 200000;
    c.cmaes.sigma0 = 0.3;
    c.cmaes.population = 1500;
    c.map_elites.batch = 64;
    c.map_elites.init_random = 2000;
    c.map_elites.mutation_sigma = 0.1;
    c.map_elites.mutation_rate = 1.0 / 6.0;
    return c;
}

struct LayoutFile {
    FarmLayout layout;
    CameraSpec camera;
};

inline LayoutFile parse_layout(const json& j)
{
    try {
        LayoutFile f;
        f.layout.length = j.at("length_m").get<double>();
        f.layout.width = j.at("width_m").get<double>();
        f.layout.pixel_size = j.at("pixel_size_m").get<double>();
        for (const auto& b : j.at("beams")) {
            const auto axis = b.at("axis").get<std::string>();
            geometry::Beam beam;
            if (axis == "horizontal")
                beam.axis = geometry::BeamAxis::horizontal;
            else if (axis == "vertical")
                beam.axis = geometry::BeamAxis::vertical;
            else
                throw ValidationError("beam axis must be 'horizontal' or 'vertical', got '" + axis + "'");
            beam.offset = b.at("offset_m").get<double>();
            f.layout.beams.push_back(beam);
        }
        const auto& cam = j.at("camera");
        f.camera.fov_deg = cam.at("fov_deg").get<double>();
        f.camera.depth = cam.at("depth_m").get<double>();
        f.camera.count = cam.at("count").get<int>();
        f.layout.validate();
        f.camera.validate();
        return f;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("layout file: ") + e.what());
    }
}

inline json layout_to_json(const FarmLayout& layout, const CameraSpec& camera)
{
    json beams = json::array();
    for (const auto& b : layout.beams)
        beams.push_back({{"axis", b.axis == geometry::BeamAxis::horizontal ? "horizontal" : "vertical"},
                         {"offset_m", b.offset}});
    return {{"length_m", layout.length},
            {"width_m", layout.width},
            {"pixel_size_m", layout.pixel_size},
            {"beams", beams},
            {"camera", {{"fov_deg", camera.fov_deg}, {"depth_m", camera.depth}, {"count", camera.count}}}};
}

struct SolutionReport {
    std::string algorithm;
    optimize::Genotype genotype;
    std::vector<CameraPose> poses;
    double fitness = 0.0;
    std::int64_t evaluations = 0;
    double wall_seconds = 0.0;
    std::uint64_t seed = 0;
};

inline json poses_to_json(const std::vector<CameraPose>& poses)
{
    json arr = json::array();
    for (const auto& p : poses)
        arr.push_back({{"x_m", p.x}, {"y_m", p.y}, {"orientation_deg", p.orientation_deg}, {"beam_index", p.beam_index}});
    return arr;
}

/// Wall time is left out so identical runs export byte-identical reports.
inline json report_to_json(const SolutionReport& r, const FarmLayout& layout)
{
    return {{"algorithm", r.algorithm},
            {"seed", r.seed},
            {"evaluations", r.evaluations},
            {"fitness", r.fitness},
            {"genotype", r.genotype},
            {"descriptor", geometry::to_string(geometry::beam_usage_descriptor(r.poses, layout))},
            {"poses", poses_to_json(r.poses)}};
}

inline SolutionReport run_cmaes(const FarmLayout& layout, const CameraSpec& spec, const optimize::OptimizerConfig& config)
{
    auto factory = [&] {
        return [problem = std::make_shared<geometry::PlacementProblem>(layout, spec)](std::span<const double> g) {
            return problem->fitness(g);
        };
    };
    auto res = optimize::cmaes_run_with(factory, config);
    SolutionReport r;
    r.algorithm = "cmaes";
    r.genotype = res.best;
    r.poses = geometry::decode_genotype(res.best, layout, spec);
    r.fitness = res.fitness;
    r.evaluations = res.evaluations;
    r.wall_seconds = res.wall_seconds;
    r.seed = res.seed;
    return r;
}

inline optimize::MapElitesResult run_map_elites(const FarmLayout& layout, const CameraSpec& spec,
                                                const optimize::OptimizerConfig& config)
{
    auto factory = [&] {
        return [problem = std::make_shared<geometry::PlacementProblem>(layout, spec)](std::span<const double> g) {
            return problem->fitness(g);
        };
    };
    auto descriptor = [&](std::span<const double> g) {
        return geometry::beam_usage_descriptor(geometry::decode_genotype(g, layout, spec), layout);
    };
    return optimize::map_elites_run_with(factory, descriptor, config);
}

inline std::string format_double(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// One row per filled cell, ordered by descriptor: `descriptor,fitness,g0,...`.
inline std::string archive_to_csv(const optimize::Archive& archive)
{
    std::ostringstream out;
    out << "descriptor,fitness";
    if (!archive.empty())
        for (std::size_t i = 0; i < archive.cells().begin()->second.genotype.size(); ++i) out << ",g" << i;
    out << '\n';
    for (const auto& [key, elite] : archive.cells()) {
        out << geometry::to_string(key) << ',' << format_double(elite.fitness);
        for (double g : elite.genotype) out << ',' << format_double(g);
        out << '\n';
    }
    return out.str();
}

/// Elites sorted by fitness (descending), ties by descriptor.
inline std::vector<std::pair<optimize::Descriptor, optimize::Elite>> top_elites(const optimize::Archive& archive,
                                                                                std::size_t k)
{
    std::vector<std::pair<optimize::Descriptor, optimize::Elite>> all(archive.cells().begin(), archive.cells().end());
    std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.second.fitness > b.second.fitness; });
    if (all.size() > k) all.resize(k);
    return all;
}

/// Farm outline, beams and translucent field-of-view triangles clipped to the farm.
inline std::string render_svg(const FarmLayout& layout, const CameraSpec& spec, const std::vector<CameraPose>& poses,
                              const std::string& title)
{
    constexpr double scale = 40.0;  // px per meter
    constexpr double margin = 20.0;
    const double w = layout.length * scale + 2 * margin;
    const double h = layout.width * scale + 2 * margin + 20;
    // SVG y grows downward; flip so the farm origin sits bottom-left
    auto px = [&](double x) { return margin + x * scale; };
    auto py = [&](double y) { return margin + 20 + (layout.width - y) * scale; };

    std::ostringstream s;
    s.precision(6);
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n";
    s << "<defs><clipPath id=\"farm\"><rect x=\"" << px(0) << "\" y=\"" << py(layout.width) << "\" width=\""
      << layout.length * scale << "\" height=\"" << layout.width * scale << "\"/></clipPath></defs>\n";
    s << "<text x=\"" << margin << "\" y=\"16\" font-family=\"sans-serif\" font-size=\"13\">" << title << "</text>\n";
    s << "<rect x=\"" << px(0) << "\" y=\"" << py(layout.width) << "\" width=\"" << layout.length * scale
      << "\" height=\"" << layout.width * scale << "\" fill=\"#ffffff\" stroke=\"#000\" stroke-width=\"2\"/>\n";
    for (const auto& b : layout.beams) {
        if (b.axis == geometry::BeamAxis::horizontal)
            s << "<line x1=\"" << px(0) << "\" y1=\"" << py(b.offset) << "\" x2=\"" << px(layout.length) << "\" y2=\""
              << py(b.offset) << "\" stroke=\"#8a6d3b\" stroke-width=\"3\"/>\n";
        else
            s << "<line x1=\"" << px(b.offset) << "\" y1=\"" << py(0) << "\" x2=\"" << px(b.offset) << "\" y2=\""
              << py(layout.width) << "\" stroke=\"#8a6d3b\" stroke-width=\"3\"/>\n";
    }
    s << "<g clip-path=\"url(#farm)\">\n";
    for (const auto& p : poses) {
        const auto tri = geometry::fov_triangle(p, spec);
        s << "<polygon points=\"";
        for (const auto& v : tri) s << px(v.x) << ',' << py(v.y) << ' ';
        s << "\" fill=\"#1f77b4\" fill-opacity=\"0.3\" stroke=\"#1f77b4\"/>\n";
    }
    s << "</g>\n";
    for (const auto& p : poses)
        s << "<circle cx=\"" << px(p.x) << "\" cy=\"" << py(p.y) << "\" r=\"5\" fill=\"#d62728\"/>\n";
    s << "</svg>\n";
    return s.str();
}

}  // namespace farmintel::placement
