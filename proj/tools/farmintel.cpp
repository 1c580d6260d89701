// farmintel: command-line entry point for every module.
//
// Exit codes: 0 success, 1 validation error (bad input/config/arguments),
// 2 runtime fault.

#include "farmintel/alerting.hpp"
#include "farmintel/config.hpp"
#include "farmintel/daemon.hpp"
#include "farmintel/eggcount.hpp"
#include "farmintel/envforecast.hpp"
#include "farmintel/io.hpp"
#include "farmintel/placement.hpp"
#include "farmintel/production.hpp"
#include "farmintel/recommend.hpp"
#include "farmintel/webhook.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <atomic>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace farmintel;

namespace {

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop.store(true); }

struct Globals {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir = ".";
    std::string log_level = "info";
};

struct Run {
    config::AppConfig cfg;
    config::RunManifest manifest;
    fs::path out;

    void write_text(const fs::path& path, const std::string& text)
    {
        if (path.has_parent_path()) fs::create_directories(path.parent_path());
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        if (!f) throw RuntimeFault("cannot write " + path.string());
        f << text;
        f.close();
        manifest.add_output(path.string());
    }

    void input(const std::string& path)
    {
        if (!path.empty()) manifest.add_input(path);
    }

    void finish()
    {
        const auto path = out / ("manifest-" + manifest.command + ".json");
        fs::create_directories(out);
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        f << config::manifest_to_json(manifest).dump(2) << '\n';
        if (!f) throw RuntimeFault("cannot write " + path.string());
    }
};

Run start(const Globals& g, const std::string& command)
{
    Run r;
    r.cfg = g.config_path.empty() ? config::parse_config(json::object()) : config::load_config(g.config_path);
    if (g.seed) r.cfg.seed = *g.seed;
    r.out = g.out_dir;
    fs::create_directories(r.out);
    r.manifest.command = command;
    r.manifest.seed = r.cfg.seed;
    r.manifest.config_hash = config::config_hash(r.cfg);
    if (!g.config_path.empty()) r.manifest.add_input(g.config_path);
    return r;
}

json read_json_file(const std::string& path)
{
    const auto text = io::read_text(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

void print_warnings(const std::vector<std::string>& w)
{
    for (const auto& s : w) spdlog::warn("{}", s);
}

// ---------------------------------------------------------------------------

struct OptimizeArgs {
    std::string layout;
    std::string algorithm;
    std::optional<std::int64_t> evaluations;
};

int cmd_optimize(const Globals& g, const OptimizeArgs& a)
{
    auto run = start(g, "optimize");
    placement::LayoutFile lf{geometry::reference_layout(), geometry::reference_camera()};
    const std::string layout_path = !a.layout.empty() ? a.layout : run.cfg.layout;
    if (!layout_path.empty()) {
        lf = placement::parse_layout(read_json_file(layout_path));
        run.input(layout_path);
    }
    auto oc = placement::default_config(lf.camera, derive_seed(run.cfg.seed, "optimize"));
    const auto& o = run.cfg.optimizer;
    oc.max_evaluations = a.evaluations.value_or(o.max_evaluations);
    oc.cmaes.population = o.population;
    oc.cmaes.sigma0 = o.sigma0;
    oc.map_elites.batch = o.batch;
    oc.map_elites.init_random = o.init_random;
    oc.map_elites.mutation_sigma = o.mutation_sigma;
    oc.map_elites.mutation_rate = o.mutation_rate;
    oc.threads = o.threads;
    const std::string algo = a.algorithm.empty() ? o.algorithm : a.algorithm;
    if (algo != "cmaes" && algo != "map-elites") throw ValidationError("--algo must be cmaes or map-elites");

    spdlog::info("minimum camera estimate: {}", geometry::min_camera_estimate(lf.layout, lf.camera));
    placement::SolutionReport best;
    if (algo == "cmaes") {
        best = placement::run_cmaes(lf.layout, lf.camera, oc);
        spdlog::info("cmaes finished in {:.1f} s", best.wall_seconds);
    } else {
        const auto res = placement::run_map_elites(lf.layout, lf.camera, oc);
        spdlog::info("map-elites filled {} cells in {:.1f} s", res.archive.size(), res.wall_seconds);
        run.write_text(run.out / "archive.csv", placement::archive_to_csv(res.archive));
        json top = json::array();
        for (const auto& [key, elite] : placement::top_elites(res.archive, 5)) {
            const auto poses = geometry::decode_genotype(elite.genotype, lf.layout, lf.camera);
            top.push_back({{"descriptor", geometry::to_string(key)}, {"fitness", elite.fitness}, {"poses", placement::poses_to_json(poses)}});
        }
        run.write_text(run.out / "top_elites.json", top.dump(2) + "\n");
        const auto [key, elite] = res.archive.best();
        best.algorithm = "map-elites";
        best.genotype = elite.genotype;
        best.poses = geometry::decode_genotype(elite.genotype, lf.layout, lf.camera);
        best.fitness = elite.fitness;
        best.evaluations = res.evaluations;
        best.seed = res.seed;
    }
    run.write_text(run.out / "solution.json", placement::report_to_json(best, lf.layout).dump(2) + "\n");
    char title[96];
    std::snprintf(title, sizeof title, "%s: coverage %.4f", algo.c_str(), best.fitness);
    run.write_text(run.out / "placement.svg", placement::render_svg(lf.layout, lf.camera, best.poses, title));
    std::cout << "algorithm " << algo << "\ncoverage " << placement::format_double(best.fitness) << "\nevaluations "
              << best.evaluations << "\n";
    for (const auto& p : best.poses)
        std::cout << "camera x=" << p.x << " y=" << p.y << " orientation=" << p.orientation_deg << " beam=" << p.beam_index
                  << "\n";
    run.finish();
    return 0;
}

// ---------------------------------------------------------------------------

struct ForecastEnvArgs {
    std::string data;
    std::string target = "temp";
    int lookback = 3;
    std::string profile = "on";
    int horizon = 3;
    bool grid = false;
};

int cmd_forecast_env(const Globals& g, const ForecastEnvArgs& a)
{
    auto run = start(g, "forecast-env");
    run.input(a.data);
    const auto readings = io::read_sensors(a.data);
    print_warnings(readings.warnings);
    if (a.profile != "on" && a.profile != "off") throw ValidationError("--profile must be on or off");
    if (a.horizon < 1) throw ValidationError("--horizon must be at least 1");
    const auto series = envforecast::aggregate_hourly(readings.rows);
    if (series.empty()) throw ValidationError("no sensor readings in " + a.data);
    spdlog::info("{} hours, {} gaps", series.size(), series.gap_count());

    if (a.grid) {
        const auto rows = envforecast::forecast_grid(series);
        const auto table = envforecast::format_grid(rows);
        std::cout << table;
        run.write_text(run.out / "forecast_grid.txt", table);
    }

    const auto target = envforecast::parse_variable(a.target);
    const auto model = envforecast::fit_model(series, target, a.lookback, a.profile == "on", series.first_hour(), series.end_hour());
    if (model.rank_deficient) spdlog::warn("design matrix is rank deficient; minimum-norm weights used");
    const Timestamp t0 = series.end_hour();
    const auto values = envforecast::forecast_iterative(model, series, t0, a.horizon);
    json fc{{"target", envforecast::to_string(target)}, {"start", format_iso8601(t0)}, {"values", values}};
    run.write_text(run.out / ("model-" + std::string(envforecast::to_string(target)) + ".json"),
                   envforecast::model_to_json(model).dump(2) + "\n");
    run.write_text(run.out / "forecast-env.json", fc.dump(2) + "\n");
    for (std::size_t k = 0; k < values.size(); ++k)
        std::cout << format_iso8601(t0 + static_cast<Timestamp>(k) * kSecondsPerHour) << " " << placement::format_double(values[k]) << "\n";
    run.finish();
    return 0;
}

// ---------------------------------------------------------------------------

int cmd_build_band(const Globals& g, const std::string& indicators, const std::string& out_file)
{
    auto run = start(g, "alerts-build-band");
    run.input(indicators);
    const auto in = io::read_indicators(indicators);
    print_warnings(in.warnings);
    std::vector<std::string> channels;
    for (const auto& s : in.rows)
        if (std::find(channels.begin(), channels.end(), s.channel) == channels.end()) channels.push_back(s.channel);
    std::sort(channels.begin(), channels.end());
    if (channels.empty()) throw ValidationError("no indicator samples in " + indicators);
    std::vector<alerting::DynamicBand> bands;
    for (const auto& c : channels) bands.push_back(alerting::build_dynamic_band(in.rows, c, run.cfg.band));
    run.write_text(out_file.empty() ? run.out / "band.json" : fs::path(out_file), alerting::bands_to_json(bands).dump() + "\n");
    std::cout << "bands built for " << channels.size() << " channel(s)\n";
    run.finish();
    return 0;
}

struct AlertsRunArgs {
    std::string env, indicators, band, webhook, log, temp_model, hum_model;
    bool follow = false;
    int poll_ms = 500;
};

int cmd_alerts_run(const Globals& g, const AlertsRunArgs& a)
{
    auto run = start(g, "alerts-run");
    if (a.env.empty() && a.indicators.empty()) throw ValidationError("alerts run needs --env and/or --indicators");
    daemon::Options opt;
    opt.env_path = a.env;
    opt.indicator_path = a.indicators;
    opt.thresholds = run.cfg.thresholds;
    opt.forecast_horizon = run.cfg.forecast_horizon;
    opt.follow = a.follow;
    opt.poll_interval = std::chrono::milliseconds(a.poll_ms);
    opt.stop = &g_stop;
    if (!a.band.empty()) {
        opt.bands = alerting::bands_from_json(read_json_file(a.band));
        run.input(a.band);
    } else if (!a.indicators.empty()) {
        throw ValidationError("--band is required with --indicators");
    }
    if (a.temp_model.empty() != a.hum_model.empty())
        throw ValidationError("--temp-model and --hum-model must be given together");
    if (!a.temp_model.empty()) {
        opt.temp_model = envforecast::model_from_json(read_json_file(a.temp_model));
        opt.hum_model = envforecast::model_from_json(read_json_file(a.hum_model));
        run.input(a.temp_model);
        run.input(a.hum_model);
    }

    alerting::SinkConfig sc;
    sc.log_path = a.log.empty() ? (run.out / "alerts.jsonl").string() : a.log;
    sc.dead_letter_path = fs::path(run.cfg.dead_letter).is_absolute() ? run.cfg.dead_letter : (run.out / run.cfg.dead_letter).string();
    sc.dedup_minutes = run.cfg.dedup_minutes;
    sc.retry.max_attempts = run.cfg.webhook.max_attempts;
    sc.retry.base_delay = std::chrono::milliseconds(run.cfg.webhook.base_delay_ms);
    sc.retry.max_delay = std::chrono::milliseconds(run.cfg.webhook.max_delay_ms);
    const std::string url = a.webhook.empty() ? run.cfg.webhook.url : a.webhook;
    alerting::Transport transport;
    if (!url.empty()) transport = http::JsonPoster(url);
    if (fs::exists(sc.log_path)) spdlog::info("appending to existing alert log {}", sc.log_path);

    std::signal(SIGTERM, on_signal);
    std::signal(SIGINT, on_signal);
    alerting::AlertSink sink(sc, transport);
    const auto summary = daemon::run(opt, sink);
    if (!a.follow)
        for (const auto& p : {a.env, a.indicators})
            if (!p.empty() && fs::exists(p)) run.input(p);
    run.manifest.add_output(sc.log_path);
    if (fs::exists(sc.dead_letter_path)) run.manifest.add_output(sc.dead_letter_path);
    run.finish();
    std::cout << "env rows " << summary.env_rows << "\nindicator rows " << summary.indicator_rows << "\nalerts "
              << summary.alerts << "\nsuppressed " << summary.suppressed << "\nundelivered " << summary.dead_lettered << "\n";
    if (!summary.unavailable_streams.empty()) {
        for (const auto& s : summary.unavailable_streams) spdlog::error("stream {} could not be read", s);
        return 2;
    }
    return 0;
}

// ---------------------------------------------------------------------------

std::vector<eggcount::FrameDetections> read_detection_log(const std::string& path)
{
    auto f = io::open_input(path);
    std::vector<eggcount::FrameDetections> frames;
    std::string line;
    std::size_t no = 0;
    while (std::getline(f, line)) {
        ++no;
        if (io::trim(line).empty()) continue;
        frames.push_back(eggcount::parse_frame_line(line, no));
    }
    if (frames.empty()) spdlog::warn("{}: detection log is empty", path);
    return frames;
}

int cmd_eggs_calibrate(const Globals& g, const std::string& log, const std::string& out_file)
{
    auto run = start(g, "eggs-calibrate");
    run.input(log);
    std::vector<eggcount::Detection> dets;
    for (const auto& f : read_detection_log(log))
        for (const auto& d : f.detections) dets.push_back(d);
    const auto calib = eggcount::calibrate(dets, run.cfg.calibration);
    run.write_text(out_file.empty() ? run.out / "calibration.json" : fs::path(out_file),
                   eggcount::calibration_to_json(calib).dump(2) + "\n");
    for (std::size_t i = 0; i < calib.lines.size(); ++i)
        std::cout << calib.rois[i].label << " spring at x=" << calib.lines[i].x_at_mid << " (votes " << calib.lines[i].votes
                  << ")\n";
    run.finish();
    return 0;
}

int cmd_eggs_count(const Globals& g, const std::string& log, const std::string& calib_path)
{
    auto run = start(g, "eggs-count");
    run.input(log);
    run.input(calib_path);
    const auto calib = eggcount::calibration_from_json(read_json_file(calib_path));
    eggcount::CountingSession session(calib, run.cfg.tracker);
    for (const auto& f : read_detection_log(log)) session.process(f);
    json counts = json::object();
    for (const auto& b : session.bins()) {
        counts[b.label] = b.tally;
        std::cout << b.label << " " << b.tally << "\n";
    }
    std::cout << "total " << session.total() << "\n";
    run.write_text(run.out / "counts.json", json{{"counts", counts}, {"total", session.total()}}.dump(2) + "\n");
    run.finish();
    return 0;
}

// ---------------------------------------------------------------------------

struct ForecastProdArgs {
    std::string production, feed, indicators, env;
    bool evaluate = false;
};

int cmd_forecast_prod(const Globals& g, const ForecastProdArgs& a)
{
    auto run = start(g, "forecast-prod");
    run.input(a.production);
    const auto prod = io::read_production(a.production);
    print_warnings(prod.warnings);
    if (prod.rows.empty()) throw ValidationError("no production records in " + a.production);

    std::map<production::Day, production::EnvDay> env;
    if (!a.env.empty()) {
        run.input(a.env);
        const auto s = io::read_sensors(a.env);
        print_warnings(s.warnings);
        env = production::env_days(envforecast::aggregate_hourly(s.rows));
    }
    std::map<production::Day, production::IndicatorDay> ind;
    if (!a.indicators.empty()) {
        run.input(a.indicators);
        const auto s = io::read_indicators(a.indicators);
        print_warnings(s.warnings);
        ind = production::indicator_days(s.rows, run.cfg.schedule);
    }
    const auto history = production::FarmHistory::from(prod.rows, env, ind);
    production::FeatureMask mask = production::default_mask();
    std::string feature_set = "production+sensor+audio/video";
    if (env.empty() || ind.empty()) {
        mask = env.empty() ? production::production_mask() : production::environment_mask();
        feature_set = env.empty() ? "production" : "production+sensor";
        if (!ind.empty()) spdlog::warn("indicator features need environment data too; using the {} feature set", feature_set);
        else spdlog::warn("missing data sources; using the {} feature set", feature_set);
    }

    const production::Day first = prod.rows.front().date;
    const production::Day last = prod.rows.back().date;
    const auto samples = production::build_samples(history, mask, first, last);
    if (samples.size() <= static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true)))
        throw ValidationError("not enough complete days to fit the production model (" + std::to_string(samples.size()) + ")");
    const auto model = production::fit_production_model(samples, mask);
    const production::Day today = last + 1;
    const auto fv = production::build_features(history, today, mask);
    const double flock = *fv.values[39];
    const auto p = production::predict_productivity(model.predict(fv), flock);
    if (p.out_of_range) spdlog::warn("predicted per-bird rate {:.3f} lies outside [0,1]", p.per_bird);

    json out{{"forecast_day", format_date(today)},
             {"feature_set", feature_set},
             {"eggs_10day_avg", p.eggs_10day_avg},
             {"per_bird", p.per_bird},
             {"per_bird_out_of_range", p.out_of_range},
             {"model", production::model_to_json(model)}};

    if (!a.feed.empty()) {
        run.input(a.feed);
        const auto feed = io::read_feed(a.feed);
        print_warnings(feed.warnings);
        production::FeedLedger ledger{feed.rows, run.cfg.cycle_start.value_or(first)};
        const auto cost = production::cost_per_egg(ledger, last, p.eggs_10day_avg);
        out["daily_feed_kg"] = cost.daily_feed_kg;
        out["daily_feed_cost"] = cost.daily_feed_cost;
        out["cost_per_egg"] = cost.cost_per_egg ? json(*cost.cost_per_egg) : json(nullptr);
        if (!cost.note.empty()) out["cost_note"] = cost.note;
    }
    std::cout << "forecast day " << format_date(today) << "\n10-day average eggs/day " << p.eggs_10day_avg
              << "\nper-bird rate " << p.per_bird << "\n";
    if (out.contains("cost_per_egg"))
        std::cout << "cost per egg " << (out["cost_per_egg"].is_null() ? std::string("undefined") : out["cost_per_egg"].dump()) << "\n";

    if (a.evaluate) {
        if (env.empty() || ind.empty()) throw ValidationError("--evaluate needs --env and --indicators for the full ablation");
        const auto rows = production::ablation(history, first, last);
        const auto table = production::format_ablation(rows);
        std::cout << table;
        run.write_text(run.out / "ablation.txt", table);
    }
    run.write_text(run.out / "forecast-prod.json", out.dump(2) + "\n");
    run.finish();
    return 0;
}

// ---------------------------------------------------------------------------

int cmd_recommend(const Globals& g, const std::string& context, const std::string& fixture, const std::string& url)
{
    auto run = start(g, "recommend");
    auto ctx = recommend::Context{};
    if (!context.empty()) {
        run.input(context);
        ctx = recommend::parse_context(read_json_file(context));
    }
    if (!fixture.empty()) {
        run.input(fixture);
        ctx.weather = recommend::parse_weather(read_json_file(fixture));
    } else if (!url.empty()) {
        try {
            ctx.weather = recommend::parse_weather(json::parse(http::get_text(url)));
        } catch (const std::exception& e) {
            spdlog::warn("weather unavailable ({}); continuing without it", e.what());
        }
    }
    if (!ctx.now && run.cfg.clock.mode == "fixed") ctx.now = run.cfg.clock.fixed;
    const auto out = recommend::recommend(ctx, run.cfg.rules);
    const auto text = recommend::output_to_json(out).dump(2) + "\n";
    std::cout << text;
    run.write_text(run.out / "recommendations.json", text);
    run.finish();
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    auto logger = spdlog::stderr_color_mt("farmintel");
    spdlog::set_default_logger(logger);

    CLI::App app{"Farm intelligence toolkit"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config_path, "JSON configuration file");
    app.add_option("--seed", g.seed, "Global random seed (overrides the config)");
    app.add_option("--out", g.out_dir, "Output directory");
    app.add_option("--log-level", g.log_level, "trace|debug|info|warn|error|off")
        ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "critical", "off"}));
    app.fallthrough();

    std::function<int()> action;

    OptimizeArgs oa;
    auto* opt = app.add_subcommand("optimize", "Optimize camera placement");
    opt->add_option("--layout", oa.layout, "Layout JSON (default: reference farm)");
    opt->add_option("--algo,--algorithm", oa.algorithm, "cmaes or map-elites");
    opt->add_option("--evals,--evaluations", oa.evaluations, "Evaluation budget");
    opt->callback([&] { action = [&] { return cmd_optimize(g, oa); }; });

    ForecastEnvArgs fa;
    auto* fe = app.add_subcommand("forecast-env", "Forecast farm temperature or humidity");
    fe->add_option("--data", fa.data, "Sensor CSV")->required();
    fe->add_option("--target", fa.target, "temp or hum")->check(CLI::IsMember({"temp", "hum", "temperature", "humidity"}));
    fe->add_option("--lookback", fa.lookback, "Look-back hours (1-5)")->check(CLI::Range(1, 5));
    fe->add_option("--profile", fa.profile, "on or off")->check(CLI::IsMember({"on", "off"}));
    fe->add_option("--horizon", fa.horizon, "Hours to forecast")->check(CLI::PositiveNumber);
    fe->add_flag("--grid", fa.grid, "Also run the configuration grid");
    fe->callback([&] { action = [&] { return cmd_forecast_env(g, fa); }; });

    auto* alerts = app.add_subcommand("alerts", "Alert tools");
    alerts->require_subcommand(1);
    std::string bb_ind, bb_out;
    auto* bb = alerts->add_subcommand("build-band", "Build time-of-day indicator bands");
    bb->add_option("--indicators", bb_ind, "Indicator CSV")->required();
    bb->add_option("--out", bb_out, "Band file");
    bb->callback([&] { action = [&] { return cmd_build_band(g, bb_ind, bb_out); }; });

    AlertsRunArgs ra;
    auto* ar = alerts->add_subcommand("run", "Check streams and emit alerts");
    ar->add_option("--env", ra.env, "Sensor CSV");
    ar->add_option("--indicators", ra.indicators, "Indicator CSV");
    ar->add_option("--band", ra.band, "Band file");
    ar->add_option("--webhook", ra.webhook, "Webhook URL (http://)");
    ar->add_option("--log", ra.log, "Alert JSONL log (default <out>/alerts.jsonl)");
    ar->add_option("--temp-model", ra.temp_model, "Temperature model JSON for forecast alerts");
    ar->add_option("--hum-model", ra.hum_model, "Humidity model JSON for forecast alerts");
    ar->add_option("--poll-ms", ra.poll_ms, "Polling interval in follow mode")->check(CLI::PositiveNumber);
    ar->add_flag("--follow", ra.follow, "Keep tailing the inputs until SIGTERM");
    ar->callback([&] { action = [&] { return cmd_alerts_run(g, ra); }; });

    auto* eggs = app.add_subcommand("eggs", "Egg counting tools");
    eggs->require_subcommand(1);
    std::string ec_log, ec_out;
    auto* ec = eggs->add_subcommand("calibrate", "Recover bin regions from a calibration run");
    ec->add_option("--log", ec_log, "Detection JSONL")->required();
    ec->add_option("--out", ec_out, "Calibration file");
    ec->callback([&] { action = [&] { return cmd_eggs_calibrate(g, ec_log, ec_out); }; });
    std::string cn_log, cn_calib;
    auto* cn = eggs->add_subcommand("count", "Count eggs per weight class");
    cn->add_option("--log", cn_log, "Detection JSONL")->required();
    cn->add_option("--calib", cn_calib, "Calibration file")->required();
    cn->callback([&] { action = [&] { return cmd_eggs_count(g, cn_log, cn_calib); }; });

    ForecastProdArgs pa;
    auto* fp = app.add_subcommand("forecast-prod", "Forecast egg production and feed cost");
    fp->add_option("--production", pa.production, "Production CSV")->required();
    fp->add_option("--feed", pa.feed, "Feed CSV");
    fp->add_option("--indicators", pa.indicators, "Indicator CSV");
    fp->add_option("--env", pa.env, "Sensor CSV for the environment features");
    fp->add_flag("--evaluate", pa.evaluate, "Print the data-source ablation table");
    fp->callback([&] { action = [&] { return cmd_forecast_prod(g, pa); }; });

    std::string rc_ctx, rc_fix, rc_url;
    auto* rc = app.add_subcommand("recommend", "Rule-based recommendations");
    rc->add_option("--context", rc_ctx, "Context JSON");
    auto* fix = rc->add_option("--weather-fixture", rc_fix, "Weather JSON file");
    rc->add_option("--weather-url", rc_url, "Weather endpoint (http://)")->excludes(fix);
    rc->callback([&] { action = [&] { return cmd_recommend(g, rc_ctx, rc_fix, rc_url); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }
    spdlog::set_level(spdlog::level::from_str(g.log_level));
    try {
        return action ? action() : 1;
    } catch (const ValidationError& e) {
        spdlog::error("{}", e.what());
        return 1;
    } catch (const RuntimeFault& e) {
        spdlog::error("{}", e.what());
        return 2;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return 2;
    }
}
