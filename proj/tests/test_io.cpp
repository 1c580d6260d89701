#include "farmintel/config.hpp"
#include "farmintel/daemon.hpp"
#include "farmintel/io.hpp"
#include "farmintel/webhook.hpp"
#include "synthetic.hpp"

#include <gtest/gtest.h>
#include <httplib.h>
#include <spdlog/spdlog.h>

#include <csignal>
#include <fcntl.h>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>
#include <thread>
#include <unistd.h>

using namespace farmintel;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
    const auto p = fs::temp_directory_path() / ("farmintel-test-" + std::to_string(::getpid())) / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

void write(const fs::path& p, const std::string& text)
{
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    f << text;
}

std::string slurp(const fs::path& p)
{
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

std::string sensor_csv(const std::vector<envforecast::SensorReading>& rows)
{
    std::string s = "timestamp_iso8601,sensor_id,temperature_c,humidity_pct\n";
    char buf[128];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%s,%s,%.3f,%.3f\n", format_iso8601(r.timestamp).c_str(), r.sensor_id.c_str(),
                      r.temperature, r.humidity);
        s += buf;
    }
    return s;
}

std::string indicator_csv(const std::vector<alerting::IndicatorSample>& rows)
{
    std::string s = "timestamp_iso8601,channel,value\n";
    char buf[128];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%s,%s,%.3f\n", format_iso8601(r.ts).c_str(), r.channel.c_str(), r.value);
        s += buf;
    }
    return s;
}

int run_cli(const std::string& args)
{
    const std::string cmd = std::string(FARMINTEL_CLI) + " " + args + " >/dev/null 2>&1";
    const int st = std::system(cmd.c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

// Readings on day 0..1 with a hot spell at hour 30 and one late, out-of-range humidity.
std::vector<envforecast::SensorReading> env_fixture()
{
    std::vector<envforecast::SensorReading> r;
    for (int h = 0; h < 48; ++h)
        for (int m = 0; m < 60; m += 20) {
            const double t = h == 30 ? 37.0 : 22.0 + 0.1 * (h % 24);
            r.push_back({synth::kEpoch + h * kSecondsPerHour + m * kSecondsPerMinute, "s1", t, h == 40 ? 65.0 : 50.0});
        }
    return r;
}

struct DaemonFixture {
    fs::path dir;
    fs::path env, ind, log;
    std::map<std::string, alerting::DynamicBand> bands;

    explicit DaemonFixture(const std::string& name) : dir(scratch(name))
    {
        env = dir / "env.csv";
        ind = dir / "ind.csv";
        log = dir / "alerts.jsonl";
        write(env, sensor_csv(env_fixture()));
        const auto hist = synth::two_level_history(14, "audio");
        bands.emplace("audio", alerting::build_dynamic_band(hist, "audio", {}));
        std::vector<alerting::IndicatorSample> live;
        const Timestamp day = synth::kEpoch + 20 * kSecondsPerDay;
        for (int m = 0; m < 1440; m += 30) live.push_back({day + m * kSecondsPerMinute, "audio", m == 600 ? 50.0 : (m < 720 ? 1.0 : 9.0)});
        live.push_back({day + 900 * kSecondsPerMinute, "audio", 0.0});
        write(ind, indicator_csv(live));
    }

    daemon::Options options() const
    {
        daemon::Options o;
        o.env_path = env.string();
        o.indicator_path = ind.string();
        o.bands = bands;
        return o;
    }
};

std::vector<std::string> kinds(const fs::path& log)
{
    std::vector<std::string> out;
    std::istringstream in(slurp(log));
    for (std::string line; std::getline(in, line);) out.push_back(nlohmann::json::parse(line)["kind"]);
    return out;
}

}  // namespace

TEST(Csv, RejectsOutOfRangeHumidityWithLineAndColumn)
{
    std::string text = "timestamp_iso8601,sensor_id,temperature_c,humidity_pct\n";
    for (int i = 0; i < 5; ++i) text += "2024-01-01T00:0" + std::to_string(i) + ":00Z,s1,20.0,50.0\n";
    text += "2024-01-01T00:09:00Z,s1,20.0,140\n";  // line 7
    std::istringstream in(text);
    try {
        io::read_sensors(in, "env.csv");
        FAIL();
    } catch (const io::RowError& e) {
        EXPECT_EQ(e.line(), 7u);
        EXPECT_EQ(e.column(), "humidity_pct");
        EXPECT_NE(std::string(e.what()).find("line 7"), std::string::npos);
    }
}

TEST(Csv, EmptyFileWarns)
{
    std::istringstream in("");
    const auto r = io::read_sensors(in, "empty.csv");
    EXPECT_TRUE(r.rows.empty());
    ASSERT_EQ(r.warnings.size(), 1u);
    EXPECT_NE(r.warnings[0].find("empty"), std::string::npos);
}

TEST(Csv, HeaderAndFieldErrors)
{
    std::istringstream bad_header("time,channel,value\n");
    EXPECT_THROW(io::read_indicators(bad_header, "x"), ValidationError);
    std::istringstream short_row("timestamp_iso8601,channel,value\n2024-01-01T00:00:00Z,audio\n");
    EXPECT_THROW(io::read_indicators(short_row, "x"), io::RowError);
    std::istringstream bad_date("date,eggs,deaths,flock_size,age_weeks\n2024-01-02,1,0,10,20\n2024-01-01,1,0,10,20\n");
    EXPECT_THROW(io::read_production(bad_date, "x"), io::RowError);
    std::istringstream feed("month,kg,cost\n2024-03,100,\"1,5\"\n");
    EXPECT_THROW(io::read_feed(feed, "x"), io::RowError);  // "1,5" is not a number
    EXPECT_EQ(io::split_csv(R"(a,"b,c","d""e")"), (std::vector<std::string>{"a", "b,c", "d\"e"}));
}

TEST(Config, HashTracksParameters)
{
    using config::config_hash;
    using config::parse_config;
    const auto base = config_hash(parse_config(nlohmann::json::object()));
    // spelling out a default does not change the hash; key order does not either
    EXPECT_EQ(config_hash(parse_config(nlohmann::json::parse(R"({"alerting":{"temp_high":35}})"))), base);
    EXPECT_EQ(config_hash(parse_config(nlohmann::json::parse(R"({"seed":42,"tracker":{"max_missed":5,"max_dist":50}})"))), base);
    for (const char* changed : {R"({"seed":43})", R"({"alerting":{"temp_high":34}})", R"({"tracker":{"max_dist":51}})",
                                R"({"production":{"night":["21:00","05:00"]}})", R"({"recommend":{"wind_above":30}})"})
        EXPECT_NE(config_hash(parse_config(nlohmann::json::parse(changed))), base) << changed;
    EXPECT_THROW(parse_config(nlohmann::json::parse(R"({"alerting":{"temp_hgih":1}})")), ValidationError);
    EXPECT_THROW(parse_config(nlohmann::json::parse(R"({"alerting":{"temp_low":40}})")), ValidationError);
    EXPECT_EQ(config::sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Config, ManifestRecordsHashes)
{
    const auto dir = scratch("manifest");
    write(dir / "in.txt", "abc");
    config::RunManifest m;
    m.command = "test";
    m.config_hash = "h";
    m.add_input((dir / "in.txt").string());
    const auto j = config::manifest_to_json(m);
    EXPECT_EQ(j["inputs"][0]["sha256"], config::sha256_hex("abc"));
    EXPECT_EQ(j["version"], config::kVersion);
}

TEST(Daemon, ReplayIsByteIdentical)
{
    DaemonFixture fx("replay");
    std::string first;
    for (int rep = 0; rep < 2; ++rep) {
        fs::remove(fx.log);
        alerting::AlertSink sink({fx.log.string(), (fx.dir / "dl.jsonl").string(), 30, {}});
        const auto s = daemon::run(fx.options(), sink);
        EXPECT_EQ(s.env_rows, 144u);
        EXPECT_TRUE(s.unavailable_streams.empty());
        if (rep == 0)
            first = slurp(fx.log);
        else
            EXPECT_EQ(slurp(fx.log), first);
    }
    const auto k = kinds(fx.log);
    EXPECT_EQ(std::count(k.begin(), k.end(), "heat"), 1);
    EXPECT_EQ(std::count(k.begin(), k.end(), "humidity-high"), 1);
    EXPECT_EQ(std::count(k.begin(), k.end(), "indicator-high"), 1);
    EXPECT_EQ(std::count(k.begin(), k.end(), "indicator-low"), 1);
}

TEST(Daemon, EnvStallDoesNotStopIndicatorAlerts)
{
    DaemonFixture fx("stall");
    auto opt = fx.options();
    opt.env_path = (fx.dir / "missing.csv").string();
    alerting::AlertSink sink({fx.log.string(), (fx.dir / "dl.jsonl").string(), 30, {}});
    const auto s = daemon::run(opt, sink);
    EXPECT_EQ(s.env_rows, 0u);
    EXPECT_GT(s.indicator_rows, 0u);
    ASSERT_EQ(s.unavailable_streams.size(), 1u);
    const auto k = kinds(fx.log);
    EXPECT_EQ(std::count(k.begin(), k.end(), "indicator-high"), 1);
}

TEST(Daemon, FollowModePicksUpAppendsAndFlushesOnStop)
{
    DaemonFixture fx("follow");
    const auto all = env_fixture();
    const std::vector<envforecast::SensorReading> head(all.begin(), all.begin() + 60);
    write(fx.env, sensor_csv(head));
    std::atomic<bool> stop{false};
    auto opt = fx.options();
    opt.indicator_path.clear();
    opt.follow = true;
    opt.poll_interval = std::chrono::milliseconds(5);
    opt.stop = &stop;
    alerting::AlertSink sink({fx.log.string(), (fx.dir / "dl.jsonl").string(), 30, {}});
    daemon::Summary s;
    std::thread t([&] { s = daemon::run(opt, sink); });
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
    {
        std::ofstream f(fx.env, std::ios::app | std::ios::binary);
        const auto rest = sensor_csv({all.begin() + 60, all.end()});
        f << rest.substr(rest.find('\n') + 1);
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
    stop = true;
    t.join();
    EXPECT_EQ(s.env_rows, all.size());
    const auto k = kinds(fx.log);
    EXPECT_EQ(std::count(k.begin(), k.end(), "heat"), 1);
    EXPECT_EQ(std::count(k.begin(), k.end(), "humidity-high"), 1);
}

TEST(Webhook, ServerErrorsEndInDeadLetter)
{
    httplib::Server server;
    std::atomic<int> hits{0};
    server.Post("/hook", [&](const httplib::Request&, httplib::Response& res) {
        ++hits;
        res.status = 500;
    });
    server.Post("/ok", [&](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread th([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    const auto dir = scratch("webhook");
    const std::string base = "http://127.0.0.1:" + std::to_string(port);
    std::vector<std::chrono::milliseconds> sleeps;
    alerting::AlertSink sink({(dir / "a.jsonl").string(), (dir / "dl.jsonl").string(), 30, {}}, http::JsonPoster(base + "/hook"),
                             [&](std::chrono::milliseconds d) { sleeps.push_back(d); });
    alerting::Alert a;
    a.ts = synth::kEpoch;
    a.kind = "heat";
    a.value = 40;
    a.threshold = 35;
    const auto rec = sink.emit(a);
    EXPECT_EQ(rec.webhook_attempts, 3);
    EXPECT_EQ(rec.last_status, 500);
    EXPECT_TRUE(rec.dead_lettered);
    EXPECT_EQ(hits.load(), 3);
    EXPECT_EQ(sleeps, (std::vector<std::chrono::milliseconds>{std::chrono::milliseconds(200), std::chrono::milliseconds(400)}));
    EXPECT_EQ(slurp(dir / "dl.jsonl"), slurp(dir / "a.jsonl"));

    alerting::AlertSink ok({(dir / "b.jsonl").string(), (dir / "dl2.jsonl").string(), 30, {}}, http::JsonPoster(base + "/ok"));
    EXPECT_TRUE(ok.emit(a).delivered);
    EXPECT_FALSE(fs::exists(dir / "dl2.jsonl"));

    server.stop();
    th.join();
    EXPECT_THROW(http::JsonPoster("https://example.com/x"), ValidationError);
}

TEST(Cli, ExitCodes)
{
    const auto dir = scratch("cli");
    write(dir / "ctx.json", R"({"productivity":{"per_bird":0.65}})");
    EXPECT_EQ(run_cli("--out " + (dir / "o").string() + " recommend --context " + (dir / "ctx.json").string()), 0);
    EXPECT_TRUE(fs::exists(dir / "o" / "manifest-recommend.json"));

    write(dir / "bad.csv", "timestamp_iso8601,sensor_id,temperature_c,humidity_pct\n2024-01-01T00:00:00Z,s1,20,140\n");
    EXPECT_EQ(run_cli("--out " + (dir / "o").string() + " forecast-env --data " + (dir / "bad.csv").string()), 1);
    EXPECT_EQ(run_cli("no-such-command"), 1);
    write(dir / "cfg.json", R"({"bogus": 1})");
    EXPECT_EQ(run_cli("--config " + (dir / "cfg.json").string() + " recommend"), 1);

    // an input stream that cannot be read is a runtime fault
    EXPECT_EQ(run_cli("--out " + (dir / "o").string() + " alerts run --env " + (dir / "missing.csv").string()), 2);
}

TEST(Cli, SigtermFlushesCleanly)
{
    DaemonFixture fx("sigterm");
    const auto out = fx.dir / "out";
    const pid_t pid = ::fork();
    ASSERT_GE(pid, 0);
    if (pid == 0) {
        const int devnull = ::open("/dev/null", O_WRONLY);
        ::dup2(devnull, 1);
        ::dup2(devnull, 2);
        const std::string o = out.string(), e = fx.env.string();
        ::execl(FARMINTEL_CLI, FARMINTEL_CLI, "--out", o.c_str(), "alerts", "run", "--env", e.c_str(), "--follow", "--poll-ms", "10",
                static_cast<char*>(nullptr));
        ::_exit(127);
    }
    // wait until the run has produced its first alert, then stop it
    for (int i = 0; i < 500 && !fs::exists(out / "alerts.jsonl"); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(10));
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
    ::kill(pid, SIGTERM);
    int st = 0;
    ::waitpid(pid, &st, 0);
    ASSERT_TRUE(WIFEXITED(st));
    EXPECT_EQ(WEXITSTATUS(st), 0);
    EXPECT_TRUE(fs::exists(out / "manifest-alerts-run.json"));
    const auto k = kinds(out / "alerts.jsonl");
    EXPECT_EQ(std::count(k.begin(), k.end(), "humidity-high"), 1);
}
