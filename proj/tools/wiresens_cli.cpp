// wiresens command-line entry point.
//
// Exit codes: 0 success, 1 validation, 2 I/O, 3 runtime.

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <thread>

#include "CLI11.hpp"
#include "wiresens/channel.hpp"
#include "wiresens/error.hpp"
#include "wiresens/firmware.hpp"
#include "wiresens/optimizer.hpp"
#include "wiresens/power.hpp"
#include "wiresens/receiver.hpp"
#include "wiresens/recording.hpp"
#include "wiresens/scenario.hpp"
#include "wiresens/server.hpp"
#include "wiresens/transport.hpp"

namespace fs = std::filesystem;
using namespace wiresens;

namespace {

enum Exit : int { kOk = 0, kValidation = 1, kIo = 2, kRuntime = 3 };

std::atomic<bool> g_interrupted{false};

void on_signal(int) { g_interrupted = true; }

struct SimulateArgs {
    std::string scenario;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> durationUs;
};

int cmd_simulate(const SimulateArgs& a) {
    ScenarioSpec spec = load_scenario(a.scenario);
    if (a.seed) spec.seed = *a.seed;
    if (a.durationUs) spec.durationUs = *a.durationUs;
    const std::string out = a.out.empty() ? spec.outputs : a.out;
    Trace trace = simulate(spec, out);
    std::cout << stats_json(trace).dump(2) << '\n';
    return kOk;
}

struct OptimizeArgs {
    std::string recording;
    int pMin = 1, pMax = 50, pStep = 1;
    int dMin = 0, dMax = 100, dStep = 1;
    double alpha = 0.5;
    std::string out;
    unsigned threads = 0;
};

int cmd_optimize(const OptimizeArgs& a) {
    if (a.pMin > a.pMax || a.dMin > a.dMax) throw ValidationError("range", "empty search range");
    const Recording rec = read_recording(a.recording);
    const auto pValues = IntRange{a.pMin, a.pMax, a.pStep}.values();
    const auto dValues = IntRange{a.dMin, a.dMax, a.dStep}.values();
    OptimizationSurface s = grid_search(rec.frames, pValues, dValues, a.alpha, rec.header.adcBits, a.threads);
    const std::string prefix = a.out.empty() ? (fs::path(a.recording).replace_extension("").string() + "_surface")
                                             : a.out;
    export_surface(s, prefix + ".csv", SurfaceFormat::csv);
    export_surface(s, prefix + ".json", SurfaceFormat::json);
    std::printf("argmin p=%d d=%d E=%.6f r=%.6f objective=%.6f\n", s.argmin.p, s.argmin.d, s.argmin.E, s.argmin.r,
                s.argmin.objective);
    std::printf("surface written to %s.csv and %s.json\n", prefix.c_str(), prefix.c_str());
    return kOk;
}

struct ReplayArgs {
    std::string path;
    std::optional<std::uint64_t> start;
    std::optional<std::uint64_t> end;
    double speed = 1.0;
    bool batch = false;
};

int cmd_replay(const ReplayArgs& a) {
    const Recording rec = read_recording(a.path);
    ReplayOptions opts{a.start, a.end, a.batch ? kBatchSpeed : a.speed};
    replay(
        rec, opts, [](const Frame& f) { std::cout << frame_message(f) << '\n'; }, &g_interrupted);
    std::cout.flush();
    return kOk;
}

struct ServeArgs {
    std::string config;
    std::string bind = "127.0.0.1";
    std::uint16_t port = 8080;
    std::optional<std::uint16_t> streamPort;
    std::optional<std::uint16_t> datagramPort;
    std::vector<std::string> replay;
    double speed = 1.0;
    bool autoplay = false;
    std::string record;
};

int cmd_serve(const ServeArgs& a) {
    ServeOptions o;
    o.configPath = a.config;
    o.bindAddress = a.bind;
    o.port = a.port;
    o.streamPort = a.streamPort;
    o.datagramPort = a.datagramPort;
    o.replayPaths = a.replay;
    o.replaySpeed = a.speed;
    o.autoplay = a.autoplay;
    if (!a.record.empty()) o.recordDir = a.record;
    HubServer server(o);
    server.start();
    std::printf("serving on http://%s:%u\n", a.bind.c_str(), server.port());
    if (auto p = server.stream_port()) std::printf("stream transport on port %u\n", *p);
    if (auto p = server.datagram_port()) std::printf("datagram transport on port %u\n", *p);
    std::fflush(stdout);
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    while (!g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    server.stop();
    return kOk;
}

struct PowerArgs {
    std::string profile;
    std::string protocol = "ble";
    bool json = false;
};

int cmd_power(const PowerArgs& a) {
    const PowerProfile p =
        a.profile.empty() ? default_power_profile(protocol_from_string(a.protocol)) : load_power_profile(a.profile);
    const auto rows = lifetime_table(p, {0.0, 0.01, 0.05, 0.1, 0.5, 1.0});
    if (a.json) {
        json out = json::array();
        for (const auto& r : rows)
            out.push_back({{"tA", r.tA}, {"currentMa", r.currentMa}, {"hours", r.hours}, {"extensionPct", r.extensionPct}});
        std::cout << json{{"profile", to_json(p)}, {"rows", out}}.dump(2) << '\n';
        return kOk;
    }
    std::printf("protocol %s  battery %.0f mAh  iIdle %.2f mA  iSendDelta %.2f mA\n", p.protocol.c_str(),
                p.batteryMah, p.iIdle, p.iSendDelta);
    std::printf("%8s %12s %12s %14s\n", "tA", "current_mA", "lifetime_h", "extension_pct");
    for (const auto& r : rows)
        std::printf("%8.2f %12.2f %12.2f %14.2f\n", r.tA, r.currentMa, r.hours, r.extensionPct);
    return kOk;
}

struct ExportArgs {
    std::string path;
    std::string format = "csv";
    std::string out;
};

int cmd_export(const ExportArgs& a) {
    const Recording rec = read_recording(a.path);
    const std::string text = a.format == "json" ? export_json(rec) : export_csv(rec);
    if (a.out.empty()) {
        std::cout << text;
    } else {
        std::ofstream f(a.out, std::ios::binary | std::ios::trunc);
        if (!f) throw IoError("cannot open " + a.out + " for writing");
        f << text;
    }
    return kOk;
}

struct CalibrateArgs {
    std::string config;
    std::string preset = "low pressure";
    std::string stimulus;
    int durationMs = 0;
    double fps = 10.0;
    std::uint64_t seed = 1;
};

int cmd_calibrate(const CalibrateArgs& a) {
    DeviceConfig cfg = a.config.empty() ? DeviceConfig{} : parse_config(read_text_file(a.config)).front();
    const int durationMs = a.durationMs > 0 ? a.durationMs : cfg.calibration.durationMs;
    const auto durationUs = static_cast<std::uint64_t>(durationMs) * 1000;
    StimulusScript script = a.stimulus.empty() ? stimulus_preset(a.preset, cfg.rows, cfg.cols, durationUs)
                                               : load_stimulus(a.stimulus);
    script.validate(cfg.rows, cfg.cols);
    RenderContext ctx(script, cfg.vRef, cfg.vSupply, cfg.adcBits, a.seed);
    std::vector<TimedField> stream;
    const auto periodUs = static_cast<std::uint64_t>(1e6 / a.fps);
    for (std::uint64_t t = 0; t < durationUs; t += periodUs) stream.push_back({t, ctx.render(t, cfg.rows, cfg.cols)});
    DeviceState state(cfg);
    state.enter_calibration();
    const CalibrationResult r = calibrate(state, stream, durationMs, cfg.calibration.minPercentile);
    std::cout << json{{"vMin", r.vMin},
                      {"rPotSolved", r.rPotSolved},
                      {"rPotApplied", r.rPotApplied},
                      {"wiperStep", r.wiperStep}}
                     .dump(2)
              << '\n';
    return kOk;
}

struct EmitArgs {
    std::string scenario;
    std::string host = "127.0.0.1";
    std::uint16_t port = 9000;
    std::string kind = "stream";
    double speed = 1.0;
    std::optional<std::uint64_t> durationUs;
};

/// Runs the scenario's devices against the wall clock and sends their packets
/// to a live hub.
int cmd_emit(const EmitArgs& a) {
    ScenarioSpec spec = load_scenario(a.scenario);
    if (a.durationUs) spec.durationUs = *a.durationUs;
    const TransportKind kind = a.kind == "datagram" ? TransportKind::datagram : TransportKind::stream;
    std::vector<std::unique_ptr<PacketSender>> senders;
    std::vector<DeviceState> states;
    std::vector<RenderContext> renders;
    std::vector<std::uint64_t> nextUs;
    for (const auto& d : spec.devices) {
        senders.push_back(std::make_unique<PacketSender>(kind, a.host, a.port));
        states.emplace_back(d);
        renders.emplace_back(spec.stimulus, d.vRef, d.vSupply, d.adcBits, spec.seed + static_cast<std::uint64_t>(d.deviceId));
        nextUs.push_back(0);
    }
    std::signal(SIGINT, on_signal);
    const auto wallStart = std::chrono::steady_clock::now();
    while (!g_interrupted) {
        const auto i = static_cast<std::size_t>(std::min_element(nextUs.begin(), nextUs.end()) - nextUs.begin());
        const std::uint64_t t = nextUs[i];
        if (t >= spec.durationUs) break;
        std::this_thread::sleep_until(wallStart + std::chrono::microseconds(static_cast<std::int64_t>(t / a.speed)));
        const DeviceConfig& cfg = spec.devices[i];
        DeviceStep step = device_step(states[i], t, renders[i].render(t, cfg.rows, cfg.cols));
        const ReadArea area = cfg.readArea.normalized();
        std::uint64_t busy = t + static_cast<std::uint64_t>(area.rows() * area.cols() * cfg.nodeReadUs);
        if (step.packet) {
            senders[i]->send(*step.packet);
            busy += static_cast<std::uint64_t>(spec.protocol.airtimeUsPerPacket);
        }
        nextUs[i] = busy + static_cast<std::uint64_t>(cfg.scanDelayUs);
    }
    return kOk;
}

template <class F>
int guarded(F&& f) {
    try {
        return f();
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kValidation;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kValidation;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kIo;
    } catch (const RecordingError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntime;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"wiresens: wireless resistive tactile sensing simulator and telemetry hub"};
    app.require_subcommand(1);
    int rc = kOk;

    SimulateArgs sim;
    auto* simCmd = app.add_subcommand("simulate", "Run a scenario; write recordings and stats.json");
    simCmd->add_option("scenario", sim.scenario, "Scenario JSON file")->required();
    simCmd->add_option("-o,--out", sim.out, "Output directory (default: scenario 'outputs')");
    simCmd->add_option("--seed", sim.seed, "Override the scenario seed");
    simCmd->add_option("--duration-us", sim.durationUs, "Override the simulated duration");
    simCmd->callback([&] { rc = guarded([&] { return cmd_simulate(sim); }); });

    OptimizeArgs opt;
    auto* optCmd = app.add_subcommand("optimize", "Grid-search intermittent-send parameters (p, d)");
    optCmd->add_option("recording", opt.recording, "WRS1 recording")->required();
    optCmd->add_option("--p-min", opt.pMin, "Smallest p")->capture_default_str();
    optCmd->add_option("--p-max", opt.pMax, "Largest p")->capture_default_str();
    optCmd->add_option("--p-step", opt.pStep, "p increment")->capture_default_str();
    optCmd->add_option("--d-min", opt.dMin, "Smallest d")->capture_default_str();
    optCmd->add_option("--d-max", opt.dMax, "Largest d")->capture_default_str();
    optCmd->add_option("--d-step", opt.dStep, "d increment")->capture_default_str();
    optCmd->add_option("--alpha", opt.alpha, "Accuracy weight in [0, 1]")->capture_default_str();
    optCmd->add_option("-o,--out", opt.out, "Output prefix for <prefix>.csv / <prefix>.json");
    optCmd->add_option("--threads", opt.threads, "Worker threads (0 = all cores)");
    optCmd->callback([&] { rc = guarded([&] { return cmd_optimize(opt); }); });

    ReplayArgs rep;
    auto* repCmd = app.add_subcommand("replay", "Replay a recording to stdout as JSON lines");
    repCmd->add_option("path", rep.path, "WRS1 recording")->required();
    repCmd->add_option("--start", rep.start, "First timestamp (us, inclusive)");
    repCmd->add_option("--end", rep.end, "Last timestamp (us, exclusive)");
    repCmd->add_option("--speed", rep.speed, "Playback speed multiplier")->capture_default_str();
    repCmd->add_flag("--batch", rep.batch, "Emit immediately without pacing");
    repCmd->callback([&] { rc = guarded([&] { return cmd_replay(rep); }); });

    ServeArgs srv;
    auto* srvCmd = app.add_subcommand("serve", "HTTP/WebSocket hub for the browser UI");
    srvCmd->add_option("--config", srv.config, "Device config JSON (layout is persisted here)")->required();
    srvCmd->add_option("--bind", srv.bind, "Bind address")->capture_default_str();
    srvCmd->add_option("--port", srv.port, "HTTP port")->capture_default_str();
    srvCmd->add_option("--stream-port", srv.streamPort, "Live stream transport port");
    srvCmd->add_option("--datagram-port", srv.datagramPort, "Live datagram transport port");
    srvCmd->add_option("--replay", srv.replay, "Recording(s) to expose through /replay/control");
    srvCmd->add_option("--speed", srv.speed, "Initial replay speed")->capture_default_str();
    srvCmd->add_flag("--autoplay", srv.autoplay, "Start replay immediately");
    srvCmd->add_option("--record", srv.record, "Record live sessions into this directory");
    srvCmd->callback([&] { rc = guarded([&] { return cmd_serve(srv); }); });

    PowerArgs pow;
    auto* powCmd = app.add_subcommand("power", "Battery lifetime table for continuous vs intermittent sending");
    powCmd->add_option("profile", pow.profile, "Power profile JSON (default: built-in profile)");
    powCmd->add_option("--protocol", pow.protocol, "Built-in profile: ble or wifi")->capture_default_str();
    powCmd->add_flag("--json", pow.json, "Print JSON instead of a table");
    powCmd->callback([&] { rc = guarded([&] { return cmd_power(pow); }); });

    ExportArgs exp;
    auto* expCmd = app.add_subcommand("export", "Convert a recording to CSV or JSON");
    expCmd->add_option("path", exp.path, "WRS1 recording")->required();
    expCmd->add_option("--format", exp.format, "csv or json")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
    expCmd->add_option("-o,--out", exp.out, "Output file (default: stdout)");
    expCmd->callback([&] { rc = guarded([&] { return cmd_export(exp); }); });

    CalibrateArgs cal;
    auto* calCmd = app.add_subcommand("calibrate", "Run automatic gain calibration against a stimulus");
    calCmd->add_option("--config", cal.config, "Device config JSON (first device is used)");
    calCmd->add_option("--preset", cal.preset, "Stimulus preset")->capture_default_str();
    calCmd->add_option("--stimulus", cal.stimulus, "Stimulus script JSON (overrides --preset)");
    calCmd->add_option("--duration-ms", cal.durationMs, "Calibration window (default: config value)");
    calCmd->add_option("--fps", cal.fps, "Scan rate during calibration")->capture_default_str();
    calCmd->add_option("--seed", cal.seed, "Noise seed")->capture_default_str();
    calCmd->callback([&] { rc = guarded([&] { return cmd_calibrate(cal); }); });

    EmitArgs emit;
    auto* emitCmd = app.add_subcommand("emit", "Run scenario devices in real time and send packets to a hub");
    emitCmd->add_option("scenario", emit.scenario, "Scenario JSON file")->required();
    emitCmd->add_option("--host", emit.host, "Hub host")->capture_default_str();
    emitCmd->add_option("--port", emit.port, "Hub transport port")->capture_default_str();
    emitCmd->add_option("--kind", emit.kind, "stream or datagram")
        ->check(CLI::IsMember({"stream", "datagram"}))
        ->capture_default_str();
    emitCmd->add_option("--speed", emit.speed, "Wall-clock speed multiplier")->capture_default_str();
    emitCmd->add_option("--duration-us", emit.durationUs, "Override the scenario duration");
    emitCmd->callback([&] { rc = guarded([&] { return cmd_emit(emit); }); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kValidation;
    }
    return rc;
}
