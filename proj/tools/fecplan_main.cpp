// fecplan: planning CLI for block erasure coding on VoIP conversation quality.
//
// Subcommands: analyze, validate, sweep, simulate, emulate, profiles.
// Exit codes: 0 success, 1 usage/validation error, 2 validation-gate failure
// (validate), 3 I/O error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fecplan/channel_sim.hpp"
#include "fecplan/emodel.hpp"
#include "fecplan/erasure_analytics.hpp"
#include "fecplan/planner.hpp"
#include "fecplan/report.hpp"
#include "fecplan/stream_emulator.hpp"
#include "fecplan/udp_runner.hpp"

#include <CLI11.hpp>
#include <json.hpp>

namespace {

using namespace fecplan;

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::vector<double> parse_p_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        out.push_back(std::stod(item));
    }
    return out;
}

std::vector<double> parse_p_range(const std::string& text) {
    // start:step:end, inclusive of end up to rounding
    double start = 0, step = 0, end = 0;
    if (std::sscanf(text.c_str(), "%lf:%lf:%lf", &start, &step, &end) != 3 || step <= 0)
        throw std::invalid_argument("bad --p-range, expected start:step:end");
    std::vector<double> out;
    for (int i = 0;; ++i) {
        double v = start + i * step;
        if (v > end + step * 1e-9) break;
        out.push_back(v);
    }
    return out;
}

// "5,2;10,3;none" -> code points; "none" is the no-coding baseline
std::vector<CodePoint> parse_points(const std::string& text) {
    std::vector<CodePoint> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ';')) {
        if (item.empty()) continue;
        if (item == "none" || item == "no-coding") {
            out.push_back({CodeParams{1, 0}, false});
            continue;
        }
        int n = 0, k = 0;
        if (std::sscanf(item.c_str(), "%d,%d", &n, &k) != 2)
            throw std::invalid_argument("bad code point '" + item + "', expected N,K or none");
        out.push_back({CodeParams{n, k}, true});
    }
    return out;
}

std::vector<CodecProfile> load_profiles_file(const std::string& path) {
    if (path.empty()) return {};
    std::ifstream in(path);
    if (!in) throw IoError("cannot open profiles file: " + path);
    return load_codec_profiles(in);
}

CodecProfile resolve_codec(const std::string& name, const std::vector<CodecProfile>& extra) {
    auto c = find_codec_profile(name, extra);
    if (!c) throw std::invalid_argument("unknown codec profile '" + name + "' (see `fecplan profiles`)");
    return *c;
}

void write_rows(const std::vector<ReportRow>& rows, const std::string& out,
                const std::string& format, const std::string& codec_name, std::uint64_t seed) {
    std::ofstream os(out);
    if (!os) throw IoError("cannot write " + out);
    if (format == "json") {
        os << report_json(rows, codec_name, seed).dump(2) << '\n';
    } else {
        write_report_csv(rows, os);
    }
    if (!os.good()) throw IoError("error while writing " + out);
}

void print_row_table(const std::vector<ReportRow>& rows) {
    std::printf("%-6s %-4s %-4s %-7s %-9s %-7s %-7s %-7s %-8s %-8s %-7s\n", "p", "N", "K",
                "coding", "method", "Ppl%", "BurstR", "T_ms", "Ie_eff", "R", "MOS");
    for (const ReportRow& r : rows) {
        std::printf("%-6.3f %-4d %-4d %-7s %-9s %-7s %-7s %-7.0f %-8.2f %-8.2f %-7s\n", r.p, r.n,
                    r.k, r.coding ? "yes" : "no", method_name(r.method),
                    round1(r.ppl_percent).c_str(), round1(r.burst_ratio).c_str(), r.t_ms,
                    r.mos.ie_eff, r.mos.r_factor, round1(r.mos.mos_cq).c_str());
    }
}

int cmd_analyze(const CodePoint& point, double p, const CodecProfile& codec, Method method,
                double tolerance, std::uint64_t blocks, std::uint64_t seed,
                const std::string& out, const std::string& format) {
    if (auto w = point.code.warning(); w && point.coding)
        std::cerr << "warning: " << *w << '\n';
    ReportRow row = analyze_point(point, p, codec, method, tolerance, blocks, seed);
    print_row_table({row});
    if (!out.empty()) write_rows({row}, out, format, codec.name, seed);
    return 0;
}

int cmd_validate(const std::vector<CodePoint>& points, const std::vector<double>& ps,
                 std::uint64_t blocks, std::uint64_t seed, double tolerance, double sigma) {
    std::vector<CodeParams> codes;
    for (const CodePoint& cp : points)
        codes.push_back(cp.coding ? cp.code : CodeParams{cp.code.n_block, 0});
    std::vector<ValidationCell> cells = validate_cells(codes, ps, blocks, seed, tolerance, sigma);
    std::printf("%-4s %-4s %-7s | %-9s %-9s %-7s | %-9s %-9s %-8s | %-6s %-7s %s\n", "N", "K",
                "p", "Ppl%(eq)", "Ppl%(mc)", "z", "BurstR(eq)", "BurstR(mc)", "z", "", "", "status");
    bool all_pass = true;
    for (const ValidationCell& c : cells) {
        std::string zb = c.z_burst ? round1(*c.z_burst) : std::string("-");
        std::printf("%-4d %-4d %-7.3f | %-9s %-9s %-7s | %-9s %-10s %-8s | %13s %s\n",
                    c.code.n_block, c.code.k_redundancy, c.p, round1(c.ppl_analytic).c_str(),
                    round1(c.ppl_sim).c_str(), round1(c.z_ppl).c_str(),
                    round1(c.burst_analytic).c_str(), round1(c.burst_sim).c_str(), zb.c_str(), "",
                    c.pass ? "pass" : "FAIL");
        all_pass = all_pass && c.pass;
    }
    std::printf("validation (gate %.0f sigma, %llu blocks/cell): %s\n", sigma,
                static_cast<unsigned long long>(blocks), all_pass ? "PASS" : "FAIL");
    return all_pass ? 0 : 2;
}

int cmd_simulate(const CodeParams& code, double p, std::uint64_t blocks, std::uint64_t seed,
                 const std::string& histogram_out) {
    SimResult r = simulate_stream({code, LossModel{p}, blocks, seed});
    std::printf("blocks=%llu packets=%llu unrecovered=%llu runs=%llu\n",
                static_cast<unsigned long long>(blocks),
                static_cast<unsigned long long>(r.packets_sent),
                static_cast<unsigned long long>(r.packets_unrecovered),
                static_cast<unsigned long long>(r.run_count));
    std::printf("Ppl = %.4f%% (se %.4f)  E[C] = %s (se %.4f)  BurstR = %s (se %.4f)\n",
                r.stats.ppl_fraction * 100, r.confidence.ppl_stderr * 100,
                r.stats.expected_run_length ? round1(*r.stats.expected_run_length).c_str() : "-",
                r.confidence.run_length_stderr,
                r.stats.burst_ratio ? round1(*r.stats.burst_ratio).c_str() : "-",
                r.confidence.burst_ratio_stderr);
    if (!histogram_out.empty()) {
        std::ofstream os(histogram_out);
        if (!os) throw IoError("cannot write " + histogram_out);
        os << "run_length,count\n";
        for (const auto& [len, count] : r.run_length_histogram)
            os << len << ',' << count << '\n';
    }
    return 0;
}

int cmd_emulate(const EmulationConfig& cfg, const std::string& trace, bool over_udp) {
    EmulationReport rep;
    if (over_udp) {
        UdpRunConfig ucfg;
        ucfg.emu = cfg;
        UdpRunReport ur = udp_loopback_run(ucfg);
        rep = std::move(ur.emulation);
        std::printf("udp: received=%llu dropped=%llu malformed=%llu missing=%llu mismatches=%llu\n",
                    static_cast<unsigned long long>(ur.datagrams_received),
                    static_cast<unsigned long long>(ur.datagrams_dropped),
                    static_cast<unsigned long long>(ur.datagrams_malformed),
                    static_cast<unsigned long long>(ur.datagrams_missing),
                    static_cast<unsigned long long>(ur.payload_mismatches));
    } else {
        rep = run_emulation(cfg);
    }
    std::printf("sources=%llu unrecovered=%llu  Ppl = %.4f%%  BurstR = %s\n",
                static_cast<unsigned long long>(rep.sources_sent),
                static_cast<unsigned long long>(rep.packets_unrecovered),
                rep.stats.ppl_fraction * 100,
                rep.stats.burst_ratio ? round1(*rep.stats.burst_ratio).c_str() : "-");
    std::printf("max decoder delay = %.3f ms (cap %.3f)  max added one-way delay = %.3f ms (budget 2Nd = %.3f)\n",
                rep.max_decoder_delay_ms(), (cfg.code.n_block - 1) * cfg.packet_interval_ms,
                rep.max_added_delay_ms(), rep.delay_budget_us / 1000.0);
    if (rep.payload_mismatches || rep.late_releases)
        std::printf("WARNING: payload_mismatches=%llu late_releases=%llu\n",
                    static_cast<unsigned long long>(rep.payload_mismatches),
                    static_cast<unsigned long long>(rep.late_releases));
    if (!trace.empty()) {
        std::ofstream os(trace);
        if (!os) throw IoError("cannot write " + trace);
        write_trace_csv(rep, os);
        if (!os.good()) throw IoError("error while writing " + trace);
    }
    return 0;
}

int cmd_profiles(const std::vector<CodecProfile>& extra) {
    std::printf("%-14s %-6s %-6s %-6s\n", "name", "Ie", "Bpl", "d_ms");
    for (const CodecProfile& c : extra)
        std::printf("%-14s %-6.1f %-6.1f %-6.1f (user)\n", c.name.c_str(), c.ie, c.bpl,
                    c.packet_interval_ms);
    for (const CodecProfile& c : builtin_codec_profiles())
        std::printf("%-14s %-6.1f %-6.1f %-6.1f\n", c.name.c_str(), c.ie, c.bpl,
                    c.packet_interval_ms);
    return 0;
}

Method parse_method(const std::string& m) {
    if (m == "analytic") return Method::analytic;
    if (m == "simulate") return Method::simulate;
    if (m == "emulate") return Method::emulate;
    throw std::invalid_argument("unknown method '" + m + "'");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Block erasure coding planner for VoIP conversation quality"};
    app.require_subcommand(1);

    std::string profiles_path;
    app.add_option("--profiles", profiles_path, "JSON file with additional codec profiles");

    // analyze
    auto* analyze = app.add_subcommand("analyze", "closed-form evaluation of one code point");
    int a_n = 5, a_k = 2;
    double a_p = 0.1, a_tol = 1e-4;
    std::string a_codec = "g711-plc", a_out, a_format = "csv", a_method = "analytic";
    std::uint64_t a_blocks = 100000, a_seed = 1;
    bool a_nocoding = false;
    analyze->add_option("--n", a_n, "block size N");
    analyze->add_option("--k", a_k, "redundancy K");
    analyze->add_option("--p", a_p, "network loss probability")->required();
    analyze->add_option("--codec", a_codec, "codec profile name");
    analyze->add_flag("--no-coding", a_nocoding, "no-coding baseline (T = 0)");
    analyze->add_option("--tolerance", a_tol, "truncation tolerance for E[C]");
    analyze->add_option("--method", a_method, "analytic|simulate|emulate");
    analyze->add_option("--blocks", a_blocks, "blocks for simulate/emulate methods");
    analyze->add_option("--seed", a_seed, "RNG seed");
    analyze->add_option("--out", a_out, "write the row to this file");
    analyze->add_option("--format", a_format, "csv|json")->check(CLI::IsMember({"csv", "json"}));

    // validate
    auto* validate = app.add_subcommand("validate", "analytic vs Monte Carlo cross-validation");
    std::string v_points = "10,3;5,2", v_plist = "0,0.05,0.10,0.12,0.15";
    std::uint64_t v_blocks = 1000000, v_seed = 7;
    double v_tol = 1e-4, v_sigma = 4.0;
    validate->add_option("--points", v_points, "code points, e.g. 10,3;5,2");
    validate->add_option("--p-list", v_plist, "comma-separated loss probabilities");
    validate->add_option("--blocks", v_blocks, "simulated blocks per cell");
    validate->add_option("--seed", v_seed, "RNG seed");
    validate->add_option("--tolerance", v_tol, "truncation tolerance for E[C]");
    validate->add_option("--sigma", v_sigma, "agreement gate in standard errors");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "evaluate a grid and write CSV/JSON");
    std::string s_config, s_plist, s_prange, s_points, s_codec, s_method, s_out, s_format;
    double s_tol = -1;
    std::uint64_t s_blocks = 0, s_seed = 0;
    bool s_have_blocks = false, s_have_seed = false;
    sweep->add_option("--config", s_config, "JSON sweep spec (flags win over file values)");
    sweep->add_option("--p-list", s_plist, "comma-separated loss probabilities");
    sweep->add_option("--p-range", s_prange, "start:step:end");
    sweep->add_option("--points", s_points, "code points, e.g. 5,2;10,3;none");
    sweep->add_option("--codec", s_codec, "codec profile name");
    sweep->add_option("--method", s_method, "analytic|simulate|emulate");
    sweep->add_option("--tolerance", s_tol, "truncation tolerance for E[C]");
    sweep->add_option("--blocks", s_blocks, "blocks for simulate/emulate")
        ->trigger_on_parse()
        ->each([&](const std::string&) { s_have_blocks = true; });
    sweep->add_option("--seed", s_seed, "RNG seed")->trigger_on_parse()->each(
        [&](const std::string&) { s_have_seed = true; });
    sweep->add_option("--out", s_out, "output path");
    sweep->add_option("--format", s_format, "csv|json");

    // simulate
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo channel simulation");
    int m_n = 5, m_k = 2;
    double m_p = 0.1;
    std::uint64_t m_blocks = 1000000, m_seed = 1;
    std::string m_hist;
    simulate->add_option("--n", m_n, "block size N");
    simulate->add_option("--k", m_k, "redundancy K");
    simulate->add_option("--p", m_p, "network loss probability")->required();
    simulate->add_option("--blocks", m_blocks, "number of blocks");
    simulate->add_option("--seed", m_seed, "RNG seed");
    simulate->add_option("--histogram-out", m_hist, "write run-length histogram CSV");

    // emulate
    auto* emulate = app.add_subcommand("emulate", "packet-level pipeline emulation");
    int e_n = 5, e_k = 2, e_payload = 32;
    double e_p = 0.1, e_d = 20.0;
    std::uint64_t e_blocks = 100000, e_seed = 1;
    std::string e_trace;
    bool e_udp = false;
    emulate->add_option("--n", e_n, "block size N");
    emulate->add_option("--k", e_k, "redundancy K");
    emulate->add_option("--p", e_p, "network loss probability")->required();
    emulate->add_option("--d", e_d, "packet interval d in ms");
    emulate->add_option("--payload", e_payload, "payload bytes per packet");
    emulate->add_option("--blocks", e_blocks, "number of blocks");
    emulate->add_option("--seed", e_seed, "RNG seed");
    emulate->add_option("--trace", e_trace, "write per-packet trace CSV");
    emulate->add_flag("--udp", e_udp, "run over loopback UDP sockets");

    // profiles
    auto* profiles = app.add_subcommand("profiles", "list codec profiles");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        std::vector<CodecProfile> extra = load_profiles_file(profiles_path);

        if (analyze->parsed()) {
            CodePoint point{CodeParams{a_n, a_k}, !a_nocoding};
            return cmd_analyze(point, a_p, resolve_codec(a_codec, extra), parse_method(a_method),
                               a_tol, a_blocks, a_seed, a_out, a_format);
        }
        if (validate->parsed()) {
            return cmd_validate(parse_points(v_points), parse_p_list(v_plist), v_blocks, v_seed,
                                v_tol, v_sigma);
        }
        if (sweep->parsed()) {
            SweepSpec spec;
            spec.codec = resolve_codec("g711-plc", extra);
            std::string out = "sweep.csv", format = "csv", codec_name = "g711-plc";
            if (!s_config.empty()) {
                std::ifstream in(s_config);
                if (!in) throw IoError("cannot open config: " + s_config);
                nlohmann::json j;
                in >> j;
                if (j.contains("p_values")) spec.p_values = j["p_values"].get<std::vector<double>>();
                if (j.contains("p_range")) {
                    const auto& r = j["p_range"];
                    std::ostringstream rr;
                    rr << r.at("start").get<double>() << ':' << r.at("step").get<double>() << ':'
                       << r.at("end").get<double>();
                    spec.p_values = parse_p_range(rr.str());
                }
                if (j.contains("points")) {
                    for (const auto& pt : j["points"]) {
                        if (pt.value("no_coding", false))
                            spec.code_points.push_back({CodeParams{1, 0}, false});
                        else
                            spec.code_points.push_back(
                                {CodeParams{pt.at("n").get<int>(), pt.at("k").get<int>()}, true});
                    }
                }
                if (j.contains("codec")) codec_name = j["codec"].get<std::string>();
                if (j.contains("method")) spec.method = parse_method(j["method"].get<std::string>());
                if (j.contains("tolerance")) spec.tolerance = j["tolerance"].get<double>();
                if (j.contains("blocks")) spec.num_blocks = j["blocks"].get<std::uint64_t>();
                if (j.contains("seed")) spec.seed = j["seed"].get<std::uint64_t>();
                if (j.contains("out")) out = j["out"].get<std::string>();
                if (j.contains("format")) format = j["format"].get<std::string>();
            }
            // flags win
            if (!s_plist.empty()) spec.p_values = parse_p_list(s_plist);
            if (!s_prange.empty()) spec.p_values = parse_p_range(s_prange);
            if (!s_points.empty()) spec.code_points = parse_points(s_points);
            if (!s_codec.empty()) codec_name = s_codec;
            if (!s_method.empty()) spec.method = parse_method(s_method);
            if (s_tol > 0) spec.tolerance = s_tol;
            if (s_have_blocks) spec.num_blocks = s_blocks;
            if (s_have_seed) spec.seed = s_seed;
            if (!s_out.empty()) out = s_out;
            if (!s_format.empty()) format = s_format;
            spec.codec = resolve_codec(codec_name, extra);

            std::vector<ReportRow> rows = run_sweep(spec);
            write_rows(rows, out, format, spec.codec.name, spec.seed);
            std::printf("wrote %zu rows to %s\n", rows.size(), out.c_str());
            return 0;
        }
        if (simulate->parsed()) {
            return cmd_simulate(CodeParams{m_n, m_k}, m_p, m_blocks, m_seed, m_hist);
        }
        if (emulate->parsed()) {
            EmulationConfig cfg;
            cfg.code = CodeParams{e_n, e_k};
            cfg.loss = LossModel{e_p};
            cfg.packet_interval_ms = e_d;
            cfg.payload_bytes = e_payload;
            cfg.num_blocks = e_blocks;
            cfg.seed = e_seed;
            cfg.keep_packet_records = !e_trace.empty();
            return cmd_emulate(cfg, e_trace, e_udp);
        }
        if (profiles->parsed()) {
            return cmd_profiles(extra);
        }
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return 3;
    } catch (const UdpError& e) {
        std::cerr << "socket error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
