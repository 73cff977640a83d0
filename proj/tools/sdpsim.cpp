// sdpsim: run one scenario, or check every bundled scenario in a directory.

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "sdpmtd/error.hpp"
#include "sdpmtd/report.hpp"

namespace fs = std::filesystem;
using namespace sdpmtd;

namespace {

void print_check(std::ostream& os, const std::string& scope, const CheckResult& c) {
    os << (c.passed ? "PASS " : "FAIL ") << scope << ' ' << c.name << ": " << c.detail << " [" << c.cites << "]\n";
}

std::string read_file(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

// The config text minus comments, blank lines, name/mode and the expect.*
// assertions (those describe the outcome, not the scenario).
std::string comparable_body(const std::string& text) {
    std::istringstream in(text);
    std::string line, out;
    while (std::getline(in, line)) {
        auto b = line.find_first_not_of(" \t");
        if (b == std::string::npos || line[b] == '#') continue;
        line = line.substr(b);
        if (line.rfind("scenario.name", 0) == 0 || line.rfind("scenario.mode", 0) == 0 ||
            line.rfind("expect.", 0) == 0)
            continue;
        out += line + '\n';
    }
    return out;
}

int cmd_run(const std::string& path, std::optional<std::uint64_t> seed, const std::string& out,
            const std::string& trace, const std::string& mode) {
    auto cfg = load_scenario(path);
    if (!mode.empty()) cfg.mode = *parse_mode(mode);
    auto report = run(cfg, seed);
    auto csv = format_csv(report);
    if (out.empty()) {
        std::cout << csv;
    } else {
        emit_csv(report, out);
    }
    if (!trace.empty()) write_text(trace, report.trace);
    for (const auto& c : report.checks) print_check(std::cerr, report.scenario, c);
    return report.passed() ? 0 : 1;
}

int cmd_check(const std::string& dir) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.path().extension() == ".cfg") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
        std::cerr << "no .cfg files in " << dir << '\n';
        return 1;
    }

    bool ok = true;
    auto record = [&](const std::string& scope, const CheckResult& c) {
        ok = ok && c.passed;
        print_check(std::cout, scope, c);
    };

    std::map<std::string, Report> reports;
    std::map<std::string, std::string> bodies;
    for (const auto& f : files) {
        auto cfg = load_scenario(f.string());
        auto first = run(cfg);
        auto second = run(cfg);
        for (const auto& c : first.checks) record(cfg.name, c);
        bool same = format_csv(first) == format_csv(second) && first.trace == second.trace;
        record(cfg.name, CheckResult{"determinism", same, same ? "csv and trace identical" : "outputs differ",
                                     "criterion: determinism"});
        bodies[cfg.name] = comparable_body(read_file(f));
        reports.emplace(cfg.name, std::move(first));
    }

    // sdp/baseline pairs must differ only in mode
    for (const auto& [name, body] : bodies) {
        auto pos = name.find("_sdp_");
        if (pos == std::string::npos) continue;
        std::string twin = name.substr(0, pos) + "_baseline_" + name.substr(pos + 5);
        auto it = bodies.find(twin);
        if (it == bodies.end()) continue;
        bool same = it->second == body;
        record(name + "+" + twin, CheckResult{"pair_differs_only_in_mode", same, same ? "identical" : "bodies differ",
                                              "invariant: baseline and SDP differ only by perimeter configuration"});
    }

    auto scan_pair = [&](const std::string& sdp, const std::string& base) {
        auto a = reports.find(sdp);
        auto b = reports.find(base);
        if (a == reports.end() || b == reports.end()) return;
        const auto& sm = a->second.metrics;
        const auto& bm = b->second.metrics;
        bool pass = sm.scan && bm.scan && sm.ports_open() == 0 && bm.ports_open() == 1;
        std::string detail = "sdp_open=" + std::to_string(sm.ports_open()) +
                             " baseline_open=" + std::to_string(bm.ports_open());
        record(sdp + "+" + base, CheckResult{"scan_blackening", pass, detail, "criterion: port-scan blackening"});
    };
    scan_pair("fig1_sdp_scan", "fig1_baseline_scan");

    std::cout << (ok ? "ALL CHECKS PASSED" : "SOME CHECKS FAILED") << '\n';
    return ok ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"SDP + MTD discrete-event simulator"};
    app.require_subcommand(1);

    std::string cfg_path, out_path, trace_path, mode;
    std::optional<std::uint64_t> seed;
    auto* run_cmd = app.add_subcommand("run", "run one scenario and emit CSV");
    run_cmd->add_option("scenario", cfg_path, "scenario .cfg file")->required();
    run_cmd->add_option("--seed", seed, "override scenario seed");
    run_cmd->add_option("--out", out_path, "CSV output path (default stdout)");
    run_cmd->add_option("--trace", trace_path, "event trace output path");
    run_cmd->add_option("--mode", mode, "override mode")->check(CLI::IsMember({"sdp", "baseline"}));

    std::string dir;
    auto* check_cmd = app.add_subcommand("check", "run all scenarios in a directory and assert their checks");
    check_cmd->add_option("dir", dir, "scenario directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd) return cmd_run(cfg_path, seed, out_path, trace_path, mode);
        return cmd_check(dir);
    } catch (const Error& e) {
        std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << '\n';
        return 2;
    }
}
