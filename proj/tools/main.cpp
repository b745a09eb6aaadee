// tapsim - scenario runner and analysis CLI for the camera security testbed.
//
//   tapsim list
//   tapsim show <scenario>
//   tapsim run <scenario|file.json> [--seed N] [--out DIR]
//   tapsim analyze extract <capture.jsonl>
//   tapsim analyze histogram <capture.jsonl> [--size N] [--bin S] [--origin MS]
//                            [--src NODE] [--csv FILE]
//   tapsim cvss score <vector>
//
// Exit codes: 0 success, 1 scenario check failed, 2 bad input or config.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "tapsim/attacker.hpp"
#include "tapsim/cvss.hpp"
#include "tapsim/scenario.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitBadInput = 2;

tapsim::ScenarioConfig load_config(const std::string& ref) {
    if (tapsim::is_builtin_scenario(ref)) return tapsim::builtin_scenario(ref);
    std::ifstream f(ref, std::ios::binary);
    if (!f) throw tapsim::ConfigError("", "no such scenario or file: " + ref);
    std::ostringstream buf;
    buf << f.rdbuf();
    return tapsim::ScenarioConfig::from_json_text(buf.str());
}

int cmd_run(const std::string& ref, std::optional<std::uint64_t> seed, std::string out_dir) {
    auto cfg = load_config(ref);
    if (seed) {
        cfg.seed = *seed;
        cfg.validate();
    }
    if (out_dir.empty()) out_dir = (std::filesystem::path("runs") / cfg.name).string();
    const auto report = tapsim::run_scenario(cfg, out_dir);
    std::cout << report.to_text();
    std::cout << "artifacts: " << out_dir << "\n";
    return report.all_checks_pass() ? kExitOk : kExitCheckFailed;
}

int cmd_extract(const std::string& capture_path) {
    const auto capture = tapsim::CaptureFile::load(capture_path);
    const auto result = tapsim::extract_media(capture);
    std::cout << "records_considered: " << result.candidate_records << "\n";
    std::cout << "flows: " << result.flows << "\n";
    std::cout << "frames: " << result.frames.size() << "\n";
    if (result.no_valid_frames) {
        std::cout << "diagnostic: NoValidFrames\n";
    } else {
        std::size_t bytes = 0;
        for (const auto& f : result.frames) bytes += f.payload.size();
        std::cout << "payload_bytes: " << bytes << "\n";
    }
    return kExitOk;
}

int cmd_histogram(const std::string& capture_path, std::size_t size, int bin_s,
                  tapsim::VirtualTime origin, const std::string& src, const std::string& csv) {
    const auto capture = tapsim::CaptureFile::load(capture_path);
    const auto hist = tapsim::motion_histogram(capture, size, bin_s, origin, src);
    if (!csv.empty()) {
        std::ofstream f(csv, std::ios::binary);
        if (!f) {
            std::cerr << "cannot write " << csv << "\n";
            return kExitBadInput;
        }
        f << hist.to_csv();
        std::cout << "bins: " << hist.bins.size() << "\n";
        std::cout << "total: " << hist.total() << "\n";
        std::cout << "csv: " << csv << "\n";
    } else {
        std::cout << hist.to_csv();
    }
    return kExitOk;
}

int cmd_cvss(const std::string& vector) {
    const auto v = tapsim::cvss::parse_vector(vector);
    const auto score = tapsim::cvss::base_score(v);
    std::cout.setf(std::ios::fixed);
    std::cout.precision(1);
    std::cout << score.value << " " << tapsim::cvss::to_string(score.severity) << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"IP camera security testbed: scenarios, attacks, countermeasure"};
    app.require_subcommand(1);

    auto* list = app.add_subcommand("list", "List built-in scenarios");

    std::string show_name;
    auto* show = app.add_subcommand("show", "Print a built-in scenario's config as JSON");
    show->add_option("name", show_name, "scenario name")->required();

    std::string run_ref;
    std::string run_out;
    std::optional<std::uint64_t> run_seed;
    auto* run = app.add_subcommand("run", "Run a scenario and write its artifacts");
    run->add_option("scenario", run_ref, "built-in name or config file")->required();
    run->add_option("--seed", run_seed, "override the scenario seed");
    run->add_option("--out", run_out, "artifact directory (default runs/<name>)");

    auto* analyze = app.add_subcommand("analyze", "Analyze a capture file");
    analyze->require_subcommand(1);
    std::string extract_path;
    auto* extract = analyze->add_subcommand("extract", "Reconstruct media from a capture");
    extract->add_option("capture", extract_path, "capture .jsonl")->required();

    std::string hist_path, hist_src, hist_csv;
    std::size_t hist_size = 523;
    int hist_bin = 600;
    tapsim::VirtualTime hist_origin = 0;
    auto* hist = analyze->add_subcommand("histogram", "Bin fixed-size TLS records over time");
    hist->add_option("capture", hist_path, "capture .jsonl")->required();
    hist->add_option("--size", hist_size, "record size to match (default 523)");
    hist->add_option("--bin", hist_bin, "bin width in seconds (default 600)");
    hist->add_option("--origin", hist_origin, "origin in virtual ms (default 0)");
    hist->add_option("--src", hist_src, "restrict to one source node");
    hist->add_option("--csv", hist_csv, "write CSV here instead of stdout");

    auto* cvss_cmd = app.add_subcommand("cvss", "CVSS v3.1 utilities");
    cvss_cmd->require_subcommand(1);
    std::string cvss_vector;
    auto* score = cvss_cmd->add_subcommand("score", "Score a base vector");
    score->add_option("vector", cvss_vector, "e.g. CVSS:3.1/AV:A/AC:L/PR:N/UI:N/S:U/C:H/I:N/A:N")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitBadInput;
    }

    try {
        if (*list) {
            for (const auto& name : tapsim::builtin_scenario_names()) std::cout << name << "\n";
            return kExitOk;
        }
        if (*show) {
            std::cout << tapsim::builtin_scenario(show_name).to_json_text();
            return kExitOk;
        }
        if (*run) return cmd_run(run_ref, run_seed, run_out);
        if (*extract) return cmd_extract(extract_path);
        if (*hist) return cmd_histogram(hist_path, hist_size, hist_bin, hist_origin, hist_src,
                                        hist_csv);
        if (*score) return cmd_cvss(cvss_vector);
    } catch (const tapsim::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitBadInput;
    } catch (const tapsim::cvss::ParseError& e) {
        std::cerr << "vector error: " << e.what() << "\n";
        return kExitBadInput;
    } catch (const tapsim::CaptureError& e) {
        std::cerr << "capture error: " << e.what() << "\n";
        return kExitBadInput;
    } catch (const tapsim::BadBinWidth& e) {
        std::cerr << "histogram error: " << e.what() << "\n";
        return kExitBadInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitBadInput;
    }
    return kExitBadInput;
}
