// Command-line driver: stokes_robin_cli <subcommand> --config <file> [--out dir] [--threads n] [--seed s]

#include "stokes_robin/error.hpp"
#include "stokes_robin/experiment.hpp"
#include "stokes_robin/log.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace sr = stokes_robin;

namespace {

constexpr int kExitSolver = 1;
constexpr int kExitConfig = 2;

const char* kUsage =
    "usage: stokes_robin_cli <subcommand> --config <file.toml> [--out <dir>] [--threads <n>] [--seed <u64>]\n"
    "                        [--trace <measured.csv>]   (invert only)\n"
    "subcommands: forward, sensitivity, invert, probe-stability, check-hypotheses, convergence\n";

/// JSON-lines log next to the artifacts; warnings and errors also go to stderr.
class JsonLog {
public:
    JsonLog(const std::filesystem::path& dir, std::string subcommand) : subcommand_(std::move(subcommand)) {
        std::error_code ec;
        std::filesystem::create_directories(dir, ec);
        file_.open(dir / "log.jsonl", std::ios::app);
    }

    void write(sr::LogLevel level, const std::string& message) {
        const char* name = level == sr::LogLevel::Info ? "info" : level == sr::LogLevel::Warning ? "warning" : "error";
        const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        if (file_) {
            file_ << sr::Json{{"level", name}, {"subcommand", subcommand_}, {"elapsed_s", elapsed}, {"message", message}}
                         .dump()
                  << '\n'
                  << std::flush;
        }
        if (level != sr::LogLevel::Info) std::cerr << name << ": " << message << '\n';
    }

private:
    std::string subcommand_;
    std::ofstream file_;
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Robin-coefficient identification for nonstationary Stokes flow"};
    std::string subcommand;
    std::string config_path;
    std::string out_dir = "results";
    int threads = 1;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> trace_path;
    app.add_option("subcommand", subcommand, "forward | sensitivity | invert | probe-stability | check-hypotheses | convergence")
        ->required();
    app.add_option("--config", config_path, "experiment configuration (TOML)")->required();
    app.add_option("--out", out_dir, "output root; artifacts go to <out>/<config hash>");
    app.add_option("--threads", threads, "worker threads for independent solves")->check(CLI::PositiveNumber);
    app.add_option("--seed", seed, "overrides every seed in the configuration");
    app.add_option("--trace", trace_path, "measured trace CSV for invert");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        std::cout << app.help() << kUsage;
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n' << kUsage;
        return kExitConfig;
    }

    bool known = false;
    for (const char* s : sr::kSubcommands) known = known || subcommand == s;
    JsonLog log(out_dir, subcommand);
    sr::set_log_sink([&log](sr::LogLevel level, const std::string& message) { log.write(level, message); });

    if (!known) {
        sr::log_message(sr::LogLevel::Error, "unknown subcommand '" + subcommand + "'");
        std::cerr << kUsage;
        return kExitConfig;
    }
    if (trace_path && subcommand != "invert") {
        sr::log_message(sr::LogLevel::Error, "--trace is only valid for invert");
        std::cerr << kUsage;
        return kExitConfig;
    }

    sr::ExperimentConfig config;
    try {
        config = sr::parse_config(config_path);
        if (seed) {
            sr::override_seeds(config, *seed);
            sr::validate(config);
        }
    } catch (const sr::InputError& e) {
        sr::log_message(sr::LogLevel::Error, std::string("configuration rejected: ") + e.what());
        return kExitConfig;
    }

    try {
        sr::RunOptions options;
        options.out = out_dir;
        options.threads = threads;
        if (trace_path) options.trace_csv = *trace_path;
        const auto dir = sr::run_subcommand(subcommand, config, options);
        sr::log_info("finished " + subcommand + "; artifacts in " + dir.string());
        std::cout << dir.string() << '\n';
        return 0;
    } catch (const sr::InputError& e) {
        sr::log_message(sr::LogLevel::Error, e.what());
        return kExitConfig;
    } catch (const std::exception& e) {
        sr::log_message(sr::LogLevel::Error, e.what());
        return kExitSolver;
    }
}
