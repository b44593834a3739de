#include "mmdgm/commands.hpp"
#include "mmdgm/metrics.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

constexpr const char* kUsage =
    "usage: mmdgm <command> [--config FILE] [--key value ...]\n"
    "\n"
    "commands:\n"
    "  train     train a model (joint max-margin when C > 0)\n"
    "  eval      error rate of a checkpoint on the test set\n"
    "  generate  write a PGM grid of ancestral samples\n"
    "  impute    iterative missing-value inference report\n"
    "  baseline  two-stage run: unsupervised training + Pegasos SVM\n"
    "  csweep    train one model per C value, report error and bound\n"
    "\n"
    "Flags mirror config-file keys (`key = value` lines, '#' comments) and\n"
    "override them. MMDGM_SEED overrides the seed.\n";

std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw mmdgm::IoError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

int main(int argc, char** argv)
{
    using namespace mmdgm;

    if (argc < 2) {
        std::cerr << kUsage;
        return 1;
    }
    const std::string command = argv[1];
    if (command == "--help" || command == "-h" || command == "help") {
        std::cout << kUsage;
        return 0;
    }
    if (command != "train" && command != "eval" && command != "generate" &&
        command != "impute" && command != "baseline" && command != "csweep") {
        std::cerr << "unknown command '" << command << "'\n\n" << kUsage;
        return 1;
    }

    std::string config_text;
    std::vector<std::pair<std::string, std::string>> overrides;
    for (int i = 2; i < argc; ++i) {
        std::string arg = argv[i];
        if (arg.rfind("--", 0) != 0) {
            std::cerr << "expected --key, got '" << arg << "'\n";
            return 1;
        }
        arg = arg.substr(2);
        if (i + 1 >= argc) {
            std::cerr << "flag --" << arg << " is missing its value\n";
            return 1;
        }
        const std::string value = argv[++i];
        if (arg == "config") {
            try {
                config_text = read_file(value);
            } catch (const std::exception& e) {
                std::cerr << e.what() << "\n";
                return 1;
            }
        } else {
            overrides.emplace_back(arg, value);
        }
    }
    if (const char* env_seed = std::getenv("MMDGM_SEED"))
        overrides.emplace_back("seed", env_seed);

    try {
        RunConfig cfg = parse_config(config_text, overrides);
        cfg.command = command;

        if (command == "train") {
            std::vector<EpochMetrics> metrics;
            cmd_train(cfg, &metrics);
            if (!metrics.empty()) {
                const EpochMetrics& last = metrics.back();
                std::cout << "final epoch " << last.epoch
                          << ": objective " << format_double(last.objective)
                          << ", bound " << format_double(last.bound_mean)
                          << ", train error " << format_double(last.train_error) << "\n";
            }
            std::cout << "artifacts in " << cfg.out_dir << "\n";
        } else if (command == "eval") {
            std::cout << "error_rate " << format_double(cmd_eval(cfg)) << "\n";
        } else if (command == "generate") {
            std::cout << "wrote " << cmd_generate(cfg) << "\n";
        } else if (command == "impute") {
            std::cout << "mean missing-pixel MSE " << format_double(cmd_impute(cfg)) << "\n";
            std::cout << "artifacts in " << cfg.out_dir << "\n";
        } else if (command == "baseline") {
            std::cout << "error_rate " << format_double(cmd_baseline(cfg)) << "\n";
        } else if (command == "csweep") {
            const std::vector<CSweepRow> rows = run_csweep(cfg, cfg.csweep_values);
            for (const CSweepRow& r : rows)
                std::cout << "C " << format_double(r.C) << ": error_rate "
                          << format_double(r.error_rate) << ", lower_bound "
                          << format_double(r.lower_bound) << "\n";
            std::cout << "report in " << cfg.out_dir << "/csweep.csv\n";
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
