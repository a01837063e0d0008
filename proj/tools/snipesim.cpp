#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "snipe/config.hpp"
#include "snipe/scenario.hpp"

using namespace snipe;

namespace {

SimConfig make_config(const std::string& config_path,
                      const std::vector<std::string>& overrides,
                      const std::string& out_dir) {
    SimConfig cfg;
    if (!config_path.empty()) cfg = load_config_file(config_path);
    apply_overrides(cfg, overrides);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    cfg.validate();
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cache side-channel simulator"};
    app.require_subcommand(1);

    std::string config_path, out_dir, figure_name;
    std::vector<std::string> overrides;
    bool inject_fault = false;
    bool print_config = false;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "config file (key=value lines)");
        cmd->add_option("--set", overrides, "override, key=value (repeatable)");
        cmd->add_option("--out", out_dir, "output directory");
    };

    CLI::App* run = app.add_subcommand("run", "run a scenario and write results");
    add_common(run);
    run->add_flag("--print-config", print_config, "echo the effective config");

    CLI::App* figures = app.add_subcommand("figures", "emit plot data as JSON");
    add_common(figures);
    figures->add_option("--name", figure_name, "aes_last | wait_flush | flush_count_tot")
        ->required();

    CLI::App* validate = app.add_subcommand("validate", "check model invariants");
    validate->add_flag("--inject-fault", inject_fault,
                       "mis-set the insertion age; the checks must catch it");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            const SimConfig cfg = make_config(config_path, overrides, out_dir);
            if (print_config)
                for (const auto& [k, v] : cfg.items()) std::cout << k << "=" << v << "\n";
            const ScenarioResult res = run_scenario(cfg);
            write_result(res, cfg.out_dir);
            std::cout << res.summary_text();
        } else if (figures->parsed()) {
            const SimConfig cfg = make_config(config_path, overrides, out_dir);
            const Json j = figure_data(figure_name, cfg);
            if (!out_dir.empty()) {
                std::filesystem::create_directories(out_dir);
                std::ofstream f(out_dir + "/" + figure_name + ".json", std::ios::binary);
                f << j.dump(2) << "\n";
            }
            std::cout << j.dump(2) << "\n";
        } else if (validate->parsed()) {
            const ValidationReport rep = validate_policies(inject_fault);
            std::cout << rep.text();
            if (!rep.all_pass()) {
                std::cerr << "validation failed\n";
                return 1;
            }
        }
    } catch (const ConfigError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
