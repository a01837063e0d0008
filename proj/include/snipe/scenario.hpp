#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "snipe/config.hpp"

namespace snipe {

using Json = nlohmann::ordered_json;

struct ScenarioResult {
    Json summary;
    std::string series_csv;
    std::string observations_csv;

    std::string summary_text() const { return summary.dump(2) + "\n"; }
};

// Run the scenario selected by cfg.scenario. Deterministic: equal configs
// produce byte-identical results.
ScenarioResult run_scenario(const SimConfig& cfg);

// Write summary.json, series.csv and observations.csv under out_dir.
void write_result(const ScenarioResult& r, const std::string& out_dir);

// Data behind the shipped plots: aes_last, wait_flush, flush_count_tot.
Json figure_data(const std::string& name, const SimConfig& cfg);

struct ValidationReport {
    struct Check {
        std::string name;
        bool pass;
        std::string detail;
    };
    std::vector<Check> checks;

    bool all_pass() const;
    std::string text() const;
};

// Replacement-policy and channel invariants checked against a live model.
// inject_fault deliberately mis-configures the insertion age to prove the
// checks can fail.
ValidationReport validate_policies(bool inject_fault = false);

}  // namespace snipe
