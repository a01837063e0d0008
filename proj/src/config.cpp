#include "snipe/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace snipe {

namespace {

struct Field {
    std::function<void(SimConfig&, const std::string&)> set;
    std::function<std::string(const SimConfig&)> get;
};

template <typename T>
T parse_num(const std::string& key, const std::string& v) {
    std::istringstream in(v);
    T out{};
    in >> out;
    if (in.fail() || !in.eof())
        throw ConfigError("CONFIG_INVALID: bad value '" + v + "' for key '" + key + "'");
    return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("CONFIG_INVALID: bad value '" + v + "' for key '" + key + "'");
}

// Declaration-ordered field table.
const std::vector<std::pair<std::string, Field>>& fields() {
    static const std::vector<std::pair<std::string, Field>> table = [] {
        std::vector<std::pair<std::string, Field>> t;
        auto str = [&t](const char* key, std::string SimConfig::* mem) {
            t.push_back({key,
                         {[key, mem](SimConfig& c, const std::string& v) { c.*mem = v; },
                          [mem](const SimConfig& c) { return c.*mem; }}});
        };
        auto num = [&t](const char* key, auto SimConfig::* mem) {
            t.push_back(
                {key,
                 {[key, mem](SimConfig& c, const std::string& v) {
                      c.*mem = parse_num<std::remove_reference_t<decltype(c.*mem)>>(key, v);
                  },
                  [mem](const SimConfig& c) {
                      std::ostringstream o;
                      o << c.*mem;
                      return o.str();
                  }}});
        };
        auto boolean = [&t](const char* key, bool SimConfig::* mem) {
            t.push_back({key,
                         {[key, mem](SimConfig& c, const std::string& v) {
                              c.*mem = parse_bool(key, v);
                          },
                          [mem](const SimConfig& c) {
                              return std::string(c.*mem ? "true" : "false");
                          }}});
        };

        str("scenario", &SimConfig::scenario);
        num("seed", &SimConfig::seed);
        str("out_dir", &SimConfig::out_dir);
        num("cores", &SimConfig::cores);
        num("abort_delivery_latency", &SimConfig::abort_delivery_latency);
        num("spontaneous_rate", &SimConfig::spontaneous_rate);
        num("l1_sets", &SimConfig::l1_sets);
        num("l1_ways", &SimConfig::l1_ways);
        num("l1_latency", &SimConfig::l1_latency);
        num("l2_sets", &SimConfig::l2_sets);
        num("l2_ways", &SimConfig::l2_ways);
        num("l2_latency", &SimConfig::l2_latency);
        num("l3_sets", &SimConfig::l3_sets);
        num("l3_ways", &SimConfig::l3_ways);
        num("l3_latency", &SimConfig::l3_latency);
        num("mem_latency", &SimConfig::mem_latency);
        num("l3_insert_age", &SimConfig::l3_insert_age);
        str("l3_hit_update", &SimConfig::l3_hit_update);
        str("victim_key", &SimConfig::victim_key);
        num("ops", &SimConfig::ops);
        num("arrival_mean", &SimConfig::arrival_mean);
        num("arrival_jitter", &SimConfig::arrival_jitter);
        num("aes_jitter_sigma", &SimConfig::aes_jitter_sigma);
        num("rsa_bits", &SimConfig::rsa_bits);
        str("shoot_method", &SimConfig::shoot_method);
        num("wait_time", &SimConfig::wait_time);
        num("stakeout_runs", &SimConfig::stakeout_runs);
        num("shoot_margin", &SimConfig::shoot_margin);
        num("recovery_delay", &SimConfig::recovery_delay);
        num("rearm_holdoff", &SimConfig::rearm_holdoff);
        boolean("adaptive_wait", &SimConfig::adaptive_wait);
        num("target_miss_rate", &SimConfig::target_miss_rate);
        num("calib_trials", &SimConfig::calib_trials);
        num("calib_window", &SimConfig::calib_window);
        num("calib_detect_target", &SimConfig::calib_detect_target);
        str("fr_wait_limits", &SimConfig::fr_wait_limits);
        num("fr_wait_unit", &SimConfig::fr_wait_unit);
        num("fr_windows", &SimConfig::fr_windows);
        return t;
    }();
    return table;
}

std::string trim(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

}  // namespace

void apply_config_line(SimConfig& cfg, const std::string& line) {
    const auto eq = line.find('=');
    if (eq == std::string::npos)
        throw ConfigError("CONFIG_INVALID: expected key=value, got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    for (const auto& [name, field] : fields()) {
        if (name == key) {
            field.set(cfg, value);
            return;
        }
    }
    throw ConfigError("CONFIG_INVALID: unknown key '" + key + "'");
}

SimConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("CONFIG_INVALID: cannot open '" + path + "'");
    SimConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        try {
            apply_config_line(cfg, line);
        } catch (const ConfigError& e) {
            throw ConfigError(std::string(e.what()) + " (" + path + ":" +
                              std::to_string(lineno) + ")");
        }
    }
    return cfg;
}

void apply_overrides(SimConfig& cfg, const std::vector<std::string>& overrides) {
    for (const auto& o : overrides) apply_config_line(cfg, o);
}

void SimConfig::validate() const {
    static const char* scenarios[] = {"aes_noiseless", "rsa_noiseless", "rsa_noisy",
                                      "tsx_calibration", "flush_reload_sweep"};
    if (std::find(std::begin(scenarios), std::end(scenarios), scenario) ==
        std::end(scenarios))
        throw ConfigError("CONFIG_INVALID: unknown scenario '" + scenario + "'");
    if (l3_hit_update != "age_down" && l3_hit_update != "reset_zero")
        throw ConfigError("CONFIG_INVALID: l3_hit_update must be age_down or reset_zero");
    if (shoot_method != "access" && shoot_method != "flush")
        throw ConfigError("CONFIG_INVALID: shoot_method must be access or flush");
    if (victim_key.size() != 32 ||
        victim_key.find_first_not_of("0123456789abcdefABCDEF") != std::string::npos)
        throw ConfigError("CONFIG_INVALID: victim_key must be 32 hex digits");
    if (cores < 2) throw ConfigError("CONFIG_INVALID: need at least two cores");
    try {
        machine_config().geometry.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("CONFIG_INVALID: ") + e.what());
    }
}

MachineConfig SimConfig::machine_config() const {
    MachineConfig mc;
    mc.geometry.l1 = {l1_sets, l1_ways, l1_latency};
    mc.geometry.l2 = {l2_sets, l2_ways, l2_latency};
    mc.geometry.l3 = {l3_sets, l3_ways, l3_latency};
    mc.geometry.mem_latency = mem_latency;
    mc.geometry.l3_insert_age = l3_insert_age;
    mc.geometry.l3_hit_update =
        l3_hit_update == "reset_zero" ? L3HitUpdate::RESET_ZERO : L3HitUpdate::AGE_DOWN;
    mc.cores = cores;
    mc.abort_delivery_latency = abort_delivery_latency;
    mc.spontaneous_rate = spontaneous_rate;
    mc.seed = seed;
    return mc;
}

std::vector<std::pair<std::string, std::string>> SimConfig::items() const {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& [name, field] : fields()) out.push_back({name, field.get(*this)});
    return out;
}

}  // namespace snipe
