#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "localcoin/sim.hpp"

namespace localcoin::config {

using nlohmann::json;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Scenario files are JSON whose keys mirror the ScenarioConfig fields.
// Unknown keys are rejected so typos surface as errors, not silent defaults.

inline void check_keys(const json& j, std::initializer_list<const char*> allowed,
                       const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) ok = true;
        if (!ok) throw ConfigError("unknown key '" + it.key() + "' in " + where);
    }
}

inline geom::Placement parse_placement(const json& j) {
    check_keys(j, {"kind", "n", "grid_weights", "torus"}, "placement");
    geom::Placement p;
    std::string kind = j.value("kind", "uniform");
    if (kind == "uniform")
        p.kind = geom::PlacementKind::uniform;
    else if (kind == "grid_poisson")
        p.kind = geom::PlacementKind::grid_poisson;
    else
        throw ConfigError("placement.kind must be uniform or grid_poisson");
    p.n = j.value("n", 0);
    p.torus = j.value("torus", false);
    if (j.contains("grid_weights")) {
        const auto& g = j.at("grid_weights");
        if (!g.is_array() || g.size() != 10)
            throw ConfigError("placement.grid_weights must be a 10x10 array");
        for (size_t y = 0; y < 10; ++y) {
            if (!g[y].is_array() || g[y].size() != 10)
                throw ConfigError("placement.grid_weights must be a 10x10 array");
            for (size_t x = 0; x < 10; ++x) p.grid_weights[y][x] = g[y][x].get<double>();
        }
    }
    return p;
}

inline sim::MobilityModel parse_mobility(const json& j) {
    check_keys(j, {"kind", "speed_min_kmh", "speed_max_kmh", "area_km2", "trace_path"},
               "mobility");
    sim::MobilityModel m;
    std::string kind = j.value("kind", "static");
    if (kind == "static")
        m.kind = sim::MobilityKind::static_placement;
    else if (kind == "waypoint")
        m.kind = sim::MobilityKind::waypoint;
    else if (kind == "trace_replay")
        m.kind = sim::MobilityKind::trace_replay;
    else
        throw ConfigError("mobility.kind must be static, waypoint or trace_replay");
    m.speed_min_kmh = j.value("speed_min_kmh", 0.5);
    m.speed_max_kmh = j.value("speed_max_kmh", 1.5);
    m.area_km2 = j.value("area_km2", 1.0);
    m.trace_path = j.value("trace_path", std::string{});
    if (m.kind == sim::MobilityKind::waypoint) {
        if (!(m.speed_min_kmh > 0.0) || m.speed_max_kmh < m.speed_min_kmh)
            throw ConfigError("mobility: waypoint speeds must be positive and ordered");
    }
    if (m.kind == sim::MobilityKind::trace_replay && m.trace_path.empty())
        throw ConfigError("mobility: trace_replay needs trace_path");
    return m;
}

inline adversary::AttackPlan parse_attack_plan(const json& j) {
    check_keys(j,
               {"attacker", "colluders", "colluder_count", "fake_tx_count",
                "first_fake_s", "inter_fake_delay_s", "colluder_policy", "region_band",
                "pinned_receivers", "attacker_path"},
               "adversary_plan");
    adversary::AttackPlan p;
    p.attacker = j.value("attacker", 0ULL);
    if (j.contains("colluders"))
        for (const auto& c : j.at("colluders")) p.colluders.push_back(c.get<UserId>());
    p.colluder_count = j.value("colluder_count", 0);
    p.fake_tx_count = j.value("fake_tx_count", 2);
    p.first_fake_s = j.value("first_fake_s", 1.0);
    p.inter_fake_delay_s = j.value("inter_fake_delay_s", 10.0);
    std::string policy = j.value("colluder_policy", "forward_all");
    if (policy == "forward_all")
        p.colluder_policy = ColluderPolicy::forward_all;
    else if (policy == "suppress_cross_region")
        p.colluder_policy = ColluderPolicy::suppress_cross_region;
    else
        throw ConfigError("adversary_plan.colluder_policy unknown: " + policy);
    if (j.contains("region_band")) {
        const auto& b = j.at("region_band");
        if (!b.is_array() || b.size() != 2)
            throw ConfigError("adversary_plan.region_band must be [lo, hi]");
        p.region_band = {b[0].get<double>(), b[1].get<double>()};
    }
    if (j.contains("pinned_receivers"))
        for (const auto& r : j.at("pinned_receivers"))
            p.pinned_receivers.push_back(r.get<UserId>());
    if (j.contains("attacker_path"))
        for (const auto& leg : j.at("attacker_path"))
            p.attacker_path.push_back(
                {leg.at("tick").get<std::uint64_t>(),
                 Location{leg.at("x").get<double>(), leg.at("y").get<double>()}});
    return p;
}

inline sim::ScenarioConfig parse_scenario(const json& j) {
    check_keys(j,
               {"params", "placement", "mobility", "duration", "tick", "tx_workload",
                "adversary_plan", "seed", "initial_balance", "tn_size", "tn_mutual",
                "genesis_replication"},
               "scenario");
    sim::ScenarioConfig cfg;
    if (j.contains("params")) {
        const auto& p = j.at("params");
        check_keys(p, {"mTr", "BS", "mVu", "aVd", "r_cov", "r_cov_m", "strict_threshold"},
                   "params");
        cfg.params.mTr = p.value("mTr", 0);
        cfg.params.BS = p.value("BS", 1);
        cfg.params.mVu = p.value("mVu", 1);
        cfg.params.aVd = p.value("aVd", 0.0);
        cfg.params.strict_threshold = p.value("strict_threshold", false);
        if (p.contains("r_cov")) cfg.params.r_cov = p.at("r_cov").get<double>();
    }
    if (j.contains("placement")) cfg.placement = parse_placement(j.at("placement"));
    if (j.contains("mobility")) cfg.mobility = parse_mobility(j.at("mobility"));
    // Coverage in meters is a convenience; it needs the waypoint area scale.
    if (j.contains("params") && j.at("params").contains("r_cov_m")) {
        double side_m = std::sqrt(cfg.mobility.area_km2) * 1000.0;
        cfg.params.r_cov = j.at("params").at("r_cov_m").get<double>() / side_m;
    }
    cfg.duration_s = j.value("duration", 100.0);
    cfg.tick_s = j.value("tick", 1.0);
    if (j.contains("tx_workload")) {
        const auto& w = j.at("tx_workload");
        check_keys(w,
                   {"per_user_count", "arrival_law", "poisson_rate_per_tick", "amount",
                    "trf", "bf"},
                   "tx_workload");
        cfg.tx_workload.per_user_count = w.value("per_user_count", 0);
        std::string law = w.value("arrival_law", "uniform");
        if (law == "uniform")
            cfg.tx_workload.arrival_law = sim::ArrivalLaw::uniform;
        else if (law == "poisson")
            cfg.tx_workload.arrival_law = sim::ArrivalLaw::poisson;
        else
            throw ConfigError("tx_workload.arrival_law must be uniform or poisson");
        cfg.tx_workload.poisson_rate_per_tick = w.value("poisson_rate_per_tick", 0.0);
        cfg.tx_workload.amount = w.value("amount", cfg.tx_workload.amount);
        cfg.tx_workload.trf = w.value("trf", cfg.tx_workload.trf);
        cfg.tx_workload.bf = w.value("bf", cfg.tx_workload.bf);
    }
    if (j.contains("adversary_plan"))
        cfg.adversary_plan = parse_attack_plan(j.at("adversary_plan"));
    cfg.seed = j.value("seed", 1ULL);
    cfg.initial_balance = j.value("initial_balance", cfg.initial_balance);
    cfg.tn_size = j.value("tn_size", cfg.tn_size);
    cfg.tn_mutual = j.value("tn_mutual", cfg.tn_mutual);
    std::string rep = j.value("genesis_replication", "automatic");
    if (rep == "automatic")
        cfg.genesis_replication = sim::GenesisReplication::automatic;
    else if (rep == "full")
        cfg.genesis_replication = sim::GenesisReplication::full;
    else if (rep == "own")
        cfg.genesis_replication = sim::GenesisReplication::own;
    else
        throw ConfigError("genesis_replication must be automatic, full or own");
    return cfg;
}

inline sim::ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file: " + path);
    json j;
    try {
        f >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError("config parse error in " + path + ": " + e.what());
    }
    return parse_scenario(j);
}

inline json scenario_to_json(const sim::ScenarioConfig& cfg) {
    json j;
    j["params"] = {{"mTr", cfg.params.mTr},
                   {"BS", cfg.params.BS},
                   {"mVu", cfg.params.mVu},
                   {"aVd", cfg.params.aVd},
                   {"r_cov", cfg.params.r_cov},
                   {"strict_threshold", cfg.params.strict_threshold}};
    j["placement"] = {
        {"kind", cfg.placement.kind == geom::PlacementKind::uniform ? "uniform"
                                                                    : "grid_poisson"},
        {"n", cfg.placement.n},
        {"torus", cfg.placement.torus}};
    if (cfg.placement.kind == geom::PlacementKind::grid_poisson) {
        json g = json::array();
        for (const auto& row : cfg.placement.grid_weights) {
            json r = json::array();
            for (double w : row) r.push_back(w);
            g.push_back(r);
        }
        j["placement"]["grid_weights"] = g;
    }
    const char* mk = cfg.mobility.kind == sim::MobilityKind::static_placement ? "static"
                     : cfg.mobility.kind == sim::MobilityKind::waypoint      ? "waypoint"
                                                                             : "trace_replay";
    j["mobility"] = {{"kind", mk},
                     {"speed_min_kmh", cfg.mobility.speed_min_kmh},
                     {"speed_max_kmh", cfg.mobility.speed_max_kmh},
                     {"area_km2", cfg.mobility.area_km2}};
    if (!cfg.mobility.trace_path.empty()) j["mobility"]["trace_path"] = cfg.mobility.trace_path;
    j["duration"] = cfg.duration_s;
    j["tick"] = cfg.tick_s;
    j["tx_workload"] = {
        {"per_user_count", cfg.tx_workload.per_user_count},
        {"arrival_law",
         cfg.tx_workload.arrival_law == sim::ArrivalLaw::uniform ? "uniform" : "poisson"},
        {"poisson_rate_per_tick", cfg.tx_workload.poisson_rate_per_tick},
        {"amount", cfg.tx_workload.amount},
        {"trf", cfg.tx_workload.trf},
        {"bf", cfg.tx_workload.bf}};
    if (cfg.adversary_plan) {
        const auto& p = *cfg.adversary_plan;
        json a;
        a["attacker"] = p.attacker;
        if (!p.colluders.empty()) a["colluders"] = p.colluders;
        a["colluder_count"] = p.colluder_count;
        a["fake_tx_count"] = p.fake_tx_count;
        a["first_fake_s"] = p.first_fake_s;
        a["inter_fake_delay_s"] = p.inter_fake_delay_s;
        a["colluder_policy"] = p.colluder_policy == ColluderPolicy::forward_all
                                   ? "forward_all"
                                   : "suppress_cross_region";
        if (p.region_band) a["region_band"] = {p.region_band->first, p.region_band->second};
        if (!p.pinned_receivers.empty()) a["pinned_receivers"] = p.pinned_receivers;
        if (!p.attacker_path.empty()) {
            json path = json::array();
            for (const auto& [t, loc] : p.attacker_path)
                path.push_back({{"tick", t}, {"x", loc.x}, {"y", loc.y}});
            a["attacker_path"] = path;
        }
        j["adversary_plan"] = a;
    }
    j["seed"] = cfg.seed;
    j["initial_balance"] = cfg.initial_balance;
    j["tn_size"] = cfg.tn_size;
    j["tn_mutual"] = cfg.tn_mutual;
    j["genesis_replication"] =
        cfg.genesis_replication == sim::GenesisReplication::automatic ? "automatic"
        : cfg.genesis_replication == sim::GenesisReplication::full    ? "full"
                                                                      : "own";
    return j;
}

}  // namespace localcoin::config
