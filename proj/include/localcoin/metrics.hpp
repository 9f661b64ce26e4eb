#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "localcoin/event_log.hpp"
#include "localcoin/types.hpp"

namespace localcoin::metrics {

struct MetricsError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct MetricsReport {
    double transaction_rate = 0.0;    // completed / attempted
    double transaction_spread = 0.0;  // mean fraction of users storing a tx
    std::vector<double> delivery_times;  // seconds, sender emit -> receiver holds
    double fake_spread_all = 0.0;
    double fake_spread_honest = 0.0;
    double fake_acceptance_prob = 0.0;  // fraction of fakes acked
    int fakes_created = 0;
    int fakes_accepted = 0;
    bool double_spend_success = false;  // two blocks share a spent input
    std::int64_t blocks_created = 0;
    std::int64_t messages_sent = 0;
    std::int64_t tx_attempted = 0;
    std::int64_t tx_completed = 0;
    int n = 0;
    int honest_n = 0;
    bool synthetic_positions = false;

    double mean_delivery_time() const {
        if (delivery_times.empty()) return 0.0;
        double s = 0.0;
        for (double d : delivery_times) s += d;
        return s / delivery_times.size();
    }
};

// Aggregate a finished event log into the run report. The log must be
// sealed; a truncated one aborts.
inline MetricsReport compute_report(const std::vector<Event>& events) {
    if (events.empty() || events.back().kind != event_kind::eol)
        throw MetricsError("event log is truncated (missing eol)");

    MetricsReport rep;
    TimeMs tick_ms = 1000;
    std::set<std::int64_t> colluders;
    std::optional<std::int64_t> attacker;

    struct TxInfo {
        std::uint64_t created_tick = 0;
        std::int64_t sender = -1;
        std::int64_t receiver = -1;
        bool fake = false;
        bool acked = false;
        std::set<std::int64_t> holders;
        std::optional<std::uint64_t> receiver_hold_tick;
    };
    std::map<std::string, TxInfo> txs;
    std::map<std::pair<std::string, std::int64_t>, std::set<std::string>> spenders;
    std::set<std::string> blocked_txs;
    std::set<std::string> block_ids;

    for (const Event& e : events) {
        if (e.kind == event_kind::meta) {
            if (e.a == "n") rep.n = static_cast<int>(e.value);
            if (e.a == "tick_ms") tick_ms = e.value;
            if (e.a == "position_source") rep.synthetic_positions = e.value != 0;
        } else if (e.kind == event_kind::colluder) {
            colluders.insert(e.node);
        } else if (e.kind == event_kind::attacker) {
            attacker = e.node;
        } else if (e.kind == event_kind::tx_created || e.kind == event_kind::fake_created) {
            TxInfo& t = txs[e.a];
            t.created_tick = e.tick;
            t.sender = e.node;
            t.receiver = std::stoll(e.b);
            t.fake = e.kind == event_kind::fake_created;
            ++rep.tx_attempted;
            if (t.fake) {
                --rep.tx_attempted;  // fakes are not workload
                ++rep.fakes_created;
            }
        } else if (e.kind == event_kind::tx_refused) {
            ++rep.tx_attempted;
        } else if (e.kind == event_kind::tx_stored) {
            auto it = txs.find(e.a);
            if (it != txs.end()) {
                it->second.holders.insert(e.node);
                if (e.node == it->second.receiver && !it->second.receiver_hold_tick)
                    it->second.receiver_hold_tick = e.tick;
            }
        } else if (e.kind == event_kind::ack_emitted) {
            auto it = txs.find(e.a);
            if (it != txs.end()) it->second.acked = true;
        } else if (e.kind == event_kind::tx_input) {
            spenders[{e.b, e.node}].insert(e.a);
        } else if (e.kind == event_kind::block_includes) {
            blocked_txs.insert(e.b);
            block_ids.insert(e.a);
        } else if (e.kind == event_kind::summary) {
            if (e.a == "messages_sent") rep.messages_sent = e.value;
        }
    }

    rep.blocks_created = static_cast<std::int64_t>(block_ids.size());
    rep.honest_n = rep.n - static_cast<int>(colluders.size()) - (attacker ? 1 : 0);

    double spread_sum = 0.0;
    int spread_count = 0;
    double fake_all_sum = 0.0, fake_honest_sum = 0.0;
    for (const auto& [d, t] : txs) {
        if (t.fake) {
            if (rep.n > 0) fake_all_sum += static_cast<double>(t.holders.size()) / rep.n;
            int honest_holders = 0;
            for (std::int64_t h : t.holders)
                if (!colluders.count(h) && (!attacker || h != *attacker)) ++honest_holders;
            if (rep.honest_n > 0)
                fake_honest_sum += static_cast<double>(honest_holders) / rep.honest_n;
            if (t.acked) ++rep.fakes_accepted;
            continue;
        }
        if (rep.n > 0) {
            spread_sum += static_cast<double>(t.holders.size()) / rep.n;
            ++spread_count;
        }
        if (t.acked) ++rep.tx_completed;
        if (t.receiver_hold_tick)
            rep.delivery_times.push_back(
                static_cast<double>((*t.receiver_hold_tick - t.created_tick) * tick_ms) /
                1000.0);
    }
    if (spread_count > 0) rep.transaction_spread = spread_sum / spread_count;
    if (rep.tx_attempted > 0)
        rep.transaction_rate = static_cast<double>(rep.tx_completed) / rep.tx_attempted;
    if (rep.fakes_created > 0) {
        rep.fake_spread_all = fake_all_sum / rep.fakes_created;
        rep.fake_spread_honest = fake_honest_sum / rep.fakes_created;
        rep.fake_acceptance_prob =
            static_cast<double>(rep.fakes_accepted) / rep.fakes_created;
    }

    // Success means two conflicting transactions both made it into blocks.
    for (const auto& [key, claimants] : spenders) {
        int in_blocks = 0;
        for (const auto& tx : claimants)
            if (blocked_txs.count(tx)) ++in_blocks;
        if (in_blocks >= 2) {
            rep.double_spend_success = true;
            break;
        }
    }
    return rep;
}

inline MetricsReport compute_report(const EventLog& log) {
    return compute_report(log.events());
}

// Monotone time series of the fraction of users holding `digest_hex`.
inline std::vector<std::pair<double, double>> spread_over_time(
    const std::vector<Event>& events, const std::string& digest_hex) {
    int n = 0;
    TimeMs tick_ms = 1000;
    bool seen = false;
    std::set<std::int64_t> holders;
    std::vector<std::pair<double, double>> series;
    for (const Event& e : events) {
        if (e.kind == event_kind::meta && e.a == "n") n = static_cast<int>(e.value);
        if (e.kind == event_kind::meta && e.a == "tick_ms") tick_ms = e.value;
        if ((e.kind == event_kind::tx_created || e.kind == event_kind::fake_created ||
             e.kind == event_kind::tx_stored) &&
            e.a == digest_hex)
            seen = true;
        if (e.kind == event_kind::tx_stored && e.a == digest_hex && n > 0) {
            holders.insert(e.node);
            double t = static_cast<double>(e.tick * tick_ms) / 1000.0;
            double frac = static_cast<double>(holders.size()) / n;
            if (!series.empty() && series.back().first == t)
                series.back().second = frac;
            else
                series.emplace_back(t, frac);
        }
    }
    if (!seen) throw MetricsError("unknown digest: " + digest_hex);
    return series;
}

// Fraction of users holding the message at a given time, 0 if never logged.
inline double spread_at(const std::vector<std::pair<double, double>>& series,
                        double t_seconds) {
    double frac = 0.0;
    for (const auto& [t, f] : series) {
        if (t > t_seconds) break;
        frac = f;
    }
    return frac;
}

// First time the series reaches the fraction, if it ever does.
inline std::optional<double> time_to_fraction(
    const std::vector<std::pair<double, double>>& series, double frac) {
    for (const auto& [t, f] : series)
        if (f >= frac) return t;
    return std::nullopt;
}

inline std::string report_csv_header() {
    return "transaction_rate,transaction_spread,mean_delivery_time_s,fake_spread_all,"
           "fake_spread_honest,fake_acceptance_prob,fakes_created,fakes_accepted,"
           "double_spend_success,blocks_created,messages_sent,tx_attempted,"
           "tx_completed,n,honest_n,synthetic_positions";
}

inline std::string report_csv_row(const MetricsReport& r) {
    std::ostringstream os;
    os.precision(10);
    os << r.transaction_rate << ',' << r.transaction_spread << ','
       << r.mean_delivery_time() << ',' << r.fake_spread_all << ','
       << r.fake_spread_honest << ',' << r.fake_acceptance_prob << ','
       << r.fakes_created << ',' << r.fakes_accepted << ','
       << (r.double_spend_success ? 1 : 0) << ',' << r.blocks_created << ','
       << r.messages_sent << ',' << r.tx_attempted << ',' << r.tx_completed << ','
       << r.n << ',' << r.honest_n << ',' << (r.synthetic_positions ? 1 : 0);
    return os.str();
}

inline void write_report_csv(const MetricsReport& r, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw MetricsError("cannot write report: " + path);
    f << report_csv_header() << '\n' << report_csv_row(r) << '\n';
}

inline void write_spread_csv(const std::vector<std::pair<double, double>>& series,
                             const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw MetricsError("cannot write spread series: " + path);
    f << "time_s,fraction\n";
    f.precision(10);
    for (const auto& [t, frac] : series) f << t << ',' << frac << '\n';
}

}  // namespace localcoin::metrics
