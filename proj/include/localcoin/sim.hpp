#pragma once

#include <algorithm>
#include <cmath>
#include <tuple>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "localcoin/adversary.hpp"
#include "localcoin/event_log.hpp"
#include "localcoin/geom.hpp"
#include "localcoin/node.hpp"
#include "localcoin/rng.hpp"

namespace localcoin::sim {

enum class MobilityKind { static_placement, waypoint, trace_replay };

// Waypoint speeds are configured in km/h over a square area of area_km2;
// they are converted to normalized units per tick internally.
struct MobilityModel {
    MobilityKind kind = MobilityKind::static_placement;
    double speed_min_kmh = 0.5;
    double speed_max_kmh = 1.5;
    double area_km2 = 1.0;
    std::string trace_path;  // trace_replay only
};

struct ContactRecord {
    UserId a = 0;
    UserId b = 0;
    double start = 0.0;  // seconds
    double end = 0.0;

    bool operator<(const ContactRecord& o) const {
        return std::tie(start, end, a, b) < std::tie(o.start, o.end, o.a, o.b);
    }
};

struct TraceData {
    std::vector<ContactRecord> records;  // time-sorted, overlaps merged
    int user_count = 0;
    int merged_duplicates = 0;
    int rejected_lines = 0;
};

struct TraceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// CSV with columns a,b,start,end (header optional). Lines with start >= end
// are rejected; overlapping windows of the same pair are merged.
inline TraceData parse_contact_trace(std::istream& in, const std::string& name) {
    TraceData data;
    std::string line;
    size_t lineno = 0;
    std::vector<ContactRecord> raw;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (lineno == 1 && line.rfind("a,", 0) == 0) continue;  // header
        std::istringstream is(line);
        std::string fa, fb, fs, fe;
        if (!std::getline(is, fa, ',') || !std::getline(is, fb, ',') ||
            !std::getline(is, fs, ',') || !std::getline(is, fe, ','))
            throw TraceError(name + ": line " + std::to_string(lineno) +
                             ": expected a,b,start,end");
        ContactRecord r;
        try {
            r.a = std::stoull(fa);
            r.b = std::stoull(fb);
            r.start = std::stod(fs);
            r.end = std::stod(fe);
        } catch (const std::exception&) {
            throw TraceError(name + ": line " + std::to_string(lineno) +
                             ": malformed number");
        }
        if (r.a == r.b) {
            ++data.rejected_lines;
            continue;
        }
        if (r.a > r.b) std::swap(r.a, r.b);
        if (!(r.start < r.end)) {
            ++data.rejected_lines;
            continue;
        }
        raw.push_back(r);
    }
    std::sort(raw.begin(), raw.end(), [](const ContactRecord& x, const ContactRecord& y) {
        return std::tie(x.a, x.b, x.start, x.end) < std::tie(y.a, y.b, y.start, y.end);
    });
    std::set<UserId> users;
    for (size_t i = 0; i < raw.size(); ++i) {
        ContactRecord r = raw[i];
        while (i + 1 < raw.size() && raw[i + 1].a == r.a && raw[i + 1].b == r.b &&
               raw[i + 1].start <= r.end) {
            r.end = std::max(r.end, raw[i + 1].end);
            ++i;
            ++data.merged_duplicates;
        }
        users.insert(r.a);
        users.insert(r.b);
        data.records.push_back(r);
    }
    std::sort(data.records.begin(), data.records.end());
    data.user_count = static_cast<int>(users.size());
    return data;
}

inline TraceData ingest_contact_trace(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw TraceError("cannot open trace file: " + path);
    return parse_contact_trace(f, path);
}

enum class ArrivalLaw { uniform, poisson };

struct TxWorkload {
    int per_user_count = 0;            // uniform arrivals
    ArrivalLaw arrival_law = ArrivalLaw::uniform;
    double poisson_rate_per_tick = 0;  // poisson arrivals (pairs per tick)
    Amount amount = 1 * kCoin;
    Amount trf = 10;
    Amount bf = 10;
};

enum class GenesisReplication { automatic, full, own };

struct ScenarioConfig {
    ProtocolParams params;
    geom::Placement placement = geom::uniform_placement(10);
    MobilityModel mobility;
    double duration_s = 100.0;
    double tick_s = 1.0;
    TxWorkload tx_workload;
    std::optional<adversary::AttackPlan> adversary_plan;
    std::uint64_t seed = 1;
    Amount initial_balance = 100 * kCoin;
    int tn_size = 5;
    bool tn_mutual = true;
    GenesisReplication genesis_replication = GenesisReplication::automatic;

    std::uint64_t duration_ticks() const {
        return static_cast<std::uint64_t>(std::ceil(duration_s / tick_s));
    }
    TimeMs tick_ms() const { return static_cast<TimeMs>(std::llround(tick_s * 1000.0)); }
};

struct WorkloadEvent {
    std::uint64_t tick = 0;
    UserId sender = 0;
    UserId receiver = 0;
};

class World {
public:
    explicit World(const ScenarioConfig& cfg) : cfg_(cfg) { bootstrap(); }

    const ScenarioConfig& config() const { return cfg_; }
    std::uint64_t tick() const { return tick_; }
    TimeMs now_ms() const { return static_cast<TimeMs>(tick_) * cfg_.tick_ms(); }

    int n() const { return static_cast<int>(nodes_.size()); }
    NodeState& node(int i) { return nodes_[i]; }
    const NodeState& node(int i) const { return nodes_[i]; }
    const std::vector<NodeState>& nodes() const { return nodes_; }

    EventLog& log() { return log_; }
    const EventLog& log() const { return log_; }
    AttestationRegistry& registry() { return registry_; }
    BlockRegistry& block_registry() { return blocks_; }
    const TrustGraph& trust() const { return trust_; }
    std::uint64_t messages_sent() const { return messages_sent_; }
    std::uint64_t blocks_created() const { return settled_.size(); }
    const std::vector<UserId>& colluders() const { return colluder_ids_; }
    std::optional<UserId> attacker() const { return attacker_; }

    const std::vector<UserId>& contacts_of(int i) const { return contacts_[i]; }

    // Authoritative economy: total unspent value across all users, judged
    // from the canonical blocks. Constant in honest scenarios; inflation
    // reveals a successful double spend.
    Amount global_balance_sum() const {
        Amount sum = 0;
        for (const auto& [key, v] : global_entitlements_) sum += v;
        return sum;
    }

    // Drive a node handler under its own acting identity.
    template <typename F>
    void act_as(int i, F&& fn) {
        NodeEnv env = make_env();
        ActingScope scope(registry_, nodes_[i].id);
        fn(nodes_[i], env);
    }

    void step() {
        ++tick_;
        move_nodes();
        refresh_contacts();

        std::vector<Envelope> arriving;
        arriving.swap(staging_);

        for (const Envelope& e : arriving) {
            int from = static_cast<int>(e.relayer);
            if (from < 0 || from >= n()) continue;
            for (UserId rid : contacts_[from]) {
                int r = static_cast<int>(rid);
                act_as(r, [&](NodeState& nd, NodeEnv& env) { nd.on_receive(env, e); });
            }
        }

        for (int i = 0; i < n(); ++i) {
            std::vector<UserId> gained;
            std::set_difference(contacts_[i].begin(), contacts_[i].end(),
                                prev_contacts_[i].begin(), prev_contacts_[i].end(),
                                std::back_inserter(gained));
            if (!gained.empty())
                act_as(i, [&](NodeState& nd, NodeEnv& env) {
                    nd.on_contacts_changed(env, gained);
                });
        }

        while (next_workload_ < workload_.size() &&
               workload_[next_workload_].tick == tick_) {
            const WorkloadEvent& ev = workload_[next_workload_++];
            act_as(static_cast<int>(ev.sender), [&](NodeState& nd, NodeEnv& env) {
                nd.send(env, ev.receiver, cfg_.tx_workload.amount, cfg_.tx_workload.trf,
                        cfg_.tx_workload.bf, workload_nonce(ev));
            });
        }

        run_adversary_actions();

        for (int i = 0; i < n(); ++i)
            act_as(i, [&](NodeState& nd, NodeEnv& env) { nd.build_block(env); });

        settle_new_blocks();
    }

    void run_to_end() {
        std::uint64_t ticks = cfg_.duration_ticks();
        while (tick_ < ticks) step();
        finish();
    }

    void finish() {
        log_.add(tick_, -1, event_kind::summary, "messages_sent", {},
                 static_cast<std::int64_t>(messages_sent_));
        log_.add(tick_, -1, event_kind::summary, "blocks_created", {},
                 static_cast<std::int64_t>(blocks_created()));
        log_.seal(tick_);
    }

private:
    NodeEnv make_env() {
        NodeEnv env;
        env.params = &cfg_.params;
        env.registry = &registry_;
        env.blocks = &blocks_;
        env.trust = &trust_;
        env.log = &log_;
        env.outbox = &staging_;
        env.tick = tick_;
        env.now_ms = now_ms();
        env.messages_sent = &messages_sent_;
        env.trace_mode = cfg_.mobility.kind == MobilityKind::trace_replay;
        return env;
    }

    Digest workload_nonce(const WorkloadEvent& ev) {
        Bytes b;
        wire::put_u64(b, cfg_.seed);
        wire::put_u64(b, ev.tick);
        wire::put_u64(b, ev.sender);
        wire::put_u64(b, ev.receiver);
        wire::put_u64(b, nonce_counter_++);
        return digest(b);
    }

    void bootstrap() {
        if (cfg_.placement.n < 1) throw std::runtime_error("scenario needs n >= 1");
        std::string why;
        if (!params_valid(cfg_.params, &why))
            throw std::runtime_error("invalid protocol params: " + why);

        Rng place_rng = make_rng(cfg_.seed, 1);
        positions_ = geom::place_users(cfg_.placement, place_rng);
        nodes_.resize(positions_.size());
        for (size_t i = 0; i < nodes_.size(); ++i) {
            nodes_[i].id = static_cast<UserId>(i);
            nodes_[i].location = positions_[i];
        }

        if (cfg_.mobility.kind == MobilityKind::trace_replay) setup_trace();
        if (cfg_.mobility.kind == MobilityKind::waypoint) setup_waypoints();

        build_trust();
        write_meta();
        assign_adversary();
        mint_genesis();

        contacts_.assign(nodes_.size(), {});
        prev_contacts_.assign(nodes_.size(), {});
        refresh_contacts();
        prev_contacts_ = contacts_;

        schedule_workload();
    }

    void setup_waypoints() {
        side_m_ = std::sqrt(cfg_.mobility.area_km2) * 1000.0;
        Rng rng = make_rng(cfg_.seed, 2);
        std::uniform_real_distribution<double> U(0.0, 1.0);
        std::uniform_real_distribution<double> S(cfg_.mobility.speed_min_kmh,
                                                 cfg_.mobility.speed_max_kmh);
        targets_.resize(nodes_.size());
        speeds_.resize(nodes_.size());
        for (size_t i = 0; i < nodes_.size(); ++i) {
            targets_[i] = {U(rng), U(rng)};
            speeds_[i] = kmh_to_norm(S(rng));
        }
    }

    double kmh_to_norm(double kmh) const {
        double mps = kmh * 1000.0 / 3600.0;
        return mps * cfg_.tick_s / side_m_;
    }

    void setup_trace() {
        trace_ = ingest_contact_trace(cfg_.mobility.trace_path);
        apply_trace_data();
    }

public:
    // Tests inject synthetic traces without touching the filesystem.
    static World with_trace(const ScenarioConfig& cfg, TraceData trace) {
        World w(cfg, PrivateTag{});
        w.trace_ = std::move(trace);
        w.apply_trace_data();
        w.finish_bootstrap();
        return w;
    }

private:
    struct PrivateTag {};

    World(const ScenarioConfig& cfg, PrivateTag) : cfg_(cfg) {
        if (cfg_.placement.n < 1) throw std::runtime_error("scenario needs n >= 1");
        Rng place_rng = make_rng(cfg_.seed, 1);
        positions_ = geom::place_users(cfg_.placement, place_rng);
        nodes_.resize(positions_.size());
        for (size_t i = 0; i < nodes_.size(); ++i) {
            nodes_[i].id = static_cast<UserId>(i);
            nodes_[i].location = positions_[i];
        }
    }

    void finish_bootstrap() {
        build_trust();
        write_meta();
        assign_adversary();
        mint_genesis();
        contacts_.assign(nodes_.size(), {});
        prev_contacts_.assign(nodes_.size(), {});
        refresh_contacts();
        prev_contacts_ = contacts_;
        schedule_workload();
    }

    void apply_trace_data() {
        // Contact windows replace radio geometry; positions stay synthetic
        // and static for distance bookkeeping, which the report flags.
        if (static_cast<int>(nodes_.size()) < trace_.user_count)
            throw TraceError("trace names more users than the scenario has");
        trace_events_.clear();
        for (size_t i = 0; i < trace_.records.size(); ++i) {
            const auto& r = trace_.records[i];
            if (r.a >= nodes_.size() || r.b >= nodes_.size())
                throw TraceError("trace user id out of range");
            std::uint64_t st = static_cast<std::uint64_t>(std::floor(r.start / cfg_.tick_s));
            std::uint64_t en = static_cast<std::uint64_t>(std::ceil(r.end / cfg_.tick_s));
            trace_events_.push_back({st, true, r.a, r.b});
            trace_events_.push_back({en, false, r.a, r.b});
        }
        std::sort(trace_events_.begin(), trace_events_.end());
        next_trace_event_ = 0;
    }

    void build_trust() {
        Rng rng = make_rng(cfg_.seed, 3);
        int k = std::min<int>(cfg_.tn_size, static_cast<int>(nodes_.size()) - 1);
        if (k <= 0) {
            for (auto& nd : nodes_) trust_[nd.id] = {};
            return;
        }
        std::uniform_int_distribution<int> pick(0, static_cast<int>(nodes_.size()) - 1);
        for (size_t i = 0; i < nodes_.size(); ++i) {
            std::set<UserId>& tn = trust_[nodes_[i].id];
            while (static_cast<int>(tn.size()) < k) {
                int j = pick(rng);
                if (j != static_cast<int>(i)) tn.insert(static_cast<UserId>(j));
            }
        }
        if (cfg_.tn_mutual) {
            for (auto& [u, tn] : trust_)
                for (UserId v : tn) trust_[v].insert(u);
        }
        for (auto& nd : nodes_) nd.trusted_network = trust_[nd.id];
    }

    void assign_adversary() {
        if (!cfg_.adversary_plan) return;
        const auto& plan = *cfg_.adversary_plan;
        if (plan.attacker >= nodes_.size())
            throw std::runtime_error("attack plan names an unknown attacker");
        attacker_ = plan.attacker;
        nodes_[plan.attacker].role = NodeRole::attacker;
        log_.add(0, static_cast<std::int64_t>(plan.attacker), event_kind::attacker);

        std::set<UserId> chosen(plan.colluders.begin(), plan.colluders.end());
        if (chosen.empty() && plan.region_band) {
            for (const auto& nd : nodes_)
                if (nd.id != plan.attacker && nd.location.x >= plan.region_band->first &&
                    nd.location.x <= plan.region_band->second)
                    chosen.insert(nd.id);
        }
        if (chosen.empty() && plan.colluder_count > 0) {
            Rng rng = make_rng(cfg_.seed, 4);
            std::uniform_int_distribution<int> pick(0, static_cast<int>(nodes_.size()) - 1);
            while (static_cast<int>(chosen.size()) < plan.colluder_count) {
                UserId c = static_cast<UserId>(pick(rng));
                if (c != plan.attacker) chosen.insert(c);
            }
        }
        for (UserId c : chosen) {
            nodes_[c].role = NodeRole::colluder;
            nodes_[c].policy = plan.colluder_policy;
            colluder_ids_.push_back(c);
            log_.add(0, static_cast<std::int64_t>(c), event_kind::colluder);
        }
        std::sort(colluder_ids_.begin(), colluder_ids_.end());

        // Fake receivers: pinned, else drawn uniformly from honest users.
        Rng rng = make_rng(cfg_.seed, 5);
        std::vector<UserId> honest;
        for (const auto& nd : nodes_)
            if (nd.role == NodeRole::honest) honest.push_back(nd.id);
        fake_receivers_ = plan.pinned_receivers;
        while (static_cast<int>(fake_receivers_.size()) < plan.fake_tx_count &&
               !honest.empty()) {
            std::uniform_int_distribution<size_t> pick(0, honest.size() - 1);
            UserId r = honest[pick(rng)];
            if (std::find(fake_receivers_.begin(), fake_receivers_.end(), r) ==
                fake_receivers_.end())
                fake_receivers_.push_back(r);
        }
        for (int k = 0; k < plan.fake_tx_count; ++k) {
            std::uint64_t t = static_cast<std::uint64_t>(std::llround(
                (plan.first_fake_s + k * plan.inter_fake_delay_s) / cfg_.tick_s));
            fake_ticks_.push_back(std::max<std::uint64_t>(1, t));
        }
    }

    void write_meta() {
        log_.add(0, -1, event_kind::meta, "n", {}, static_cast<std::int64_t>(nodes_.size()));
        log_.add(0, -1, event_kind::meta, "duration_ticks", {},
                 static_cast<std::int64_t>(cfg_.duration_ticks()));
        log_.add(0, -1, event_kind::meta, "tick_ms", {}, cfg_.tick_ms());
        log_.add(0, -1, event_kind::meta, "seed", {},
                 static_cast<std::int64_t>(cfg_.seed));
        log_.add(0, -1, event_kind::meta, "position_source", {},
                 cfg_.mobility.kind == MobilityKind::trace_replay ? 1 : 0);
    }

    void mint_genesis() {
        bool full = cfg_.genesis_replication == GenesisReplication::full ||
                    (cfg_.genesis_replication == GenesisReplication::automatic &&
                     nodes_.size() <= 256);
        EventLog scratch;  // bootstrap is not part of the event record
        std::vector<Block> blocks;
        std::vector<Transaction> all_txs;
        for (size_t i = 0; i < nodes_.size(); ++i) {
            Transaction tx;
            tx.sender = nodes_[i].id;
            tx.receiver = nodes_[i].id;
            tx.amount_to_receiver = cfg_.initial_balance;
            tx.balance_note = cfg_.initial_balance;
            tx.timestamp = 0;
            tx.seq = 0;
            Bytes nb;
            wire::put_u64(nb, 0x67656e65ULL);
            wire::put_u64(nb, nodes_[i].id);
            tx.nonce = digest(nb);
            tx.sender_attestation =
                registry_.bootstrap_attest(nodes_[i].id, tx_core_digest(tx), 0);
            all_txs.push_back(tx);
        }
        auto make_block = [&](std::vector<Transaction> txs) {
            Block b;
            std::vector<Digest> tds;
            for (const auto& tx : txs) tds.push_back(tx_digest(tx));
            std::sort(tds.begin(), tds.end());
            b.id = block_content_digest(tds);
            b.transactions = std::move(txs);
            b.acks.resize(b.transactions.size());
            for (size_t j = 0; j < b.transactions.size(); ++j) {
                Ack& a = b.acks[j];
                a.tx = tx_digest(b.transactions[j]);
                a.receiver = b.transactions[j].receiver;
                a.fee_recipient = b.transactions[j].receiver;
            }
            b.verifiers.resize(b.transactions.size());
            b.parent_pointers.resize(b.transactions.size());
            b.created_at = 0;
            blocks_.canonical(b);
            blocks_.mark_genesis(b.id);
            settled_.insert(b.id);
            return b;
        };

        NodeEnv env = make_env();
        env.log = &scratch;
        if (full) {
            Block g = make_block(all_txs);
            settle_block(g);
            for (size_t i = 0; i < nodes_.size(); ++i) {
                ActingScope scope(registry_, nodes_[i].id);
                nodes_[i].apply_block(env, g);
            }
        } else {
            for (size_t i = 0; i < nodes_.size(); ++i) {
                Block g = make_block({all_txs[i]});
                settle_block(g);
                ActingScope scope(registry_, nodes_[i].id);
                nodes_[i].apply_block(env, g);
            }
        }
    }

    void schedule_workload() {
        Rng rng = make_rng(cfg_.seed, 6);
        std::uint64_t ticks = cfg_.duration_ticks();
        std::vector<UserId> senders;
        for (const auto& nd : nodes_)
            if (!attacker_ || nd.id != *attacker_) senders.push_back(nd.id);
        if (senders.empty() || ticks < 2) return;
        auto pick_receiver = [&](UserId s) {
            std::uniform_int_distribution<size_t> pick(0, senders.size() - 1);
            UserId r = s;
            while (r == s) r = senders[pick(rng)];
            return r;
        };
        if (cfg_.tx_workload.arrival_law == ArrivalLaw::uniform) {
            std::uniform_int_distribution<std::uint64_t> when(1, ticks - 1);
            for (UserId s : senders)
                for (int c = 0; c < cfg_.tx_workload.per_user_count; ++c)
                    workload_.push_back({when(rng), s, pick_receiver(s)});
        } else {
            std::poisson_distribution<int> arrivals(cfg_.tx_workload.poisson_rate_per_tick);
            std::uniform_int_distribution<size_t> pick(0, senders.size() - 1);
            for (std::uint64_t t = 1; t < ticks; ++t) {
                int c = arrivals(rng);
                for (int k = 0; k < c; ++k) {
                    UserId s = senders[pick(rng)];
                    workload_.push_back({t, s, pick_receiver(s)});
                }
            }
        }
        std::stable_sort(workload_.begin(), workload_.end(),
                         [](const WorkloadEvent& a, const WorkloadEvent& b) {
                             return a.tick < b.tick;
                         });
    }

    void move_nodes() {
        if (cfg_.mobility.kind == MobilityKind::waypoint) {
            Rng& rng = waypoint_rng();
            std::uniform_real_distribution<double> U(0.0, 1.0);
            std::uniform_real_distribution<double> S(cfg_.mobility.speed_min_kmh,
                                                     cfg_.mobility.speed_max_kmh);
            for (size_t i = 0; i < nodes_.size(); ++i) {
                Location& p = positions_[i];
                double dx = targets_[i].x - p.x, dy = targets_[i].y - p.y;
                double dist = std::sqrt(dx * dx + dy * dy);
                if (dist <= speeds_[i]) {
                    p = targets_[i];
                    targets_[i] = {U(rng), U(rng)};
                    speeds_[i] = kmh_to_norm(S(rng));
                } else {
                    p.x += dx / dist * speeds_[i];
                    p.y += dy / dist * speeds_[i];
                }
                nodes_[i].location = p;
            }
        }
        if (cfg_.adversary_plan) {
            for (const auto& [t, loc] : cfg_.adversary_plan->attacker_path)
                if (t == tick_) {
                    positions_[*attacker_] = loc;
                    nodes_[*attacker_].location = loc;
                }
        }
    }

    Rng& waypoint_rng() {
        if (!wp_rng_) wp_rng_.emplace(make_rng(cfg_.seed, 7));
        return *wp_rng_;
    }

    void refresh_contacts() {
        prev_contacts_ = contacts_;
        if (cfg_.mobility.kind == MobilityKind::trace_replay) {
            while (next_trace_event_ < trace_events_.size() &&
                   std::get<0>(trace_events_[next_trace_event_]) <= tick_) {
                const auto& [t, on, a, b] = trace_events_[next_trace_event_++];
                if (on)
                    active_pairs_.insert({a, b});
                else
                    active_pairs_.erase({a, b});
            }
            for (auto& c : contacts_) c.clear();
            for (const auto& [a, b] : active_pairs_) {
                contacts_[a].push_back(b);
                contacts_[b].push_back(a);
            }
            for (auto& c : contacts_) std::sort(c.begin(), c.end());
            return;
        }
        geom::SpatialIndex idx(positions_, cfg_.params.r_cov, false);
        for (size_t i = 0; i < nodes_.size(); ++i) {
            contacts_[i].clear();
            idx.for_neighbors(static_cast<int>(i),
                              [&](int j) { contacts_[i].push_back(static_cast<UserId>(j)); });
            std::sort(contacts_[i].begin(), contacts_[i].end());
        }
    }

    void run_adversary_actions() {
        if (!cfg_.adversary_plan || !attacker_) return;
        const auto& plan = *cfg_.adversary_plan;
        for (size_t k = 0; k < fake_ticks_.size(); ++k) {
            if (fake_ticks_[k] != tick_ || k >= fake_receivers_.size()) continue;
            act_as(static_cast<int>(*attacker_), [&](NodeState& nd, NodeEnv& env) {
                if (fake_input_.is_zero()) {
                    // The attacker double-spends its genesis endowment.
                    fake_input_ = nd.entitlements().begin()->first;
                }
                Bytes nb;
                wire::put_u64(nb, 0xfa6eULL);
                wire::put_u64(nb, k);
                wire::put_u64(nb, cfg_.seed);
                nd.send_unchecked(env, fake_receivers_[k], cfg_.tx_workload.amount,
                                  cfg_.tx_workload.trf, cfg_.tx_workload.bf,
                                  {fake_input_}, cfg_.initial_balance, digest(nb));
            });
        }
        (void)plan;
    }

    void settle_new_blocks() {
        for (const auto& [id, b] : blocks_.all()) {
            if (settled_.count(id)) continue;
            settled_.insert(id);
            settle_block(b);
        }
    }

    void settle_block(const Block& b) {
        for (size_t i = 0; i < b.transactions.size(); ++i) {
            const Transaction& tx = b.transactions[i];
            Digest d = tx_digest(tx);
            for (const auto& in : tx.inputs) global_entitlements_.erase({in, tx.sender});
            if (tx.amount_to_receiver > 0)
                global_entitlements_[{d, tx.receiver}] += tx.amount_to_receiver;
            if (tx.change > 0) global_entitlements_[{d, tx.sender}] += tx.change;
            if (tx.tx_fee > 0 && i < b.acks.size())
                global_entitlements_[{d, b.acks[i].fee_recipient}] += tx.tx_fee;
            if (tx.block_fee > 0 && i < b.verifiers.size()) {
                std::vector<UserId> vs;
                for (const auto& e : b.verifiers[i]) vs.push_back(e.user);
                for (const auto& [u, amt] : split_block_fee(tx.block_fee, vs))
                    global_entitlements_[{d, u}] += amt;
            }
        }
    }

    ScenarioConfig cfg_;
    std::vector<NodeState> nodes_;
    std::vector<Location> positions_;
    std::vector<Location> targets_;
    std::vector<double> speeds_;
    std::optional<Rng> wp_rng_;
    double side_m_ = 1000.0;

    TraceData trace_;
    std::vector<std::tuple<std::uint64_t, bool, UserId, UserId>> trace_events_;
    size_t next_trace_event_ = 0;
    std::set<std::pair<UserId, UserId>> active_pairs_;

    TrustGraph trust_;
    AttestationRegistry registry_;
    BlockRegistry blocks_;
    EventLog log_;
    std::vector<Envelope> staging_;
    std::vector<std::vector<UserId>> contacts_;
    std::vector<std::vector<UserId>> prev_contacts_;

    std::vector<WorkloadEvent> workload_;
    size_t next_workload_ = 0;
    std::uint64_t nonce_counter_ = 0;

    std::optional<UserId> attacker_;
    std::vector<UserId> colluder_ids_;
    std::vector<UserId> fake_receivers_;
    std::vector<std::uint64_t> fake_ticks_;
    Digest fake_input_;

    std::set<Digest> settled_;
    std::map<std::pair<Digest, UserId>, Amount> global_entitlements_;

    std::uint64_t tick_ = 0;
    std::uint64_t messages_sent_ = 0;
};

}  // namespace localcoin::sim
