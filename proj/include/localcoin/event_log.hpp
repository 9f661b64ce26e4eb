#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace localcoin {

// One line per protocol event. Columns are fixed:
//   tick,node,kind,a,b,value
// where a and b carry digests (hex) or auxiliary identifiers. The final row
// of a complete log has kind "eol"; readers treat its absence as truncation.
struct Event {
    std::uint64_t tick = 0;
    std::int64_t node = -1;
    std::string kind;
    std::string a;
    std::string b;
    std::int64_t value = 0;
};

namespace event_kind {
inline constexpr const char* meta = "meta";
inline constexpr const char* colluder = "colluder";
inline constexpr const char* attacker = "attacker";
inline constexpr const char* tx_created = "tx_created";
inline constexpr const char* fake_created = "fake_created";
inline constexpr const char* tx_input = "tx_input";
inline constexpr const char* tx_refused = "tx_refused";
inline constexpr const char* tx_stored = "tx_stored";
inline constexpr const char* tx_conflict = "tx_conflict";
inline constexpr const char* tx_invalid = "tx_invalid";
inline constexpr const char* ack_emitted = "ack_emitted";
inline constexpr const char* proposal_built = "proposal_built";
inline constexpr const char* proposal_attested = "proposal_attested";
inline constexpr const char* entry_flagged = "entry_flagged";
inline constexpr const char* ds_alert = "ds_alert";
inline constexpr const char* block_created = "block_created";
inline constexpr const char* block_includes = "block_includes";
inline constexpr const char* block_applied = "block_applied";
inline constexpr const char* block_rejected = "block_rejected";
inline constexpr const char* fee_credit = "fee_credit";
inline constexpr const char* gc_links = "gc_links";
inline constexpr const char* gc_block_deleted = "gc_block_deleted";
inline constexpr const char* sync_request = "sync_request";
inline constexpr const char* sync_served = "sync_served";
inline constexpr const char* sync_refused = "sync_refused";
inline constexpr const char* summary = "summary";
inline constexpr const char* eol = "eol";
}  // namespace event_kind

class EventLog {
public:
    void add(std::uint64_t tick, std::int64_t node, const char* kind,
             std::string a = {}, std::string b = {}, std::int64_t value = 0) {
        events_.push_back({tick, node, kind, std::move(a), std::move(b), value});
    }

    const std::vector<Event>& events() const { return events_; }
    std::vector<Event>& events() { return events_; }

    void seal(std::uint64_t tick) { add(tick, -1, event_kind::eol); }

    bool sealed() const {
        return !events_.empty() && events_.back().kind == event_kind::eol;
    }

    static std::string header() { return "tick,node,kind,a,b,value"; }

    std::string to_csv() const {
        std::ostringstream os;
        os << header() << '\n';
        for (const auto& e : events_)
            os << e.tick << ',' << e.node << ',' << e.kind << ',' << e.a << ','
               << e.b << ',' << e.value << '\n';
        return os.str();
    }

    void write_csv(const std::string& path) const {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write event log: " + path);
        f << to_csv();
    }

    static EventLog read_csv(const std::string& path) {
        std::ifstream f(path);
        if (!f) throw std::runtime_error("cannot read event log: " + path);
        EventLog log;
        std::string line;
        if (!std::getline(f, line) || line != header())
            throw std::runtime_error("event log header mismatch in " + path);
        size_t lineno = 1;
        while (std::getline(f, line)) {
            ++lineno;
            if (line.empty()) continue;
            Event e;
            std::istringstream is(line);
            std::string field;
            auto next = [&](const char* what) {
                if (!std::getline(is, field, ','))
                    throw std::runtime_error("event log " + path + ": line " +
                                             std::to_string(lineno) + " missing " + what);
                return field;
            };
            e.tick = std::stoull(next("tick"));
            e.node = std::stoll(next("node"));
            e.kind = next("kind");
            e.a = next("a");
            e.b = next("b");
            e.value = std::stoll(next("value"));
            log.events_.push_back(std::move(e));
        }
        return log;
    }

private:
    std::vector<Event> events_;
};

}  // namespace localcoin
