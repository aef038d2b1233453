#include "flightrag/datagen.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "flightrag/error.hpp"
#include "flightrag/graphrag.hpp"
#include "flightrag/rng.hpp"
#include "json.hpp"
#include "text_util.hpp"

namespace flightrag::datagen {

namespace {

using json = nlohmann::ordered_json;

constexpr std::array<AirlineInfo, 7> kAirlines = {{
    {"KL", "KLM Royal Dutch Airlines", "KLM", "PH-", 35},
    {"DL", "Delta Air Lines", "Delta", "N", 10},
    {"HV", "Transavia", "Transavia", "PH-", 15},
    {"EZY", "easyJet", "easyJet", "G-", 12},
    {"AF", "Air France", "Air France", "F-", 10},
    {"BA", "British Airways", "British Airways", "G-", 8},
    {"LH", "Lufthansa", "Lufthansa", "D-", 10},
}};

constexpr std::array<std::string_view, 6> kAircraft = {"A320", "B738", "B77W",
                                                       "E190", "A332", "B789"};
constexpr std::array<std::string_view, 4> kHandlers = {"Aviapartner", "Swissport", "dnata",
                                                       "Menzies"};
constexpr std::string_view kPiers = "BCDEFGH";
constexpr int kRampsPerPier = 30;
constexpr int kBusGates = 18;
// 2023-05-14 00:00:00 UTC
constexpr std::int64_t kBaseEpoch = 1684022400;

std::string two_digits(std::int64_t v) {
    std::string s = std::to_string(v);
    return s.size() < 2 ? "0" + s : s;
}

std::string four_digits(std::int64_t v) {
    std::string s = std::to_string(v);
    while (s.size() < 4) s.insert(s.begin(), '0');
    return s;
}

std::string registration(Rng& rng, std::string_view prefix) {
    std::string out(prefix);
    if (prefix == "N") {
        out += std::to_string(rng.between(100, 999));
        for (int i = 0; i < 2; ++i) out += static_cast<char>('A' + rng.below(26));
        return out;
    }
    const int letters = prefix == "PH-" ? 3 : 4;
    for (int i = 0; i < letters; ++i) out += static_cast<char>('A' + rng.below(26));
    return out;
}

const AirlineInfo& pick_airline(Rng& rng) {
    int total = 0;
    for (const auto& a : kAirlines) total += a.weight;
    auto r = static_cast<int>(rng.below(static_cast<std::uint64_t>(total)));
    for (const auto& a : kAirlines) {
        if (r < a.weight) return a;
        r -= a.weight;
    }
    return kAirlines.front();
}

void fill_state(Rng& rng, FlightRecord& r) {
    const Timestamp sb = r.scheduled_block;
    if (r.direction == Direction::arrival) {
        static constexpr std::array<std::string_view, 4> states = {"scheduled", "approaching",
                                                                   "landed", "on block"};
        r.flight_state = std::string(states[rng.below(states.size())]);
        if (r.flight_state != "scheduled") r.actual_final_approach = sb.plus_minutes(-rng.between(8, 20));
        if (r.flight_state == "landed" || r.flight_state == "on block") {
            const Timestamp block = sb.plus_minutes(rng.between(-10, 25));
            r.actual_block = block;
            r.actual_on_ramp = block;
            if (rng.chance(0.2)) r.actual_tow_in_request = block.plus_minutes(rng.between(20, 50));
        }
    } else {
        static constexpr std::array<std::string_view, 5> states = {"scheduled", "boarding", "departed",
                                                                   "delayed", "cancelled"};
        r.flight_state = std::string(states[rng.below(states.size())]);
        if (r.flight_state == "boarding" || r.flight_state == "departed")
            r.actual_boarding = sb.plus_minutes(-rng.between(25, 40));
        if (r.flight_state == "departed") {
            const Timestamp off = sb.plus_minutes(rng.between(-3, 20));
            r.actual_off_ramp = off;
            if (r.push_back) r.actual_tow_off = off;
            r.actual_take_off = off.plus_minutes(rng.between(8, 20));
        }
    }
}

std::vector<const FlightRecord*> at_gate(const FlightStore& store, std::string_view gate) {
    std::vector<const FlightRecord*> out;
    for (const auto& r : store.records())
        if (detail::iequals(r.ramp, gate) || detail::iequals(r.bus_gate, gate)) out.push_back(&r);
    return out;
}

std::string flight_list(std::vector<const FlightRecord*> flights) {
    std::vector<std::string> nrs;
    for (const auto* f : flights) nrs.push_back(f->flight_nr);
    std::sort(nrs.begin(), nrs.end());
    return detail::join(nrs, ", ");
}

std::string airline_list(const std::vector<const FlightRecord*>& flights) {
    std::set<std::string> names;
    for (const auto* f : flights) names.insert(f->airline_name);
    return detail::join(std::vector<std::string>(names.begin(), names.end()), ", ");
}

// Flight at the gate with the smallest scheduled_block not before `from`.
const FlightRecord* first_at_gate_from(const FlightStore& store, std::string_view gate,
                                       Timestamp from) {
    const FlightRecord* best = nullptr;
    for (const auto* f : at_gate(store, gate)) {
        if (f->scheduled_block < from) continue;
        if (!best || f->scheduled_block < best->scheduled_block ||
            (f->scheduled_block == best->scheduled_block && f->flight_uid < best->flight_uid))
            best = f;
    }
    return best;
}

std::string fill(std::string_view text, const std::map<std::string, std::string>& params) {
    std::string out(text);
    for (const auto& [k, v] : params) detail::replace_all(out, "{" + k + "}", v);
    return out;
}

// --- templates --------------------------------------------------------------

struct SfTemplate {
    std::string_view id;
    std::string_view text;
    std::string_view field;
};

constexpr std::array<SfTemplate, 12> kStraightforward = {{
    {"sf_aircraft_category", "What category of aircraft is designated for flight {flight}?",
     "aircraft_category"},
    {"sf_ramp", "Which ramp is assigned for flight {flight}?", "ramp"},
    {"sf_expected_on_ramp", "What is the expected on-ramp time of flight {flight}?",
     "expected_on_ramp"},
    {"sf_expected_off_ramp", "When is flight {flight} expected to leave the ramp?",
     "expected_off_ramp"},
    {"sf_registration", "What is the aircraft registration of flight {flight}?",
     "aircraft_registration"},
    {"sf_handler", "Who is the main ground handler for flight {flight}?", "main_ground_handler"},
    {"sf_direction", "Is flight {flight} an arrival or a departure?", "direction"},
    {"sf_airline", "Which airline operates flight {flight}?", "airline_name"},
    {"sf_scheduled_block", "What is the scheduled block time of flight {flight}?",
     "scheduled_block"},
    {"sf_mtt", "What is the minimum transfer time of flight {flight}?", "mtt_minutes"},
    {"sf_uid", "What is the flight UID of {flight}?", "flight_uid"},
    {"sf_bus_gate", "Which bus gate is used by flight {flight}?", "bus_gate"},
}};

enum class Rule {
    field,
    gate_list,
    gate_airlines,
    gate_timed,
    connecting,
    same_ramp,
    connecting_on_ramp,
    clarify,
};

struct AmbTemplate {
    std::string_view id;
    QuestionCategory category;
    std::string_view text;
    Rule rule;
};

constexpr std::array<AmbTemplate, 23> kAmbiguous = {{
    {"taq_now_timed", QuestionCategory::taq, "It is now {time}. Which flight is at gate {gate}?",
     Rule::gate_timed},
    {"taq_after_timed", QuestionCategory::taq, "Which flight is scheduled at gate {gate} after {time}?",
     Rule::gate_timed},
    {"taq_currently", QuestionCategory::taq, "Which flight is currently at gate {gate}?",
     Rule::gate_list},
    {"taq_right_now", QuestionCategory::taq, "What is at {gate} right now?", Rule::gate_list},
    {"taq_next_hour", QuestionCategory::taq, "Which flights will be at {gate} in the next hour?",
     Rule::gate_list},
    {"bgq_whats_at", QuestionCategory::bgq, "What's at {gate}?", Rule::gate_list},
    {"bgq_which_flight", QuestionCategory::bgq, "Which flight is at gate {gate}?", Rule::gate_list},
    {"bgq_airline", QuestionCategory::bgq, "Which airline at {gate}?", Rule::gate_airlines},
    {"bgq_short", QuestionCategory::bgq, "Which flights are at {gate_short}?", Rule::gate_list},
    {"nfq_connecting", QuestionCategory::nfq, "Which flight is the connecting flight of {flight}?",
     Rule::connecting},
    {"nfq_same_ramp", QuestionCategory::nfq, "What is {flight}'s next flight from the same ramp?",
     Rule::same_ramp},
    {"twaq_landing", QuestionCategory::twaq, "When is {airline} landing?", Rule::clarify},
    {"twaq_soon", QuestionCategory::twaq, "Is the {airline} flight departing soon?", Rule::clarify},
    {"twaq_hour_ago", QuestionCategory::twaq, "Where was the {airline} aircraft one hour ago?",
     Rule::clarify},
    {"twaq_right_now", QuestionCategory::twaq, "Which {airline} flight is at the gate right now?",
     Rule::clarify},
    {"bqa_where", QuestionCategory::bqa, "Where is the {airline_lower}?", Rule::clarify},
    {"bqa_which_flight", QuestionCategory::bqa, "Which flight is at {airline}?", Rule::clarify},
    {"bqa_info", QuestionCategory::bqa, "Any information about the {airline} flight?",
     Rule::clarify},
    {"bqa_gate", QuestionCategory::bqa, "What is the gate for the {airline} airline?", Rule::clarify},
    {"afq_gate_assigned", QuestionCategory::afq, "Which gate is assigned to the {digits} flight?",
     Rule::clarify},
    {"afq_what_gate", QuestionCategory::afq, "At what gate is the {digits_short}?", Rule::clarify},
    {"afq_where_parked", QuestionCategory::afq, "Where is flight {digits} parked?", Rule::clarify},
    {"rs_connecting_on_ramp", QuestionCategory::nfq,
     "What is the expected on-ramp time for the connecting flight of {flight}?",
     Rule::connecting_on_ramp},
}};

// Reasoning family (b) shares the next-at-ramp wording with nfq_same_ramp.
constexpr AmbTemplate kReasoningNext = {"rs_next_same_ramp", QuestionCategory::nfq,
                                        "What is {flight}'s next flight from the same ramp?",
                                        Rule::same_ramp};

const SfTemplate* find_sf(std::string_view id) {
    for (const auto& t : kStraightforward)
        if (t.id == id) return &t;
    return nullptr;
}

const AmbTemplate* find_amb(std::string_view id) {
    for (const auto& t : kAmbiguous)
        if (t.id == id) return &t;
    if (id == kReasoningNext.id) return &kReasoningNext;
    return nullptr;
}

std::vector<const AmbTemplate*> templates_of(QuestionCategory c) {
    std::vector<const AmbTemplate*> out;
    for (const auto& t : kAmbiguous)
        if (t.category == c && t.id.substr(0, 3) != "rs_") out.push_back(&t);
    return out;
}

const FlightRecord* subject(const FlightStore& store, const QaPair& pair) {
    const auto it = pair.params.find("flight");
    return it == pair.params.end() ? nullptr : store.find_flight_nr(it->second);
}

std::string gate_short(std::string_view gate) {
    if (gate.size() == 3 && gate[1] == '0') return std::string{gate[0], gate[2]};
    return std::string(gate);
}

std::optional<QaPair> make_sf(const FlightStore& store, Rng& rng, const SfTemplate& t,
                              std::uint64_t seed) {
    const auto recs = store.records();
    const std::size_t field = *field_index(t.field);
    const std::size_t start = rng.below(recs.size());
    for (std::size_t step = 0; step < recs.size(); ++step) {
        const FlightRecord& r = recs[(start + step) % recs.size()];
        const std::string value = field_text(r, field);
        if (value.empty()) continue;
        QaPair p;
        p.params = {{"flight", r.flight_nr}, {"field", std::string(t.field)}};
        p.question = fill(t.text, p.params);
        p.answer = value;
        p.grounding_uid = r.flight_uid;
        p.template_id = std::string(t.id);
        p.seed = seed;
        return p;
    }
    return std::nullopt;
}

std::optional<QaPair> make_amb(const FlightStore& store, Rng& rng, const AmbTemplate& t,
                               std::uint64_t seed) {
    const auto recs = store.records();
    for (std::size_t attempt = 0; attempt < 4 * recs.size() + 8; ++attempt) {
        const FlightRecord& r = recs[rng.below(recs.size())];
        QaPair p;
        p.category = t.category;
        p.template_id = std::string(t.id);
        p.seed = seed;
        p.grounding_uid = r.flight_uid;
        switch (t.rule) {
            case Rule::gate_list:
            case Rule::gate_airlines:
            case Rule::gate_timed: {
                const bool use_bus = !r.bus_gate.empty() && rng.chance(0.3);
                const std::string gate = use_bus ? r.bus_gate : r.ramp;
                if (gate.empty()) continue;
                p.params["gate"] = gate;
                p.params["gate_short"] = gate_short(gate);
                if (t.rule == Rule::gate_timed) {
                    const Timestamp from = r.scheduled_block.plus_minutes(-60);
                    p.params["time"] = from.to_string();
                    const FlightRecord* hit = first_at_gate_from(store, gate, from);
                    p.answer = hit->flight_nr;
                    p.grounding_uid = hit->flight_uid;
                } else if (t.rule == Rule::gate_airlines) {
                    p.answer = airline_list(at_gate(store, gate));
                } else {
                    p.answer = flight_list(at_gate(store, gate));
                }
                break;
            }
            case Rule::connecting:
            case Rule::connecting_on_ramp: {
                if (r.connecting_flight_nr.empty()) continue;
                const FlightRecord* c = store.find_flight_nr(r.connecting_flight_nr);
                if (!c) continue;
                p.params["flight"] = r.flight_nr;
                p.answer = t.rule == Rule::connecting ? c->flight_nr
                                                      : c->expected_on_ramp.to_string();
                break;
            }
            case Rule::same_ramp: {
                const auto next =
                    graph::next_flight_oracle(store, r.flight_nr, graph::NextMode::same_ramp);
                if (!next) continue;
                p.params["flight"] = r.flight_nr;
                p.answer = *next;
                break;
            }
            case Rule::clarify: {
                const auto prefix = flight_prefix(r.flight_nr);
                const AirlineInfo* a = airline_by_prefix(prefix);
                const std::string digits = r.flight_nr.substr(prefix.size());
                std::string trimmed = digits;
                while (trimmed.size() > 2 && trimmed.front() == '0') trimmed.erase(0, 1);
                p.params["airline"] = a ? std::string(a->alias) : r.airline_name;
                p.params["airline_lower"] = detail::to_lower(p.params["airline"]);
                p.params["digits"] = digits;
                p.params["digits_short"] = trimmed;
                p.answer = std::string(kClarify);
                break;
            }
            case Rule::field: break;
        }
        p.question = fill(t.text, p.params);
        return p;
    }
    return std::nullopt;
}

std::vector<QaPair> generate_categorized(const FlightStore& store, std::size_t n,
                                         std::uint64_t seed, bool with_straightforward) {
    if (store.empty()) fail(Errc::empty_store, "cannot generate questions from an empty store");
    Rng rng(seed);
    std::vector<QuestionCategory> cats(std::begin(kAmbiguousCategories),
                                       std::end(kAmbiguousCategories));
    if (with_straightforward) cats.insert(cats.begin(), QuestionCategory::straightforward);
    std::vector<QaPair> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const QuestionCategory c = cats[i % cats.size()];
        std::optional<QaPair> p;
        if (c == QuestionCategory::straightforward) {
            p = make_sf(store, rng, kStraightforward[rng.below(kStraightforward.size())], seed);
        } else {
            auto ts = templates_of(c);
            // Fall back through the category's templates when the store has no
            // suitable flight (e.g. no connections).
            const std::size_t first = rng.below(ts.size());
            for (std::size_t k = 0; k < ts.size() && !p; ++k)
                p = make_amb(store, rng, *ts[(first + k) % ts.size()], seed);
        }
        if (!p) p = make_amb(store, rng, *templates_of(QuestionCategory::bgq).front(), seed);
        out.push_back(std::move(*p));
    }
    rng.shuffle(out);
    return out;
}

// Records whose article text must be in the evidence for the reference answer.
std::vector<std::string> evidence_uids(const FlightStore& store, const QaPair& pair) {
    std::vector<std::string> uids;
    if (pair.needs_clarification()) return uids;
    if (find_sf(pair.template_id)) return {pair.grounding_uid};
    const AmbTemplate* t = find_amb(pair.template_id);
    if (!t) return {pair.grounding_uid};
    switch (t->rule) {
        case Rule::gate_list:
        case Rule::gate_airlines:
            for (const auto* f : at_gate(store, pair.params.at("gate"))) uids.push_back(f->flight_uid);
            break;
        case Rule::gate_timed: uids.push_back(pair.grounding_uid); break;
        case Rule::connecting:
        case Rule::connecting_on_ramp:
        case Rule::same_ramp: {
            const FlightRecord* s = subject(store, pair);
            if (s) uids.push_back(s->flight_uid);
            std::string target = pair.answer;
            if (t->rule == Rule::connecting_on_ramp && s) target = s->connecting_flight_nr;
            if (const FlightRecord* n = store.find_flight_nr(target)) uids.push_back(n->flight_uid);
            break;
        }
        default: break;
    }
    return uids;
}

std::string quote(std::string_view s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'') out += '\'';
        out += c;
    }
    return out + "'";
}

std::vector<std::vector<std::string>> single(std::string v) { return {{std::move(v)}}; }

std::vector<std::vector<std::string>> column_rows(const std::string& joined) {
    std::vector<std::vector<std::string>> rows;
    if (joined.empty()) return rows;
    std::size_t start = 0;
    for (;;) {
        const auto pos = joined.find(", ", start);
        rows.push_back({joined.substr(start, pos - start)});
        if (pos == std::string::npos) break;
        start = pos + 2;
    }
    return rows;
}

// The scripted graph model writes plain property lookups with a WHERE clause
// instead of an inline property map: same rows, different text.
std::string graph_variant(const QaPair& pair, const std::string& gold) {
    const SfTemplate* t = find_sf(pair.template_id);
    if (!t || t->field == "ramp" || t->field == "airline_name" || t->field == "bus_gate") return gold;
    return "MATCH (f:Flight) WHERE f.flight_nr = " + quote(pair.params.at("flight")) +
           " RETURN f." + std::string(t->field);
}

std::string fabricated_flight(std::size_t i) {
    return "FR" + four_digits(static_cast<std::int64_t>((i * 7919 + 1234) % 10000));
}

json qa_json(const QaPair& p) {
    json j;
    j["question"] = p.question;
    j["answer"] = p.answer;
    j["category"] = std::string(category_name(p.category));
    j["grounding_uid"] = p.grounding_uid;
    j["template_id"] = p.template_id;
    j["seed"] = p.seed;
    j["params"] = p.params;
    return j;
}

std::vector<json> parse_lines(std::string_view text) {
    std::vector<json> out;
    std::size_t line_no = 0;
    for (const auto& raw : detail::split(text, '\n')) {
        ++line_no;
        const auto line = detail::trim(raw);
        if (line.empty()) continue;
        try {
            out.push_back(json::parse(line));
        } catch (const json::exception& e) {
            fail(Errc::parse_error, "line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(Errc::io, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(Errc::io, "cannot write " + path.string());
    out << text;
    if (!out) fail(Errc::io, "write failed: " + path.string());
}

}  // namespace

std::span<const AirlineInfo> airlines() { return kAirlines; }

const AirlineInfo* airline_by_prefix(std::string_view prefix) {
    for (const auto& a : kAirlines)
        if (detail::iequals(a.prefix, prefix)) return &a;
    return nullptr;
}

std::string_view flight_prefix(std::string_view flight_nr) {
    std::size_t i = 0;
    while (i < flight_nr.size() && detail::is_alpha(flight_nr[i])) ++i;
    return flight_nr.substr(0, i);
}

FlightStore generate_flights(std::size_t n, std::uint64_t seed, const FlightGenOptions& options) {
    if (n > 7 * 9000) fail(Errc::invalid_argument, "too many flights requested");
    Rng rng(seed);
    std::vector<FlightRecord> recs;
    recs.reserve(n);
    std::set<std::string> used_numbers;
    for (std::size_t i = 0; i < n; ++i) {
        const AirlineInfo* airline = &pick_airline(rng);
        FlightRecord r;
        for (;;) {
            r.flight_nr = std::string(airline->prefix) + four_digits(rng.between(1, 9999));
            if (used_numbers.insert(r.flight_nr).second) break;
            airline = &pick_airline(rng);
        }
        char uid[16];
        std::snprintf(uid, sizeof uid, "UID-%06zu", i + 1);
        r.flight_uid = uid;
        r.airline_name = std::string(airline->name);
        r.aircraft_category = std::string(kAircraft[rng.below(kAircraft.size())]);
        r.direction = rng.chance(0.5) ? Direction::departure : Direction::arrival;
        const char pier = kPiers[rng.below(kPiers.size())];
        r.ramp = std::string(1, pier) + two_digits(rng.between(1, kRampsPerPier));
        r.pier = std::string(1, pier);
        if (rng.chance(options.bus_fraction)) {
            r.bus_service = BusService::remote;
            r.bus_gate = "S" + two_digits(rng.between(1, kBusGates));
        }
        r.main_ground_handler = airline->prefix == "KL" || airline->prefix == "HV"
                                    ? "KLM Ground Services"
                                    : std::string(kHandlers[rng.below(kHandlers.size())]);
        r.scheduled_block = Timestamp::from_epoch(kBaseEpoch + rng.between(0, 86399));
        if (r.direction == Direction::departure) {
            r.expected_on_ramp = r.scheduled_block.plus_minutes(-45);
            r.expected_off_ramp = r.scheduled_block.plus_minutes(30);
        } else {
            r.expected_on_ramp = r.scheduled_block;
            r.expected_off_ramp = r.scheduled_block.plus_minutes(60);
        }
        r.modified_at = r.scheduled_block.plus_minutes(-rng.between(60, 48 * 60));
        if (rng.chance(0.2)) {
            const char p2 = kPiers[rng.below(kPiers.size())];
            r.previous_ramp = std::string(1, p2) + two_digits(rng.between(1, kRampsPerPier));
        }
        r.aircraft_registration = registration(rng, airline->registration_prefix);
        r.mtt_minutes = rng.between(25, 60);
        r.mtt_single_leg_minutes = rng.between(20, r.mtt_minutes);
        r.eu_indicator = rng.chance(0.6);
        r.safe_town_airport = rng.chance(0.5) ? SafeTownAirport::J : SafeTownAirport::P;
        r.best_block = r.scheduled_block.plus_minutes(rng.between(-5, 20));
        r.expected_block = r.best_block;
        if (rng.chance(0.1)) {
            r.expected_tow_in = r.expected_on_ramp.plus_minutes(-10);
            r.expected_tow_off = r.expected_off_ramp;
        }
        const double nature = rng.uniform();
        r.flight_nature = nature < 0.85 ? "passenger" : nature < 0.95 ? "cargo" : "ferry";
        r.push_back = r.direction == Direction::departure && rng.chance(0.8);
        fill_state(rng, r);
        recs.push_back(std::move(r));
    }

    // Some remote-boarding gates carry a code that is also somebody's ramp.
    if (recs.size() > 1) {
        for (std::size_t i = 0; i < recs.size(); ++i) {
            if (recs[i].bus_gate.empty() || !rng.chance(options.dual_gate_fraction)) continue;
            const auto& other = recs[rng.below(recs.size())];
            if (other.ramp != recs[i].ramp) recs[i].bus_gate = other.ramp;
        }
    }

    // Aircraft rotations: link to a later flight of the same airline.
    std::map<std::string, std::vector<std::size_t>> by_airline;
    for (std::size_t i = 0; i < recs.size(); ++i) by_airline[recs[i].airline_name].push_back(i);
    for (auto& [name, idx] : by_airline)
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            return recs[a].scheduled_block != recs[b].scheduled_block
                       ? recs[a].scheduled_block < recs[b].scheduled_block
                       : recs[a].flight_uid < recs[b].flight_uid;
        });
    std::set<std::size_t> targets;
    for (std::size_t i = 0; i < recs.size(); ++i) {
        if (!rng.chance(options.connecting_fraction)) continue;
        const auto& idx = by_airline[recs[i].airline_name];
        std::vector<std::size_t> later;
        for (std::size_t j : idx)
            if (j != i && !targets.count(j) &&
                recs[j].scheduled_block > recs[i].scheduled_block.plus_minutes(recs[i].mtt_minutes))
                later.push_back(j);
        if (later.empty()) continue;
        const std::size_t j = later[rng.below(std::min<std::size_t>(later.size(), 8))];
        targets.insert(j);
        recs[i].connecting_flight_nr = recs[j].flight_nr;
        recs[i].connecting_flight_uid = recs[j].flight_uid;
    }
    return FlightStore::from_records(std::move(recs));
}

std::vector<QaPair> generate_straightforward(const FlightStore& store, std::size_t n,
                                             std::uint64_t seed) {
    if (store.empty()) fail(Errc::empty_store, "cannot generate questions from an empty store");
    Rng rng(seed);
    std::vector<QaPair> out;
    out.reserve(n);
    while (out.size() < n) {
        const SfTemplate& t = kStraightforward[rng.below(kStraightforward.size())];
        if (auto p = make_sf(store, rng, t, seed)) out.push_back(std::move(*p));
        else if (auto q = make_sf(store, rng, kStraightforward[1], seed)) out.push_back(std::move(*q));
    }
    return out;
}

std::vector<QaPair> generate_ambiguous(const FlightStore& store, std::size_t n, std::uint64_t seed) {
    return generate_categorized(store, n, seed, false);
}

std::vector<QaPair> generate_classification(const FlightStore& store, std::size_t n,
                                            std::uint64_t seed) {
    return generate_categorized(store, n, seed, true);
}

std::vector<QaPair> generate_classification_fewshot(const FlightStore& store,
                                                    std::size_t per_category, std::uint64_t seed) {
    return generate_categorized(store, per_category * 6, seed, false);
}

std::vector<QaPair> generate_reasoning(const FlightStore& store, std::size_t n, std::uint64_t seed) {
    std::vector<const FlightRecord*> connecting, with_next;
    for (const auto& r : store.records()) {
        if (!r.connecting_flight_nr.empty() && store.find_flight_nr(r.connecting_flight_nr))
            connecting.push_back(&r);
        if (graph::next_flight_oracle(store, r.flight_nr, graph::NextMode::same_ramp))
            with_next.push_back(&r);
    }
    if (connecting.empty()) fail(Errc::no_connecting_flights, "store has no connecting flights");
    Rng rng(seed);
    rng.shuffle(connecting);
    rng.shuffle(with_next);
    const AmbTemplate& family_a = *find_amb("rs_connecting_on_ramp");
    std::vector<QaPair> out;
    std::size_t ia = 0, ib = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const bool use_b = i % 2 == 1 && !with_next.empty();
        const FlightRecord& r =
            use_b ? *with_next[ib++ % with_next.size()] : *connecting[ia++ % connecting.size()];
        const AmbTemplate& t = use_b ? kReasoningNext : family_a;
        QaPair p;
        p.category = t.category;
        p.template_id = std::string(t.id);
        p.seed = seed;
        p.grounding_uid = r.flight_uid;
        p.params["flight"] = r.flight_nr;
        p.question = fill(t.text, p.params);
        p.answer = use_b ? *graph::next_flight_oracle(store, r.flight_nr, graph::NextMode::same_ramp)
                         : store.find_flight_nr(r.connecting_flight_nr)->expected_on_ramp.to_string();
        out.push_back(std::move(p));
    }
    return out;
}

std::optional<GoldQuery> gold_query(const FlightStore& store, const QaPair& pair, QueryKind kind) {
    if (pair.needs_clarification()) return std::nullopt;
    const bool sql = kind == QueryKind::sql;
    GoldQuery g;
    g.question = pair.question;
    g.template_id = pair.template_id;
    g.category = pair.category;

    if (const SfTemplate* t = find_sf(pair.template_id)) {
        const std::string x = quote(pair.params.at("flight"));
        const std::string f(t->field);
        if (sql) {
            g.query = "SELECT " + f + " FROM flights WHERE flight_nr = " + x;
        } else if (f == "ramp") {
            g.query = "MATCH (f:Flight {flight_nr: " + x + "})-[:AT_RAMP]->(r:Ramp) RETURN r.code AS ramp";
        } else if (f == "bus_gate") {
            g.query = "MATCH (f:Flight {flight_nr: " + x +
                      "})-[:AT_BUS_GATE]->(b:BusGate) RETURN b.code AS bus_gate";
        } else if (f == "airline_name") {
            g.query = "MATCH (f:Flight {flight_nr: " + x +
                      "})-[:OPERATED_BY]->(a:Airline) RETURN a.name AS airline_name";
        } else {
            g.query = "MATCH (f:Flight {flight_nr: " + x + "}) RETURN f." + f;
        }
        g.expected_rows = single(pair.answer);
        return g;
    }

    const AmbTemplate* t = find_amb(pair.template_id);
    if (!t) return std::nullopt;
    const auto param = [&](const char* k) { return quote(pair.params.at(k)); };
    switch (t->rule) {
        case Rule::gate_list: {
            const std::string gt = param("gate");
            g.query = sql ? "SELECT flight_nr FROM flights WHERE ramp = " + gt + " OR bus_gate = " + gt
                          : "MATCH (f:Flight) WHERE f.ramp = " + gt + " OR f.bus_gate = " + gt +
                                " RETURN f.flight_nr";
            g.expected_rows = column_rows(pair.answer);
            break;
        }
        case Rule::gate_airlines: {
            const std::string gt = param("gate");
            g.query = sql ? "SELECT DISTINCT airline_name FROM flights WHERE ramp = " + gt +
                                " OR bus_gate = " + gt
                          : "MATCH (f:Flight)-[:OPERATED_BY]->(a:Airline) WHERE f.ramp = " + gt +
                                " OR f.bus_gate = " + gt + " RETURN DISTINCT a.name AS airline_name";
            g.expected_rows = column_rows(pair.answer);
            break;
        }
        case Rule::gate_timed: {
            const std::string gt = param("gate");
            const std::string tm = param("time");
            g.query = sql ? "SELECT flight_nr FROM flights WHERE (ramp = " + gt + " OR bus_gate = " +
                                gt + ") AND scheduled_block >= " + tm +
                                " ORDER BY scheduled_block ASC, flight_uid ASC LIMIT 1"
                          : "MATCH (f:Flight) WHERE (f.ramp = " + gt + " OR f.bus_gate = " + gt +
                                ") AND f.scheduled_block >= " + tm +
                                " RETURN f.flight_nr ORDER BY f.scheduled_block ASC, f.flight_uid "
                                "ASC LIMIT 1";
            g.expected_rows = single(pair.answer);
            break;
        }
        case Rule::connecting: {
            const std::string x = param("flight");
            g.query = sql ? "SELECT connecting_flight_nr FROM flights WHERE flight_nr = " + x
                          : "MATCH (f:Flight {flight_nr: " + x +
                                "})-[:CONNECTS_TO]->(c:Flight) RETURN c.flight_nr";
            g.expected_rows = single(pair.answer);
            break;
        }
        case Rule::connecting_on_ramp: {
            const std::string x = param("flight");
            g.query = sql ? "SELECT c.expected_on_ramp FROM flights AS f JOIN flights AS c ON "
                            "f.connecting_flight_nr = c.flight_nr WHERE f.flight_nr = " + x
                          : "MATCH (f:Flight {flight_nr: " + x +
                                "})-[:CONNECTS_TO]->(c:Flight) RETURN c.expected_on_ramp";
            g.expected_rows = single(pair.answer);
            break;
        }
        case Rule::same_ramp: {
            const std::string x = param("flight");
            g.query = sql ? "SELECT n.flight_nr FROM flights AS f JOIN flights AS n ON f.ramp = "
                            "n.ramp WHERE f.flight_nr = " + x +
                                " AND n.expected_on_ramp > f.expected_on_ramp ORDER BY "
                                "n.expected_on_ramp ASC, n.flight_uid ASC LIMIT 1"
                          : "MATCH (f:Flight {flight_nr: " + x +
                                "})-[:NEXT_AT_RAMP]->(n:Flight) RETURN n.flight_nr";
            g.expected_rows = single(pair.answer);
            break;
        }
        case Rule::field:
        case Rule::clarify: return std::nullopt;
    }
    (void)store;
    return g;
}

std::vector<GoldQuery> gold_queries(const FlightStore& store, const std::vector<QaPair>& pairs,
                                    QueryKind kind) {
    std::vector<GoldQuery> out;
    for (const auto& p : pairs)
        if (auto g = gold_query(store, p, kind)) out.push_back(std::move(*g));
    return out;
}

std::string answer_sentence(const QaPair& pair) {
    if (pair.needs_clarification()) return pair.answer;
    if (const SfTemplate* t = find_sf(pair.template_id)) {
        const auto& info = field_info(*field_index(t->field));
        return "The " + std::string(info.label) + " of flight " + pair.params.at("flight") +
               " is " + pair.answer + ".";
    }
    const AmbTemplate* t = find_amb(pair.template_id);
    if (!t) return pair.answer;
    switch (t->rule) {
        case Rule::gate_list: return "Flights at gate " + pair.params.at("gate") + ": " + pair.answer + ".";
        case Rule::gate_airlines:
            return "Airlines at gate " + pair.params.at("gate") + ": " + pair.answer + ".";
        case Rule::gate_timed:
            return "Flight " + pair.answer + " is the next flight at gate " + pair.params.at("gate") + ".";
        case Rule::connecting:
            return "The connecting flight of " + pair.params.at("flight") + " is " + pair.answer + ".";
        case Rule::connecting_on_ramp:
            return "The connecting flight of " + pair.params.at("flight") +
                   " is expected on the ramp at " + pair.answer + ".";
        case Rule::same_ramp:
            return "The next flight from the same ramp as " + pair.params.at("flight") + " is " +
                   pair.answer + ".";
        default: return pair.answer;
    }
}

Bundle generate_bundle(std::uint64_t seed, const BundleSizes& sizes) {
    return generate_bundle(generate_flights(sizes.flights, seed), seed, sizes);
}

Bundle generate_bundle(FlightStore store, std::uint64_t seed, const BundleSizes& sizes) {
    Bundle b;
    b.seed = seed;
    b.store = std::move(store);
    const FlightStore& s = b.store;
    b.straightforward = generate_straightforward(s, sizes.straightforward, seed + 1);
    b.ambiguous = generate_ambiguous(s, sizes.ambiguous, seed + 2);
    b.classification = generate_classification(s, sizes.classification, seed + 3);
    b.reasoning = generate_reasoning(s, sizes.reasoning, seed + 4);
    b.fewshot_classification =
        generate_classification_fewshot(s, sizes.fewshot_classification_per_category, seed + 5);

    // Few-shot query demonstrations: mostly field lookups, with some gate,
    // next-flight and two-hop examples mixed in.
    const std::size_t n = sizes.fewshot_sql;
    auto sf = generate_straightforward(s, n, seed + 6);
    std::vector<QaPair> answerable;
    for (auto& p : generate_ambiguous(s, 6 * n, seed + 7))
        if (!p.needs_clarification()) answerable.push_back(std::move(p));
    auto rs = generate_reasoning(s, n, seed + 8);
    std::vector<QaPair> demo;
    std::size_t isf = 0, iam = 0, irs = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (i % 8 == 5 && irs < rs.size()) demo.push_back(rs[irs++]);
        else if (i % 4 == 3 && iam < answerable.size()) demo.push_back(answerable[iam++]);
        else demo.push_back(sf[isf++ % sf.size()]);
    }
    for (const auto& p : demo) {
        b.fewshot_sql.push_back({p.question, gold_query(s, p, QueryKind::sql)->query, ""});
        b.fewshot_graph.push_back({p.question, gold_query(s, p, QueryKind::graph)->query, ""});
    }
    for (const auto& p : generate_straightforward(s, sizes.fewshot_answers, seed + 9))
        b.fewshot_answers.push_back({p.question, answer_sentence(p), ""});

    std::vector<QaPair> all = b.straightforward;
    all.insert(all.end(), b.ambiguous.begin(), b.ambiguous.end());
    all.insert(all.end(), b.reasoning.begin(), b.reasoning.end());
    b.gold_sql = gold_queries(s, all, QueryKind::sql);
    b.gold_graph = gold_queries(s, all, QueryKind::graph);
    return b;
}

std::vector<llm::FixtureRule> build_fixture(const Bundle& bundle, const FixtureOptions& options) {
    using prompting::question_line;
    std::vector<llm::FixtureRule> rules;
    std::set<std::vector<std::string>> seen;
    const auto add = [&](std::vector<std::string> match, std::string response) {
        if (seen.insert(match).second) rules.push_back({std::move(match), std::move(response)});
    };
    const std::string cls(prompting::kClassificationMarker);
    const std::string gate(prompting::kGateExtractionMarker);
    const std::string sql(prompting::kSqlMarker);
    const std::string graph(prompting::kGraphMarker);
    const std::string answer(prompting::kTraditionalAnswerMarker);

    for (const auto& p : bundle.fewshot_classification)
        add({cls, question_line(p.question)},
            "['" + std::to_string(category_code(p.category)) + "']");

    for (const auto* set : {&bundle.ambiguous, &bundle.classification, &bundle.straightforward})
        for (const auto& p : *set)
            if (auto it = p.params.find("gate"); it != p.params.end())
                add({gate, question_line(p.question)}, it->second);

    for (const auto& g : bundle.gold_sql) add({sql, question_line(g.question)}, g.query);

    std::vector<QaPair> all = bundle.straightforward;
    all.insert(all.end(), bundle.ambiguous.begin(), bundle.ambiguous.end());
    all.insert(all.end(), bundle.reasoning.begin(), bundle.reasoning.end());
    for (const auto& p : all) {
        if (auto g = gold_query(bundle.store, p, QueryKind::graph))
            add({graph, question_line(p.question)}, graph_variant(p, g->query));
    }

    std::size_t gate_lists = 0;
    for (const auto& p : all) {
        if (p.needs_clarification()) continue;
        std::vector<std::string> match{answer, question_line(p.question)};
        for (const auto& uid : evidence_uids(bundle.store, p)) match.push_back("flight uid: " + uid + ";");
        std::string response = answer_sentence(p);
        const AmbTemplate* t = find_amb(p.template_id);
        if (t && t->rule == Rule::gate_list && options.hallucinate_every > 0 &&
            ++gate_lists % options.hallucinate_every == 0)
            response += " Flight " + fabricated_flight(gate_lists) + " is also expected at gate " +
                        p.params.at("gate") + ".";
        add(std::move(match), std::move(response));
    }
    add({answer}, "The information is not available in the flight records.");
    return rules;
}

std::string qa_to_jsonl(const std::vector<QaPair>& pairs) {
    std::string out;
    for (const auto& p : pairs) out += qa_json(p).dump() + "\n";
    return out;
}

std::vector<QaPair> qa_from_jsonl(std::string_view text) {
    std::vector<QaPair> out;
    for (const auto& j : parse_lines(text)) {
        QaPair p;
        try {
            p.question = j.at("question").get<std::string>();
            p.answer = j.at("answer").get<std::string>();
            const auto cat = parse_category(j.value("category", "STRAIGHTFORWARD"));
            if (!cat) fail(Errc::parse_error, "unknown category in QA line");
            p.category = *cat;
            p.grounding_uid = j.value("grounding_uid", "");
            p.template_id = j.value("template_id", "");
            p.seed = j.value("seed", std::uint64_t{0});
            if (j.contains("params")) p.params = j.at("params").get<std::map<std::string, std::string>>();
        } catch (const json::exception& e) {
            fail(Errc::parse_error, std::string("QA line: ") + e.what());
        }
        out.push_back(std::move(p));
    }
    return out;
}

std::string examples_to_jsonl(const std::vector<prompting::Example>& examples) {
    std::string out;
    for (const auto& e : examples) {
        json j;
        j["question"] = e.question;
        j["output"] = e.output;
        if (!e.answer.empty()) j["answer"] = e.answer;
        out += j.dump() + "\n";
    }
    return out;
}

std::vector<prompting::Example> examples_from_jsonl(std::string_view text) {
    std::vector<prompting::Example> out;
    for (const auto& j : parse_lines(text)) {
        try {
            out.push_back({j.at("question").get<std::string>(), j.at("output").get<std::string>(),
                           j.value("answer", "")});
        } catch (const json::exception& e) {
            fail(Errc::parse_error, std::string("example line: ") + e.what());
        }
    }
    return out;
}

std::string gold_to_jsonl(const std::vector<GoldQuery>& gold, QueryKind kind) {
    std::string out;
    for (const auto& g : gold) {
        json j;
        j["question"] = g.question;
        j[kind == QueryKind::sql ? "gold_sql" : "gold_query"] = g.query;
        j["expected_rows"] = g.expected_rows;
        j["template_id"] = g.template_id;
        j["category"] = std::string(category_name(g.category));
        out += j.dump() + "\n";
    }
    return out;
}

std::vector<GoldQuery> gold_from_jsonl(std::string_view text, QueryKind kind) {
    std::vector<GoldQuery> out;
    const char* key = kind == QueryKind::sql ? "gold_sql" : "gold_query";
    for (const auto& j : parse_lines(text)) {
        GoldQuery g;
        try {
            g.question = j.at("question").get<std::string>();
            g.query = j.at(key).get<std::string>();
            g.expected_rows = j.value("expected_rows", std::vector<std::vector<std::string>>{});
            g.template_id = j.value("template_id", "");
            g.category = parse_category(j.value("category", "STRAIGHTFORWARD"))
                             .value_or(QuestionCategory::straightforward);
        } catch (const json::exception& e) {
            fail(Errc::parse_error, std::string("gold line: ") + e.what());
        }
        out.push_back(std::move(g));
    }
    return out;
}

void write_bundle(const Bundle& b, const std::filesystem::path& dir, const FixtureOptions& options) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) fail(Errc::io, "cannot create " + dir.string() + ": " + ec.message());
    {
        std::ostringstream csv;
        write_csv(b.store, csv);
        write_text(dir / "flights.csv", csv.str());
    }
    write_text(dir / "straightforward.jsonl", qa_to_jsonl(b.straightforward));
    write_text(dir / "ambiguous.jsonl", qa_to_jsonl(b.ambiguous));
    write_text(dir / "classification.jsonl", qa_to_jsonl(b.classification));
    write_text(dir / "reasoning.jsonl", qa_to_jsonl(b.reasoning));
    write_text(dir / "fewshot_classification.jsonl", qa_to_jsonl(b.fewshot_classification));
    write_text(dir / "fewshot_sql.jsonl", examples_to_jsonl(b.fewshot_sql));
    write_text(dir / "fewshot_graph.jsonl", examples_to_jsonl(b.fewshot_graph));
    write_text(dir / "fewshot_answers.jsonl", examples_to_jsonl(b.fewshot_answers));
    write_text(dir / "gold_sql.jsonl", gold_to_jsonl(b.gold_sql, QueryKind::sql));
    write_text(dir / "gold_graph.jsonl", gold_to_jsonl(b.gold_graph, QueryKind::graph));
    write_text(dir / "fixture.jsonl", llm::fixture_to_jsonl(build_fixture(b, options)));
    json manifest;
    manifest["seed"] = b.seed;
    manifest["flights"] = b.store.size();
    manifest["straightforward"] = b.straightforward.size();
    manifest["ambiguous"] = b.ambiguous.size();
    manifest["classification"] = b.classification.size();
    manifest["reasoning"] = b.reasoning.size();
    manifest["hallucinate_every"] = options.hallucinate_every;
    write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

Bundle read_bundle(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) fail(Errc::io, "not a dataset directory: " + dir.string());
    Bundle b;
    const auto opt = [&](const char* name) -> std::string {
        const auto p = dir / name;
        return std::filesystem::exists(p) ? read_text(p) : std::string();
    };
    b.store = ingest_csv(dir / "flights.csv");
    if (const auto m = opt("manifest.json"); !m.empty()) {
        try {
            b.seed = json::parse(m).value("seed", std::uint64_t{0});
        } catch (const json::exception& e) {
            fail(Errc::parse_error, std::string("manifest.json: ") + e.what());
        }
    }
    b.straightforward = qa_from_jsonl(opt("straightforward.jsonl"));
    b.ambiguous = qa_from_jsonl(opt("ambiguous.jsonl"));
    b.classification = qa_from_jsonl(opt("classification.jsonl"));
    b.reasoning = qa_from_jsonl(opt("reasoning.jsonl"));
    b.fewshot_classification = qa_from_jsonl(opt("fewshot_classification.jsonl"));
    b.fewshot_sql = examples_from_jsonl(opt("fewshot_sql.jsonl"));
    b.fewshot_graph = examples_from_jsonl(opt("fewshot_graph.jsonl"));
    b.fewshot_answers = examples_from_jsonl(opt("fewshot_answers.jsonl"));
    b.gold_sql = gold_from_jsonl(opt("gold_sql.jsonl"), QueryKind::sql);
    b.gold_graph = gold_from_jsonl(opt("gold_graph.jsonl"), QueryKind::graph);
    return b;
}

std::vector<QaPair> paraphrase(const std::vector<QaPair>& pairs, const llm::Llm& model) {
    const auto& tmpl = prompting::get_template("paraphrase");
    std::vector<QaPair> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs) {
        QaPair q = p;
        const std::string reply(
            detail::trim(model.complete("", prompting::render(tmpl, {{"question", p.question}}))));
        bool keeps_slots = !reply.empty() && reply.find('\n') == std::string::npos;
        for (const auto& [k, v] : p.params)
            if (keeps_slots && k != "field" && k != "airline_lower" &&
                p.question.find(v) != std::string::npos && reply.find(v) == std::string::npos)
                keeps_slots = false;
        if (keeps_slots) q.question = reply;
        out.push_back(std::move(q));
    }
    return out;
}

}  // namespace flightrag::datagen
