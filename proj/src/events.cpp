#include "simicd/events.hpp"

#include <fstream>

#include "simicd/errors.hpp"

namespace simicd {

nlohmann::json event_to_json(const Event& e) {
    nlohmann::json j;
    j["t_ms"] = e.t_ms;
    j["type"] = e.type;
    for (auto it = e.data.begin(); it != e.data.end(); ++it) j[it.key()] = it.value();
    return j;
}

Event event_from_json(const nlohmann::json& j) {
    Event e;
    e.t_ms = j.at("t_ms").get<double>();
    e.type = j.at("type").get<std::string>();
    for (auto it = j.begin(); it != j.end(); ++it)
        if (it.key() != "t_ms" && it.key() != "type") e.data[it.key()] = it.value();
    return e;
}

void write_event_log(const EventLog& log, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw SimulationError("cannot write event log: " + path);
    for (const auto& e : log) f << event_to_json(e).dump() << '\n';
    if (!f) throw SimulationError("short write on event log: " + path);
}

EventLog read_event_log(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw SimulationError("cannot open event log: " + path);
    EventLog log;
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            log.push_back(event_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& ex) {
            throw SimulationError("bad event log line " + std::to_string(lineno) + ": " +
                                  ex.what());
        }
    }
    return log;
}

std::vector<Event> events_of_type(const EventLog& log, const std::string& type) {
    std::vector<Event> out;
    for (const auto& e : log)
        if (e.type == type) out.push_back(e);
    return out;
}

}  // namespace simicd
