#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace simicd {

/// One device- or simulation-level event. Serialized as a single JSON line
/// with t_ms and type first, the payload flattened alongside.
struct Event {
    double t_ms = 0;
    std::string type;
    nlohmann::json data = nlohmann::json::object();
};

using EventLog = std::vector<Event>;

nlohmann::json event_to_json(const Event& e);
Event event_from_json(const nlohmann::json& j);

void write_event_log(const EventLog& log, const std::string& path);
EventLog read_event_log(const std::string& path);

/// Events of a given type, in order.
std::vector<Event> events_of_type(const EventLog& log, const std::string& type);

}  // namespace simicd
