#include "kgr/report.hpp"

#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "kgr/error.hpp"

namespace kgr {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string MetricsReport::to_text() const {
    std::ostringstream out;
    out << "task=" << task << '\n';
    out << "fingerprint=" << fingerprint << '\n';
    out << "seed=" << seed << '\n';
    for (const auto& [key, value] : metrics) {
        out << key << '=' << format_double(value) << '\n';
    }
    return out.str();
}

std::string MetricsReport::to_json() const {
    nlohmann::ordered_json j;
    j["task"] = task;
    j["fingerprint"] = fingerprint;
    j["seed"] = seed;
    nlohmann::ordered_json m = nlohmann::ordered_json::object();
    for (const auto& [key, value] : metrics) m[key] = value;
    j["metrics"] = m;
    return j.dump(2) + "\n";
}

MetricsReport MetricsReport::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(e.what(), 0);
    }
    MetricsReport r;
    r.task = j.at("task").get<std::string>();
    r.fingerprint = j.at("fingerprint").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& [key, value] : j.at("metrics").items()) {
        r.metrics[key] = value.get<double>();
    }
    return r;
}

}  // namespace kgr
