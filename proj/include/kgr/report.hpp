#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace kgr {

// One downstream-task result: metric key -> value, plus the configuration
// fingerprint and seed that produced it. Keys are namespaced, e.g.
// lp.rank.filtered.mrr, lp.thresh.ap, nodecls.macro_f1.
struct MetricsReport {
    std::string task;
    std::map<std::string, double> metrics;
    std::string fingerprint;
    std::uint64_t seed = 0;

    std::string to_text() const;   // one metric=value line per key
    std::string to_json() const;
    static MetricsReport from_json(const std::string& text);
};

std::string format_double(double v);  // 17 significant digits, round-trip exact

}  // namespace kgr
