#pragma once

#include <map>
#include <mutex>
#include <string>

#include <json.hpp>

namespace factdetect {

// Named event counters shared by concurrent workers.
class Diagnostics {
public:
    void increment(const std::string& name, long by = 1) {
        std::lock_guard lock(mu_);
        counts_[name] += by;
    }

    long get(const std::string& name) const {
        std::lock_guard lock(mu_);
        auto it = counts_.find(name);
        return it == counts_.end() ? 0 : it->second;
    }

    std::map<std::string, long> snapshot() const {
        std::lock_guard lock(mu_);
        return counts_;
    }

    nlohmann::json to_json() const { return nlohmann::json(snapshot()); }

private:
    mutable std::mutex mu_;
    std::map<std::string, long> counts_;
};

}  // namespace factdetect
