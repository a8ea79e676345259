#pragma once

// Strict reader over a JSON object: every key must be consumed, and
// temperatures may be given in kelvin ("<name>_K") or Celsius ("<name>_C").

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hotemboss/errors.hpp"
#include "json.hpp"

namespace hotemboss {

inline constexpr double kCelsiusOffset = 273.15;

class JsonReader {
public:
    JsonReader(const nlohmann::json& object, std::string context) : object_(object), context_(std::move(context)) {
        if (!object_.is_object()) {
            throw ConfigError(context_ + ": expected a JSON object");
        }
    }

    bool has(const std::string& key) const { return object_.contains(key); }

    const nlohmann::json& raw(const std::string& key) {
        if (!object_.contains(key)) {
            throw ConfigError(context_ + ": missing required key '" + key + "'");
        }
        used_.insert(key);
        return object_.at(key);
    }

    std::optional<nlohmann::json> optional_raw(const std::string& key) {
        if (!object_.contains(key)) {
            return std::nullopt;
        }
        used_.insert(key);
        return object_.at(key);
    }

    template <typename T>
    T get(const std::string& key) {
        const auto& v = raw(key);
        try {
            return v.get<T>();
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(context_ + ": key '" + key + "' has the wrong type (" + e.what() + ")");
        }
    }

    template <typename T>
    T get_or(const std::string& key, T fallback) {
        if (!has(key)) {
            return fallback;
        }
        return get<T>(key);
    }

    double positive(const std::string& key) {
        const double v = get<double>(key);
        if (!(v > 0.0)) {
            throw ConfigError(context_ + ": '" + key + "' must be > 0");
        }
        return v;
    }

    bool has_temperature(const std::string& stem) const { return has(stem + "_K") || has(stem + "_C"); }

    /// Reads "<stem>_K" or "<stem>_C" (exactly one must be present); returns kelvin.
    double temperature(const std::string& stem) {
        const bool k = has(stem + "_K");
        const bool c = has(stem + "_C");
        if (k && c) {
            throw ConfigError(context_ + ": both '" + stem + "_K' and '" + stem + "_C' given");
        }
        if (k) {
            return get<double>(stem + "_K");
        }
        if (c) {
            return get<double>(stem + "_C") + kCelsiusOffset;
        }
        throw ConfigError(context_ + ": missing '" + stem + "_K' (or '" + stem + "_C')");
    }

    std::optional<double> optional_temperature(const std::string& stem) {
        if (!has_temperature(stem)) {
            return std::nullopt;
        }
        return temperature(stem);
    }

    /// Temperature list under "<stem>_K" or "<stem>_C".
    std::vector<double> temperatures(const std::string& stem) {
        const bool c = has(stem + "_C");
        auto values = c ? get<std::vector<double>>(stem + "_C") : get<std::vector<double>>(stem + "_K");
        if (c) {
            for (auto& v : values) {
                v += kCelsiusOffset;
            }
        }
        return values;
    }

    /// Throws on any key that was never read.
    void finish() const {
        for (const auto& [key, value] : object_.items()) {
            if (!used_.count(key) && key != "comment") {
                throw ConfigError(context_ + ": unknown key '" + key + "'");
            }
        }
    }

    const std::string& context() const noexcept { return context_; }

private:
    const nlohmann::json& object_;
    std::string context_;
    std::set<std::string> used_;
};

}  // namespace hotemboss
