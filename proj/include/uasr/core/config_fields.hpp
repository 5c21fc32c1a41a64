#ifndef UASR_CORE_CONFIG_FIELDS_HPP
#define UASR_CORE_CONFIG_FIELDS_HPP

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <type_traits>

#include "uasr/core/errors.hpp"
#include "uasr/core/io.hpp"

namespace uasr {

// Config structs expose `template <class V> void visit(V&& v)` calling v(key, field)
// for every field. These helpers turn that into flat key/value text.

template <class T>
std::string field_to_string(const T& value) {
    if constexpr (std::is_same_v<T, bool>) {
        return value ? "true" : "false";
    } else if constexpr (std::is_same_v<T, double>) {
        return format_double(value);
    } else if constexpr (std::is_integral_v<T>) {
        return std::to_string(value);
    } else {
        return value;
    }
}

template <class T>
void field_from_string(std::string_view key, std::string_view text, T& value) {
    try {
        if constexpr (std::is_same_v<T, bool>) {
            if (text == "true" || text == "1" || text == "yes" || text == "on") value = true;
            else if (text == "false" || text == "0" || text == "no" || text == "off") value = false;
            else throw ParseError("expected a boolean", 0);
        } else if constexpr (std::is_same_v<T, double>) {
            value = parse_double(text);
        } else if constexpr (std::is_integral_v<T>) {
            value = static_cast<T>(parse_count(text));
        } else {
            value = std::string(text);
        }
    } catch (const ParseError&) {
        throw DataError("invalid value '" + std::string(text) + "' for key '" + std::string(key) + "'");
    }
}

template <class Config>
std::map<std::string, std::string> config_to_map(const Config& cfg, const std::string& prefix = "") {
    std::map<std::string, std::string> out;
    const_cast<Config&>(cfg).visit([&](std::string_view key, auto& field) {
        out[prefix + std::string(key)] = field_to_string(field);
    });
    return out;
}

// Applies the entries of `values` whose key starts with prefix; returns how many were used.
template <class Config>
std::size_t apply_config_map(Config& cfg, const std::map<std::string, std::string>& values, const std::string& prefix = "") {
    std::size_t used = 0;
    cfg.visit([&](std::string_view key, auto& field) {
        auto it = values.find(prefix + std::string(key));
        if (it != values.end()) {
            field_from_string(it->first, it->second, field);
            ++used;
        }
    });
    return used;
}

template <class Config>
bool config_has_key(Config& cfg, std::string_view key) {
    bool found = false;
    cfg.visit([&](std::string_view k, auto&) { found = found || k == key; });
    return found;
}

} // namespace uasr

#endif
