// Copyright Contributors to the Gaze3D Project
// SPDX-License-Identifier: Apache-2.0

#include <gaze3d/config.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace gaze3d::config {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) {
        return "";
    }
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

}  // namespace

ConfigMap ConfigMap::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("config: cannot read " + path);
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return from_text(buffer.str(), path);
}

ConfigMap ConfigMap::from_text(const std::string& text, const std::string& origin) {
    ConfigMap cfg;
    cfg.origin_ = origin;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line.erase(hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(origin + ":" + std::to_string(line_no) +
                              ": expected 'key = value', got '" + line + "'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key");
        }
        if (!cfg.values_.emplace(key, value).second) {
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": duplicate key '" +
                              key + "'");
        }
    }
    return cfg;
}

void ConfigMap::apply_override(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || trim(assignment.substr(0, eq)).empty()) {
        throw ConfigError("override '" + assignment + "' is not of the form key=value");
    }
    values_[trim(assignment.substr(0, eq))] = trim(assignment.substr(eq + 1));
}

std::string ConfigMap::take_string(const std::string& key, const std::string& fallback) {
    consumed_.insert(key);
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

double ConfigMap::take_double(const std::string& key, double fallback) {
    consumed_.insert(key);
    const auto it = values_.find(key);
    if (it == values_.end()) {
        return fallback;
    }
    char* end = nullptr;
    const double v = std::strtod(it->second.c_str(), &end);
    if (end == it->second.c_str() || *end != '\0') {
        throw ConfigError("config key '" + key + "': '" + it->second + "' is not a number");
    }
    return v;
}

int ConfigMap::take_int(const std::string& key, int fallback) {
    const double v = take_double(key, static_cast<double>(fallback));
    const int i = static_cast<int>(v);
    if (static_cast<double>(i) != v) {
        throw ConfigError("config key '" + key + "': expected an integer");
    }
    return i;
}

std::uint64_t ConfigMap::take_u64(const std::string& key, std::uint64_t fallback) {
    consumed_.insert(key);
    const auto it = values_.find(key);
    if (it == values_.end()) {
        return fallback;
    }
    char* end = nullptr;
    const unsigned long long v = std::strtoull(it->second.c_str(), &end, 10);
    if (end == it->second.c_str() || *end != '\0') {
        throw ConfigError("config key '" + key + "': '" + it->second +
                          "' is not an unsigned integer");
    }
    return v;
}

bool ConfigMap::take_bool(const std::string& key, bool fallback) {
    consumed_.insert(key);
    const auto it = values_.find(key);
    if (it == values_.end()) {
        return fallback;
    }
    const std::string& v = it->second;
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("config key '" + key + "': '" + v + "' is not a boolean");
}

void ConfigMap::expect_consumed() const {
    std::string unknown;
    for (const auto& [key, value] : values_) {
        if (!consumed_.count(key)) {
            unknown += unknown.empty() ? key : ", " + key;
        }
    }
    if (!unknown.empty()) {
        throw ConfigError(origin_ + ": unknown config keys: " + unknown);
    }
}

}  // namespace gaze3d::config
