// Copyright Contributors to the Gaze3D Project
// SPDX-License-Identifier: Apache-2.0
//
// Flat dotted-key configuration files: one "key = value" per line, '#'
// comments, no sections. Consumers take keys through the typed getters;
// anything left over is an unknown key and rejected.

#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>

#include <gaze3d/common.hpp>

namespace gaze3d::config {

class ConfigMap {
  public:
    static ConfigMap from_file(const std::string& path);
    static ConfigMap from_text(const std::string& text, const std::string& origin = "<text>");

    /// Applies one "key=value" command-line override on top of the file.
    void apply_override(const std::string& assignment);

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    /// Typed getters. Each returns the fallback when the key is absent and
    /// marks the key consumed; malformed values raise ConfigError naming
    /// the key.
    std::string take_string(const std::string& key, const std::string& fallback);
    double take_double(const std::string& key, double fallback);
    int take_int(const std::string& key, int fallback);
    std::uint64_t take_u64(const std::string& key, std::uint64_t fallback);
    bool take_bool(const std::string& key, bool fallback);

    /// Throws ConfigError listing every key no getter consumed.
    void expect_consumed() const;

  private:
    std::map<std::string, std::string> values_;
    std::set<std::string> consumed_;
    std::string origin_;
};

}  // namespace gaze3d::config
