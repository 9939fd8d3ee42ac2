// Copyright Contributors to the Gaze3D Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <string>
#include <vector>

#include <gaze3d/nn/tensor.hpp>

namespace gaze3d::nn {

/// Ordered collection of named tensors plus a free-form metadata string,
/// serialized to a single binary file. Values are written as raw
/// little-endian doubles, so a save/load round trip is bit exact.
class TensorArchive {
public:
    void put(const std::string& name, const Tensor& tensor);
    bool contains(const std::string& name) const;

    /// Throws DataError when the name is absent.
    const Tensor& get(const std::string& name) const;

    const std::vector<std::string>& names() const { return order_; }

    std::string metadata;

    void save(const std::string& path) const;
    static TensorArchive load(const std::string& path);

private:
    std::vector<std::string> order_;
    std::map<std::string, Tensor> entries_;
};

}  // namespace gaze3d::nn
