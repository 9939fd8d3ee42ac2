// Copyright Contributors to the Gaze3D Project
// SPDX-License-Identifier: Apache-2.0

#include <gaze3d/nn/checkpoint.hpp>

#include <algorithm>
#include <bit>
#include <cstdint>
#include <fstream>

namespace gaze3d::nn {

static_assert(std::endian::native == std::endian::little,
              "checkpoint serialization assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'G', 'Z', '3', 'D', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_pod(std::istream& is, T& v) {
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw DataError("checkpoint: truncated file");
}

void write_string(std::ostream& os, const std::string& s) {
    write_pod(os, static_cast<std::uint64_t>(s.size()));
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& is) {
    std::uint64_t len = 0;
    read_pod(is, len);
    std::string s(len, '\0');
    is.read(s.data(), static_cast<std::streamsize>(len));
    if (!is) throw DataError("checkpoint: truncated string");
    return s;
}

}  // namespace

void TensorArchive::put(const std::string& name, const Tensor& tensor) {
    auto [it, inserted] = entries_.insert_or_assign(name, tensor);
    (void)it;
    if (inserted) order_.push_back(name);
}

bool TensorArchive::contains(const std::string& name) const {
    return entries_.count(name) != 0;
}

const Tensor& TensorArchive::get(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) {
        throw DataError("checkpoint: missing tensor '" + name + "'");
    }
    return it->second;
}

void TensorArchive::save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw DataError("checkpoint: cannot open '" + path + "' for writing");

    os.write(kMagic, sizeof(kMagic));
    write_pod(os, kVersion);
    write_string(os, metadata);
    write_pod(os, static_cast<std::uint64_t>(order_.size()));

    for (const std::string& name : order_) {
        const Tensor& t = entries_.at(name);
        write_string(os, name);
        write_pod(os, static_cast<std::uint32_t>(t.ndim()));
        for (int d = 0; d < t.ndim(); ++d) {
            write_pod(os, static_cast<std::int32_t>(t.dim(d)));
        }
        os.write(reinterpret_cast<const char*>(t.data()),
                 static_cast<std::streamsize>(t.numel() * sizeof(double)));
    }
    os.flush();
    if (!os) throw DataError("checkpoint: write to '" + path + "' failed");
}

TensorArchive TensorArchive::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("checkpoint: cannot open '" + path + "'");

    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || !std::equal(magic, magic + 8, kMagic)) {
        throw DataError("checkpoint: bad magic in '" + path + "'");
    }
    std::uint32_t version = 0;
    read_pod(is, version);
    if (version != kVersion) {
        throw DataError("checkpoint: unsupported version " + std::to_string(version));
    }

    TensorArchive archive;
    archive.metadata = read_string(is);
    std::uint64_t count = 0;
    read_pod(is, count);

    for (std::uint64_t i = 0; i < count; ++i) {
        const std::string name = read_string(is);
        std::uint32_t ndim = 0;
        read_pod(is, ndim);
        if (ndim > 8) throw DataError("checkpoint: implausible rank for '" + name + "'");
        std::vector<int> shape(ndim);
        for (std::uint32_t d = 0; d < ndim; ++d) {
            std::int32_t v = 0;
            read_pod(is, v);
            if (v <= 0) throw DataError("checkpoint: non-positive dimension in '" + name + "'");
            shape[d] = v;
        }
        Tensor t(shape);
        is.read(reinterpret_cast<char*>(t.data()),
                static_cast<std::streamsize>(t.numel() * sizeof(double)));
        if (!is) throw DataError("checkpoint: truncated tensor '" + name + "'");
        archive.put(name, t);
    }
    return archive;
}

}  // namespace gaze3d::nn
