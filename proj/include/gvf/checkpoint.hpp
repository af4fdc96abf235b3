#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "gvf/tensor.hpp"

namespace gvf {

// Named-tensor container used for all model checkpoints.
//
// Binary layout (all integers little-endian):
//   magic "GVFTENS\0" (8 bytes), u32 version (=1), u32 tensor count,
//   then per tensor: u32 name length, name bytes, u32 rank, u64 extents[rank],
//   raw f64 values; finally u32 CRC32 of everything after the magic.
// Round-trips are bit-exact.
class ParamStore {
public:
    Tensor& add(const std::string& name, Tensor t);
    Tensor& at(const std::string& name);
    const Tensor& at(const std::string& name) const;
    bool contains(const std::string& name) const { return tensors_.count(name) > 0; }
    std::size_t size() const { return tensors_.size(); }
    std::size_t total_values() const;

    // Deterministic iteration order (sorted by name).
    std::vector<std::string> names() const;

    void save(const std::filesystem::path& path) const;
    static ParamStore load(const std::filesystem::path& path);

private:
    std::map<std::string, Tensor> tensors_;
};

std::uint32_t crc32(const std::uint8_t* data, std::size_t len);

}  // namespace gvf
