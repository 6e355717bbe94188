#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mop/mat.hpp"

namespace mop {

// Binary tensor container. Layout, all little-endian:
//   magic "MSPR" | version u32 | repeated { name_len u32 | name bytes |
//   rows u64 | cols u64 | rows*cols f64 } until end of stream.
// Tensor order is preserved so identical inputs produce identical bytes.
struct TensorFile {
    static constexpr std::uint32_t kVersion = 1;

    std::vector<std::pair<std::string, Mat>> tensors;

    void put(const std::string& name, Mat m);
    bool has(const std::string& name) const;
    const Mat& get(const std::string& name) const;

    std::vector<std::uint8_t> to_bytes() const;
    static TensorFile from_bytes(const std::vector<std::uint8_t>& bytes);

    void save(const std::string& path) const;
    static TensorFile load(const std::string& path);
};

}  // namespace mop
