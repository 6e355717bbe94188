#include "mop/serialize.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

static_assert(std::endian::native == std::endian::little,
              "MSPR writer assumes a little-endian host");

namespace mop {

namespace {

template <typename T>
void append_pod(std::vector<std::uint8_t>& out, T v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    out.insert(out.end(), p, p + sizeof(T));
}

template <typename T>
T read_pod(const std::vector<std::uint8_t>& in, std::size_t& pos) {
    if (pos + sizeof(T) > in.size()) throw std::runtime_error("MSPR: truncated stream");
    T v;
    std::memcpy(&v, in.data() + pos, sizeof(T));
    pos += sizeof(T);
    return v;
}

}  // namespace

void TensorFile::put(const std::string& name, Mat m) {
    for (auto& [n, t] : tensors) {
        if (n == name) {
            t = std::move(m);
            return;
        }
    }
    tensors.emplace_back(name, std::move(m));
}

bool TensorFile::has(const std::string& name) const {
    for (const auto& [n, t] : tensors)
        if (n == name) return true;
    return false;
}

const Mat& TensorFile::get(const std::string& name) const {
    for (const auto& [n, t] : tensors)
        if (n == name) return t;
    throw std::runtime_error("MSPR: missing tensor '" + name + "'");
}

std::vector<std::uint8_t> TensorFile::to_bytes() const {
    std::vector<std::uint8_t> out;
    out.insert(out.end(), {'M', 'S', 'P', 'R'});
    append_pod<std::uint32_t>(out, kVersion);
    for (const auto& [name, m] : tensors) {
        append_pod<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
        out.insert(out.end(), name.begin(), name.end());
        append_pod<std::uint64_t>(out, m.rows);
        append_pod<std::uint64_t>(out, m.cols);
        const auto* p = reinterpret_cast<const std::uint8_t*>(m.data.data());
        out.insert(out.end(), p, p + m.data.size() * sizeof(double));
    }
    return out;
}

TensorFile TensorFile::from_bytes(const std::vector<std::uint8_t>& bytes) {
    std::size_t pos = 0;
    if (bytes.size() < 8 || std::memcmp(bytes.data(), "MSPR", 4) != 0)
        throw std::runtime_error("MSPR: bad magic");
    pos = 4;
    const auto version = read_pod<std::uint32_t>(bytes, pos);
    if (version != kVersion)
        throw std::runtime_error("MSPR: unsupported version " + std::to_string(version));
    TensorFile f;
    while (pos < bytes.size()) {
        const auto name_len = read_pod<std::uint32_t>(bytes, pos);
        if (pos + name_len > bytes.size()) throw std::runtime_error("MSPR: truncated name");
        std::string name(bytes.begin() + pos, bytes.begin() + pos + name_len);
        pos += name_len;
        const auto rows = read_pod<std::uint64_t>(bytes, pos);
        const auto cols = read_pod<std::uint64_t>(bytes, pos);
        const std::size_t payload = rows * cols * sizeof(double);
        if (pos + payload > bytes.size()) throw std::runtime_error("MSPR: truncated payload");
        Mat m(rows, cols);
        std::memcpy(m.data.data(), bytes.data() + pos, payload);
        pos += payload;
        f.tensors.emplace_back(std::move(name), std::move(m));
    }
    return f;
}

void TensorFile::save(const std::string& path) const {
    const auto bytes = to_bytes();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for write: " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed: " + path);
}

TensorFile TensorFile::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for read: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return from_bytes(bytes);
}

}  // namespace mop
