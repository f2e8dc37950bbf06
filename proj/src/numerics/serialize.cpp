#include "spot/numerics/serialize.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace spot::num {

namespace {

static_assert(sizeof(double) == 8);

void put_u64(std::ostream& os, std::uint64_t v) {
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(buf), 8);
}

std::uint64_t get_u64(std::istream& is) {
    unsigned char buf[8];
    if (!is.read(reinterpret_cast<char*>(buf), 8)) throw std::runtime_error("tensor stream truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
}

} // namespace

void write_tensor(std::ostream& os, const Tensor& t) {
    put_u64(os, t.rank());
    for (auto e : t.shape()) put_u64(os, e);
    for (double v : t.data()) put_u64(os, std::bit_cast<std::uint64_t>(v));
    if (!os) throw std::runtime_error("failed writing tensor");
}

Tensor read_tensor(std::istream& is) {
    const std::uint64_t rank = get_u64(is);
    if (rank > 16) throw std::runtime_error("tensor stream: implausible rank " + std::to_string(rank));
    Shape shape(rank);
    for (auto& e : shape) e = get_u64(is);
    std::vector<double> values(shape_numel(shape));
    for (auto& v : values) v = std::bit_cast<double>(get_u64(is));
    return Tensor(std::move(shape), std::move(values));
}

void save_tensor(const std::filesystem::path& path, const Tensor& t) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    write_tensor(os, t);
}

Tensor load_tensor(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    return read_tensor(is);
}

} // namespace spot::num
