#include "ampex/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <vector>

#include "ampex/errors.hpp"

namespace ampex {

namespace {

void put_u8(std::ostream& out, std::uint8_t v) {
    out.put(static_cast<char>(v));
}

void put_u32(std::ostream& out, std::uint32_t v) {
    char buf[4];
    for (int i = 0; i < 4; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(buf, 4);
}

void put_f64(std::ostream& out, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
    out.write(buf, 8);
}

std::uint8_t get_u8(std::istream& in) {
    const int c = in.get();
    if (c == EOF) throw ConfigError("file truncated");
    return static_cast<std::uint8_t>(c);
}

std::uint32_t get_u32(std::istream& in) {
    char buf[4];
    if (!in.read(buf, 4)) throw ConfigError("file truncated");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[i])) << (8 * i);
    return v;
}

double get_f64(std::istream& in) {
    char buf[8];
    if (!in.read(buf, 8)) throw ConfigError("file truncated");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= std::uint64_t(static_cast<unsigned char>(buf[i])) << (8 * i);
    return std::bit_cast<double>(bits);
}

void put_f64_block(std::ostream& out, std::span<const double> values) {
    if constexpr (std::endian::native == std::endian::little) {
        out.write(reinterpret_cast<const char*>(values.data()),
                  static_cast<std::streamsize>(values.size() * sizeof(double)));
    } else {
        for (double v : values) put_f64(out, v);
    }
}

void get_f64_block(std::istream& in, std::span<double> values) {
    if constexpr (std::endian::native == std::endian::little) {
        if (!in.read(reinterpret_cast<char*>(values.data()),
                     static_cast<std::streamsize>(values.size() * sizeof(double))))
            throw ConfigError("file truncated");
    } else {
        for (double& v : values) v = get_f64(in);
    }
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open '" + path + "' for writing");
    return out;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open '" + path + "' for reading");
    return in;
}

void expect_magic(std::istream& in, const char (&magic)[5], const std::string& path) {
    char buf[4];
    if (!in.read(buf, 4) || std::memcmp(buf, magic, 4) != 0)
        throw ConfigError("'" + path + "' is not a " + magic + "1 file");
}

} // namespace

void write_grid_tensor(const std::string& path, const GridTensor& tensor) {
    auto out = open_out(path);
    out.write("AMPX", 4);
    put_u8(out, 1); // version
    put_u8(out, 1); // dtype f64 little-endian
    put_u8(out, tensor.stored_norm() ? 1 : 0);
    put_u8(out, 0); // reserved
    put_u32(out, static_cast<std::uint32_t>(tensor.order()));
    for (std::int64_t extent : tensor.dims()) put_u32(out, static_cast<std::uint32_t>(extent));
    if (tensor.stored_norm()) put_f64(out, *tensor.stored_norm());
    put_f64_block(out, tensor.entries());
    if (!out) throw ConfigError("write failed for '" + path + "'");
}

GridTensor read_grid_tensor(const std::string& path) {
    auto in = open_in(path);
    expect_magic(in, "AMPX", path);
    if (get_u8(in) != 1) throw ConfigError("'" + path + "': unsupported AMPX version");
    if (get_u8(in) != 1) throw ConfigError("'" + path + "': unsupported dtype");
    const bool has_c = get_u8(in) != 0;
    get_u8(in); // reserved
    const std::uint32_t d = get_u32(in);
    if (d == 0 || d > 16) throw ConfigError("'" + path + "': implausible tensor order");
    std::vector<std::int64_t> dims(d);
    for (auto& extent : dims) extent = get_u32(in);
    double c = 0.0;
    if (has_c) c = get_f64(in);
    GridTensor tensor(std::move(dims));
    get_f64_block(in, tensor.entries());
    if (has_c) {
        const double actual = tensor.norm();
        if (std::abs(actual - c) > 1e-12 * std::max(1.0, std::abs(c)))
            throw ConfigError("'" + path + "': stored norm disagrees with entries");
        tensor.set_stored_norm(c);
    }
    return tensor;
}

void write_mps(const std::string& path, const Mps& mps) {
    auto out = open_out(path);
    out.write("AMPM", 4);
    put_u8(out, 1);
    put_u32(out, static_cast<std::uint32_t>(mps.order()));
    put_u32(out, static_cast<std::uint32_t>(mps.phys()));
    for (std::int64_t b : mps.bonds()) put_u32(out, static_cast<std::uint32_t>(b));
    for (std::int64_t i = 0; i < mps.core_count(); ++i) put_f64_block(out, mps.core(i));
    double head_sq = 0.0;
    for (double v : mps.core(0)) head_sq += v * v;
    put_f64(out, std::sqrt(head_sq));
    if (!out) throw ConfigError("write failed for '" + path + "'");
}

Mps read_mps(const std::string& path) {
    auto in = open_in(path);
    expect_magic(in, "AMPM", path);
    if (get_u8(in) != 1) throw ConfigError("'" + path + "': unsupported AMPM version");
    const std::uint32_t d = get_u32(in);
    const std::uint32_t phys = get_u32(in);
    if (d < 3 || d > 16) throw ConfigError("'" + path + "': implausible order");
    std::vector<std::int64_t> bonds(d - 2);
    for (auto& b : bonds) b = get_u32(in);

    std::vector<std::vector<double>> cores(d - 1);
    cores[0].resize(static_cast<std::size_t>(phys * bonds[0]));
    for (std::uint32_t i = 1; i < d - 1; ++i) {
        const std::int64_t left = bonds[i - 1];
        const std::int64_t right = (i == d - 2) ? phys : bonds[i];
        cores[i].resize(static_cast<std::size_t>(left * phys * right));
    }
    for (auto& core : cores) get_f64_block(in, core);
    const double stored = get_f64(in);

    Mps mps(d, phys, std::move(bonds), std::move(cores));
    double head_sq = 0.0;
    for (double v : mps.core(0)) head_sq += v * v;
    if (std::abs(std::sqrt(head_sq) - stored) > 1e-9 * std::max(1.0, stored))
        throw ConfigError("'" + path + "': stored norm disagrees with core data");
    return mps;
}

std::string format_double(double value) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

} // namespace ampex
