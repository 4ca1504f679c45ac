#pragma once

#include "galien/errors.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>

/// Little-endian primitives shared by the binary artifact formats.
namespace galien::io {

inline void write_u32(std::ostream& out, std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out.write(b, 4);
}

inline void write_u64(std::ostream& out, std::uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out.write(b, 8);
}

inline void write_f64(std::ostream& out, double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, 8);
    write_u64(out, bits);
}

inline std::uint32_t read_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) raise(Errc::io_error, "binary file truncated");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

inline std::uint64_t read_u64(std::istream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    if (!in) raise(Errc::io_error, "binary file truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

inline double read_f64(std::istream& in) {
    std::uint64_t bits = read_u64(in);
    double d;
    std::memcpy(&d, &bits, 8);
    return d;
}

inline void write_matrix(std::ostream& out, const Eigen::MatrixXd& t) {
    write_u64(out, static_cast<std::uint64_t>(t.rows()));
    write_u64(out, static_cast<std::uint64_t>(t.cols()));
    const double* p = t.data();
    for (long i = 0; i < t.size(); ++i) write_f64(out, p[i]);
}

inline Eigen::MatrixXd read_matrix(std::istream& in) {
    auto rows = static_cast<long>(read_u64(in));
    auto cols = static_cast<long>(read_u64(in));
    if (rows < 0 || cols < 0 || (rows > 0 && cols > (1L << 40) / rows)) {
        raise(Errc::unparseable_value, "binary file declares an implausible matrix shape");
    }
    Eigen::MatrixXd t(rows, cols);
    double* p = t.data();
    for (long i = 0; i < t.size(); ++i) p[i] = read_f64(in);
    return t;
}

} // namespace galien::io
