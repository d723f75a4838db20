#include "ganno/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace ganno {

namespace {

constexpr char kMagic[8] = {'G', 'A', 'N', 'N', 'O', 'C', 'K', '1'};

void write_u64(std::ostream& os, std::uint64_t v) {
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(buf), 8);
}

std::uint64_t read_u64(std::istream& is) {
    unsigned char buf[8];
    is.read(reinterpret_cast<char*>(buf), 8);
    if (!is) throw DataError("archive: truncated file");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
}

void write_str(std::ostream& os, const std::string& s) {
    write_u64(os, s.size());
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_str(std::istream& is) {
    const auto len = read_u64(is);
    std::string s(len, '\0');
    is.read(s.data(), static_cast<std::streamsize>(len));
    if (!is) throw DataError("archive: truncated string");
    return s;
}

void write_f64(std::ostream& os, double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, 8);
    write_u64(os, bits);
}

double read_f64(std::istream& is) {
    const std::uint64_t bits = read_u64(is);
    double d;
    std::memcpy(&d, &bits, 8);
    return d;
}

}  // namespace

void Archive::save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("archive: cannot open for writing: " + path);
    os.write(kMagic, 8);
    write_u64(os, arrays_.size() + texts_.size());
    for (const auto& [name, m] : arrays_) {
        write_str(os, name);
        write_u64(os, 0);  // kind: array
        write_u64(os, static_cast<std::uint64_t>(m.rows()));
        write_u64(os, static_cast<std::uint64_t>(m.cols()));
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c) write_f64(os, m(r, c));
    }
    for (const auto& [name, t] : texts_) {
        write_str(os, name);
        write_u64(os, 1);  // kind: text
        write_str(os, t);
    }
    if (!os) throw DataError("archive: write failed: " + path);
}

Archive Archive::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("archive: cannot open: " + path);
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kMagic, 8) != 0)
        throw DataError("archive: bad magic (wrong file or version): " + path);
    const auto count = read_u64(is);
    Archive a;
    for (std::uint64_t i = 0; i < count; ++i) {
        const std::string name = read_str(is);
        const auto kind = read_u64(is);
        if (kind == 0) {
            const auto rows = read_u64(is), cols = read_u64(is);
            Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
            for (Eigen::Index r = 0; r < m.rows(); ++r)
                for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = read_f64(is);
            a.arrays_[name] = std::move(m);
        } else if (kind == 1) {
            a.texts_[name] = read_str(is);
        } else {
            throw DataError("archive: unknown entry kind in " + path);
        }
    }
    return a;
}

}  // namespace ganno
