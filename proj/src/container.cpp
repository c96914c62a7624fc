#include "mulog/container.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <vector>

namespace mulog {

namespace {

constexpr char kMagic[4] = {'M', 'U', 'L', 'G'};
constexpr std::uint16_t kVersion = 1;

class Writer {
public:
    explicit Writer(const std::string& path) : out_(path, std::ios::binary) {
        if (!out_) throw IoError("cannot open for writing: " + path);
        path_ = path;
    }
    void bytes(const void* p, std::size_t n) {
        out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
        if (!out_) throw IoError("write failure: " + path_);
    }
    void u8(std::uint8_t v) { bytes(&v, 1); }
    void u16(std::uint16_t v) {
        std::uint8_t b[2] = {static_cast<std::uint8_t>(v), static_cast<std::uint8_t>(v >> 8)};
        bytes(b, 2);
    }
    void u32(std::uint32_t v) {
        std::uint8_t b[4];
        for (int i = 0; i < 4; ++i) b[i] = static_cast<std::uint8_t>(v >> (8 * i));
        bytes(b, 4);
    }
    void f64(double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        std::uint8_t b[8];
        for (int i = 0; i < 8; ++i) b[i] = static_cast<std::uint8_t>(bits >> (8 * i));
        bytes(b, 8);
    }
    void f64_array(const double* p, std::size_t n) {
        // Bulk path: on little-endian hardware doubles are already laid out
        // as the format requires.
        std::uint16_t probe = 1;
        if (*reinterpret_cast<std::uint8_t*>(&probe) == 1) {
            bytes(p, n * 8);
        } else {
            for (std::size_t i = 0; i < n; ++i) f64(p[i]);
        }
    }

private:
    std::ofstream out_;
    std::string path_;
};

class Reader {
public:
    explicit Reader(const std::string& path) : in_(path, std::ios::binary) {
        if (!in_) throw IoError("cannot open for reading: " + path);
        path_ = path;
    }
    void bytes(void* p, std::size_t n) {
        in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (in_.gcount() != static_cast<std::streamsize>(n))
            throw IoError("truncated container: " + path_);
    }
    std::uint8_t u8() {
        std::uint8_t v;
        bytes(&v, 1);
        return v;
    }
    std::uint16_t u16() {
        std::uint8_t b[2];
        bytes(b, 2);
        return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
    }
    std::uint32_t u32() {
        std::uint8_t b[4];
        bytes(b, 4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
        return v;
    }
    double f64() {
        std::uint8_t b[8];
        bytes(b, 8);
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
    void f64_array(double* p, std::size_t n) {
        std::uint16_t probe = 1;
        if (*reinterpret_cast<std::uint8_t*>(&probe) == 1) {
            bytes(p, n * 8);
        } else {
            for (std::size_t i = 0; i < n; ++i) p[i] = f64();
        }
    }

private:
    std::ifstream in_;
    std::string path_;
};

} // namespace

void write_container(const std::string& path, const CovImage& img, const ChannelBasis* basis) {
    const int d = img.dim();
    if (d < 1 || d > 255) throw IoError("write_container: dim out of range");
    if (basis && basis->dim != d) throw IoError("write_container: basis dim mismatch");
    Writer w(path);
    w.bytes(kMagic, 4);
    w.u16(kVersion);
    w.u32(static_cast<std::uint32_t>(img.width));
    w.u32(static_cast<std::uint32_t>(img.height));
    w.u8(static_cast<std::uint8_t>(d));
    w.f64(img.looks);
    w.u8(basis ? 1 : 0);
    w.f64_array(img.stack.raw().data(), img.stack.raw().size());
    if (basis) {
        w.u8(static_cast<std::uint8_t>(d));
        w.f64_array(basis->a.data(), basis->a.size());
        w.f64_array(basis->b.data(), basis->b.size());
        w.f64_array(basis->phi.data(), basis->phi.size());
    }
}

CovContainer read_container(const std::string& path) {
    Reader r(path);
    char magic[4];
    r.bytes(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0) throw IoError("bad magic in " + path);
    std::uint16_t version = r.u16();
    if (version != kVersion)
        throw IoError("unsupported container version " + std::to_string(version) + " in " + path);
    std::uint32_t width = r.u32();
    std::uint32_t height = r.u32();
    int d = r.u8();
    double looks = r.f64();
    int has_basis = r.u8();
    if (d < 1) throw IoError("container dim must be >= 1: " + path);
    if (width == 0 || height == 0) throw IoError("container has empty geometry: " + path);
    std::uint64_t pixels = static_cast<std::uint64_t>(width) * height;
    if (pixels > (std::uint64_t(1) << 34))
        throw IoError("container geometry implausibly large: " + path);

    CovContainer out;
    out.image = CovImage(static_cast<int>(width), static_cast<int>(height), d, looks);
    r.f64_array(out.image.stack.raw().data(), out.image.stack.raw().size());
    if (has_basis) {
        ChannelBasis basis;
        basis.dim = r.u8();
        if (basis.dim != d) throw IoError("sidecar dim mismatch in " + path);
        int nch = d * d;
        basis.a.resize(static_cast<std::size_t>(nch) * nch);
        basis.b.resize(nch);
        basis.phi.resize(nch);
        r.f64_array(basis.a.data(), basis.a.size());
        r.f64_array(basis.b.data(), basis.b.size());
        r.f64_array(basis.phi.data(), basis.phi.size());
        out.basis = std::move(basis);
    }
    return out;
}

void write_plane(const std::string& path, const PlaneImage& img) {
    CovImage c(img.width, img.height, 1, 0.0);
    std::copy(img.data.begin(), img.data.end(), c.stack.raw().begin());
    write_container(path, c);
}

PlaneImage read_plane(const std::string& path) {
    CovContainer c = read_container(path);
    if (c.image.dim() != 1) throw IoError("expected dim-1 plane container: " + path);
    PlaneImage p(c.image.width, c.image.height);
    const auto& raw = c.image.stack.raw();
    std::copy(raw.begin(), raw.end(), p.data.begin());
    return p;
}

} // namespace mulog
