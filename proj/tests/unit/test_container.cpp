#include <doctest.h>

#include <unistd.h>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "mulog/channelizer.hpp"
#include "mulog/container.hpp"
#include "mulog/errors.hpp"
#include "mulog/rng.hpp"

using namespace mulog;

namespace {

std::string temp_path(const std::string& tag) {
    return "/tmp/mulog_test_" + tag + "_" + std::to_string(::getpid()) + ".mulg";
}

CovImage random_image(int w, int h, int d, std::uint64_t seed) {
    CovImage img(w, h, d, 3.0);
    Philox rng(seed, 0);
    for (int p = 0; p < img.stack.plane_count(); ++p)
        for (std::size_t k = 0; k < img.pixels(); ++k) img.stack.plane(p)[k] = rng.normal();
    return img;
}

std::vector<char> slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return std::vector<char>((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
}

void dump(const std::string& path, const std::vector<char>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

struct FileGuard {
    std::string path;
    ~FileGuard() { std::remove(path.c_str()); }
};

} // namespace

TEST_CASE("covariance container round trips bit-exactly") {
    for (int d : {1, 2, 3}) {
        CAPTURE(d);
        std::string path = temp_path("rt" + std::to_string(d));
        FileGuard guard{path};
        CovImage img = random_image(7, 5, d, 100 + d);
        write_container(path, img);
        CovContainer back = read_container(path);
        CHECK(back.image.width == 7);
        CHECK(back.image.height == 5);
        CHECK(back.image.dim() == d);
        CHECK(back.image.looks == 3.0);
        CHECK(!back.basis.has_value());
        for (int p = 0; p < img.stack.plane_count(); ++p)
            for (std::size_t k = 0; k < img.pixels(); ++k)
                CHECK(back.image.stack.plane(p)[k] == img.stack.plane(p)[k]);
    }
}

TEST_CASE("basis sidecar round trips bit-exactly") {
    std::string path = temp_path("basis");
    FileGuard guard{path};
    CovImage img = random_image(4, 4, 2, 200);
    ChannelBasis basis = ChannelBasis::identity(2);
    Philox rng(201, 0);
    for (auto& v : basis.a) v = rng.normal();
    for (auto& v : basis.b) v = rng.normal();
    for (auto& v : basis.phi) v = 0.5 + rng.uniform();
    write_container(path, img, &basis);

    CovContainer back = read_container(path);
    REQUIRE(back.basis.has_value());
    CHECK(back.basis->dim == 2);
    for (std::size_t i = 0; i < basis.a.size(); ++i) CHECK(back.basis->a[i] == basis.a[i]);
    for (std::size_t i = 0; i < basis.b.size(); ++i) CHECK(back.basis->b[i] == basis.b[i]);
    for (std::size_t i = 0; i < basis.phi.size(); ++i) CHECK(back.basis->phi[i] == basis.phi[i]);
}

TEST_CASE("plane wrappers store single-channel data") {
    std::string path = temp_path("plane");
    FileGuard guard{path};
    PlaneImage img(6, 3);
    Philox rng(300, 0);
    for (auto& v : img.data) v = rng.normal();
    write_plane(path, img);
    PlaneImage back = read_plane(path);
    CHECK(back.width == 6);
    CHECK(back.height == 3);
    for (std::size_t k = 0; k < img.size(); ++k) CHECK(back.data[k] == img.data[k]);

    // plane files carry looks = 0 (not applicable)
    CovContainer raw = read_container(path);
    CHECK(raw.image.dim() == 1);
    CHECK(raw.image.looks == 0.0);
}

TEST_CASE("malformed files are rejected with an IO error") {
    CHECK_THROWS_AS(read_container("/tmp/mulog_no_such_file.mulg"), IoError);

    std::string path = temp_path("bad");
    FileGuard guard{path};
    CovImage img = random_image(5, 4, 2, 400);
    write_container(path, img);
    std::vector<char> good = slurp(path);

    // bad magic
    std::vector<char> bad = good;
    bad[0] = 'X';
    dump(path, bad);
    CHECK_THROWS_AS(read_container(path), IoError);

    // unsupported version
    bad = good;
    bad[4] = 99;
    dump(path, bad);
    CHECK_THROWS_AS(read_container(path), IoError);

    // truncated payload
    bad = good;
    bad.resize(bad.size() - 13);
    dump(path, bad);
    CHECK_THROWS_AS(read_container(path), IoError);

    // truncated header
    bad = good;
    bad.resize(6);
    dump(path, bad);
    CHECK_THROWS_AS(read_container(path), IoError);
}

TEST_CASE("write_plane rejects unwritable paths") {
    PlaneImage img(2, 2);
    CHECK_THROWS_AS(write_plane("/nonexistent_dir/x.mulg", img), IoError);
}
