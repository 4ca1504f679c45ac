#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "galien/embedding.hpp"
#include "galien/errors.hpp"
#include "support/oracles.hpp"

#include <vector>

namespace {

std::vector<double> iota_window(int n) {
    std::vector<double> w;
    for (int i = 1; i <= n; ++i) w.push_back(i);
    return w;
}

std::vector<double> random_window(int n, std::uint64_t seed) {
    oracle::TestRng rng(seed);
    std::vector<double> w;
    for (int i = 0; i < n; ++i) w.push_back(rng.uniform(-10.0, 10.0));
    return w;
}

} // namespace

TEST_CASE("seven-sample window at tau 2, m 3 embeds to the expected columns") {
    auto w = iota_window(7);
    galien::TrajectoryImage img = galien::trajectory_matrix(w, {2, 3});
    REQUIRE(img.data.rows() == 3);
    REQUIRE(img.data.cols() == 3);
    Eigen::MatrixXd expect(3, 3);
    expect << 1, 2, 3, 3, 4, 5, 5, 6, 7;
    CHECK(img.data == expect);
}

TEST_CASE("tau 1, m 1 is the identity embedding") {
    auto w = random_window(23, 5);
    galien::TrajectoryImage img = galien::trajectory_matrix(w, {1, 1});
    REQUIRE(img.data.rows() == 1);
    REQUIRE(img.data.cols() == 23);
    for (int i = 0; i < 23; ++i) CHECK(img.data(0, i) == w[static_cast<std::size_t>(i)]);
}

TEST_CASE("length-500 window matches the loop oracle elementwise") {
    auto w = random_window(500, 42);
    galien::TrajectoryImage img = galien::trajectory_matrix(w, {27, 4});
    Eigen::MatrixXd expect = oracle::trajectory_matrix(w, 27, 4);
    CHECK(img.data == expect);
}

TEST_CASE("too-short window for the embedding is rejected") {
    auto w = iota_window(6);
    CHECK_THROWS_AS(galien::trajectory_matrix(w, {3, 3}), galien::Error);
}

TEST_CASE("patch rows slide by the stride") {
    auto w = iota_window(6);
    galien::PatchMatrix pm = galien::patch_matrix(w, 3, 1);
    REQUIRE(pm.data.rows() == 4);
    Eigen::MatrixXd expect(4, 3);
    expect << 1, 2, 3, 2, 3, 4, 3, 4, 5, 4, 5, 6;
    CHECK(pm.data == expect);
}

TEST_CASE("full-length patch is the window itself") {
    auto w = random_window(17, 9);
    galien::PatchMatrix pm = galien::patch_matrix(w, 17, 3);
    REQUIRE(pm.data.rows() == 1);
    for (int j = 0; j < 17; ++j) CHECK(pm.data(0, j) == w[static_cast<std::size_t>(j)]);
}

TEST_CASE("random patch matrix matches the loop oracle") {
    auto w = random_window(500, 77);
    galien::PatchMatrix pm = galien::patch_matrix(w, 96, 8);
    CHECK(pm.data == oracle::patch_matrix(w, 96, 8));
}

TEST_CASE("worked equivalence instance: L 7, tau 2, m 3") {
    galien::EquivalenceParams eq = galien::equivalence_params(7, {2, 3});
    CHECK(eq.patch_len == 3);
    CHECK(eq.stride == 2);
    auto w = iota_window(7);
    galien::PatchMatrix pm = galien::patch_matrix(w, eq.patch_len, eq.stride);
    galien::TrajectoryImage img = galien::trajectory_matrix(w, {2, 3});
    CHECK(pm.data == img.data);
}

TEST_CASE("default look-back with tau 40, m 5 gives 32-sample patches at stride 40") {
    galien::EquivalenceParams eq = galien::equivalence_params(192, {40, 5});
    CHECK(eq.patch_len == 32);
    CHECK(eq.stride == 40);
}

TEST_CASE("patch and trajectory constructions agree over random parameter draws") {
    oracle::TestRng rng(2024);
    for (int trial = 0; trial < 100; ++trial) {
        int m = rng.uniform_int(1, 8);
        int tau = rng.uniform_int(1, 30);
        int len = (m - 1) * tau + rng.uniform_int(1, 60);
        auto w = random_window(len, rng.next_u64());
        galien::EquivalenceParams eq = galien::equivalence_params(len, {tau, m});
        galien::PatchMatrix pm = galien::patch_matrix(w, eq.patch_len, eq.stride);
        galien::TrajectoryImage img = galien::trajectory_matrix(w, {tau, m});
        REQUIRE(pm.data == img.data);
    }
}

TEST_CASE("prefix-sum offsets place the nonuniform rows") {
    auto w = iota_window(8);
    Eigen::MatrixXd got = galien::nonuniform_trajectory_matrix(w, {1, 2});
    REQUIRE(got.rows() == 3);
    REQUIRE(got.cols() == 5);
    Eigen::MatrixXd expect(3, 5);
    expect << 1, 2, 3, 4, 5, 2, 3, 4, 5, 6, 4, 5, 6, 7, 8;
    CHECK(got == expect);
}

TEST_CASE("constant delay vector reduces to the uniform embedding") {
    auto w = random_window(200, 4);
    galien::TrajectoryImage img = galien::trajectory_matrix(w, {13, 4});
    Eigen::MatrixXd got = galien::nonuniform_trajectory_matrix(w, {13, 13, 13});
    CHECK(got == img.data);
}

TEST_CASE("random nonuniform delays match the loop oracle") {
    oracle::TestRng rng(31);
    for (int trial = 0; trial < 50; ++trial) {
        int rows = rng.uniform_int(2, 6);
        std::vector<int> delays;
        int total = 0;
        for (int j = 1; j < rows; ++j) {
            delays.push_back(rng.uniform_int(1, 15));
            total += delays.back();
        }
        auto w = random_window(total + rng.uniform_int(1, 40), rng.next_u64());
        REQUIRE(galien::nonuniform_trajectory_matrix(w, delays) ==
                oracle::nonuniform_trajectory_matrix(w, delays));
    }
}

TEST_CASE("embedded image inverts back to the exact window") {
    oracle::TestRng rng(55);
    for (int trial = 0; trial < 50; ++trial) {
        int m = rng.uniform_int(1, 7);
        int tau = rng.uniform_int(1, 20);
        // Keep the image at least tau wide so every window sample appears.
        int len = (m - 1) * tau + tau + rng.uniform_int(0, 50);
        auto w = random_window(len, rng.next_u64());
        galien::TrajectoryImage img = galien::trajectory_matrix(w, {tau, m});
        CHECK(galien::window_from_image(img, len) == w);
    }
}

TEST_CASE("a sparse image cannot reproduce the window") {
    // tau 10 with width 2 skips samples, e.g. index 2 never lands in the image.
    auto w = random_window(22, 9);
    galien::TrajectoryImage img = galien::trajectory_matrix(w, {10, 3});
    try {
        galien::window_from_image(img, 22);
        FAIL("expected an error");
    } catch (const galien::Error& e) {
        CHECK(e.code() == galien::Errc::length_mismatch);
    }
}

TEST_CASE("window pair counting and contents") {
    auto series = iota_window(10);
    auto pairs = galien::build_windows(series, 4, 2, {1, 2});
    REQUIRE(pairs.size() == 5);
    CHECK(pairs[0].window_start == 0);
    CHECK(pairs[0].image.data(0, 0) == 1.0);
    CHECK(pairs[0].image.data(1, 2) == 4.0);
    CHECK(pairs[0].target(0) == 5.0);
    CHECK(pairs[0].target(1) == 6.0);
    CHECK(pairs[4].window_start == 4);
    CHECK(pairs[4].target(1) == 10.0);
}

TEST_CASE("exact-fit series yields one pair") {
    auto series = iota_window(6);
    auto pairs = galien::build_windows(series, 4, 2, {1, 2});
    CHECK(pairs.size() == 1);
}

TEST_CASE("window count follows the closed form at scale") {
    std::vector<double> series(35040, 0.0);
    for (std::size_t i = 0; i < series.size(); ++i) series[i] = static_cast<double>(i % 97);
    auto pairs = galien::build_windows(series, 192, 96, {40, 5});
    CHECK(pairs.size() == 34753);
}

TEST_CASE("stride thins the window starts") {
    auto series = random_window(40, 3);
    auto pairs = galien::build_windows(series, 10, 5, {2, 3}, 4);
    REQUIRE(!pairs.empty());
    for (std::size_t i = 0; i < pairs.size(); ++i) CHECK(pairs[i].window_start == 4 * i);
    CHECK(pairs.back().window_start <= 40 - 10 - 5);
    CHECK(pairs.back().window_start + 4 > static_cast<std::size_t>(40 - 10 - 5));
}

TEST_CASE("too-short series for any window is rejected") {
    auto series = iota_window(5);
    CHECK_THROWS_AS(galien::build_windows(series, 4, 2, {1, 2}), galien::Error);
}

TEST_CASE("embedding a shifted window drops leading columns") {
    auto w = random_window(120, 88);
    galien::TrajectoryImage full = galien::trajectory_matrix(w, {5, 3});
    std::span<const double> shifted(w.data() + 4, w.size() - 4);
    galien::TrajectoryImage sub = galien::trajectory_matrix(shifted, {5, 3});
    CHECK(sub.data == full.data.rightCols(full.data.cols() - 4));
}
