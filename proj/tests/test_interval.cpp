#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "sfv/interval.hpp"
#include "support.hpp"

using namespace sfv;

TEST_CASE("interval invariants") {
    CHECK_THROWS(Interval(1.0, 0.0));
    CHECK_THROWS(Interval(0.0, std::numeric_limits<double>::infinity()));
    CHECK(Interval(-1.0, 1.0).width() == 2.0);
    CHECK(Box(std::vector<Interval>{{0.0, 1.0}}).contains({0.5}));
    CHECK_THROWS(Box(std::vector<Interval>{}));
}

TEST_CASE("affine_image: hand cases") {
    SECTION("difference of two unit intervals") {
        const auto out = affine_image({{1.0, -1.0}}, {0.0}, {{0.0, 1.0}, {0.0, 1.0}});
        REQUIRE(out.size() == 1);
        CHECK(out[0].lo == -1.0);
        CHECK(out[0].hi == 1.0);
    }
    SECTION("identity map leaves intervals unchanged") {
        const std::vector<Interval> in{{-0.3, 0.4}, {2.0, 5.0}};
        const auto out = affine_image({{1.0, 0.0}, {0.0, 1.0}}, {0.0, 0.0}, in);
        CHECK(out[0] == in[0]);
        CHECK(out[1] == in[1]);
    }
    SECTION("dimension mismatch") {
        CHECK_THROWS(affine_image({{1.0, 2.0}}, {0.0}, {{0.0, 1.0}}));
        CHECK_THROWS(affine_image({{1.0}}, {0.0, 0.0}, {{0.0, 1.0}}));
    }
}

TEST_CASE("affine_image equals vertex-enumeration hull for a single affine map") {
    std::mt19937_64 gen(21);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<std::vector<double>> w(3, std::vector<double>(3));
        std::vector<double> b(3);
        std::vector<Interval> in;
        for (auto& row : w)
            for (double& v : row) v = dist(gen);
        for (double& v : b) v = dist(gen);
        for (int d = 0; d < 3; ++d) {
            const double a = dist(gen), c = dist(gen);
            in.push_back(Interval(std::min(a, c), std::max(a, c)));
        }
        const auto out = affine_image(w, b, in);
        // exact image hull from the 2^3 vertices
        for (int r = 0; r < 3; ++r) {
            double lo = std::numeric_limits<double>::infinity(), hi = -lo;
            for (int mask = 0; mask < 8; ++mask) {
                double acc = b[r];
                for (int d = 0; d < 3; ++d) acc += w[r][d] * ((mask >> d) & 1 ? in[d].hi : in[d].lo);
                lo = std::min(lo, acc);
                hi = std::max(hi, acc);
            }
            CHECK(out[r].lo == Catch::Approx(lo).margin(1e-12));
            CHECK(out[r].hi == Catch::Approx(hi).margin(1e-12));
            CHECK(out[r].lo <= lo + 1e-12);
            CHECK(out[r].hi >= hi - 1e-12);
        }
    }
}

TEST_CASE("relu_image") {
    const auto out = relu_image({{-1.0, 1.0}, {-3.0, -1.0}, {2.0, 5.0}});
    CHECK(out[0] == Interval(0.0, 1.0));
    CHECK(out[1] == Interval(0.0, 0.0));
    CHECK(out[2] == Interval(2.0, 5.0));
}

TEST_CASE("propagate_formal: identity network") {
    const auto net = sfv_test::identity_net(2);
    const auto b = propagate_formal(net, sfv_test::unit_box(2));
    CHECK(b.provenance == Provenance::Formal);
    CHECK(b.outs[0] == Interval(0.0, 1.0));
    CHECK(b.outs[1] == Interval(0.0, 1.0));
    CHECK_THROWS(propagate_formal(net, sfv_test::unit_box(3)));
}

TEST_CASE("propagate_formal: dependency loss overestimates x - x") {
    Layer dup;
    dup.weights = {{1.0}, {1.0}};
    dup.bias = {0.0, 0.0};
    dup.activation = Activation::Identity;
    Layer diff;
    diff.weights = {{1.0, -1.0}};
    diff.bias = {0.0};
    diff.activation = Activation::Identity;
    const Network net({dup, diff});
    const auto b = propagate_formal(net, sfv_test::unit_box(1));
    // true output is exactly 0 everywhere; interval arithmetic widens to [-1, 1]
    CHECK(b.outs[0] == Interval(-1.0, 1.0));
    CHECK(net.forward({0.7})[0] == 0.0);
}

TEST_CASE("propagate_formal: Monte-Carlo containment on a random relu net") {
    const auto net = sfv_test::make_random_net(31, {2, 16, 2});
    const auto box = sfv_test::unit_box(2);
    const auto b = propagate_formal(net, box);
    std::mt19937_64 gen(77);
    for (int i = 0; i < 10000; ++i) {
        const auto x = sfv_test::random_point_in(box, gen);
        const auto y = net.forward(x);
        for (std::size_t j = 0; j < y.size(); ++j) {
            REQUIRE(y[j] >= b.outs[j].lo);
            REQUIRE(y[j] <= b.outs[j].hi);
        }
    }
}

TEST_CASE("propagate_formal: monotone under box refinement") {
    const auto net = sfv_test::make_random_net(8, {3, 24, 24, 4});
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    for (int rep = 0; rep < 30; ++rep) {
        std::vector<Interval> outer, inner;
        for (int d = 0; d < 3; ++d) {
            double a = dist(gen), b2 = dist(gen);
            if (a > b2) std::swap(a, b2);
            outer.push_back(Interval(a, b2));
            const double m = 0.25 * (b2 - a);
            inner.push_back(Interval(a + m, b2 - m));
        }
        const auto bo = propagate_formal(net, Box(outer));
        const auto bi = propagate_formal(net, Box(inner));
        for (std::size_t j = 0; j < bo.outs.size(); ++j) CHECK(bo.outs[j].contains(bi.outs[j]));
    }
}

TEST_CASE("propagate_sampled: constant network gives degenerate intervals") {
    const auto net = sfv_test::constant_net({1.5, -2.0});
    SamplingConfig cfg{20, 4, false};
    const auto b = propagate_sampled(net, sfv_test::unit_box(2), cfg);
    CHECK(b.provenance == Provenance::Sampled);
    CHECK(b.outs[0] == Interval(1.5, 1.5));
    CHECK(b.outs[1] == Interval(-2.0, -2.0));
}

TEST_CASE("propagate_sampled is contained in propagate_formal") {
    std::mt19937_64 seeds(1);
    for (int rep = 0; rep < 10; ++rep) {
        const auto net = sfv_test::make_random_net(seeds(), {3, 20, 3});
        const auto box = sfv_test::unit_box(3);
        SamplingConfig cfg{50, seeds(), rep % 2 == 0};
        const auto s = propagate_sampled(net, box, cfg);
        const auto f = propagate_formal(net, box);
        for (std::size_t j = 0; j < s.outs.size(); ++j) CHECK(f.outs[j].contains(s.outs[j]));
    }
}

TEST_CASE("propagate_sampled: large-n convergence on y = x") {
    Layer l;
    l.weights = {{1.0}};
    l.bias = {0.0};
    l.activation = Activation::Identity;
    const Network net({l});
    SamplingConfig cfg{10000000, 9, false};
    const auto b = propagate_sampled(net, sfv_test::unit_box(1), cfg);
    CHECK(b.outs[0].lo == Catch::Approx(0.0).margin(1e-3));
    CHECK(b.outs[0].hi == Catch::Approx(1.0).margin(1e-3));
}

TEST_CASE("propagate_sampled: determinism and nested-n monotonicity") {
    const auto net = sfv_test::make_random_net(55, {2, 12, 2});
    const auto box = sfv_test::unit_box(2);
    const SamplingConfig a{40, 123, false};
    const auto b1 = propagate_sampled(net, box, a);
    const auto b2 = propagate_sampled(net, box, a);
    for (std::size_t j = 0; j < b1.outs.size(); ++j) CHECK(b1.outs[j] == b2.outs[j]);

    // growing n with the same seed only widens the sampled intervals
    SamplingConfig small{10, 123, false};
    SamplingConfig big{200, 123, false};
    const auto bs = propagate_sampled(net, box, small);
    const auto bb = propagate_sampled(net, box, big);
    for (std::size_t j = 0; j < bs.outs.size(); ++j) CHECK(bb.outs[j].contains(bs.outs[j]));
}

TEST_CASE("sampling config validation and vertex inclusion") {
    CHECK_THROWS(SamplingConfig{1, 0, false}.validate());
    const auto box = sfv_test::unit_box(2);
    SamplingConfig cfg{8, 0, true};
    const auto pts = sample_points(box, cfg);
    CHECK(pts.size() == 12);  // 4 vertices + 8 draws
    int corner_hits = 0;
    for (const auto& p : pts)
        if ((p[0] == 0.0 || p[0] == 1.0) && (p[1] == 0.0 || p[1] == 1.0)) ++corner_hits;
    CHECK(corner_hits >= 4);
}

TEST_CASE("bound_width") {
    OutputBounds b;
    b.outs = {Interval(0.0, 0.0), Interval(-1.0, 1.0)};
    CHECK(bound_width(b, 0) == 0.0);
    CHECK(bound_width(b, 1) == 2.0);
    CHECK_THROWS(bound_width(b, 2));
}

TEST_CASE("width ordering: formal >= dense-sampled 'real' >= sampled n=20") {
    const auto net = sfv_test::make_random_net(2024, {4, 64, 64, 2});
    const auto box = sfv_test::unit_box(4);
    const auto formal = propagate_formal(net, box);
    const auto real = propagate_sampled(net, box, SamplingConfig{200000, 1, true});
    const auto quick = propagate_sampled(net, box, SamplingConfig{20, 1, false});
    for (std::size_t j = 0; j < formal.outs.size(); ++j) {
        CHECK(bound_width(formal, j) >= bound_width(real, j));
        CHECK(bound_width(real, j) >= bound_width(quick, j));
    }
}
