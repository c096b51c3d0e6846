#include <doctest.h>

#include <random>

#include "lyapstream/queueing.hpp"

using namespace lyapstream;

TEST_SUITE("queueing") {

TEST_CASE("step examples") {
    const QueueParams qp{1.0, 2.5, 2.5};
    auto s = step({5, 0.0, 0.0, 0.0}, {7, 2, 0.0, 0, 0}, 1, 0.0, qp);
    CHECK(s.q_chunks == 0);
    s = step({0, 0.5, 0.0, 0.0}, {0, 2, 0.0, 0, 0}, 0, 1.2, qp);
    CHECK(s.z_seconds == doctest::Approx(0.7).epsilon(1e-14));
    s = step({0, 0.0, 1.0, 0.0}, {0, 2, 2.0, 25, 4}, 0, 0.0, qp);
    CHECK(s.w_virtual == doctest::Approx(0.5));
    CHECK(s.theta_virtual == doctest::Approx(1.5));
    s = step({3, 0.0, 0.0, 0.0}, {1, 2, 0.1, 0, 0}, 4, 0.0, qp);
    CHECK(s.q_chunks == 6);
}

TEST_CASE("negative inputs are rejected") {
    const QueueParams qp;
    CHECK_THROWS_AS(step({-1, 0, 0, 0}, {}, 0, 0.0, qp), std::invalid_argument);
    CHECK_THROWS_AS(step({}, {}, -1, 0.0, qp), std::invalid_argument);
    CHECK_THROWS_AS(step({}, {}, 0, -0.5, qp), std::invalid_argument);
    CHECK_THROWS_AS(step({}, {0, 2, -1.0, 0, 0}, 0, 0.0, qp), std::invalid_argument);
}

TEST_CASE("backlogs stay nonnegative") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> real(0.0, 6.0);
    std::uniform_int_distribution<int> count(0, 12);
    const QueueParams qp;
    SystemState s;
    for (int i = 0; i < 100000; ++i) {
        Decision d{count(rng), 2, real(rng), 5, count(rng) % 11};
        s = step(s, d, count(rng), real(rng), qp);
        REQUIRE(s.q_chunks >= 0);
        REQUIRE(s.z_seconds >= 0.0);
        REQUIRE(s.w_virtual >= 0.0);
        REQUIRE(s.theta_virtual >= 0.0);
    }
}

TEST_CASE("virtual queues stay empty at the targets") {
    // Cores are integers, so the core target is exercised with xi = 3.
    const QueueParams qp{1.0, 2.5, 3.0};
    SystemState s;
    for (int i = 0; i < 1000; ++i) {
        s = step(s, {1, 2, 2.5, 5, 3}, 1, 0.0, qp);
        CHECK(s.w_virtual == 0.0);
        CHECK(s.theta_virtual == 0.0);
    }
}

TEST_CASE("uniform arrivals") {
    std::mt19937_64 rng(11);
    ArrivalProcess none{0};
    for (int i = 0; i < 1000; ++i) CHECK(none.draw(rng) == 0);
    ArrivalProcess six{6};
    double sum = 0.0;
    int counts[7] = {};
    constexpr int n = 1'000'000;
    for (int i = 0; i < n; ++i) {
        const int a = six.draw(rng);
        REQUIRE(a >= 0);
        REQUIRE(a <= 6);
        ++counts[a];
        sum += a;
    }
    CHECK(std::abs(sum / n - 3.0) < 0.01);
    for (int c : counts) CHECK(std::abs(c / double(n) - 1.0 / 7.0) < 0.003);
}

}  // TEST_SUITE
