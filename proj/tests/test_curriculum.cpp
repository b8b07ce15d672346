#include <doctest.h>

#include <rulegrad/curriculum.hpp>

using namespace rulegrad;

TEST_CASE("margin_at: linear sweep, clamped at c_stop") {
    MarginSchedule s{14.0, 4.0, 10};
    CHECK(margin_at(s, std::size_t{0}) == doctest::Approx(14.0));
    CHECK(margin_at(s, std::size_t{5}) == doctest::Approx(9.0));
    CHECK(margin_at(s, std::size_t{10}) == doctest::Approx(4.0));
    CHECK(margin_at(s, std::size_t{15}) == doctest::Approx(4.0));
}

TEST_CASE("margin_at: constant schedule") {
    MarginSchedule s{6.0, 6.0, 3};
    for (std::size_t e = 0; e < 8; ++e) CHECK(margin_at(s, e) == doctest::Approx(6.0));
}

TEST_CASE("margin_at: monotone and piecewise linear") {
    MarginSchedule s{20.0, 3.0, 7};
    double prev = margin_at(s, std::size_t{0});
    const double step = margin_at(s, std::size_t{1}) - prev;
    for (std::size_t e = 1; e <= 12; ++e) {
        const double m = margin_at(s, e);
        CHECK(m <= prev + 1e-12);
        if (e < 7) {
            CHECK(m - prev == doctest::Approx(step).epsilon(1e-12));
        }
        prev = m;
    }
    CHECK(prev == doctest::Approx(3.0));
}

TEST_CASE("margin_at: fractional epochs for per-step sweeping") {
    MarginSchedule s{10.0, 0.0, 10};
    CHECK(margin_at(s, 2.5) == doctest::Approx(7.5));
    CHECK(margin_at(s, 10.0001) == doctest::Approx(0.0));
}

TEST_CASE("margin schedule validation") {
    CHECK_THROWS_AS(margin_at(MarginSchedule{-1.0, 0.0, 5}, std::size_t{0}), ContractError);
    CHECK_THROWS_AS(margin_at(MarginSchedule{5.0, 1.0, 0}, std::size_t{0}), ContractError);
    CHECK_THROWS_AS(margin_at(MarginSchedule{5.0, 1.0, 5}, -1.0), ContractError);
}
