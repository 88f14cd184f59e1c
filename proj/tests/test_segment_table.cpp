#include <doctest.h>

#include <cmath>

#include "nlsa/segment_table.hpp"
#include "oracles.hpp"

using namespace nlsa;

TEST_CASE("gelu table over [-8,8) at g=0.25 has 64 segments") {
    const SegmentTable t = build_segment_table(Nonlinearity::kGelu, 0.25, -8.0, 8.0,
                                               FixedPointFormat{13}, FixedPointFormat{8});
    CHECK(t.num_segments == 64);
    CHECK(t.k_values.size() == 64);
    CHECK(t.b_values.size() == 64);
    CHECK(t.shift_exponent.has_value());
    CHECK(*t.shift_exponent == -2);
}

TEST_CASE("identity table is the exact chord of y = x") {
    const SegmentTable t = build_segment_table(Nonlinearity::kIdentity, 0.5, -8.0, 8.0,
                                               FixedPointFormat{13}, FixedPointFormat{8});
    for (int s = 0; s < t.num_segments; ++s) {
        CHECK(t.slope_at(s) == 1.0);
        CHECK(t.intercept_at(s) == 0.0);
    }
}

TEST_CASE("gelu slope for the segment covering [0, 0.25) matches the independent oracle") {
    const SegmentTable t = build_segment_table(Nonlinearity::kGelu, 0.25, -8.0, 8.0,
                                               FixedPointFormat{13}, FixedPointFormat{8});
    const int s = 32;  // [0, 0.25)
    const double chord = (oracle::gelu(0.25) - oracle::gelu(0.0)) / 0.25;
    CHECK(t.k_values[s] == quantize(chord, t.format_k));
}

TEST_CASE("chord endpoints reproduce the function within the quantization bound") {
    for (Nonlinearity fn : {Nonlinearity::kGelu, Nonlinearity::kTanh, Nonlinearity::kSigmoid,
                            Nonlinearity::kExp, Nonlinearity::kReciprocal, Nonlinearity::kRsqrt}) {
        const SegmentTable t = make_table(fn, 0.25);
        const double step_k = t.format_k.step();
        const double step_b = t.format_b.step();
        for (int s = 0; s < t.num_segments; ++s) {
            for (const double x : {t.segment_start(s), t.segment_start(s) + t.granularity}) {
                const double chord = t.slope_at(s) * x + t.intercept_at(s);
                const double bound = step_b + std::abs(x) * step_k;
                CHECK(std::abs(chord - reference_eval(fn, x)) <= bound);
            }
        }
    }
}

TEST_CASE("builder rejects invalid requests") {
    const FixedPointFormat fk{13}, fb{8};
    CHECK_THROWS_AS(build_segment_table(Nonlinearity::kGelu, 0.3, -8.0, 8.0, fk, fb),
                    std::invalid_argument);
    CHECK_THROWS_AS(build_segment_table(Nonlinearity::kReciprocal, 0.25, -1.0, 8.0, fk, fb),
                    std::invalid_argument);
    CHECK_THROWS_AS(build_segment_table(Nonlinearity::kRsqrt, 0.25, 0.0, 8.0, fk, fb),
                    std::invalid_argument);
    CHECK_THROWS_AS(build_segment_table(Nonlinearity::kGelu, -0.25, -8.0, 8.0, fk, fb),
                    std::invalid_argument);
    CHECK_THROWS_AS(build_segment_table(Nonlinearity::kGelu, 0.25, 8.0, -8.0, fk, fb),
                    std::invalid_argument);
}

TEST_CASE("power of two detection") {
    CHECK(power_of_two_exponent(0.0625) == -4);
    CHECK(power_of_two_exponent(1.0) == 0);
    CHECK(power_of_two_exponent(2.0) == 1);
    CHECK(!power_of_two_exponent(0.1).has_value());
    CHECK(!power_of_two_exponent(0.75).has_value());
    CHECK(!power_of_two_exponent(0.0).has_value());

    const SegmentTable t = build_segment_table(Nonlinearity::kGelu, 0.1, -8.0, 8.0,
                                               FixedPointFormat{13}, FixedPointFormat{8});
    CHECK(t.num_segments == 160);
    CHECK(!t.shift_exponent.has_value());
}

TEST_CASE("fitted formats widen for steep functions") {
    // GELU slopes stay within Q2.13; EXP chords over [-8, 4) reach ~48 and
    // need integer headroom.
    CHECK(make_table(Nonlinearity::kGelu, 0.25).format_k == FixedPointFormat{13});
    const SegmentTable e = make_table(Nonlinearity::kExp, 0.25);
    CHECK(e.format_k.frac_bits < 13);
    const double worst_chord = (reference_eval(Nonlinearity::kExp, 4.0) -
                                reference_eval(Nonlinearity::kExp, 3.75)) / 0.25;
    CHECK(worst_chord <= e.format_k.max_value());
}

TEST_CASE("format names parse back") {
    CHECK(parse_format("Q8.8") == FixedPointFormat{8});
    CHECK(parse_format("Q2.13") == FixedPointFormat{13});  // sign-exclusive naming
    CHECK(parse_format("Q3.13") == FixedPointFormat{13});
    CHECK(parse_format(FixedPointFormat{13}.name()) == FixedPointFormat{13});
    CHECK_THROWS_AS(parse_format("Q10.8"), std::invalid_argument);
    CHECK_THROWS_AS(parse_format("8.8"), std::invalid_argument);
}
