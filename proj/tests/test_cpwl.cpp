#include <doctest.h>

#include <cmath>

#include "nlsa/cpwl.hpp"
#include "oracles.hpp"

using namespace nlsa;

namespace {

const FixedPointFormat q88{8};

SegmentTable default_gelu() {
    return build_segment_table(Nonlinearity::kGelu, 0.25, -8.0, 8.0, FixedPointFormat{13},
                               FixedPointFormat{8});
}

}  // namespace

TEST_CASE("segment_index basics") {
    const SegmentTable t = default_gelu();
    CHECK(segment_index(quantize(0.0, q88), q88, t) == 32);
    CHECK(segment_index(quantize(100.0, q88), q88, t) == 63);  // saturated input, upper cap
    CHECK(segment_index(quantize(-0.1, q88), q88, t) == 31);
    CHECK(segment_index(quantize(-100.0, q88), q88, t) == 0);
    CHECK(segment_index(quantize(-8.0, q88), q88, t) == 0);
    CHECK(segment_index(quantize(0.25, q88), q88, t) == 33);  // boundary belongs to its segment
}

TEST_CASE("cap totality and shift/floor agreement, exhaustive") {
    for (Nonlinearity fn : {Nonlinearity::kGelu, Nonlinearity::kExp, Nonlinearity::kReciprocal,
                            Nonlinearity::kRsqrt}) {
        for (double g : {0.125, 0.25, 0.5, 1.0}) {
            const SegmentTable t = make_table(fn, g);
            REQUIRE(t.shift_exponent.has_value());
            int bad = 0;
            for (int raw = kInt16Min; raw <= kInt16Max; ++raw) {
                const auto xq = static_cast<std::int16_t>(raw);
                const int via_shift = segment_index_shift(xq, q88, t);
                const int via_floor = segment_index_reference(xq, q88, t);
                if (via_shift != via_floor || via_shift < 0 || via_shift >= t.num_segments) ++bad;
            }
            CAPTURE(nonlinearity_name(fn));
            CAPTURE(g);
            CHECK(bad == 0);
        }
    }
}

TEST_CASE("functional path accepts non-power-of-two granularity, shift path rejects it") {
    const SegmentTable t = build_segment_table(Nonlinearity::kGelu, 0.1, -8.0, 8.0,
                                               FixedPointFormat{13}, FixedPointFormat{8});
    CHECK(segment_index(quantize(0.0, q88), q88, t) == 80);
    CHECK_THROWS_AS(segment_index_shift(quantize(0.0, q88), q88, t), std::invalid_argument);
}

TEST_CASE("ipf composes segment lookup and parameter gather") {
    const SegmentTable t = default_gelu();

    QuantizedMatrix x0{Int16Matrix::Constant(1, 1, quantize(0.0, q88)), q88};
    const IpfResult r0 = ipf(x0, t);
    CHECK(r0.segments.indices(0, 0) == 32);
    CHECK(r0.k.values(0, 0) == t.k_values[32]);
    CHECK(r0.b.values(0, 0) == t.b_values[32]);
    CHECK(r0.k.format == t.format_k);
    CHECK(r0.b.format == t.format_b);

    QuantizedMatrix beyond{Int16Matrix::Constant(3, 5, quantize(t.x_max + 10.0, q88)), q88};
    const IpfResult rc = ipf(beyond, t);
    CHECK((rc.segments.indices.array() == t.num_segments - 1).all());

    CounterRng rng(5, 1);
    const QuantizedMatrix x = oracle::random_q(rng, 2, 2, -4.0, 4.0);
    const IpfResult rr = ipf(x, t);
    for (Eigen::Index i = 0; i < 2; ++i) {
        for (Eigen::Index j = 0; j < 2; ++j) {
            const int s = segment_index(x.values(i, j), q88, t);
            CHECK(rr.k.values(i, j) == t.k_values[s]);
            CHECK(rr.b.values(i, j) == t.b_values[s]);
        }
    }
}

TEST_CASE("mhp basics") {
    auto q = [](double v) { return quantize(v, q88); };
    QuantizedMatrix x{Int16Matrix::Constant(1, 1, q(2.0)), q88};
    QuantizedMatrix k{Int16Matrix::Constant(1, 1, q(3.0)), q88};
    QuantizedMatrix b{Int16Matrix::Constant(1, 1, q(1.0)), q88};
    CHECK(mhp(x, k, b).real_at(0, 0) == 7.0);

    CounterRng rng(6, 2);
    const QuantizedMatrix xr = oracle::random_q(rng, 4, 6, -6.0, 6.0);
    const QuantizedMatrix ones{Int16Matrix::Constant(4, 6, q(1.0)), q88};
    const QuantizedMatrix zeros{Int16Matrix::Zero(4, 6), q88};
    CHECK(mhp(xr, ones, zeros).values == xr.values);

    QuantizedMatrix bad{Int16Matrix::Zero(3, 6), q88};
    CHECK_THROWS_AS(mhp(xr, ones, bad), std::invalid_argument);
}

TEST_CASE("mhp matches the scalar fixed-point oracle, mixed formats") {
    CounterRng rng(7, 3);
    for (int round = 0; round < 50; ++round) {
        const FixedPointFormat fx{static_cast<int>(rng.uniform_int(4, 12))};
        const FixedPointFormat fk{static_cast<int>(rng.uniform_int(4, 14))};
        const FixedPointFormat fb{static_cast<int>(rng.uniform_int(4, 14))};
        const FixedPointFormat fy{static_cast<int>(rng.uniform_int(4, 12))};
        const QuantizedMatrix x = oracle::random_q(rng, 4, 4, -3.0, 3.0, fx);
        const QuantizedMatrix k = oracle::random_q(rng, 4, 4, -1.5, 1.5, fk);
        const QuantizedMatrix b = oracle::random_q(rng, 4, 4, -1.5, 1.5, fb);
        const QuantizedMatrix y = mhp(x, k, b, fy);
        for (Eigen::Index i = 0; i < 4; ++i) {
            for (Eigen::Index j = 0; j < 4; ++j) {
                CHECK(y.values(i, j) ==
                      oracle::mhp_scalar(x.values(i, j), k.values(i, j), b.values(i, j),
                                         fx.frac_bits, fk.frac_bits, fb.frac_bits, fy.frac_bits));
            }
        }
    }
}

TEST_CASE("cpwl_eval at anchor points") {
    const SegmentTable t = default_gelu();
    CHECK(std::abs(cpwl_eval(0.0, t, q88)) <= t.format_b.step());

    // Beyond the cap the last segment's line extrapolates; for GELU that is
    // close to the identity asymptote.
    const double far = cpwl_eval(20.0, t, q88);
    const double k63 = t.slope_at(63);
    const double b63 = t.intercept_at(63);
    CHECK(std::abs(far - (k63 * 20.0 + b63)) <= 0.5 * q88.step() + 1e-12);
    CHECK(std::abs(far - 20.0) < 0.05);

    // Chord error bound: g^2 max|f''|/8 plus an output quantization step.
    const double bound = 0.0625 * 0.6 / 8.0 + std::ldexp(1.0, -7);
    CHECK(std::abs(cpwl_eval(1.3, t, q88) - oracle::gelu(1.3)) <= bound);
}

TEST_CASE("scalar evaluation equals the matrix composition, exhaustive") {
    const SegmentTable t = default_gelu();
    for (int raw = kInt16Min; raw <= kInt16Max; ++raw) {
        const auto xq = static_cast<std::int16_t>(raw);
        QuantizedMatrix x{Int16Matrix::Constant(1, 1, xq), q88};
        const IpfResult f = ipf(x, t);
        const QuantizedMatrix y = mhp(x, f.k, f.b);
        if (dequantize(y.values(0, 0), q88) != cpwl_eval(dequantize(xq, q88), t, q88)) {
            FAIL("composition mismatch at raw=" << raw);
        }
    }
}

TEST_CASE("chord interpolation at segment starts") {
    const SegmentTable t = default_gelu();
    const double bound = t.format_b.step() + 8.0 * t.format_k.step() + q88.step();
    for (int s = 0; s < t.num_segments; ++s) {
        const double x = t.segment_start(s);
        CHECK(std::abs(cpwl_eval(x, t, q88) - reference_eval(Nonlinearity::kGelu, x)) <= bound);
    }
}

TEST_CASE("approximation error report") {
    const SegmentTable ident = build_segment_table(Nonlinearity::kIdentity, 0.25, -8.0, 8.0,
                                                   FixedPointFormat{13}, FixedPointFormat{8});
    CHECK(approximation_error_report(ident, 4096).max_abs_err <= q88.step());

    const SegmentTable coarse = build_segment_table(Nonlinearity::kGelu, 1.0, -8.0, 8.0,
                                                    FixedPointFormat{13}, FixedPointFormat{8});
    const SegmentTable fine = default_gelu();
    const auto err_coarse = approximation_error_report(coarse, 4097);
    const auto err_fine = approximation_error_report(fine, 4097);
    CHECK(err_coarse.max_abs_err >= err_fine.max_abs_err);

    CHECK_THROWS_AS(approximation_error_report(fine, 1), std::invalid_argument);
}

TEST_CASE("grid refinement monotonicity up to the quantization floor") {
    const double floor = FixedPointFormat{8}.step() * 2;
    double prev = 1e9;
    for (double g : {1.0, 0.5, 0.25, 0.125}) {
        const SegmentTable t = build_segment_table(Nonlinearity::kGelu, g, -8.0, 8.0,
                                                   FixedPointFormat{13}, FixedPointFormat{8});
        const double err = approximation_error_report(t, 8193).max_abs_err;
        CHECK(err <= prev + floor);
        prev = err;
    }
}

TEST_CASE("gelu g=0.25 max error regression constant") {
    // Computed once with the double-precision oracle over 100000 samples and
    // frozen; deterministic arithmetic must reproduce it exactly.
    const auto rep = approximation_error_report(default_gelu(), 100000);
    CHECK(rep.max_abs_err == doctest::Approx(0.009324217310058336).epsilon(1e-9));
    CHECK(rep.max_abs_err < 0.01);
}
