#include <doctest.h>

#include "nlsa/fabric.hpp"
#include "oracles.hpp"

using namespace nlsa;

namespace {

const FixedPointFormat q88{8};

SystolicConfig grid_cfg(int rows, int cols, int macs = 16) {
    SystolicConfig cfg;
    cfg.pe_rows = rows;
    cfg.pe_cols = cols;
    cfg.macs_per_pe = macs;
    return cfg;
}

SegmentTable default_gelu() {
    return build_segment_table(Nonlinearity::kGelu, 0.25, -8.0, 8.0, FixedPointFormat{13},
                               FixedPointFormat{8});
}

}  // namespace

TEST_CASE("configure_grid mode layout") {
    const PEGrid mhp3 = configure_grid(grid_cfg(3, 3), GridMode::kMhp);
    int compute = 0, transmit = 0;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            if (mhp3.at(i, j).mode == PEMode::kMhpCompute) ++compute;
            if (mhp3.at(i, j).mode == PEMode::kMhpTransmit) ++transmit;
        }
    }
    CHECK(compute == 3);
    CHECK(transmit == 6);
    CHECK(!mhp3.mode_violation());

    const PEGrid gemm8 = configure_grid(grid_cfg(8, 8), GridMode::kGemm);
    for (int i = 0; i < 8; ++i) {
        for (int j = 0; j < 8; ++j) {
            CHECK(gemm8.at(i, j).mode == PEMode::kGemm);
            CHECK(gemm8.at(i, j).c1);
            CHECK(gemm8.at(i, j).c2);
        }
    }

    const PEGrid rect = configure_grid(grid_cfg(4, 8), GridMode::kMhp);
    int rect_compute = 0;
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 8; ++j) {
            if (rect.at(i, j).mode == PEMode::kMhpCompute) ++rect_compute;
        }
    }
    CHECK(rect_compute == 4);
}

TEST_CASE("mode violation detection via the override hook") {
    PEGrid grid = configure_grid(grid_cfg(4, 4), GridMode::kMhp);
    grid.override_control(0, 1, true, true);
    const auto violation = grid.mode_violation();
    REQUIRE(violation.has_value());
    CHECK(violation->find("mode invariant") != std::string::npos);
}

TEST_CASE("sim_gemm identity and scalar cases") {
    const SystolicConfig cfg = grid_cfg(8, 8);
    CounterRng rng(9, 4);

    QuantizedMatrix eye{Int16Matrix::Zero(4, 4), q88};
    for (int i = 0; i < 4; ++i) eye.values(i, i) = quantize(1.0, q88);
    const QuantizedMatrix w = oracle::random_q(rng, 4, 4, -4.0, 4.0);
    CHECK(sim_gemm(eye, w, cfg).c.values == w.values);

    QuantizedMatrix a{Int16Matrix::Constant(1, 1, quantize(2.0, q88)), q88};
    QuantizedMatrix b{Int16Matrix::Constant(1, 1, quantize(3.0, q88)), q88};
    CHECK(sim_gemm(a, b, cfg).c.real_at(0, 0) == 6.0);

    QuantizedMatrix mis{Int16Matrix::Zero(3, 3), q88};
    CHECK_THROWS_AS(sim_gemm(a, mis, cfg), std::invalid_argument);
}

TEST_CASE("sim_gemm is bit-exact against the direct matmul oracle") {
    CounterRng rng(10, 5);
    const SystolicConfig cfg = grid_cfg(8, 8);
    // 32x32x32 plus shapes that force partial tiles and multiple K chunks.
    struct Shape { int m, k, n; };
    for (const Shape s : {Shape{32, 32, 32}, Shape{5, 3, 7}, Shape{17, 65, 9}, Shape{1, 100, 1},
                          Shape{64, 49, 33}}) {
        const QuantizedMatrix a = oracle::random_q(rng, s.m, s.k, -4.0, 4.0);
        const QuantizedMatrix w = oracle::random_q(rng, s.k, s.n, -4.0, 4.0);
        const GemmResult r = sim_gemm(a, w, cfg);
        CHECK(r.c.values == oracle::matmul(a, w, q88));
        CHECK(r.report.mac_ops == std::int64_t(s.m) * s.k * s.n);
    }
}

TEST_CASE("sim_gemm honors a wider output format") {
    CounterRng rng(11, 6);
    const QuantizedMatrix a = oracle::random_q(rng, 6, 10, -4.0, 4.0);
    const QuantizedMatrix w = oracle::random_q(rng, 10, 6, -4.0, 4.0);
    const FixedPointFormat wide{4};
    const GemmResult r = sim_gemm(a, w, grid_cfg(8, 8), {.baseline_model = false, .out_format = wide});
    CHECK(r.c.format == wide);
    CHECK(r.c.values == oracle::matmul(a, w, wide));
}

TEST_CASE("GEMM non-interference against the baseline model") {
    CounterRng rng(12, 7);
    for (const auto& cfg : {grid_cfg(4, 4, 8), grid_cfg(8, 8, 16), grid_cfg(8, 4, 16)}) {
        for (int round = 0; round < 10; ++round) {
            const auto m = rng.uniform_int(1, 40);
            const auto k = rng.uniform_int(1, 60);
            const auto n = rng.uniform_int(1, 40);
            const QuantizedMatrix a = oracle::random_q(rng, m, k, -4.0, 4.0);
            const QuantizedMatrix w = oracle::random_q(rng, k, n, -4.0, 4.0);
            const GemmResult full = sim_gemm(a, w, cfg);
            const GemmResult base = sim_gemm(a, w, cfg, {.baseline_model = true, .out_format = {}});
            CHECK(full.c.values == base.c.values);
            CHECK(full.report.total_cycles == base.report.total_cycles);
            CHECK(full.report.fill_cycles == base.report.fill_cycles);
            CHECK(full.report.compute_cycles == base.report.compute_cycles);
            CHECK(full.report.drain_cycles == base.report.drain_cycles);
            CHECK(full.grid.total_mac_activity() == base.grid.total_mac_activity());
        }
    }
}

TEST_CASE("streams: shapes, documented order, round trip") {
    const SystolicConfig cfg = grid_cfg(8, 8);
    CounterRng rng(13, 8);

    // 1x1: one lane in use, one pair.
    QuantizedMatrix x1{Int16Matrix::Constant(1, 1, quantize(5.0, q88)), q88};
    const InterleavedStream sx = rearrange_x(x1, cfg);
    CHECK(sx.lane_count == 8);
    CHECK(sx.total_pairs() == 1);
    CHECK(sx.lanes[0][0].first == 1280);
    CHECK(sx.lanes[0][0].second == 256);

    // 2x2 on a 2-lane grid: lane i carries row i in column order.
    const SystolicConfig cfg2 = grid_cfg(2, 2);
    const QuantizedMatrix k2 = oracle::random_q(rng, 2, 2, -2.0, 2.0);
    const QuantizedMatrix b2 = oracle::random_q(rng, 2, 2, -2.0, 2.0);
    const InterleavedStream skb = rearrange_kb(k2, b2, cfg2);
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            CHECK(skb.lanes[i][j].first == k2.values(i, j));
            CHECK(skb.lanes[i][j].second == b2.values(i, j));
        }
    }

    // All-zero X pairs with the exact one.
    QuantizedMatrix zeros{Int16Matrix::Zero(4, 4), q88};
    const InterleavedStream sz = rearrange_x(zeros, cfg);
    for (int l = 0; l < 4; ++l) {
        for (const LanePair& p : sz.lanes[l]) {
            CHECK(p.first == 0);
            CHECK(p.second == 256);
        }
    }

    // Round trips, including bands (M > D).
    const QuantizedMatrix k = oracle::random_q(rng, 19, 7, -3.0, 3.0, FixedPointFormat{13});
    const QuantizedMatrix b = oracle::random_q(rng, 19, 7, -3.0, 3.0);
    const auto [k_back, b_back] = deinterleave_kb(rearrange_kb(k, b, cfg));
    CHECK(k_back.values == k.values);
    CHECK(b_back.values == b.values);
    CHECK(k_back.format == k.format);
    const QuantizedMatrix x = oracle::random_q(rng, 19, 7, -3.0, 3.0);
    CHECK(deinterleave_x(rearrange_x(x, cfg)).values == x.values);

    QuantizedMatrix narrow{Int16Matrix::Zero(2, 2), FixedPointFormat{15}};
    CHECK_THROWS_AS(rearrange_x(narrow, cfg), std::invalid_argument);

    // A stream whose lanes disagree with its source shape is rejected
    // before anything dereferences it.
    InterleavedStream broken = rearrange_x(x, cfg);
    broken.lanes[0].pop_back();
    CHECK_THROWS_AS(deinterleave_x(broken), std::invalid_argument);
    const QuantizedMatrix xk = oracle::random_q(rng, 19, 7, -1.0, 1.0, FixedPointFormat{13});
    const QuantizedMatrix xb = oracle::random_q(rng, 19, 7, -1.0, 1.0);
    CHECK_THROWS_AS(sim_mhp(broken, rearrange_kb(xk, xb, cfg), cfg), std::invalid_argument);
}

TEST_CASE("sim_mhp computes on the diagonal only and matches functional mhp") {
    const SystolicConfig cfg = grid_cfg(8, 8);
    CounterRng rng(14, 9);
    const SegmentTable t = default_gelu();

    auto q = [](double v) { return quantize(v, q88); };
    QuantizedMatrix x1{Int16Matrix::Constant(1, 1, q(2.0)), q88};
    QuantizedMatrix k1{Int16Matrix::Constant(1, 1, q(3.0)), q88};
    QuantizedMatrix b1{Int16Matrix::Constant(1, 1, q(1.0)), q88};
    const MhpResult r1 = sim_mhp(rearrange_x(x1, cfg), rearrange_kb(k1, b1, cfg), cfg);
    CHECK(r1.y.real_at(0, 0) == 7.0);
    CHECK(r1.grid.at(0, 0).mac_activity_count == 2);
    CHECK(r1.grid.off_diagonal_mac_activity() == 0);

    // 8x8 engages exactly the eight diagonal PEs.
    const QuantizedMatrix x8 = oracle::random_q(rng, 8, 8, -6.0, 6.0);
    const IpfResult f8 = ipf(x8, t);
    const MhpResult r8 = sim_mhp(rearrange_x(x8, cfg), rearrange_kb(f8.k, f8.b, cfg), cfg);
    int engaged = 0;
    for (int i = 0; i < 8; ++i) {
        for (int j = 0; j < 8; ++j) {
            if (r8.grid.at(i, j).mac_activity_count > 0) {
                ++engaged;
                CHECK(i == j);
            }
        }
    }
    CHECK(engaged == 8);

    // 16x16 on the 8x8 grid: bit-exact vs functional mhp, 2*M*N multiplies.
    const QuantizedMatrix x16 = oracle::random_q(rng, 16, 16, -6.0, 6.0);
    const IpfResult f16 = ipf(x16, t);
    const MhpResult r16 = sim_mhp(rearrange_x(x16, cfg), rearrange_kb(f16.k, f16.b, cfg), cfg);
    CHECK(r16.y.values == mhp(x16, f16.k, f16.b).values);
    CHECK(r16.report.mac_ops == 2 * 16 * 16);
    CHECK(r16.grid.total_mac_activity() == 2 * 16 * 16);
    CHECK(r16.grid.off_diagonal_mac_activity() == 0);

    // Transmission PEs forward, and only forward.
    CHECK(r16.grid.at(1, 0).forwarded_count > 0);
    CHECK(r16.grid.at(1, 0).mac_activity_count == 0);

    // Lane/shape mismatch between the streams.
    const QuantizedMatrix other = oracle::random_q(rng, 4, 4, -1.0, 1.0);
    const IpfResult fo = ipf(other, t);
    CHECK_THROWS_AS(
        sim_mhp(rearrange_x(x16, cfg), rearrange_kb(fo.k, fo.b, cfg), cfg),
        std::invalid_argument);
}

TEST_CASE("injected control fault trips the per-step validation") {
    const SystolicConfig cfg = grid_cfg(8, 8);
    CounterRng rng(15, 10);
    const QuantizedMatrix x = oracle::random_q(rng, 8, 8, -4.0, 4.0);
    const IpfResult f = ipf(x, default_gelu());
    MhpOptions opts;
    opts.inject_control_fault = {{0, 1}};
    CHECK_THROWS_WITH_AS(
        sim_mhp(rearrange_x(x, cfg), rearrange_kb(f.k, f.b, cfg), cfg, opts),
        doctest::Contains("mode invariant"), std::logic_error);
}

TEST_CASE("sim_ipf matches functional ipf and counts pipeline cycles") {
    const SystolicConfig cfg = grid_cfg(8, 8);
    const SegmentTable t = default_gelu();
    CounterRng rng(16, 11);

    QuantizedMatrix x0{Int16Matrix::Constant(1, 1, 0), q88};
    const SimIpfResult r0 = sim_ipf(x0, t, cfg);
    CHECK(r0.k.values(0, 0) == t.k_values[32]);
    CHECK(r0.b.values(0, 0) == t.b_values[32]);
    CHECK(r0.ipf_cycles == 1 + 4);

    const QuantizedMatrix x8 = oracle::random_q(rng, 8, 8, -4.0, 4.0);
    CHECK(sim_ipf(x8, t, cfg).ipf_cycles == 22 + 4);  // ceil(64/3) + depth

    const QuantizedMatrix x32 = oracle::random_q(rng, 32, 32, -8.5, 8.5);
    const SimIpfResult r32 = sim_ipf(x32, t, cfg);
    const IpfResult func = ipf(x32, t);
    CHECK(r32.k.values == func.k.values);
    CHECK(r32.b.values == func.b.values);

    const SegmentTable odd = build_segment_table(Nonlinearity::kGelu, 0.1, -8.0, 8.0,
                                                 FixedPointFormat{13}, FixedPointFormat{8});
    CHECK_THROWS_AS(sim_ipf(x8, odd, cfg), std::invalid_argument);

    // Parameter arrays larger than the L3 allocation are rejected.
    const SegmentTable big = build_segment_table(Nonlinearity::kGelu, 0.0625, -16.0, 16.0,
                                                 FixedPointFormat{13}, FixedPointFormat{8});
    CHECK_THROWS_AS(sim_ipf(x8, big, cfg), std::invalid_argument);
}

TEST_CASE("rearranged streams land each pair on its diagonal partner") {
    // Alignment example: sim over streams equals functional over matrices.
    const SystolicConfig cfg = grid_cfg(8, 8);
    CounterRng rng(17, 12);
    const QuantizedMatrix x = oracle::random_q(rng, 8, 8, -4.0, 4.0);
    const QuantizedMatrix k = oracle::random_q(rng, 8, 8, -2.0, 2.0, FixedPointFormat{13});
    const QuantizedMatrix b = oracle::random_q(rng, 8, 8, -2.0, 2.0);
    const MhpResult sim = sim_mhp(rearrange_x(x, cfg), rearrange_kb(k, b, cfg), cfg);
    CHECK(sim.y.values == mhp(x, k, b).values);
}
