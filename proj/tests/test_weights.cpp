// SPDX-License-Identifier: MIT
#include "mfj/greeks.hpp"
#include "mfj/weights.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

namespace {

using mfj::AffineModel;
using mfj::Payoff;
using mfj::PathBundle;
using mfj::PathContext;
using mfj::TimeGrid;
using mfj::WeightField;

TEST(DMax, ZeroShift) {
    const std::vector<double> x{1, 2, 1};
    const std::vector<double> s(3, 0.0);
    EXPECT_EQ(mfj::d_max(x, s, 0), 0.0);
}

TEST(DMax, NegativeShiftAfterMax) {
    const std::vector<double> x{1, 3, 2, 1};
    const std::vector<double> s(4, -0.5);
    EXPECT_EQ(mfj::d_max(x, s, 2), 0.0);
}

TEST(DMax, ThreePointEnumeration) {
    const std::vector<double> x{1, 2, 1};
    EXPECT_EQ(mfj::d_max(x, std::vector<double>(3, 1.0), 2), 0.0);
    EXPECT_EQ(mfj::d_max(x, std::vector<double>(3, 2.0), 2), 1.0);
}

TEST(DMin, ThreePointEnumeration) {
    const std::vector<double> x{2, 1, 2};
    EXPECT_EQ(mfj::d_min(x, std::vector<double>(3, -1.0), 2), 0.0);
    EXPECT_EQ(mfj::d_min(x, std::vector<double>(3, -2.0), 2), -1.0);
    EXPECT_EQ(mfj::d_min(x, std::vector<double>(3, 0.0), 0), 0.0);
}

TEST(EuropeanWeightValue, OutOfTheMoneyIsZero) {
    const auto w = mfj::european_weight_value(0.4, 2.0, 4.0, 0.5, 0.1);
    EXPECT_EQ(w.value, 0.0);
    EXPECT_FALSE(w.guarded);
    EXPECT_EQ(mfj::european_weight_value(0.5, 2.0, 4.0, 0.5, 0.1).value, 0.0);
}

TEST(EuropeanWeightValue, FirstBranch) {
    // D >= K - X_T: omega = flow / (Q D) = 2 / (0.1 * 4).
    EXPECT_NEAR(mfj::european_weight_value(1.0, 2.0, 4.0, 0.5, 0.1).value, 5.0, 1e-14);
}

TEST(EuropeanWeightValue, SecondBranch) {
    // X_T = 1.5 > K = 1.2, D = -0.5 < K - X_T = -0.3: omega = flow / (Q (K - X_T)).
    const auto w = mfj::european_weight_value(1.5, 2.0, -0.5, 1.2, 0.1);
    EXPECT_NEAR(w.value, 2.0 / (0.1 * (1.2 - 1.5)), 1e-12);
}

TEST(EuropeanWeightValue, GuardOnVanishingDenominator) {
    const auto w = mfj::european_weight_value(1.0, 2.0, 0.0, 0.5, 0.1);
    EXPECT_TRUE(w.guarded);
    EXPECT_EQ(w.value, 0.0);
}

TEST(BarrierWeightValue, UpAndOutThreePoint) {
    // X = [1, 1.4, 1.2], K = 1, B = 2, flow = 1, shift 0.2 on s >= 1.
    const std::vector<double> x{1, 1.4, 1.2};
    const std::vector<double> shift(3, 0.2);
    const double shifted = 1.4 + mfj::d_max(x, shift, 1);
    EXPECT_NEAR(shifted, 1.6, 1e-15);
    EXPECT_NEAR(mfj::up_and_out_weight_value(1.4, 1.0, shifted, 1.0, 2.0, 0.1).value, 50.0, 1e-9);
}

TEST(BarrierWeightValue, UpAndOutSupport) {
    EXPECT_EQ(mfj::up_and_out_weight_value(2.1, 1.0, 2.3, 1.0, 2.0, 0.1).value, 0.0);
    EXPECT_EQ(mfj::up_and_out_weight_value(0.9, 1.0, 1.3, 1.0, 2.0, 0.1).value, 0.0);
}

TEST(BarrierWeightValue, UpAndOutGuard) {
    const auto w = mfj::up_and_out_weight_value(1.4, 1.0, 1.4, 1.0, 2.0, 0.1);
    EXPECT_TRUE(w.guarded);
}

TEST(BarrierWeightValue, DownAndOutThreePoint) {
    // X = [2, 1.6, 1.8], K = 1, B = 0.5, shift -0.2 on s >= 1: min 1.6 -> 1.4.
    const std::vector<double> x{2, 1.6, 1.8};
    const std::vector<double> shift(3, -0.2);
    const double shifted = 1.6 + mfj::d_min(x, shift, 1);
    EXPECT_NEAR(shifted, 1.4, 1e-15);
    EXPECT_NEAR(mfj::down_and_out_weight_value(1.6, 1.0, shifted, 1.0, 0.5, 0.1).value, -50.0, 1e-9);
}

TEST(BarrierWeightValue, DownAndOutSupport) {
    EXPECT_EQ(mfj::down_and_out_weight_value(0.4, 1.0, 0.3, 1.0, 0.5, 0.1).value, 0.0);
    EXPECT_EQ(mfj::down_and_out_weight_value(0.9, 1.0, 0.8, 1.0, 0.5, 0.1).value, 0.0);
}

TEST(WeightPayoff, DigitalBorrowsIdentityWeight) {
    EXPECT_EQ(mfj::weight_payoff_for(Payoff::digital(0.5)).kind, mfj::PayoffKind::identity);
    EXPECT_EQ(mfj::weight_payoff_for(Payoff::call(0.5)).kind, mfj::PayoffKind::european_call);
}

mfj::ModelSpec rich_model() {
    AffineModel p;
    p.b_const = 0.1;
    p.b_linear = -0.2;
    p.diffusion_C = 0.5;
    p.sigma0_const = 0.1;
    p.sigma0_pi = 0.05;
    p.jump_F = 0.4;
    p.jump_F_z = 0.6;
    p.lambda0_const = 0.05;
    p.lambda0_eta = 0.1;
    p.nu = 2.0;
    p.mark_lo = -0.5;
    p.mark_hi = 0.5;
    return p.to_spec();
}

// omega at (k, z) from first principles: shift the path by Y_s/Y_k lambda.
mfj::WeightValue brute_weight(const PathContext& ctx, const PathBundle& b, const Payoff& p, std::size_t k, double z) {
    const auto& spec = ctx.spec();
    const double t = ctx.grid().time(k);
    const double lam = spec.jump_F(t, z) * b.X[k] + spec.lambda0(t, z, spec.xi(ctx.mean().values[k]));
    std::vector<double> shift(b.X.size());
    for (std::size_t s = 0; s < b.X.size(); ++s) shift[s] = b.Y[s] / b.Y[k] * lam;
    const double q = spec.q_total();
    switch (p.kind) {
        case mfj::PayoffKind::up_and_out_call:
            return mfj::up_and_out_weight_value(b.run_max, b.flow[b.argmax_index], b.run_max + mfj::d_max(b.X, shift, k),
                                                p.K, p.B, q);
        case mfj::PayoffKind::down_and_out_call:
            return mfj::down_and_out_weight_value(b.run_min, b.flow[b.argmin_index],
                                                  b.run_min + mfj::d_min(b.X, shift, k), p.K, p.B, q);
        default: return mfj::terminal_weight_value(p, b.X.back(), b.flow.back(), shift.back(), q);
    }
}

double brute_compensator(const PathContext& ctx, const PathBundle& b, const Payoff& p) {
    const auto& law = ctx.spec().marks;
    const auto nodes = law.nodes();
    const auto weights = law.weights();
    double total = 0.0;
    for (std::size_t k = 0; k < ctx.grid().steps; ++k) {
        for (std::size_t n = 0; n < nodes.size(); ++n) total += weights[n] * brute_weight(ctx, b, p, k, nodes[n]).value;
    }
    return total * ctx.spec().nu * ctx.grid().dt();
}

class FieldVsBruteForce : public ::testing::TestWithParam<int> {};

TEST_P(FieldVsBruteForce, PointValuesAndCompensator) {
    const int which = GetParam();
    const TimeGrid g = TimeGrid::with_step(1.0, 1.0 / 64);
    const PathContext ctx(which < 3 ? rich_model() : mfj::builtin_example(mfj::Builtin::example2).spec, g);
    const Payoff payoffs[] = {Payoff::call(1.0), Payoff::up_and_out(0.9, 1.6), Payoff::down_and_out(0.7, 0.5),
                              Payoff::up_and_out(0.8, 1.3)};
    const Payoff p = payoffs[which];
    int active = 0;
    for (std::uint64_t i = 0; i < 60; ++i) {
        const auto b = mfj::simulate_path(ctx, mfj::RngConfig{17, i});
        const WeightField f(ctx, b, p);
        if (!f.vanishes()) ++active;
        for (std::size_t k = 0; k < g.steps; k += 7) {
            for (double z : {-0.45, 0.0, 0.3}) {
                const auto w = f(k, z);
                const auto o = brute_weight(ctx, b, p, k, z);
                ASSERT_EQ(w.guarded, o.guarded);
                ASSERT_NEAR(w.value, o.value, 1e-9 * (1.0 + std::abs(o.value)));
            }
        }
        const double c = f.compensator().value;
        const double oc = brute_compensator(ctx, b, p);
        ASSERT_NEAR(c, oc, 1e-9 * (1.0 + std::abs(oc))) << i;
    }
    EXPECT_GT(active, 3);
}

INSTANTIATE_TEST_SUITE_P(Payoffs, FieldVsBruteForce, ::testing::Values(0, 1, 2, 3));

TEST(WeightField, Example2EuropeanIsTenTimesU) {
    const TimeGrid g = TimeGrid::with_step(1.0, 1.0 / 128);
    const PathContext ctx(mfj::builtin_example(mfj::Builtin::example2).spec, g);
    for (std::uint64_t i = 0; i < 40; ++i) {
        const auto b = mfj::simulate_path(ctx, mfj::RngConfig{2, i});
        const auto f = mfj::european_weight(ctx, b, 0.5);
        const bool itm = b.X.back() > 0.5;
        EXPECT_EQ(f.vanishes(), !itm);
        for (std::size_t k = 0; k < g.steps; k += 9) {
            const double expected = itm ? 10.0 * b.u.back() : 0.0;
            ASSERT_NEAR(f(k, 0.1).value, expected, 1e-12);
        }
    }
}

TEST(WeightField, SupportOfBarrierFields) {
    const TimeGrid g = TimeGrid::with_step(1.0, 1.0 / 64);
    const PathContext ctx(mfj::builtin_example(mfj::Builtin::example2).spec, g);
    int knocked = 0;
    for (std::uint64_t i = 0; i < 200; ++i) {
        const auto b = mfj::simulate_path(ctx, mfj::RngConfig{3, i});
        const auto f = mfj::barrier_uo_weight(ctx, b, 0.5, 1.5);
        if (b.run_max >= 1.5) {
            ++knocked;
            EXPECT_TRUE(f.vanishes());
            EXPECT_EQ(f.compensator().value, 0.0);
            EXPECT_EQ(f(0, 0.0).value, 0.0);
        }
    }
    EXPECT_GT(knocked, 0);
}

TEST(WeightField, JumpFreeModelRejected) {
    AffineModel p;
    p.diffusion_C = 1.0;
    const TimeGrid g = TimeGrid::with_step(1.0, 1.0 / 8);
    const PathContext ctx(p.to_spec(), g);
    const auto b = mfj::simulate_path(ctx, mfj::RngConfig{1, 0});
    try {
        (void)mfj::european_weight(ctx, b, 1.0);
        FAIL();
    } catch (const mfj::WeightError& e) {
        EXPECT_STREQ(e.what(), "Malliavin weight undefined for jump-free model");
    }
}

TEST(Skorokhod, ConstantOneIsCompensatedCount) {
    const TimeGrid g = TimeGrid::with_step(1.0, 1.0 / 16);
    const PathContext ctx(mfj::builtin_example(mfj::Builtin::example2).spec, g);
    mfj::Noise n{std::vector<double>(g.steps, 0.0), {}};
    for (std::size_t k : {1u, 4u, 9u}) n = mfj::with_event(n, g, k, 0.1);
    const auto b = mfj::simulate_path(ctx, n);
    for (auto mode : {mfj::SkorokhodMode::jump_removal, mfj::SkorokhodMode::pathwise}) {
        const auto r = mfj::skorokhod_integral(WeightField::constant(ctx, b, 1.0), mode);
        EXPECT_NEAR(r.value, 2.9, 1e-14);
        EXPECT_EQ(r.jump_sum, 3.0);
        EXPECT_EQ(r.value, r.jump_sum - r.compensator);
    }
    const auto zero = mfj::skorokhod_integral(WeightField::constant(ctx, b, 0.0));
    EXPECT_EQ(zero.value, 0.0);
}

TEST(Skorokhod, DecompositionHoldsExactly) {
    const TimeGrid g = TimeGrid::with_step(1.0, 1.0 / 64);
    const PathContext ctx(rich_model(), g);
    for (std::uint64_t i = 0; i < 50; ++i) {
        const auto b = mfj::simulate_path(ctx, mfj::RngConfig{8, i});
        for (auto mode : {mfj::SkorokhodMode::jump_removal, mfj::SkorokhodMode::pathwise}) {
            const auto r = mfj::skorokhod_integral(mfj::barrier_uo_weight(ctx, b, 0.9, 1.6), mode);
            ASSERT_EQ(r.value, r.jump_sum - r.compensator);
        }
    }
}

TEST(Skorokhod, JumpRemovalEvaluatesOnReducedPath) {
    const TimeGrid g = TimeGrid::with_step(1.0, 1.0 / 32);
    const PathContext ctx(mfj::builtin_example(mfj::Builtin::example2).spec, g);
    const mfj::Noise base = ctx.sample({4, 0});
    const mfj::Noise n = mfj::with_event(base, g, 10, 0.2);
    const auto b = mfj::simulate_path(ctx, n);
    const auto r = mfj::skorokhod_integral(mfj::european_weight(ctx, b, 0.5));
    double expected = 0.0;
    for (std::size_t j = 0; j < n.jumps.size(); ++j) {
        const auto reduced = mfj::simulate_path(ctx, mfj::without_event(n, j));
        expected += mfj::european_weight(ctx, reduced, 0.5)(n.jumps[j].step, n.jumps[j].mark).value;
    }
    EXPECT_EQ(r.jump_sum, expected);
}

TEST(Skorokhod, ZeroMeanEuropean) {
    const TimeGrid g = TimeGrid::with_step(1.0, 1.0 / 128);
    const PathContext ctx(mfj::builtin_example(mfj::Builtin::example2).spec, g);
    const std::size_t n = 20000;
    std::vector<double> v(n);
    mfj::parallel_for(n, 0, [&](std::size_t i) {
        const auto b = mfj::simulate_path(ctx, mfj::RngConfig{55, i});
        v[i] = mfj::skorokhod_integral(mfj::european_weight(ctx, b, 0.5)).value;
    });
    const auto m = mfj::tree_moments(v);
    EXPECT_LE(std::abs(m.mean), 3.0 * m.stderr_of_mean());
}

TEST(Skorokhod, GuardFractionSmallForEuropean) {
    const TimeGrid g = TimeGrid::with_step(1.0, 1.0 / 128);
    const PathContext ctx(mfj::builtin_example(mfj::Builtin::example2).spec, g);
    const std::size_t n = 10000;
    const auto e = mfj::delta_malliavin(ctx, Payoff::call(0.5), {n, 9, 0});
    EXPECT_LE(static_cast<double>(e.guard_hits) / static_cast<double>(n), 1e-3);
}

TEST(Skorokhod, BarrierGuardsCountUnmovedMaximum) {
    // A shift that leaves the running max unchanged gives a 0/0 weight.
    const TimeGrid g = TimeGrid::with_step(1.0, 1.0 / 64);
    const PathContext ctx(mfj::builtin_example(mfj::Builtin::example2).spec, g);
    const auto e = mfj::delta_malliavin(ctx, Payoff::up_and_out(0.5, 1.5), {2000, 9, 0});
    EXPECT_GT(e.guard_hits, 0);
}

}  // namespace
