// SPDX-License-Identifier: MIT
#include "mfj/csv.hpp"
#include "mfj/hull.hpp"
#include "mfj/parallel.hpp"
#include "mfj/quadrature.hpp"
#include "mfj/stats.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace {

TEST(GaussLegendre, WeightsSumToTwo) {
    const auto& gl = mfj::gauss_legendre16();
    double s = 0.0;
    for (double w : gl.weights) s += w;
    EXPECT_NEAR(s, 2.0, 1e-14);
}

TEST(GaussLegendre, ExactForDegree31) {
    const auto& gl = mfj::gauss_legendre16();
    for (int p = 0; p <= 31; ++p) {
        const double exact = (p % 2 == 0) ? 2.0 / (p + 1) : 0.0;
        EXPECT_NEAR(gl.integrate([p](double x) { return std::pow(x, p); }, -1.0, 1.0), exact, 1e-14) << p;
    }
    // On a shifted interval: int_0^3 x^5 dx = 3^6 / 6.
    EXPECT_NEAR(gl.integrate([](double x) { return std::pow(x, 5); }, 0.0, 3.0), 729.0 / 6.0, 1e-11);
}

TEST(Moments, MatchesTwoPass) {
    std::mt19937_64 gen(7);
    std::normal_distribution<double> nd(3.0, 2.0);
    std::vector<double> xs(10007);
    for (double& x : xs) x = nd(gen);
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    const double var = ss / static_cast<double>(xs.size() - 1);

    const mfj::Moments t = mfj::tree_moments(xs);
    EXPECT_EQ(t.n, xs.size());
    EXPECT_NEAR(t.mean, mean, 1e-12);
    EXPECT_NEAR(t.variance(), var, 1e-10);

    mfj::Moments seq;
    for (double x : xs) seq.add(x);
    EXPECT_NEAR(seq.mean, mean, 1e-12);
    EXPECT_NEAR(seq.variance(), var, 1e-10);
}

TEST(Moments, MergeWithEmptyIsIdentity) {
    mfj::Moments a;
    a.add(1.0);
    a.add(4.0);
    const auto m = mfj::merge(a, mfj::Moments{});
    EXPECT_EQ(m.n, 2u);
    EXPECT_DOUBLE_EQ(m.mean, 2.5);
    EXPECT_DOUBLE_EQ(m.variance(), 4.5);
    EXPECT_DOUBLE_EQ(mfj::merge(mfj::Moments{}, a).mean, 2.5);
}

TEST(Moments, StableForLargeOffset) {
    std::vector<double> xs;
    for (int i = 0; i < 1000; ++i) xs.push_back(1e9 + (i % 2 == 0 ? 1.0 : -1.0));
    EXPECT_NEAR(mfj::tree_moments(xs).variance(), 1000.0 / 999.0, 1e-6);
}

TEST(ParallelFor, VisitsEveryIndexOnce) {
    for (unsigned threads : {1u, 2u, 3u, 8u}) {
        std::vector<std::atomic<int>> hits(1001);
        mfj::parallel_for(hits.size(), threads, [&](std::size_t i) { hits[i]++; });
        for (const auto& h : hits) ASSERT_EQ(h.load(), 1);
    }
}

TEST(ParallelFor, RethrowsLowestFailingIndex) {
    for (unsigned threads : {1u, 2u, 4u, 7u}) {
        try {
            mfj::parallel_for(100, threads, [](std::size_t i) {
                if (i == 37 || i == 80) throw std::runtime_error(std::to_string(i));
            });
            FAIL() << "expected an exception";
        } catch (const std::runtime_error& e) {
            EXPECT_STREQ(e.what(), "37") << threads;
        }
    }
}

TEST(LineEnvelope, MatchesBruteForce) {
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> ud(-3.0, 3.0);
    for (int trial = 0; trial < 50; ++trial) {
        mfj::detail::LineEnvelope env;
        std::vector<std::pair<double, double>> lines;
        const int n = 1 + trial * 3;
        for (int i = 0; i < n; ++i) {
            // Repeated slopes exercise the parallel-line branch.
            const double a = (i % 5 == 0) ? 1.0 : ud(gen);
            const double b = ud(gen);
            lines.emplace_back(a, b);
            env.add(a, b);
            for (int q = 0; q < 5; ++q) {
                const double x = ud(gen) * 4.0;
                double best = -INFINITY;
                for (auto [la, lb] : lines) best = std::max(best, la * x + lb);
                ASSERT_NEAR(env.max_at(x), best, 1e-12);
            }
        }
    }
}

TEST(Csv, SeventeenDigitRoundTrip) {
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> ud(-1e6, 1e6);
    for (int i = 0; i < 1000; ++i) {
        const double x = ud(gen) * std::pow(10.0, (i % 40) - 20);
        EXPECT_EQ(std::stod(mfj::format_double(x)), x);
    }
    EXPECT_EQ(mfj::format_double(0.1), "0.10000000000000001");
    EXPECT_EQ(mfj::format_double(0.5), "0.5");
}

TEST(Csv, RowJoinsWithCommas) {
    mfj::CsvRow r;
    r.add("a").add(1.5).add(std::uint64_t{7}).add(-2L);
    EXPECT_EQ(r.str(), "a,1.5,7,-2\n");
}

TEST(Csv, AtomicWriteReplacesContent) {
    const auto dir = std::filesystem::temp_directory_path() / "mfj_csv_test";
    std::filesystem::create_directories(dir);
    const auto path = dir / "out.csv";
    mfj::write_atomic(path, "first\n");
    mfj::write_atomic(path, "second\n");
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    EXPECT_EQ(ss.str(), "second\n");
    std::size_t files = 0;
    for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir)) ++files;
    EXPECT_EQ(files, 1u);
    std::filesystem::remove_all(dir);
}

}  // namespace
