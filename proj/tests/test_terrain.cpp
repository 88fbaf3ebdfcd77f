#include <cmath>
#include <filesystem>
#include <random>

#include <gtest/gtest.h>

#include "mrscwc/terrain.hpp"

using namespace mrscwc;

namespace {

TerrainParams single(double a, double phase, double f, double dzs = 1.0) {
    TerrainParams p;
    p.amplitude = {a, 0.0, 0.0};
    p.phase = {phase, 0.0, 0.0};
    p.frequency = {f, 0.0, 0.0};
    p.vertical_scale = dzs;
    return p;
}

std::filesystem::path temp_dir(const std::string& name) {
    auto d = std::filesystem::temp_directory_path() / ("mrscwc_test_" + name);
    std::filesystem::remove_all(d);
    std::filesystem::create_directories(d);
    return d;
}

}  // namespace

TEST(Height, ZeroAmplitudeIsFlat) {
    TerrainParams p;
    p.frequency = {1.0, 2.0, 3.0};
    EXPECT_EQ(height(p, 1.3, -2.7), 0.0);
    EXPECT_EQ(height(p, 0.0, 0.0), 0.0);
}

TEST(Height, ExampleValues) {
    const TerrainParams p = single(0.5, 0.0, 1.0);
    EXPECT_NEAR(height(p, kPi / 2, kPi / 2), 1.0, 1e-12);
    EXPECT_EQ(height(p, 0.0, 0.0), 0.0);
}

TEST(Height, WeightsAndScaleApply) {
    TerrainParams p;
    p.amplitude = {0.0, 0.4, 0.0};
    p.frequency = {0.0, 1.0, 0.0};
    p.vertical_scale = 2.0;
    // 0.5 * 0.4 * (1 + 1) * 2
    EXPECT_NEAR(height(p, kPi / 2, kPi / 2), 0.8, 1e-12);
}

TEST(Gradient, ExampleValues) {
    TerrainParams flat;
    EXPECT_EQ(gradient(flat, 0.4, 0.2).x, 0.0);
    EXPECT_EQ(gradient(flat, 0.4, 0.2).y, 0.0);
    const Vec2 g = gradient(single(0.5, 0.0, 1.0), 0.0, 0.0);
    EXPECT_NEAR(g.x, 0.5, 1e-12);
    EXPECT_NEAR(g.y, 0.5, 1e-12);
}

TEST(Gradient, MatchesCentralDifferences) {
    std::mt19937_64 gen(2024);
    std::uniform_real_distribution<double> pos(-1.0, 10.0);
    const double h = 1e-5;
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
        const TerrainParams p = draw_terrain(static_cast<std::uint64_t>(k) + 1);
        const double x = pos(gen), y = pos(gen);
        const Vec2 g = gradient(p, x, y);
        const double fx = (height(p, x + h, y) - height(p, x - h, y)) / (2 * h);
        const double fy = (height(p, x, y + h) - height(p, x, y - h)) / (2 * h);
        worst = std::max({worst, std::abs(fx - g.x), std::abs(fy - g.y)});
    }
    EXPECT_LT(worst, 1e-6);
}

TEST(SlopeStats, FlatTerrain) {
    const SlopeStats s = slope_stats(TerrainParams{}, kNavigationRegion, 0.05);
    EXPECT_EQ(s.average_slope_deg, 0.0);
    EXPECT_EQ(s.max_slope_deg, 0.0);
}

TEST(SlopeStats, AnalyticMaximum) {
    const SlopeStats s = slope_stats(single(0.5, 0.0, 1.0), Region{0.0, kTwoPi, 0.0, kTwoPi}, 0.05);
    EXPECT_NEAR(s.max_slope_deg, rad_to_deg(std::atan(std::hypot(0.5, 0.5))), 1e-9);
    EXPECT_NEAR(s.max_slope_deg, 35.26, 0.01);
}

TEST(SlopeStats, RejectsBadInput) {
    EXPECT_THROW(slope_stats(TerrainParams{}, kNavigationRegion, 0.0), std::invalid_argument);
    EXPECT_THROW(slope_stats(TerrainParams{}, kNavigationRegion, -0.1), std::invalid_argument);
    EXPECT_THROW(slope_stats(TerrainParams{}, Region{1.0, 1.0, 0.0, 2.0}, 0.05), std::invalid_argument);
}

TEST(SlopeStats, GridRefinementIsStable) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const TerrainParams p = draw_terrain(seed);
        const double coarse = slope_stats(p, kNavigationRegion, 0.1).average_slope_deg;
        const double fine = slope_stats(p, kNavigationRegion, 0.05).average_slope_deg;
        EXPECT_LT(std::abs(coarse - fine), 0.5) << "seed " << seed;
    }
}

TEST(SlopeStats, BoundsHold) {
    for (std::uint64_t seed = 100; seed < 130; ++seed) {
        const SlopeStats s = slope_stats(draw_terrain(seed), kNavigationRegion, 0.1);
        EXPECT_GE(s.average_slope_deg, 0.0);
        EXPECT_LE(s.average_slope_deg, s.max_slope_deg);
        EXPECT_LE(s.max_slope_deg, 90.0);
    }
}

TEST(SampleTerrain, DeterministicAndInBand) {
    const SampledTerrain a1 = sample_terrain(TerrainGroup::A, 42);
    const SampledTerrain a2 = sample_terrain(TerrainGroup::A, 42);
    EXPECT_EQ(a1.params, a2.params);
    EXPECT_EQ(a1.params.group, TerrainGroup::A);
    EXPECT_LT(a1.stats.average_slope_deg, 30.0);
    EXPECT_LE(a1.stats.max_slope_deg, 70.0);

    const SampledTerrain b = sample_terrain(TerrainGroup::B, 7);
    EXPECT_EQ(b.params.group, TerrainGroup::B);
    EXPECT_GT(b.stats.average_slope_deg, 30.0);
    EXPECT_LE(b.stats.max_slope_deg, 70.0);
}

TEST(SampleTerrain, StoredSeedReproducesParams) {
    const SampledTerrain b = sample_terrain(TerrainGroup::B, 11);
    TerrainParams redraw = draw_terrain(b.params.seed);
    redraw.group = TerrainGroup::B;
    EXPECT_EQ(redraw, b.params);
}

TEST(SampleTerrain, CapProducesDiagnostic) {
    SampleOptions opt;
    opt.max_rejections = 3;
    // Amplitudes this large can never satisfy the 70 degree cap.
    opt.ranges.amplitude_min = 50.0;
    opt.ranges.amplitude_max = 60.0;
    opt.ranges.frequency_min = 2.0;
    try {
        sample_terrain(TerrainGroup::A, 1, opt);
        FAIL() << "expected the rejection cap to trigger";
    } catch (const std::runtime_error& e) {
        EXPECT_NE(std::string(e.what()).find("3 rejections"), std::string::npos);
    }
}

TEST(Groups, MutuallyExclusive) {
    for (double avg : {0.0, 10.0, 29.999, 30.0, 30.001, 45.0}) {
        SlopeStats s;
        s.average_slope_deg = avg;
        s.max_slope_deg = 60.0;
        EXPECT_FALSE(satisfies_group(s, TerrainGroup::A) && satisfies_group(s, TerrainGroup::B));
    }
    SlopeStats steep;
    steep.average_slope_deg = 20.0;
    steep.max_slope_deg = 70.5;
    EXPECT_FALSE(satisfies_group(steep, TerrainGroup::A));
}

TEST(Serialization, RoundTripIsExact) {
    const SampledTerrain t = sample_terrain(TerrainGroup::A, 99);
    const TerrainFile back = terrain_from_json(nlohmann::json::parse(terrain_to_json(t.params, t.stats).dump()));
    EXPECT_EQ(back.params, t.params);
    EXPECT_EQ(back.avg_slope_deg, t.stats.average_slope_deg);
    EXPECT_EQ(back.max_slope_deg, t.stats.max_slope_deg);
    EXPECT_EQ(back.generator_version, kGeneratorVersion);
}

TEST(Serialization, RejectsWrongWeightsAndMissingKeys) {
    nlohmann::json j = terrain_to_json(TerrainParams{}, SlopeStats{});
    j["weights"] = {1.0, 0.5, 0.2};
    EXPECT_THROW(terrain_from_json(j), std::invalid_argument);
    nlohmann::json k = terrain_to_json(TerrainParams{}, SlopeStats{});
    k.erase("dzs");
    EXPECT_THROW(terrain_from_json(k), std::invalid_argument);
}

TEST(Dataset, CountsFilesAndReproducibility) {
    const auto d1 = temp_dir("ds1"), d2 = temp_dir("ds2");
    const auto m1 = generate_dataset(2, 5, d1);
    const auto m2 = generate_dataset(2, 5, d2);
    const DatasetManifest man = load_manifest(m1);
    ASSERT_EQ(man.terrains.size(), 4u);
    int a = 0, b = 0;
    for (const auto& e : man.terrains) {
        (e.params.group == TerrainGroup::A ? a : b)++;
        EXPECT_EQ(read_text_file(d1 / e.file), read_text_file(d2 / e.file));
        // Stored stats equal a fresh evaluation.
        const SlopeStats s = slope_stats(e.params, kNavigationRegion, kSlopeResolution);
        EXPECT_EQ(s.average_slope_deg, e.stats.average_slope_deg);
        EXPECT_EQ(s.max_slope_deg, e.stats.max_slope_deg);
        EXPECT_EQ(load_terrain(d1 / e.file).params, e.params);
    }
    EXPECT_EQ(a, 2);
    EXPECT_EQ(b, 2);
    EXPECT_EQ(read_text_file(m1), read_text_file(m2));
}

TEST(Dataset, RejectsZeroCount) {
    EXPECT_THROW(generate_dataset(0, 1, temp_dir("ds0")), std::invalid_argument);
}
