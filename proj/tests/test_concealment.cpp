#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "cevo/concealment.hpp"
#include "cevo/errors.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace cevo;
using namespace cevo::concealment;

namespace {

GrayImage random_image(std::mt19937_64& rng, int w, int h) {
    std::vector<std::uint8_t> px(static_cast<std::size_t>(w * h));
    for (auto& p : px) p = static_cast<std::uint8_t>(rng() & 0xFF);
    return GrayImage(w, h, std::move(px));
}

/// Texture with period 8 in both directions and distinct values within a period.
GrayImage periodic_image(int w, int h) {
    GrayImage img(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) img.at(x, y) = static_cast<std::uint8_t>((x % 8) * 16 + (y % 8) * 2);
    }
    return img;
}

LossMask random_mask(std::mt19937_64& rng, int gw, int gh, int b, double p) {
    std::bernoulli_distribution lose(p);
    LossMask mask(gw, gh, b);
    for (int y = 0; y < gh; ++y) {
        for (int x = 0; x < gw; ++x) mask.set_lost(x, y, lose(rng));
    }
    return mask;
}

GrayImage blank_lost(GrayImage img, const LossMask& mask) {
    const int b = mask.block_size();
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            if (mask.lost(x / b, y / b)) img.at(x, y) = 0;
        }
    }
    return img;
}

moga::MogaConfig engine_with_seed(std::uint64_t seed) {
    auto e = default_ce_config();
    e.seed = seed;
    return e;
}

}  // namespace

TEST_SUITE("concealment") {

TEST_CASE("configuration") {
    EcConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    CHECK(cfg.search_radius() == 8);
    CHECK(cfg.range_border() == 1);
    CHECK(cfg.recovered_merit(1) == doctest::Approx(0.7));
    CHECK(cfg.recovered_merit(2) == doctest::Approx(0.49));
    CHECK(cfg.recovered_merit(9) == doctest::Approx(0.05));

    auto bad = cfg;
    bad.range_size = 8;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.search_size = 23;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.merit_decay = 1.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.max_iters = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    const auto e = default_ce_config();
    CHECK(e.population == 16);
    CHECK(e.genders == 2);
    CHECK(e.groups_per_family == 2);
    CHECK(e.generations == 4);
}

TEST_CASE("make_state checks the mask against the image") {
    const GrayImage img(32, 32, std::uint8_t{5});
    EcConfig cfg;
    CHECK_THROWS_AS(make_state(img, LossMask(4, 4, 4), cfg), ConfigError);
    CHECK_THROWS_AS(make_state(img, LossMask(3, 4, 8), cfg), ConfigError);
    LossMask mask(4, 4, 8);
    mask.set_lost(2, 1, true);
    const auto s = make_state(img, mask, cfg);
    CHECK(s.unresolved == std::vector<BlockPos>{{16, 8}});
    CHECK(s.merits.zero_count() == 64);
    CHECK(s.iteration == 0);
}

TEST_CASE("candidate enumeration") {
    const GrayImage img(64, 64);
    LossMask mask(8, 8, 8);
    EcConfig cfg;
    const auto s = make_state(img, mask, cfg);

    const auto interior = enumerate_candidates(s, {24, 24}, cfg);
    CHECK(interior.size() == 288);
    CHECK(std::is_sorted(interior.begin(), interior.end()));
    CHECK(std::find(interior.begin(), interior.end(), Offset{0, 0}) == interior.end());
    CHECK(interior.front() == Offset{-8, -8});

    CHECK(enumerate_candidates(s, {0, 0}, cfg).size() == 80);

    auto tight = cfg;
    tight.block_size = 8;
    tight.range_size = 10;
    tight.search_size = 8;
    CHECK(enumerate_candidates(s, {24, 24}, tight).empty());
}

TEST_CASE("common_mse, mutual_merit and weighting_factor") {
    GrayImage t(2, 2, std::uint8_t{0});
    GrayImage c(2, 2, std::uint8_t{0});
    c.at(0, 0) = 5;
    MeritMap tm(2, 2, 1.0);
    MeritMap cm(2, 2, 1.0);
    tm.at(0, 1) = 0.0;
    tm.at(1, 1) = 0.0;
    const RangeView tv(t, tm, 0, 0, 2);
    const RangeView cv(c, cm, 0, 0, 2);
    CHECK(*common_mse(tv, cv) == doctest::Approx(12.5));
    CHECK(mutual_merit(tv, cv) == doctest::Approx(2.0));
    CHECK(*weighting_factor(tv, cv) == doctest::Approx(1.0));

    MeritMap none(2, 2, 0.0);
    const RangeView dead(c, none, 0, 0, 2);
    CHECK_FALSE(common_mse(tv, dead).has_value());
    CHECK_FALSE(weighting_factor(tv, dead).has_value());
    CHECK(mutual_merit(tv, dead) == 0.0);

    // Views hanging over the image edge only count positions present in both.
    const RangeView shifted(c, cm, -1, 0, 2);
    CHECK(*common_mse(tv, shifted) == doctest::Approx(25.0));
}

TEST_CASE("mutual merit of full, halved and empty ranges") {
    const GrayImage img(10, 10, std::uint8_t{1});
    const MeritMap ones(10, 10, 1.0);
    const MeritMap halves(10, 10, 0.5);
    const MeritMap zeros(10, 10, 0.0);
    const RangeView a(img, ones, 0, 0, 10);
    const RangeView h(img, halves, 0, 0, 10);
    const RangeView z(img, zeros, 0, 0, 10);
    CHECK(mutual_merit(a, a) == doctest::Approx(100.0));
    CHECK(mutual_merit(h, h) == doctest::Approx(25.0));
    CHECK(mutual_merit(a, z) == 0.0);
    CHECK(*weighting_factor(a, h) == doctest::Approx(0.5));
}

TEST_CASE("appraised_mse") {
    CHECK(appraised_mse(10, 1.0, 50) == doctest::Approx(10));
    CHECK(appraised_mse(10, 0.0, 50) == doctest::Approx(50));
    CHECK(appraised_mse(10, 0.5, 50) == doctest::Approx(30));
}

TEST_CASE("weighting factor stays in [0, 1] and appraisal in [e, e_max]") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 10000; ++t) {
        const int n = 1 + static_cast<int>(rng() % 4);
        GrayImage ia(n, n), ib(n, n);
        MeritMap ma(n, n, 0.0), mb(n, n, 0.0);
        for (int y = 0; y < n; ++y) {
            for (int x = 0; x < n; ++x) {
                ia.at(x, y) = static_cast<std::uint8_t>(rng() & 0xFF);
                ib.at(x, y) = static_cast<std::uint8_t>(rng() & 0xFF);
                ma.at(x, y) = rng() % 3 == 0 ? 0.0 : u(rng);
                mb.at(x, y) = rng() % 3 == 0 ? 0.0 : u(rng);
            }
        }
        const RangeView a(ia, ma, 0, 0, n), b(ib, mb, 0, 0, n);
        const auto w = weighting_factor(a, b);
        const auto e = common_mse(a, b);
        CHECK(w.has_value() == e.has_value());
        if (!w) continue;
        CHECK(*w >= 0.0);
        CHECK(*w <= 1.0);
        const double e_max = *e + 100.0 * u(rng);
        const double ea = appraised_mse(*e, *w, e_max);
        CHECK(ea >= *e - 1e-9);
        CHECK(ea <= e_max + 1e-9);
    }
}

TEST_CASE("select_best_match") {
    std::vector<Candidate> cs{
        {{1, 0}, 12, 0, 1.0, 12.0},
        {{2, 0}, 4.5, 0, 1.0, 4.5},
        {{3, 0}, 9.1, 0, 1.0, 9.1},
    };
    CHECK(select_best_match(cs)->offset == Offset{2, 0});
    CHECK(select_best_match(std::span(cs).first(1))->offset == Offset{1, 0});
    CHECK_FALSE(select_best_match(std::vector<Candidate>{}).has_value());

    std::vector<Candidate> tie{{{0, 1}, 3, 0, 1.0, 3.0}, {{1, 0}, 3, 0, 1.0, 3.0}};
    CHECK(select_best_match(tie)->offset == Offset{1, 0});
    std::reverse(tie.begin(), tie.end());
    CHECK(select_best_match(tie)->offset == Offset{1, 0});

    std::vector<Candidate> missing{{{1, 0}, 3, 0, std::nullopt, std::nullopt}};
    CHECK_THROWS_AS(select_best_match(missing), InvariantError);
}

TEST_CASE("apply_match copies available pixels only") {
    GrayImage img(16, 8, std::uint8_t{0});
    for (int y = 0; y < 8; ++y) {
        for (int x = 8; x < 16; ++x) img.at(x, y) = static_cast<std::uint8_t>(x + 10 * y);
    }
    LossMask mask(2, 1, 8);
    mask.set_lost(0, 0, true);
    EcConfig cfg;
    auto s = make_state(img, mask, cfg);
    s.iteration = 1;

    SUBCASE("full source") {
        CHECK(apply_match(s, {0, 0}, {8, 0}, cfg) == 64);
        for (int y = 0; y < 8; ++y) {
            for (int x = 0; x < 8; ++x) {
                CHECK(s.image.at(x, y) == img.at(x + 8, y));
                CHECK(s.merits.at(x, y) == doctest::Approx(0.7));
            }
        }
    }
    SUBCASE("source overlapping the lost block") {
        CHECK(apply_match(s, {0, 0}, {4, 0}, cfg) == 32);
        CHECK(s.merits.at(3, 0) == 0.0);
        CHECK(s.merits.at(4, 0) == doctest::Approx(0.7));
        CHECK(s.image.at(4, 0) == img.at(8, 0));
    }
    SUBCASE("intact pixels of the target are never touched") {
        s.merits.at(0, 0) = 0.3;
        s.image.at(0, 0) = 99;
        CHECK(apply_match(s, {0, 0}, {8, 0}, cfg) == 63);
        CHECK(s.image.at(0, 0) == 99);
        CHECK(s.merits.at(0, 0) == doctest::Approx(0.3));
    }
}

TEST_CASE("apply_match reads the pre-call snapshot") {
    // Row 0: lost pixels 0..7, intact 8..15. Offset (1,0) would cascade if
    // writes were visible to later reads; with a snapshot only pixel 7 fills.
    GrayImage img(16, 8, std::uint8_t{50});
    LossMask mask(2, 1, 8);
    mask.set_lost(0, 0, true);
    EcConfig cfg;
    auto s = make_state(img, mask, cfg);
    s.iteration = 1;
    CHECK(apply_match(s, {0, 0}, {1, 0}, cfg) == 8);
    CHECK(s.merits.at(7, 0) > 0.0);
    CHECK(s.merits.at(6, 0) == 0.0);
}

TEST_CASE("serial and parallel scoring agree") {
    std::mt19937_64 rng(21);
    EcConfig cfg;
    for (int t = 0; t < 10; ++t) {
        const auto img = random_image(rng, 64, 48);
        const auto mask = random_mask(rng, 8, 6, 8, 0.5);
        auto s = make_state(blank_lost(img, mask), mask, cfg);
        for (const auto& block : s.unresolved) {
            const auto offsets = enumerate_candidates(s, block, cfg);
            const auto a = score_candidates(s, block, offsets, cfg, Backend::serial);
            const auto b = score_candidates(s, block, offsets, cfg, Backend::parallel);
            CHECK(a == b);
            for (std::size_t k = 0; k < offsets.size(); ++k) CHECK(score_offset(s, block, offsets[k], cfg) == a[k]);
        }
        const auto [ia, sa] = conceal_sbrm(blank_lost(img, mask), mask, cfg, Backend::serial);
        const auto [ib, sb] = conceal_sbrm(blank_lost(img, mask), mask, cfg, Backend::parallel);
        CHECK(ia == ib);
        CHECK(sa.candidate_evaluations == sb.candidate_evaluations);
        CHECK(sa.passes == sb.passes);
    }
}

TEST_CASE("baseline choice matches the independent oracle") {
    std::mt19937_64 rng(31);
    EcConfig cfg;
    const double merit_levels[] = {0.0, 0.05, 0.49, 0.7, 1.0};
    int checked = 0;
    for (int t = 0; t < 120; ++t) {
        const auto img = random_image(rng, 40, 40);
        const auto mask = random_mask(rng, 5, 5, 8, 0.4);
        auto s = make_state(blank_lost(img, mask), mask, cfg);
        // Scramble merits so partially recovered blocks and weights below 1 occur.
        for (int y = 0; y < 40; ++y) {
            for (int x = 0; x < 40; ++x) {
                if (rng() % 4 == 0) s.merits.at(x, y) = merit_levels[rng() % 5];
            }
        }
        refresh_unresolved(s);
        const auto grid = oracle::grid_of(s);
        for (const auto& block : s.unresolved) {
            ConcealStats stats;
            const auto got = choose_sbrm(s, block, cfg, stats, Backend::serial);
            const auto want = oracle::sbrm_choice(grid, block.x, block.y, 8, 10, 24);
            REQUIRE(got.has_value() == want.has_value());
            if (got) {
                CHECK(got->offset.dx == want->first);
                CHECK(got->offset.dy == want->second);
            }
            CHECK(stats.candidate_evaluations == enumerate_candidates(s, block, cfg).size());
            ++checked;
        }
    }
    CHECK(checked >= 100);
}

TEST_CASE("nothing lost means nothing changes") {
    std::mt19937_64 rng(5);
    const auto img = random_image(rng, 32, 32);
    const LossMask mask(4, 4, 8);
    EcConfig cfg;
    const auto [a, sa] = conceal_sbrm(img, mask, cfg);
    CHECK(a == img);
    CHECK(sa.candidate_evaluations == 0);
    CHECK(sa.passes == 0);
    const auto [b, sb] = conceal_ce(img, mask, cfg, engine_with_seed(1));
    CHECK(b == img);
    CHECK(sb.candidate_evaluations == 0);
}

TEST_CASE("a constant image is recovered exactly") {
    const GrayImage img(64, 64, std::uint8_t{128});
    std::mt19937_64 rng(6);
    EcConfig cfg;
    cfg.max_iters = 50;
    const auto mask = random_mask(rng, 8, 8, 8, 0.5);
    const auto [a, sa] = conceal_sbrm(blank_lost(img, mask), mask, cfg);
    CHECK(a == img);
    CHECK(sa.unrecovered_pixels == 0);
    const auto [b, sb] = conceal_ce(blank_lost(img, mask), mask, cfg, engine_with_seed(3));
    CHECK(b == img);
    CHECK(sb.unrecovered_pixels == 0);
}

TEST_CASE("a periodic texture with one lost block is restored in one pass") {
    const auto img = periodic_image(64, 64);
    LossMask mask(8, 8, 8);
    mask.set_lost(3, 4, true);
    EcConfig cfg;
    const auto [out, stats] = conceal_sbrm(blank_lost(img, mask), mask, cfg);
    CHECK(out == img);
    CHECK(stats.passes == 1);
    CHECK(stats.blocks_recovered_fully == 1);
    CHECK(stats.candidate_evaluations == 288);
}

TEST_CASE("merits and intact pixels evolve monotonically across passes") {
    std::mt19937_64 rng(41);
    EcConfig cfg;
    for (int method = 0; method < 2; ++method) {
        for (int t = 0; t < 4; ++t) {
            const auto img = random_image(rng, 48, 48);
            const auto mask = random_mask(rng, 6, 6, 8, 0.6);
            auto s = make_state(blank_lost(img, mask), mask, cfg);
            ConcealStats stats;
            const auto engine = engine_with_seed(t);
            while (s.iteration < cfg.max_iters && !s.unresolved.empty()) {
                const auto before = s;
                ++s.iteration;
                if (method == 0) {
                    run_sbrm_pass(s, cfg, stats);
                } else {
                    run_ce_pass(s, cfg, engine, stats);
                }
                refresh_unresolved(s);
                CHECK(s.merits.zero_count() <= before.merits.zero_count());
                for (std::size_t i = 0; i < s.merits.values().size(); ++i) {
                    const double m0 = before.merits.values()[i];
                    const double m1 = s.merits.values()[i];
                    if (m0 > 0.0) {
                        CHECK(m1 == m0);
                        CHECK(s.image.pixels()[i] == before.image.pixels()[i]);
                    } else if (m1 > 0.0) {
                        CHECK(m1 == doctest::Approx(cfg.recovered_merit(s.iteration)));
                    }
                }
            }
        }
    }
}

TEST_CASE("evolutionary trial stays within its evaluation budget") {
    std::mt19937_64 rng(51);
    EcConfig cfg;
    const auto engine = default_ce_config();
    const std::uint64_t budget = static_cast<std::uint64_t>(engine.population) +
                                 static_cast<std::uint64_t>(engine.generations * engine.groups_per_family *
                                                            engine.population);
    CHECK(budget == 144);
    const auto img = random_image(rng, 64, 64);
    const auto mask = random_mask(rng, 8, 8, 8, 0.5);
    auto s = make_state(blank_lost(img, mask), mask, cfg);
    s.iteration = 1;
    for (const auto& block : s.unresolved) {
        ConcealStats stats;
        const auto c = choose_ce(s, block, cfg, engine, block_seed(0, 1, 0), stats);
        CHECK(stats.candidate_evaluations <= budget);
        if (c) {
            CHECK(c->offset != Offset{0, 0});
            CHECK(std::abs(c->offset.dx) <= 8);
            CHECK(std::abs(c->offset.dy) <= 8);
        }
    }
}

TEST_CASE("evolutionary concealment is deterministic per seed") {
    std::mt19937_64 rng(61);
    EcConfig cfg;
    const auto img = random_image(rng, 48, 48);
    const auto mask = random_mask(rng, 6, 6, 8, 0.5);
    const auto damaged = blank_lost(img, mask);
    const auto [a, sa] = conceal_ce(damaged, mask, cfg, engine_with_seed(9));
    const auto [b, sb] = conceal_ce(damaged, mask, cfg, engine_with_seed(9));
    CHECK(a == b);
    CHECK(sa.candidate_evaluations == sb.candidate_evaluations);
    CHECK(sa.passes == sb.passes);

    auto three = engine_with_seed(9);
    three.genders = 3;
    three.population = 6;
    CHECK_THROWS_AS(conceal_ce(damaged, mask, cfg, three), ConfigError);
}

TEST_CASE("block seeds differ by pass and block") {
    CHECK(block_seed(1, 1, 0) != block_seed(1, 2, 0));
    CHECK(block_seed(1, 1, 0) != block_seed(1, 1, 1));
    CHECK(block_seed(1, 1, 0) != block_seed(2, 1, 0));
    CHECK(block_seed(7, 3, 5) == block_seed(7, 3, 5));
}

}  // TEST_SUITE
