#include "cevo/concealment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "cevo/errors.hpp"

namespace cevo::concealment {

void EcConfig::validate() const {
    if (block_size < 1) throw ConfigError("block size must be positive");
    if (range_size <= block_size) throw ConfigError("range size must exceed the block size");
    if (search_size < range_size) throw ConfigError("search area must be at least the range size");
    if ((range_size - block_size) % 2 != 0) throw ConfigError("range size minus block size must be even");
    if ((search_size - block_size) % 2 != 0) throw ConfigError("search size minus block size must be even");
    if (!(merit_decay > 0.0 && merit_decay < 1.0)) throw ConfigError("merit decay must lie in (0, 1)");
    if (!(merit_floor >= 0.0 && merit_floor <= 1.0)) throw ConfigError("merit floor must lie in [0, 1]");
    if (max_iters < 1) throw ConfigError("max iterations must be positive");
}

double EcConfig::recovered_merit(int pass) const {
    return std::max(std::pow(merit_decay, std::max(pass, 1)), merit_floor);
}

moga::MogaConfig default_ce_config() {
    moga::MogaConfig cfg;
    cfg.population = 16;
    cfg.genders = 2;
    cfg.groups_per_family = 2;
    cfg.generations = 4;
    return cfg;
}

RangeComparison compare_ranges(const RangeView& target, const RangeView& candidate) {
    RangeComparison out;
    const int n = std::min(target.size(), candidate.size());
    long long squared = 0;
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            if (!target.present(i, j) || !candidate.present(i, j)) continue;
            const double mt = target.merit(i, j);
            const double mc = candidate.merit(i, j);
            out.mutual_merit += mt * mc;
            if (mt > 0.0 && mc > 0.0) {
                const int d = int{target.pixel(i, j)} - int{candidate.pixel(i, j)};
                squared += d * d;
                ++out.common;
            }
        }
    }
    if (out.common > 0) out.e = static_cast<double>(squared) / out.common;
    return out;
}

std::optional<double> common_mse(const RangeView& target, const RangeView& candidate) {
    return compare_ranges(target, candidate).e;
}

double mutual_merit(const RangeView& target, const RangeView& candidate) {
    return compare_ranges(target, candidate).mutual_merit;
}

std::optional<double> weighting_factor(const RangeView& target, const RangeView& candidate) {
    const auto c = compare_ranges(target, candidate);
    if (c.common == 0) return std::nullopt;
    return c.mutual_merit / c.common;
}

int count_supply(const ReconstructionState& state, BlockPos block, Offset offset, int block_size) {
    int supply = 0;
    for (int y = block.y; y < block.y + block_size; ++y) {
        for (int x = block.x; x < block.x + block_size; ++x) {
            const int sx = x + offset.dx;
            const int sy = y + offset.dy;
            if (sx < 0 || sy < 0 || sx >= state.image.width() || sy >= state.image.height()) continue;
            if (state.merits.at(x, y) == 0.0 && state.merits.at(sx, sy) > 0.0) ++supply;
        }
    }
    return supply;
}

double appraised_mse(double e, double w, double e_max) { return w * e + (1.0 - w) * e_max; }

std::optional<Candidate> select_best_match(std::span<const Candidate> candidates) {
    const Candidate* best = nullptr;
    for (const auto& c : candidates) {
        if (!c.e_appraised) throw InvariantError("select_best_match: candidate lacks an appraised MSE");
        if (best == nullptr || *c.e_appraised < *best->e_appraised ||
            (*c.e_appraised == *best->e_appraised && c.offset < best->offset)) {
            best = &c;
        }
    }
    if (best == nullptr) return std::nullopt;
    return *best;
}

ReconstructionState make_state(const GrayImage& image, const LossMask& mask, const EcConfig& cfg) {
    cfg.validate();
    if (mask.block_size() != cfg.block_size) {
        throw ConfigError("mask block size " + std::to_string(mask.block_size()) + " differs from configured block size " +
                          std::to_string(cfg.block_size));
    }
    if (!mask.matches(image)) throw ConfigError("loss mask grid does not tile the image");
    ReconstructionState state{image, MeritMap::from_mask(mask), cfg.block_size, 0, {}};
    refresh_unresolved(state);
    return state;
}

void refresh_unresolved(ReconstructionState& state) {
    const int b = state.block_size;
    state.unresolved.clear();
    for (int by = 0; by < state.image.height(); by += b) {
        for (int bx = 0; bx < state.image.width(); bx += b) {
            bool open = false;
            for (int y = by; y < by + b && !open; ++y) {
                for (int x = bx; x < bx + b; ++x) {
                    if (state.merits.at(x, y) == 0.0) {
                        open = true;
                        break;
                    }
                }
            }
            if (open) state.unresolved.push_back({bx, by});
        }
    }
}

std::vector<Offset> enumerate_candidates(const ReconstructionState& state, BlockPos block, const EcConfig& cfg) {
    const int r = cfg.search_radius();
    const int b = cfg.block_size;
    const int min_dx = std::max(-r, -block.x);
    const int max_dx = std::min(r, state.image.width() - b - block.x);
    const int min_dy = std::max(-r, -block.y);
    const int max_dy = std::min(r, state.image.height() - b - block.y);
    std::vector<Offset> out;
    for (int dy = min_dy; dy <= max_dy; ++dy) {
        for (int dx = min_dx; dx <= max_dx; ++dx) {
            if (dx == 0 && dy == 0) continue;
            out.push_back({dx, dy});
        }
    }
    return out;
}

RangeView target_range(const ReconstructionState& state, BlockPos block, const EcConfig& cfg) {
    const int border = cfg.range_border();
    return RangeView(state.image, state.merits, block.x - border, block.y - border, cfg.range_size);
}

RangeView candidate_range(const ReconstructionState& state, BlockPos block, Offset offset, const EcConfig& cfg) {
    const int border = cfg.range_border();
    return RangeView(state.image, state.merits, block.x + offset.dx - border, block.y + offset.dy - border,
                     cfg.range_size);
}

std::size_t apply_match(ReconstructionState& state, BlockPos block, Offset offset, const EcConfig& cfg) {
    struct Copy {
        int x, y;
        std::uint8_t value;
    };
    const int b = cfg.block_size;
    std::vector<Copy> copies;
    copies.reserve(static_cast<std::size_t>(b) * static_cast<std::size_t>(b));
    for (int y = block.y; y < block.y + b; ++y) {
        for (int x = block.x; x < block.x + b; ++x) {
            if (state.merits.at(x, y) != 0.0) continue;
            const int sx = x + offset.dx;
            const int sy = y + offset.dy;
            if (sx < 0 || sy < 0 || sx >= state.image.width() || sy >= state.image.height()) continue;
            if (state.merits.at(sx, sy) > 0.0) copies.push_back({x, y, state.image.at(sx, sy)});
        }
    }
    const double merit = cfg.recovered_merit(state.iteration);
    for (const auto& c : copies) {
        state.image.at(c.x, c.y) = c.value;
        state.merits.at(c.x, c.y) = merit;
    }
    return copies.size();
}

std::optional<Candidate> choose_sbrm(const ReconstructionState& state, BlockPos block, const EcConfig& cfg,
                                     ConcealStats& stats, Backend backend) {
    const auto offsets = enumerate_candidates(state, block, cfg);
    const auto scores = score_candidates(state, block, offsets, cfg, backend);
    stats.candidate_evaluations += offsets.size();

    std::vector<Candidate> feasible;
    feasible.reserve(offsets.size());
    double e_max = 0.0;
    for (std::size_t k = 0; k < offsets.size(); ++k) {
        const auto& s = scores[k];
        if (!s.usable()) continue;
        e_max = std::max(e_max, *s.e);
        feasible.push_back({offsets[k], *s.e, s.mutual_merit, s.mutual_merit / s.common, std::nullopt});
    }
    for (auto& c : feasible) c.e_appraised = appraised_mse(c.e, *c.w, e_max);
    return select_best_match(feasible);
}

std::uint64_t block_seed(std::uint64_t run_seed, int pass, std::size_t block_index) {
    auto splitmix = [](std::uint64_t z) {
        z += 0x9E3779B97F4A7C15ull;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    };
    std::uint64_t h = splitmix(run_seed);
    h = splitmix(h ^ static_cast<std::uint64_t>(pass));
    return splitmix(h ^ static_cast<std::uint64_t>(block_index));
}

std::optional<Candidate> choose_ce(const ReconstructionState& state, BlockPos block, const EcConfig& cfg,
                                   const moga::MogaConfig& engine, std::uint64_t seed, ConcealStats& stats) {
    if (engine.genders != 2) throw ConfigError("the evolutionary concealment needs exactly two genders");
    const int r = cfg.search_radius();
    const int b = cfg.block_size;
    std::vector<int> lower{std::max(-r, -block.x), std::max(-r, -block.y)};
    std::vector<int> upper{std::min(r, state.image.width() - b - block.x),
                           std::min(r, state.image.height() - b - block.y)};
    if (lower[0] == upper[0] && lower[1] == upper[1]) return std::nullopt;  // only the block itself

    moga::GenomeDomain domain(std::move(lower), std::move(upper), {moga::Genome{{0, 0}}});

    std::map<Offset, RangeComparison> seen;
    auto score = [&](const moga::Genome& g) -> const RangeComparison& {
        const Offset off{g.coords[0], g.coords[1]};
        ++stats.candidate_evaluations;
        return seen.insert_or_assign(off, score_offset(state, block, off, cfg)).first->second;
    };
    moga::ObjectiveSuite objectives{
        [&](const moga::Genome& g) {
            const auto& s = score(g);
            return s.usable() ? -*s.e : -std::numeric_limits<double>::infinity();
        },
        [&](const moga::Genome& g) { return score(g).mutual_merit; },
    };

    auto run = engine;
    run.seed = seed;
    const auto result = moga::evolve(run, domain, objectives);
    const Offset chosen{result.solution.coords[0], result.solution.coords[1]};
    const auto it = seen.find(chosen);
    if (it == seen.end() || !it->second.usable()) return std::nullopt;
    return Candidate{chosen, *it->second.e, it->second.mutual_merit, std::nullopt, std::nullopt};
}

namespace {

std::size_t block_index(const ReconstructionState& state, BlockPos block) {
    const auto b = state.block_size;
    return static_cast<std::size_t>(block.y / b) * static_cast<std::size_t>(state.image.width() / b) +
           static_cast<std::size_t>(block.x / b);
}

void finish_stats(const ReconstructionState& state, const LossMask& mask, ConcealStats& stats) {
    const int b = state.block_size;
    stats.blocks_lost = mask.lost_count();
    stats.blocks_recovered_fully = 0;
    stats.blocks_recovered_partially = 0;
    for (int by = 0; by < mask.grid_height(); ++by) {
        for (int bx = 0; bx < mask.grid_width(); ++bx) {
            if (!mask.lost(bx, by)) continue;
            int zeros = 0;
            for (int y = by * b; y < (by + 1) * b; ++y) {
                for (int x = bx * b; x < (bx + 1) * b; ++x) zeros += state.merits.at(x, y) == 0.0 ? 1 : 0;
            }
            if (zeros == 0) {
                ++stats.blocks_recovered_fully;
            } else if (zeros < b * b) {
                ++stats.blocks_recovered_partially;
            }
        }
    }
    stats.unrecovered_pixels = state.merits.zero_count();
}

}  // namespace

std::size_t run_sbrm_pass(ReconstructionState& state, const EcConfig& cfg, ConcealStats& stats, Backend backend) {
    std::size_t recovered = 0;
    const auto blocks = state.unresolved;
    for (const auto& block : blocks) {
        if (auto best = choose_sbrm(state, block, cfg, stats, backend)) {
            recovered += apply_match(state, block, best->offset, cfg);
        }
    }
    return recovered;
}

std::size_t run_ce_pass(ReconstructionState& state, const EcConfig& cfg, const moga::MogaConfig& engine,
                        ConcealStats& stats) {
    std::size_t recovered = 0;
    const auto blocks = state.unresolved;
    for (const auto& block : blocks) {
        const auto seed = block_seed(engine.seed, state.iteration, block_index(state, block));
        if (auto best = choose_ce(state, block, cfg, engine, seed, stats)) {
            recovered += apply_match(state, block, best->offset, cfg);
        }
    }
    return recovered;
}

std::pair<GrayImage, ConcealStats> conceal_sbrm(const GrayImage& image, const LossMask& mask, const EcConfig& cfg,
                                                Backend backend) {
    auto state = make_state(image, mask, cfg);
    ConcealStats stats;
    while (state.iteration < cfg.max_iters && !state.unresolved.empty()) {
        ++state.iteration;
        ++stats.passes;
        const auto recovered = run_sbrm_pass(state, cfg, stats, backend);
        refresh_unresolved(state);
        // The baseline is deterministic: a pass without progress repeats forever.
        if (recovered == 0) break;
    }
    finish_stats(state, mask, stats);
    return {std::move(state.image), stats};
}

std::pair<GrayImage, ConcealStats> conceal_ce(const GrayImage& image, const LossMask& mask, const EcConfig& cfg,
                                              const moga::MogaConfig& engine) {
    engine.validate();
    if (engine.genders != 2) throw ConfigError("the evolutionary concealment needs exactly two genders");
    auto state = make_state(image, mask, cfg);
    ConcealStats stats;
    while (state.iteration < cfg.max_iters && !state.unresolved.empty()) {
        ++state.iteration;
        ++stats.passes;
        run_ce_pass(state, cfg, engine, stats);
        refresh_unresolved(state);
    }
    finish_stats(state, mask, stats);
    return {std::move(state.image), stats};
}

}  // namespace cevo::concealment
