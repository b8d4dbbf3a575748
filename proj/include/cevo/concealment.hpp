#pragma once

// Sequential best range matching (SBRM) block-loss concealment.
//
// Lost B x B blocks are revisited in raster order, one trial per block per
// pass. A trial compares the R x R range around the lost block with the range
// around every B x B block within the A x A search area, using only pixels
// whose merit is positive on both sides, and copies lost pixels from the
// chosen block. Recovered pixels get a merit that decays with the pass number.
//
// The baseline picks the candidate of least appraised MSE over the whole
// search area. The compromising-evolution variant instead evolves the block
// offset with two genders: one maximises -e, the other the mutual merit.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "cevo/imaging.hpp"
#include "cevo/moga.hpp"

namespace cevo::concealment {

using imaging::GrayImage;
using imaging::LossMask;
using imaging::MeritMap;

struct EcConfig {
    int block_size = 8;     // B
    int range_size = 10;    // R
    int search_size = 24;   // A
    double merit_decay = 0.7;
    double merit_floor = 0.05;
    int max_iters = 10;

    void validate() const;

    /// Largest |dx| or |dy| of a candidate offset, (A - B) / 2.
    int search_radius() const noexcept { return (search_size - block_size) / 2; }
    /// Width of the range ring around a block, (R - B) / 2.
    int range_border() const noexcept { return (range_size - block_size) / 2; }
    /// Merit given to pixels recovered in pass `pass` (1-based).
    double recovered_merit(int pass) const;
};

/// Defaults of the evolutionary variant: P=16, N=2, M=2, G=4.
moga::MogaConfig default_ce_config();

struct Offset {
    int dx = 0;
    int dy = 0;

    bool operator==(const Offset&) const = default;
    /// Raster order: dy first, then dx.
    auto operator<=>(const Offset& o) const {
        if (auto c = dy <=> o.dy; c != 0) return c;
        return dx <=> o.dx;
    }
};

/// Top-left pixel of a block on the B-grid.
struct BlockPos {
    int x = 0;
    int y = 0;

    bool operator==(const BlockPos&) const = default;
};

struct ReconstructionState;

/// Square window onto an image and its merits. Positions outside the image
/// are absent.
class RangeView {
public:
    RangeView(const GrayImage& image, const MeritMap& merits, int x0, int y0, int size)
        : image_(&image), merits_(&merits), x0_(x0), y0_(y0), size_(size) {}

    int size() const noexcept { return size_; }
    int origin_x() const noexcept { return x0_; }
    int origin_y() const noexcept { return y0_; }

    bool present(int i, int j) const noexcept {
        const int x = x0_ + i;
        const int y = y0_ + j;
        return x >= 0 && y >= 0 && x < image_->width() && y < image_->height();
    }
    std::uint8_t pixel(int i, int j) const { return image_->at(x0_ + i, y0_ + j); }
    double merit(int i, int j) const { return merits_->at(x0_ + i, y0_ + j); }

private:
    const GrayImage* image_;
    const MeritMap* merits_;
    int x0_;
    int y0_;
    int size_;
};

/// Everything one range comparison yields.
struct RangeComparison {
    std::optional<double> e;   // empty when no position is available on both sides
    double mutual_merit = 0.0;
    int common = 0;            // positions where both merits are positive
    int supply = 0;            // lost block pixels whose shifted source is available

    /// Comparable and able to recover at least one pixel.
    bool usable() const noexcept { return e.has_value() && supply > 0; }

    bool operator==(const RangeComparison&) const = default;
};

/// Range statistics only; `supply` is left at 0.
RangeComparison compare_ranges(const RangeView& target, const RangeView& candidate);

/// Lost pixels of the block whose source pixel, shifted by `offset`, has
/// positive merit.
int count_supply(const ReconstructionState& state, BlockPos block, Offset offset, int block_size);

/// Mean squared difference over positions available in both views.
std::optional<double> common_mse(const RangeView& target, const RangeView& candidate);

/// Inner product of the two merit vectors over positions present in both.
double mutual_merit(const RangeView& target, const RangeView& candidate);

/// mutual_merit divided by the number of commonly available positions.
std::optional<double> weighting_factor(const RangeView& target, const RangeView& candidate);

/// w e + (1 - w) e_max.
double appraised_mse(double e, double w, double e_max);

struct Candidate {
    Offset offset;
    double e = 0.0;
    double mutual_merit = 0.0;
    std::optional<double> w;            // baseline only
    std::optional<double> e_appraised;  // baseline only
};

/// Least e_appraised; ties go to the raster-first offset. Empty input yields
/// no match.
std::optional<Candidate> select_best_match(std::span<const Candidate> candidates);

struct ReconstructionState {
    GrayImage image;
    MeritMap merits;
    int block_size = 0;
    int iteration = 0;                 // pass number, 1-based once running
    std::vector<BlockPos> unresolved;  // raster order
};

/// Merits from the mask (1 intact, 0 lost) and the initial unresolved list.
ReconstructionState make_state(const GrayImage& image, const LossMask& mask, const EcConfig& cfg);

/// Recompute the list of blocks that still hold a merit-0 pixel.
void refresh_unresolved(ReconstructionState& state);

/// Offsets in the centred search window whose block lies inside the image,
/// excluding (0, 0), in raster order.
std::vector<Offset> enumerate_candidates(const ReconstructionState& state, BlockPos block, const EcConfig& cfg);

RangeView target_range(const ReconstructionState& state, BlockPos block, const EcConfig& cfg);
RangeView candidate_range(const ReconstructionState& state, BlockPos block, Offset offset, const EcConfig& cfg);

/// Copies every lost target pixel whose shifted source pixel is available,
/// reading sources as they were before the call. Returns the number of
/// pixels recovered.
std::size_t apply_match(ReconstructionState& state, BlockPos block, Offset offset, const EcConfig& cfg);

enum class Backend {
    serial,    // RangeView reference path, one candidate at a time
    parallel,  // flattened kernel, candidates scored under OpenMP
};

/// Compare the block's range with each candidate's range and count what each
/// candidate could supply.
std::vector<RangeComparison> score_candidates(const ReconstructionState& state, BlockPos block,
                                              std::span<const Offset> offsets, const EcConfig& cfg, Backend backend);

/// Single-candidate form of the flattened kernel.
RangeComparison score_offset(const ReconstructionState& state, BlockPos block, Offset offset, const EcConfig& cfg);

struct ConcealStats {
    std::uint64_t candidate_evaluations = 0;
    int passes = 0;
    std::size_t blocks_lost = 0;
    std::size_t blocks_recovered_fully = 0;
    std::size_t blocks_recovered_partially = 0;
    std::size_t unrecovered_pixels = 0;
};

/// One baseline trial: scores the whole search window and returns the
/// appraised-MSE winner among usable candidates (or nothing when none is).
std::optional<Candidate> choose_sbrm(const ReconstructionState& state, BlockPos block, const EcConfig& cfg,
                                     ConcealStats& stats, Backend backend = Backend::parallel);

/// One evolutionary trial; `seed` drives the engine for this block only.
std::optional<Candidate> choose_ce(const ReconstructionState& state, BlockPos block, const EcConfig& cfg,
                                   const moga::MogaConfig& engine, std::uint64_t seed, ConcealStats& stats);

/// Engine seed for (run seed, pass, block index).
std::uint64_t block_seed(std::uint64_t run_seed, int pass, std::size_t block_index);

/// Visits the unresolved blocks once. Returns the number of pixels recovered.
std::size_t run_sbrm_pass(ReconstructionState& state, const EcConfig& cfg, ConcealStats& stats,
                          Backend backend = Backend::parallel);
std::size_t run_ce_pass(ReconstructionState& state, const EcConfig& cfg, const moga::MogaConfig& engine,
                        ConcealStats& stats);

std::pair<GrayImage, ConcealStats> conceal_sbrm(const GrayImage& image, const LossMask& mask, const EcConfig& cfg,
                                                Backend backend = Backend::parallel);

/// engine.genders must be 2; engine.seed is the run seed.
std::pair<GrayImage, ConcealStats> conceal_ce(const GrayImage& image, const LossMask& mask, const EcConfig& cfg,
                                              const moga::MogaConfig& engine);

}  // namespace cevo::concealment
