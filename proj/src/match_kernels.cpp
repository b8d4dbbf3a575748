// Candidate scoring for the exhaustive search. The serial path goes through
// RangeView one candidate at a time and is kept as the reference; the
// parallel path walks raw rows and spreads candidates over OpenMP threads.
// Both sum in the same order, so their results are bit-identical.

#include <algorithm>
#include <cstdint>

#include "cevo/concealment.hpp"

namespace cevo::concealment {

RangeComparison score_offset(const ReconstructionState& state, BlockPos block, Offset offset, const EcConfig& cfg) {
    const int width = state.image.width();
    const int height = state.image.height();
    const int border = cfg.range_border();
    const int size = cfg.range_size;
    const int tx0 = block.x - border;
    const int ty0 = block.y - border;
    const int cx0 = tx0 + offset.dx;
    const int cy0 = ty0 + offset.dy;

    // Local indices where both windows are inside the image.
    const int i_begin = std::max({0, -tx0, -cx0});
    const int i_end = std::min({size, width - tx0, width - cx0});
    const int j_begin = std::max({0, -ty0, -cy0});
    const int j_end = std::min({size, height - ty0, height - cy0});

    const std::uint8_t* pixels = state.image.pixels().data();
    const double* merits = state.merits.values().data();

    RangeComparison out;
    long long squared = 0;
    for (int j = j_begin; j < j_end; ++j) {
        const std::size_t trow = static_cast<std::size_t>(ty0 + j) * static_cast<std::size_t>(width);
        const std::size_t crow = static_cast<std::size_t>(cy0 + j) * static_cast<std::size_t>(width);
        for (int i = i_begin; i < i_end; ++i) {
            const std::size_t t = trow + static_cast<std::size_t>(tx0 + i);
            const std::size_t c = crow + static_cast<std::size_t>(cx0 + i);
            const double mt = merits[t];
            const double mc = merits[c];
            out.mutual_merit += mt * mc;
            if (mt > 0.0 && mc > 0.0) {
                const int d = int{pixels[t]} - int{pixels[c]};
                squared += d * d;
                ++out.common;
            }
        }
    }
    if (out.common > 0) out.e = static_cast<double>(squared) / out.common;

    const int b = cfg.block_size;
    const int sx0 = block.x + offset.dx;
    const int sy0 = block.y + offset.dy;
    const int u_begin = std::max(0, -sx0);
    const int u_end = std::min(b, width - sx0);
    const int v_begin = std::max(0, -sy0);
    const int v_end = std::min(b, height - sy0);
    for (int v = v_begin; v < v_end; ++v) {
        const std::size_t trow = static_cast<std::size_t>(block.y + v) * static_cast<std::size_t>(width);
        const std::size_t srow = static_cast<std::size_t>(sy0 + v) * static_cast<std::size_t>(width);
        for (int u = u_begin; u < u_end; ++u) {
            if (merits[trow + static_cast<std::size_t>(block.x + u)] == 0.0 &&
                merits[srow + static_cast<std::size_t>(sx0 + u)] > 0.0) {
                ++out.supply;
            }
        }
    }
    return out;
}

std::vector<RangeComparison> score_candidates(const ReconstructionState& state, BlockPos block,
                                              std::span<const Offset> offsets, const EcConfig& cfg, Backend backend) {
    std::vector<RangeComparison> out(offsets.size());
    const auto n = static_cast<std::ptrdiff_t>(offsets.size());
    if (backend == Backend::serial) {
        const auto target = target_range(state, block, cfg);
        for (std::ptrdiff_t k = 0; k < n; ++k) {
            const auto offset = offsets[static_cast<std::size_t>(k)];
            auto& r = out[static_cast<std::size_t>(k)];
            r = compare_ranges(target, candidate_range(state, block, offset, cfg));
            r.supply = count_supply(state, block, offset, cfg.block_size);
        }
        return out;
    }
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t k = 0; k < n; ++k) {
        out[static_cast<std::size_t>(k)] = score_offset(state, block, offsets[static_cast<std::size_t>(k)], cfg);
    }
    return out;
}

}  // namespace cevo::concealment
