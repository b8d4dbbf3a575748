// Serial reference vs OpenMP kernels: candidate scoring, a full baseline
// concealment run, and a sweep whose cells run concurrently.
//
//   cevo_bench [image.pgm] [loss_ratio]

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>

#include "cevo/concealment.hpp"
#include "cevo/harness.hpp"
#include "cevo/imaging.hpp"

namespace {

using namespace cevo;
using Clock = std::chrono::steady_clock;

template <typename F>
double time_ms(F&& f, int repeats = 3) {
    double best = 1e300;
    for (int r = 0; r < repeats; ++r) {
        const auto t0 = Clock::now();
        f();
        best = std::min(best, std::chrono::duration<double, std::milli>(Clock::now() - t0).count());
    }
    return best;
}

}  // namespace

int main(int argc, char** argv) {
    const std::string path = argc > 1 ? argv[1] : CEVO_DEFAULT_IMAGE;
    const double loss = argc > 2 ? std::atof(argv[2]) : 0.5;
    const auto original = imaging::load_pgm(path);
    concealment::EcConfig cfg;
    const auto [corrupted, mask] = imaging::corrupt(original, loss, cfg.block_size, 7);
    const auto state = concealment::make_state(corrupted, mask, cfg);

    std::printf("image %dx%d, loss %.2f, %zu lost blocks, %d OpenMP threads\n", original.width(), original.height(),
                loss, state.unresolved.size(), omp_get_max_threads());

    auto score_all = [&](concealment::Backend backend) {
        std::size_t feasible = 0;
        for (const auto& block : state.unresolved) {
            const auto offsets = concealment::enumerate_candidates(state, block, cfg);
            for (const auto& s : concealment::score_candidates(state, block, offsets, cfg, backend)) feasible += s.e ? 1 : 0;
        }
        return feasible;
    };
    if (score_all(concealment::Backend::serial) != score_all(concealment::Backend::parallel)) {
        std::fprintf(stderr, "kernel mismatch\n");
        return 1;
    }
    const double s_serial = time_ms([&] { score_all(concealment::Backend::serial); });
    const double s_parallel = time_ms([&] { score_all(concealment::Backend::parallel); });
    std::printf("%-28s serial %9.2f ms   parallel %9.2f ms   speedup %.2fx\n", "score_candidates (1 pass)", s_serial,
                s_parallel, s_serial / s_parallel);

    const double c_serial =
        time_ms([&] { concealment::conceal_sbrm(corrupted, mask, cfg, concealment::Backend::serial); }, 1);
    const double c_parallel =
        time_ms([&] { concealment::conceal_sbrm(corrupted, mask, cfg, concealment::Backend::parallel); }, 1);
    std::printf("%-28s serial %9.2f ms   parallel %9.2f ms   speedup %.2fx\n", "conceal_sbrm", c_serial, c_parallel,
                c_serial / c_parallel);

    harness::RunOptions opts;
    const std::vector<double> ratios{0.3, 0.6};
    const std::vector<std::uint64_t> seeds{1, 2};
    const std::vector<harness::Method> methods{harness::Method::sbrm, harness::Method::ce};
    const int threads = omp_get_max_threads();
    omp_set_num_threads(1);
    const double w_serial = time_ms([&] { harness::sweep(original, ratios, seeds, methods, opts); }, 1);
    omp_set_num_threads(threads);
    const double w_parallel = time_ms([&] { harness::sweep(original, ratios, seeds, methods, opts); }, 1);
    std::printf("%-28s serial %9.2f ms   parallel %9.2f ms   speedup %.2fx\n", "sweep (8 cells)", w_serial, w_parallel,
                w_serial / w_parallel);
    return 0;
}
