// cevo: corrupt, conceal and score PGM images; run loss-ratio and generation
// sweeps; exercise the evolutionary engine on small Pareto problems.
//
// Exit codes: 0 success, 1 runtime or I/O failure, 2 usage or configuration error.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cevo/concealment.hpp"
#include "cevo/errors.hpp"
#include "cevo/harness.hpp"
#include "cevo/imaging.hpp"

namespace {

using namespace cevo;

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct EcFlags {
    concealment::EcConfig cfg;

    void attach(CLI::App* app) {
        app->add_option("--block-size", cfg.block_size, "Block size B in pixels")->capture_default_str();
        app->add_option("--range-size", cfg.range_size, "Range size R in pixels")->capture_default_str();
        app->add_option("--search-size", cfg.search_size, "Search area size A in pixels")->capture_default_str();
        app->add_option("--merit-decay", cfg.merit_decay, "Merit of pass-t recoveries is max(decay^t, floor)")
            ->capture_default_str();
        app->add_option("--merit-floor", cfg.merit_floor, "Lower bound on recovered merit")->capture_default_str();
        app->add_option("--max-iters", cfg.max_iters, "Maximum number of passes")->capture_default_str();
    }
};

/// Engine flags; remembers which ones the user actually gave.
struct EngineFlags {
    moga::MogaConfig cfg;
    std::vector<CLI::Option*> options;

    explicit EngineFlags(moga::MogaConfig defaults) : cfg(defaults) {}

    void attach(CLI::App* app, bool with_generations = true) {
        options.push_back(app->add_option("--pop", cfg.population, "Population size P")->capture_default_str());
        if (with_generations) {
            options.push_back(app->add_option("--gens", cfg.generations, "Generations G")->capture_default_str());
        }
        options.push_back(
            app->add_option("--groups-per-family", cfg.groups_per_family, "Commitment groups per family M")
                ->capture_default_str());
        options.push_back(app->add_option("--mutation-rate", cfg.mutation_rate, "Per-coordinate mutation probability")
                              ->capture_default_str());
        options.push_back(app->add_option("--mutation-step", cfg.mutation_step, "Largest mutation step")
                              ->capture_default_str());
    }

    bool any_given() const {
        for (const auto* o : options) {
            if (o->count() > 0) return true;
        }
        return false;
    }
};

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
    if (!out) throw std::runtime_error("write failed for " + path);
}

std::vector<harness::Method> parse_methods(const std::vector<std::string>& names) {
    std::vector<harness::Method> out;
    for (const auto& n : names) out.push_back(harness::parse_method(n));
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Compromising-evolution block-loss concealment toolkit"};
    app.require_subcommand(1);
    std::uint64_t seed = 1;

    // corrupt
    auto* corrupt = app.add_subcommand("corrupt", "Drop random blocks from an image");
    std::string corrupt_in, corrupt_out, corrupt_mask_out;
    double corrupt_loss = 0.0;
    int corrupt_block = 8;
    corrupt->add_option("input", corrupt_in, "Input PGM")->required();
    corrupt->add_option("-p,--loss", corrupt_loss, "Block loss probability")->required()->check(CLI::Range(0.0, 1.0));
    corrupt->add_option("--seed", seed, "Random seed")->capture_default_str();
    corrupt->add_option("--block-size", corrupt_block, "Block size B")->capture_default_str();
    corrupt->add_option("--out", corrupt_out, "Corrupted PGM output")->required();
    corrupt->add_option("--mask-out", corrupt_mask_out, "Mask sidecar output (default: <out>.mask)");

    // conceal
    auto* conceal = app.add_subcommand("conceal", "Reconstruct lost blocks and print a CSV record");
    std::string conceal_in, conceal_mask, conceal_ref, conceal_out, conceal_method;
    bool timing = false;
    EcFlags conceal_ec;
    EngineFlags conceal_engine(concealment::default_ce_config());
    conceal->add_option("input", conceal_in, "Corrupted PGM")->required();
    conceal->add_option("--mask", conceal_mask, "Mask sidecar")->required();
    conceal->add_option("--reference", conceal_ref, "Original PGM for the PSNR column")->required();
    conceal->add_option("--method", conceal_method, "sbrm or ce")->required()->check(CLI::IsMember({"sbrm", "ce"}));
    conceal->add_option("--seed", seed, "Engine seed (ce)")->capture_default_str();
    conceal->add_option("--out", conceal_out, "Reconstructed PGM output")->required();
    conceal->add_flag("--timing", timing, "Report measured wall time instead of 0");
    conceal_ec.attach(conceal);
    conceal_engine.attach(conceal);

    // psnr
    auto* psnr = app.add_subcommand("psnr", "PSNR between two images");
    std::string psnr_a, psnr_b;
    psnr->add_option("first", psnr_a, "First PGM")->required();
    psnr->add_option("second", psnr_b, "Second PGM")->required();

    // sweep
    auto* sweep = app.add_subcommand("sweep", "PSNR over loss ratios, seeds and methods");
    std::string sweep_in, sweep_out;
    std::vector<double> sweep_losses;
    std::vector<std::uint64_t> sweep_seeds;
    std::vector<std::string> sweep_methods{"sbrm", "ce"};
    EcFlags sweep_ec;
    EngineFlags sweep_engine(concealment::default_ce_config());
    sweep->add_option("input", sweep_in, "Original PGM")->required();
    sweep->add_option("--losses", sweep_losses, "Loss ratios, comma separated")
        ->required()
        ->delimiter(',')
        ->check(CLI::Range(0.0, 1.0));
    sweep->add_option("--seeds", sweep_seeds, "Seeds, comma separated")->required()->delimiter(',');
    sweep->add_option("--methods", sweep_methods, "Methods, comma separated")
        ->delimiter(',')
        ->check(CLI::IsMember({"sbrm", "ce"}))
        ->capture_default_str();
    sweep->add_option("--out", sweep_out, "CSV output (default: stdout)");
    sweep->add_flag("--timing", timing, "Report measured wall time instead of 0");
    sweep_ec.attach(sweep);
    sweep_engine.attach(sweep);

    // gens-sweep
    auto* gens = app.add_subcommand("gens-sweep", "Evolutionary PSNR over generation counts and seeds");
    std::string gens_in, gens_out;
    double gens_loss = 0.4;
    std::vector<int> gens_list;
    std::vector<std::uint64_t> gens_seeds;
    EcFlags gens_ec;
    EngineFlags gens_engine(concealment::default_ce_config());
    gens->add_option("input", gens_in, "Original PGM")->required();
    gens->add_option("-p,--loss", gens_loss, "Block loss probability")->check(CLI::Range(0.0, 1.0))->capture_default_str();
    gens->add_option("--generations", gens_list, "Generation counts, comma separated")->required()->delimiter(',');
    gens->add_option("--seeds", gens_seeds, "Seeds, comma separated")->required()->delimiter(',');
    gens->add_option("--out", gens_out, "CSV output (default: stdout)");
    gens->add_flag("--timing", timing, "Report measured wall time instead of 0");
    gens_ec.attach(gens);
    gens_engine.attach(gens, /*with_generations=*/false);

    // pareto-demo
    auto* pareto = app.add_subcommand("pareto-demo", "Run the engine on a built-in bi-objective problem");
    std::string pareto_problem = "corner", pareto_out;
    int pareto_trials = 100;
    EngineFlags pareto_engine(harness::default_pareto_config());
    pareto->add_option("--problem", pareto_problem, "corner or ridge")->capture_default_str();
    pareto->add_option("--trials", pareto_trials, "Number of seeded trials")->capture_default_str();
    pareto->add_option("--seed", seed, "Seed of trial 0; trial t uses seed + t")->capture_default_str();
    pareto->add_option("--out", pareto_out, "CSV output (default: stdout)");
    pareto_engine.attach(pareto);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*corrupt) {
            const auto original = imaging::load_pgm(corrupt_in);
            const auto [image, mask] = imaging::corrupt(original, corrupt_loss, corrupt_block, seed);
            imaging::save_pgm(corrupt_out, image);
            harness::save_mask(corrupt_mask_out.empty() ? corrupt_out + ".mask" : corrupt_mask_out, mask);
            std::cout << "psnr_db=" << harness::format_psnr(imaging::psnr(original, image)) << "\n";
        } else if (*conceal) {
            const auto method = harness::parse_method(conceal_method);
            if (method == harness::Method::sbrm && conceal_engine.any_given()) {
                throw ConfigError("engine options (--pop, --gens, ...) apply only to --method ce");
            }
            const auto corrupted = imaging::load_pgm(conceal_in);
            const auto reference = imaging::load_pgm(conceal_ref);
            const auto mask = harness::load_mask(conceal_mask);
            if (!mask.matches(corrupted) || reference.width() != corrupted.width() ||
                reference.height() != corrupted.height()) {
                throw ConfigError("mask, corrupted image and reference do not have matching geometry");
            }
            harness::RunOptions opts{conceal_ec.cfg, conceal_engine.cfg, timing};
            imaging::GrayImage reconstruction;
            const auto record = harness::conceal_and_score(reference, corrupted, mask, method, seed, opts, &reconstruction);
            imaging::save_pgm(conceal_out, reconstruction);
            std::cout << harness::csv_header() << "\n" << harness::csv_row(record) << "\n";
        } else if (*psnr) {
            const auto a = imaging::load_pgm(psnr_a);
            const auto b = imaging::load_pgm(psnr_b);
            std::cout << harness::format_psnr(imaging::psnr(a, b)) << "\n";
        } else if (*sweep) {
            const auto methods = parse_methods(sweep_methods);
            if (std::find(methods.begin(), methods.end(), harness::Method::ce) == methods.end() &&
                sweep_engine.any_given()) {
                throw ConfigError("engine options (--pop, --gens, ...) need the ce method in --methods");
            }
            const auto original = imaging::load_pgm(sweep_in);
            harness::RunOptions opts{sweep_ec.cfg, sweep_engine.cfg, timing};
            const auto records = harness::sweep(original, sweep_losses, sweep_seeds, methods, opts);
            write_text(sweep_out, harness::records_to_csv(records));
        } else if (*gens) {
            if (gens_list.empty()) throw ConfigError("--generations needs at least one value");
            const auto original = imaging::load_pgm(gens_in);
            harness::RunOptions opts{gens_ec.cfg, gens_engine.cfg, timing};
            const auto records = harness::gens_sweep(original, gens_loss, gens_list, gens_seeds, opts);
            write_text(gens_out, harness::records_to_csv(records));
        } else if (*pareto) {
            const auto problem = harness::pareto_problem(pareto_problem);
            auto cfg = pareto_engine.cfg;
            cfg.seed = seed;
            cfg.validate();
            write_text(pareto_out, harness::pareto_csv(harness::pareto_demo(problem, cfg, pareto_trials)));
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return 0;
}
