#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "cevo/concealment.hpp"
#include "cevo/imaging.hpp"
#include "cevo/moga.hpp"

namespace cevo::harness {

enum class Method { sbrm, ce };

std::string_view to_string(Method method);
/// Throws ConfigError for anything other than "sbrm" or "ce".
Method parse_method(std::string_view name);

/// One CSV row. Column order follows the field order.
struct ExperimentRecord {
    std::uint64_t seed = 0;
    double loss_ratio = 0.0;
    Method method = Method::sbrm;
    int generations = 0;  // 0 for the baseline
    double psnr_db = 0.0;
    std::uint64_t candidate_evaluations = 0;
    int passes = 0;
    double wall_time_ms = 0.0;
};

/// "seed,loss_ratio,method,generations,psnr_db,candidate_evaluations,passes,wall_time_ms"
std::string csv_header();
std::string csv_row(const ExperimentRecord& record);
std::string records_to_csv(const std::vector<ExperimentRecord>& records);

/// "inf" for identical images, otherwise four decimals.
std::string format_psnr(double psnr_db);

// Mask sidecar: "<grid_w> <grid_h> <B>\n" then grid_h lines of grid_w '0'/'1'.
std::string write_mask(const imaging::LossMask& mask);
imaging::LossMask read_mask(std::string_view text);
void save_mask(const std::filesystem::path& path, const imaging::LossMask& mask);
imaging::LossMask load_mask(const std::filesystem::path& path);

struct RunOptions {
    concealment::EcConfig ec;
    moga::MogaConfig engine = concealment::default_ce_config();
    /// Wall time is written as 0 unless enabled, keeping outputs reproducible.
    bool timing = false;
};

/// Conceal an already corrupted image and score it against `reference`.
ExperimentRecord conceal_and_score(const imaging::GrayImage& reference, const imaging::GrayImage& corrupted,
                                   const imaging::LossMask& mask, Method method, std::uint64_t seed,
                                   const RunOptions& options, imaging::GrayImage* reconstruction = nullptr);

/// Corrupt `original` with (loss_ratio, seed), conceal, score.
ExperimentRecord run_cell(const imaging::GrayImage& original, double loss_ratio, Method method, std::uint64_t seed,
                          const RunOptions& options);

/// Cartesian product ordered by (method, loss ratio, seed). Cells run
/// concurrently; the result order is fixed.
std::vector<ExperimentRecord> sweep(const imaging::GrayImage& original, const std::vector<double>& loss_ratios,
                                    const std::vector<std::uint64_t>& seeds, const std::vector<Method>& methods,
                                    const RunOptions& options);

/// Evolutionary variant only, ordered by (generations, seed).
std::vector<ExperimentRecord> gens_sweep(const imaging::GrayImage& original, double loss_ratio,
                                         const std::vector<int>& generations, const std::vector<std::uint64_t>& seeds,
                                         const RunOptions& options);

// Small discrete bi-objective problems for exercising the engine alone.
struct ParetoProblem {
    std::string id;
    moga::GenomeDomain domain;
    moga::ObjectiveSuite objectives;
};

/// "corner": f1 = -|x-2|, f2 = -|y-7| on [0,9]^2.
/// "ridge":  f1 = -(x-2)^2 - y, f2 = -(x-7)^2 - y on [0,9]^2.
ParetoProblem pareto_problem(std::string_view id);
std::vector<std::string> pareto_problem_ids();

std::vector<double> objective_vector(const ParetoProblem& problem, const moga::Genome& genome);

/// Every feasible genome whose objective vector no other feasible genome
/// dominates, by exhaustive enumeration.
std::vector<moga::Genome> brute_force_front(const ParetoProblem& problem);

moga::MogaConfig default_pareto_config();

struct ParetoTrial {
    int trial = 0;
    std::uint64_t seed = 0;
    moga::Genome genome;
    std::vector<double> objectives;
    bool on_front = false;
};

/// Trial t runs the engine with seed base.seed + t.
std::vector<ParetoTrial> pareto_demo(const ParetoProblem& problem, const moga::MogaConfig& base, int trials);
std::string pareto_csv(const std::vector<ParetoTrial>& trials);

}  // namespace cevo::harness
