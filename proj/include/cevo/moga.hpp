#pragma once

// Compromising Evolution: an N-objective genetic algorithm in which every
// objective is a "gender". Families (one parent per gender) procreate
// commitment groups of N children, one child per gender. Selection removes,
// gender by gender in turn, the group holding that gender's worst child, so a
// group survives only if all of its members are acceptable to their own
// objective.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <vector>

namespace cevo::moga {

using Rng = std::mt19937_64;

struct Genome {
    std::vector<int> coords;

    auto operator<=>(const Genome&) const = default;
};

/// Bounded integer box with an optional finite set of forbidden points.
class GenomeDomain {
public:
    GenomeDomain(std::vector<int> lower, std::vector<int> upper, std::vector<Genome> excluded = {});

    std::size_t dimension() const noexcept { return lower_.size(); }
    int lower(std::size_t i) const { return lower_.at(i); }
    int upper(std::size_t i) const { return upper_.at(i); }

    bool in_bounds(const Genome& g) const noexcept;
    bool is_excluded(const Genome& g) const { return excluded_.contains(g); }
    bool contains(const Genome& g) const { return in_bounds(g) && !is_excluded(g); }

    /// Number of feasible points, saturating at UINT64_MAX.
    std::uint64_t feasible_count() const noexcept { return feasible_count_; }

    /// Uniform draw from the box minus the excluded points.
    Genome sample(Rng& rng) const;

private:
    std::vector<int> lower_;
    std::vector<int> upper_;
    std::set<Genome> excluded_;
    std::uint64_t box_size_ = 0;
    std::uint64_t feasible_count_ = 0;
};

struct Individual {
    Genome genome;
    int gender = 0;
    std::optional<double> fitness;
};

/// N children of one family, one per gender; culled or kept as a unit.
struct CommitmentGroup {
    std::vector<Individual> members;
};

/// One parent per gender, indexed by gender.
using Family = std::vector<Individual>;

/// Larger is better. Must be deterministic and free of side effects.
using Objective = std::function<double(const Genome&)>;
using ObjectiveSuite = std::vector<Objective>;

struct MogaConfig {
    int population = 16;         // P
    int genders = 2;             // N
    int groups_per_family = 2;   // M
    int generations = 4;         // G
    double mutation_rate = 0.25;
    int mutation_step = 3;
    std::uint64_t seed = 0;

    /// Throws ConfigError when P mod N != 0, P < 2N, M < 1, G < 1 or the
    /// mutation parameters are out of range.
    void validate() const;

    int family_count() const noexcept { return population / genders; }
    /// K = M * P / N commitment groups per generation.
    int group_count() const noexcept { return groups_per_family * family_count(); }
};

struct EvolutionStats {
    std::uint64_t fitness_evaluations = 0;
    /// best_fitness[g][n]: best fitness of gender n after generation g;
    /// row 0 is the initial population.
    std::vector<std::vector<double>> best_fitness;
};

struct EvolutionResult {
    Genome solution;
    EvolutionStats stats;
    std::vector<Individual> final_population;
};

std::vector<Individual> init_population(const MogaConfig& cfg, const GenomeDomain& domain, Rng& rng);

std::vector<Family> form_families(const std::vector<Individual>& population, int genders, Rng& rng);

/// Uniform discrete recombination: every coordinate comes from a uniformly
/// chosen parent.
Genome crossover(std::span<const Genome> parents, const GenomeDomain& domain, Rng& rng);

/// Each coordinate moves with probability mutation_rate by a nonzero step in
/// [-mutation_step, mutation_step], then is clamped to the box.
Genome mutate(const Genome& genome, const MogaConfig& cfg, const GenomeDomain& domain, Rng& rng);

std::vector<CommitmentGroup> procreate(const Family& family, const MogaConfig& cfg, const GenomeDomain& domain,
                                       Rng& rng);

/// Indices of the groups removed by sequential compromising selection, in
/// removal order. Genders are visited cyclically 0, 1, ..., N-1, 0, ...; each
/// visit removes the live group whose member of that gender has the lowest
/// fitness (lowest group index on ties). Stops once target_size individuals
/// remain.
std::vector<std::size_t> cull_order(std::span<const CommitmentGroup> groups, std::size_t target_size);

/// Members of the groups that survive cull_order, in group order.
std::vector<Individual> select_survivors(std::span<const CommitmentGroup> groups, std::size_t target_size);

/// Strict Pareto dominance for maximisation.
bool dominates(std::span<const double> a, std::span<const double> b);

/// The most frequent genome. Ties go to the smallest sum over genders of the
/// genome's fitness rank within that gender (0 = best; a genome that no member
/// of a gender carries gets that gender's worst rank + 1), then to the
/// lexicographically smallest genome.
Genome final_solution(std::span<const Individual> population);

EvolutionResult evolve(const MogaConfig& cfg, const GenomeDomain& domain, const ObjectiveSuite& objectives,
                       Rng& rng);

/// Same as above with the generator seeded from cfg.seed.
EvolutionResult evolve(const MogaConfig& cfg, const GenomeDomain& domain, const ObjectiveSuite& objectives);

}  // namespace cevo::moga
