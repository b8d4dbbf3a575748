#include "cevo/moga.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>

#include "cevo/errors.hpp"

namespace cevo::moga {

namespace {

constexpr int kExclusionRetries = 8;
constexpr int kRejectionAttempts = 64;
constexpr std::uint64_t kEnumerationLimit = std::uint64_t{1} << 22;

std::uint64_t saturating_mul(std::uint64_t a, std::uint64_t b) {
    if (a != 0 && b > std::numeric_limits<std::uint64_t>::max() / a) return std::numeric_limits<std::uint64_t>::max();
    return a * b;
}

Genome uniform_box_point(const std::vector<int>& lower, const std::vector<int>& upper, Rng& rng) {
    Genome g;
    g.coords.resize(lower.size());
    for (std::size_t i = 0; i < lower.size(); ++i) {
        g.coords[i] = std::uniform_int_distribution<int>(lower[i], upper[i])(rng);
    }
    return g;
}

void evaluate(Individual& ind, const ObjectiveSuite& objectives, EvolutionStats& stats) {
    ind.fitness = objectives[static_cast<std::size_t>(ind.gender)](ind.genome);
    ++stats.fitness_evaluations;
}

std::vector<double> best_per_gender(std::span<const Individual> population, int genders) {
    std::vector<double> best(static_cast<std::size_t>(genders), -std::numeric_limits<double>::infinity());
    for (const auto& ind : population) {
        if (ind.fitness) best[static_cast<std::size_t>(ind.gender)] = std::max(best[static_cast<std::size_t>(ind.gender)], *ind.fitness);
    }
    return best;
}

}  // namespace

GenomeDomain::GenomeDomain(std::vector<int> lower, std::vector<int> upper, std::vector<Genome> excluded)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
    if (lower_.empty()) throw ConfigError("genome domain must have at least one dimension");
    if (lower_.size() != upper_.size()) throw ConfigError("genome domain bound vectors differ in length");
    box_size_ = 1;
    for (std::size_t i = 0; i < lower_.size(); ++i) {
        if (lower_[i] > upper_[i]) {
            throw ConfigError("genome domain: lower bound exceeds upper bound in coordinate " + std::to_string(i));
        }
        const auto span = static_cast<std::uint64_t>(static_cast<std::int64_t>(upper_[i]) - lower_[i] + 1);
        box_size_ = saturating_mul(box_size_, span);
    }
    for (auto& g : excluded) {
        if (g.coords.size() != lower_.size()) throw ConfigError("excluded point has the wrong dimension");
        if (in_bounds(g)) excluded_.insert(std::move(g));
    }
    if (box_size_ == std::numeric_limits<std::uint64_t>::max()) {
        feasible_count_ = box_size_;
    } else {
        feasible_count_ = box_size_ - excluded_.size();
    }
    if (feasible_count_ == 0) throw ConfigError("genome domain has no feasible point");
}

bool GenomeDomain::in_bounds(const Genome& g) const noexcept {
    if (g.coords.size() != lower_.size()) return false;
    for (std::size_t i = 0; i < lower_.size(); ++i) {
        if (g.coords[i] < lower_[i] || g.coords[i] > upper_[i]) return false;
    }
    return true;
}

Genome GenomeDomain::sample(Rng& rng) const {
    for (int attempt = 0; attempt < kRejectionAttempts; ++attempt) {
        Genome g = uniform_box_point(lower_, upper_, rng);
        if (!excluded_.contains(g)) return g;
    }
    if (box_size_ > kEnumerationLimit) {
        // Feasible fraction is tiny only if the excluded set is huge; keep rejecting.
        for (;;) {
            Genome g = uniform_box_point(lower_, upper_, rng);
            if (!excluded_.contains(g)) return g;
        }
    }
    // Pick the k-th feasible point in lexicographic order.
    std::uint64_t k = std::uniform_int_distribution<std::uint64_t>(0, feasible_count_ - 1)(rng);
    Genome g;
    g.coords = lower_;
    for (;;) {
        if (!excluded_.contains(g)) {
            if (k == 0) return g;
            --k;
        }
        std::size_t i = g.coords.size();
        while (i-- > 0) {
            if (g.coords[i] < upper_[i]) {
                ++g.coords[i];
                break;
            }
            g.coords[i] = lower_[i];
        }
    }
}

void MogaConfig::validate() const {
    if (genders < 1) throw ConfigError("gender count must be positive");
    if (population % genders != 0) {
        throw ConfigError("population size " + std::to_string(population) + " is not a multiple of the gender count " +
                          std::to_string(genders));
    }
    if (population < 2 * genders) throw ConfigError("population size must be at least twice the gender count");
    if (groups_per_family < 1) throw ConfigError("groups per family must be at least 1");
    if (generations < 1) throw ConfigError("generation count must be at least 1");
    if (!(mutation_rate >= 0.0 && mutation_rate <= 1.0)) throw ConfigError("mutation rate must lie in [0, 1]");
    if (mutation_step < 1) throw ConfigError("mutation step must be positive");
}

std::vector<Individual> init_population(const MogaConfig& cfg, const GenomeDomain& domain, Rng& rng) {
    cfg.validate();
    std::vector<int> genders(static_cast<std::size_t>(cfg.population));
    for (std::size_t i = 0; i < genders.size(); ++i) genders[i] = static_cast<int>(i) % cfg.genders;
    std::shuffle(genders.begin(), genders.end(), rng);

    std::vector<Individual> population;
    population.reserve(genders.size());
    for (int gender : genders) population.push_back({domain.sample(rng), gender, std::nullopt});
    return population;
}

std::vector<Family> form_families(const std::vector<Individual>& population, int genders, Rng& rng) {
    if (genders < 1) throw InvariantError("form_families: gender count must be positive");
    std::vector<std::vector<const Individual*>> by_gender(static_cast<std::size_t>(genders));
    for (const auto& ind : population) {
        if (ind.gender < 0 || ind.gender >= genders) throw InvariantError("form_families: gender out of range");
        by_gender[static_cast<std::size_t>(ind.gender)].push_back(&ind);
    }
    const std::size_t families = by_gender[0].size();
    for (const auto& members : by_gender) {
        if (members.size() != families) throw InvariantError("form_families: unbalanced gender counts");
    }
    for (auto& members : by_gender) std::shuffle(members.begin(), members.end(), rng);

    std::vector<Family> out(families);
    for (std::size_t f = 0; f < families; ++f) {
        out[f].reserve(by_gender.size());
        for (const auto& members : by_gender) out[f].push_back(*members[f]);
    }
    return out;
}

Genome crossover(std::span<const Genome> parents, const GenomeDomain& domain, Rng& rng) {
    if (parents.empty()) throw InvariantError("crossover: no parents");
    std::uniform_int_distribution<std::size_t> pick(0, parents.size() - 1);
    Genome child;
    child.coords.resize(domain.dimension());
    for (int attempt = 0; attempt <= kExclusionRetries; ++attempt) {
        for (std::size_t i = 0; i < child.coords.size(); ++i) child.coords[i] = parents[pick(rng)].coords.at(i);
        if (!domain.is_excluded(child)) return child;
    }
    return domain.sample(rng);
}

Genome mutate(const Genome& genome, const MogaConfig& cfg, const GenomeDomain& domain, Rng& rng) {
    if (cfg.mutation_rate <= 0.0) return genome;
    std::bernoulli_distribution fires(cfg.mutation_rate);
    std::uniform_int_distribution<int> magnitude(1, cfg.mutation_step);
    std::bernoulli_distribution negative(0.5);
    for (int attempt = 0; attempt <= kExclusionRetries; ++attempt) {
        Genome out = genome;
        for (std::size_t i = 0; i < out.coords.size(); ++i) {
            if (!fires(rng)) continue;
            const int step = magnitude(rng);
            const int delta = negative(rng) ? -step : step;
            out.coords[i] = std::clamp(out.coords[i] + delta, domain.lower(i), domain.upper(i));
        }
        if (!domain.is_excluded(out)) return out;
    }
    return domain.sample(rng);
}

std::vector<CommitmentGroup> procreate(const Family& family, const MogaConfig& cfg, const GenomeDomain& domain,
                                       Rng& rng) {
    if (family.size() != static_cast<std::size_t>(cfg.genders)) {
        throw InvariantError("procreate: family must hold one parent per gender");
    }
    std::vector<Genome> parents;
    parents.reserve(family.size());
    for (const auto& p : family) parents.push_back(p.genome);

    std::vector<CommitmentGroup> groups(static_cast<std::size_t>(cfg.groups_per_family));
    for (auto& group : groups) {
        group.members.reserve(family.size());
        for (int gender = 0; gender < cfg.genders; ++gender) {
            group.members.push_back({mutate(crossover(parents, domain, rng), cfg, domain, rng), gender, std::nullopt});
        }
    }
    return groups;
}

std::vector<std::size_t> cull_order(std::span<const CommitmentGroup> groups, std::size_t target_size) {
    if (groups.empty()) {
        if (target_size == 0) return {};
        throw InvariantError("select_survivors: fewer children than the target population");
    }
    const std::size_t genders = groups.front().members.size();
    if (genders == 0) throw InvariantError("select_survivors: empty commitment group");

    // fitness[n][k] is the fitness of group k's gender-n member.
    std::vector<std::vector<double>> fitness(genders, std::vector<double>(groups.size()));
    for (std::size_t k = 0; k < groups.size(); ++k) {
        const auto& members = groups[k].members;
        if (members.size() != genders) throw InvariantError("select_survivors: groups differ in size");
        std::vector<bool> seen(genders, false);
        for (const auto& m : members) {
            if (m.gender < 0 || static_cast<std::size_t>(m.gender) >= genders || seen[static_cast<std::size_t>(m.gender)]) {
                throw InvariantError("select_survivors: group genders are not a permutation of 0..N-1");
            }
            if (!m.fitness) throw InvariantError("select_survivors: unevaluated member");
            seen[static_cast<std::size_t>(m.gender)] = true;
            fitness[static_cast<std::size_t>(m.gender)][k] = *m.fitness;
        }
    }

    const std::size_t children = genders * groups.size();
    if (children < target_size) throw InvariantError("select_survivors: fewer children than the target population");
    if ((children - target_size) % genders != 0) {
        throw InvariantError("select_survivors: surplus is not a whole number of groups");
    }
    const std::size_t removals = (children - target_size) / genders;

    // Per gender, group indices from worst to best; stable so ties keep index order.
    std::vector<std::vector<std::size_t>> worst_first(genders);
    for (std::size_t n = 0; n < genders; ++n) {
        auto& order = worst_first[n];
        order.resize(groups.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return fitness[n][a] < fitness[n][b]; });
    }

    std::vector<bool> alive(groups.size(), true);
    std::vector<std::size_t> cursor(genders, 0);
    std::vector<std::size_t> culled;
    culled.reserve(removals);
    for (std::size_t step = 0; step < removals; ++step) {
        const std::size_t n = step % genders;
        auto& c = cursor[n];
        while (!alive[worst_first[n][c]]) ++c;
        const std::size_t victim = worst_first[n][c];
        alive[victim] = false;
        culled.push_back(victim);
    }
    return culled;
}

std::vector<Individual> select_survivors(std::span<const CommitmentGroup> groups, std::size_t target_size) {
    const auto culled = cull_order(groups, target_size);
    std::vector<bool> alive(groups.size(), true);
    for (auto k : culled) alive[k] = false;

    std::vector<Individual> survivors;
    survivors.reserve(target_size);
    for (std::size_t k = 0; k < groups.size(); ++k) {
        if (!alive[k]) continue;
        for (const auto& m : groups[k].members) survivors.push_back(m);
    }
    return survivors;
}

bool dominates(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("dominates: objective vectors differ in length");
    bool strictly_better = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] < b[i]) return false;
        if (a[i] > b[i]) strictly_better = true;
    }
    return strictly_better;
}

Genome final_solution(std::span<const Individual> population) {
    if (population.empty()) throw InvariantError("final_solution: empty population");

    std::map<Genome, std::size_t> multiplicity;
    int genders = 0;
    for (const auto& ind : population) {
        ++multiplicity[ind.genome];
        genders = std::max(genders, ind.gender + 1);
    }
    std::size_t top = 0;
    for (const auto& [g, count] : multiplicity) top = std::max(top, count);
    std::vector<Genome> tied;
    for (const auto& [g, count] : multiplicity) {
        if (count == top) tied.push_back(g);  // map order = lexicographic
    }
    if (tied.size() == 1) return tied.front();

    // Best fitness of each distinct genome within each gender.
    std::vector<std::map<Genome, double>> per_gender(static_cast<std::size_t>(genders));
    for (const auto& ind : population) {
        if (!ind.fitness) continue;
        auto& slot = per_gender[static_cast<std::size_t>(ind.gender)];
        auto [it, inserted] = slot.try_emplace(ind.genome, *ind.fitness);
        if (!inserted) it->second = std::max(it->second, *ind.fitness);
    }
    auto rank_sum = [&](const Genome& g) {
        std::size_t sum = 0;
        for (const auto& slot : per_gender) {
            auto it = slot.find(g);
            if (it == slot.end()) {
                sum += slot.size();
                continue;
            }
            for (const auto& [other, f] : slot) {
                if (f > it->second) ++sum;
            }
        }
        return sum;
    };
    const Genome* best = &tied.front();
    std::size_t best_sum = rank_sum(*best);
    for (std::size_t i = 1; i < tied.size(); ++i) {
        const std::size_t s = rank_sum(tied[i]);
        if (s < best_sum) {
            best = &tied[i];
            best_sum = s;
        }
    }
    return *best;
}

EvolutionResult evolve(const MogaConfig& cfg, const GenomeDomain& domain, const ObjectiveSuite& objectives,
                       Rng& rng) {
    cfg.validate();
    if (objectives.size() != static_cast<std::size_t>(cfg.genders)) {
        throw ConfigError("evolve: objective count must equal the gender count");
    }
    EvolutionResult result;
    auto& stats = result.stats;

    auto population = init_population(cfg, domain, rng);
    for (auto& ind : population) evaluate(ind, objectives, stats);
    stats.best_fitness.push_back(best_per_gender(population, cfg.genders));

    const auto target = static_cast<std::size_t>(cfg.population);
    std::vector<CommitmentGroup> groups;
    for (int generation = 0; generation < cfg.generations; ++generation) {
        groups.clear();
        for (const auto& family : form_families(population, cfg.genders, rng)) {
            for (auto& group : procreate(family, cfg, domain, rng)) groups.push_back(std::move(group));
        }
        for (auto& group : groups) {
            for (auto& child : group.members) evaluate(child, objectives, stats);
        }
        population = select_survivors(groups, target);
        stats.best_fitness.push_back(best_per_gender(population, cfg.genders));
    }

    result.solution = final_solution(population);
    result.final_population = std::move(population);
    return result;
}

EvolutionResult evolve(const MogaConfig& cfg, const GenomeDomain& domain, const ObjectiveSuite& objectives) {
    Rng rng(cfg.seed);
    return evolve(cfg, domain, objectives, rng);
}

}  // namespace cevo::moga
