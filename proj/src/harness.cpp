#include "cevo/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iterator>
#include <stdexcept>

#include "cevo/errors.hpp"

namespace cevo::harness {

using imaging::GrayImage;
using imaging::LossMask;

std::string_view to_string(Method method) { return method == Method::sbrm ? "sbrm" : "ce"; }

Method parse_method(std::string_view name) {
    if (name == "sbrm") return Method::sbrm;
    if (name == "ce") return Method::ce;
    throw ConfigError("unknown method '" + std::string(name) + "' (expected sbrm or ce)");
}

std::string csv_header() { return "seed,loss_ratio,method,generations,psnr_db,candidate_evaluations,passes,wall_time_ms"; }

std::string format_psnr(double psnr_db) {
    if (std::isinf(psnr_db)) return "inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", psnr_db);
    return buf;
}

std::string csv_row(const ExperimentRecord& r) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%llu,%g,%s,%d,%s,%llu,%d,%.3f", static_cast<unsigned long long>(r.seed),
                  r.loss_ratio, std::string(to_string(r.method)).c_str(), r.generations, format_psnr(r.psnr_db).c_str(),
                  static_cast<unsigned long long>(r.candidate_evaluations), r.passes, r.wall_time_ms);
    return buf;
}

std::string records_to_csv(const std::vector<ExperimentRecord>& records) {
    std::string out = csv_header() + "\n";
    for (const auto& r : records) out += csv_row(r) + "\n";
    return out;
}

std::string write_mask(const LossMask& mask) {
    std::string out = std::to_string(mask.grid_width()) + " " + std::to_string(mask.grid_height()) + " " +
                      std::to_string(mask.block_size()) + "\n";
    for (int by = 0; by < mask.grid_height(); ++by) {
        for (int bx = 0; bx < mask.grid_width(); ++bx) out += mask.lost(bx, by) ? '1' : '0';
        out += '\n';
    }
    return out;
}

LossMask read_mask(std::string_view text) {
    std::size_t pos = 0;
    auto read_int = [&](const char* what) {
        while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t')) ++pos;
        const std::size_t start = pos;
        long v = 0;
        while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9' && v < 1'000'000) v = v * 10 + (text[pos++] - '0');
        if (pos == start || v <= 0) throw ParseError(std::string("mask: expected a positive integer for ") + what, start);
        return static_cast<int>(v);
    };
    const int w = read_int("grid width");
    const int h = read_int("grid height");
    const int b = read_int("block size");
    while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t' || text[pos] == '\r')) ++pos;
    if (pos >= text.size() || text[pos] != '\n') throw ParseError("mask: expected end of header line", pos);
    ++pos;

    LossMask mask(w, h, b);
    for (int by = 0; by < h; ++by) {
        for (int bx = 0; bx < w; ++bx) {
            if (pos >= text.size()) throw ParseError("mask: truncated grid", pos);
            const char c = text[pos];
            if (c != '0' && c != '1') throw ParseError("mask: expected '0' or '1'", pos);
            mask.set_lost(bx, by, c == '1');
            ++pos;
        }
        if (pos < text.size() && text[pos] == '\r') ++pos;
        if (pos < text.size() && text[pos] != '\n') throw ParseError("mask: row longer than grid width", pos);
        ++pos;
    }
    return mask;
}

void save_mask(const std::filesystem::path& path, const LossMask& mask) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << write_mask(mask);
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

LossMask load_mask(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return read_mask(text);
}

ExperimentRecord conceal_and_score(const GrayImage& reference, const GrayImage& corrupted, const LossMask& mask,
                                   Method method, std::uint64_t seed, const RunOptions& options,
                                   GrayImage* reconstruction) {
    const auto start = std::chrono::steady_clock::now();
    auto [image, stats] = [&] {
        if (method == Method::sbrm) return concealment::conceal_sbrm(corrupted, mask, options.ec);
        auto engine = options.engine;
        engine.seed = seed;
        return concealment::conceal_ce(corrupted, mask, options.ec, engine);
    }();
    const auto elapsed = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start);

    ExperimentRecord r;
    r.seed = seed;
    r.loss_ratio = mask.block_count() == 0 ? 0.0 : static_cast<double>(mask.lost_count()) / mask.block_count();
    r.method = method;
    r.generations = method == Method::ce ? options.engine.generations : 0;
    r.psnr_db = imaging::psnr(reference, image);
    r.candidate_evaluations = stats.candidate_evaluations;
    r.passes = stats.passes;
    r.wall_time_ms = options.timing ? elapsed.count() : 0.0;
    if (reconstruction != nullptr) *reconstruction = std::move(image);
    return r;
}

ExperimentRecord run_cell(const GrayImage& original, double loss_ratio, Method method, std::uint64_t seed,
                          const RunOptions& options) {
    const auto [corrupted, mask] = imaging::corrupt(original, loss_ratio, options.ec.block_size, seed);
    auto r = conceal_and_score(original, corrupted, mask, method, seed, options);
    r.loss_ratio = loss_ratio;
    return r;
}

namespace {

struct Cell {
    double loss_ratio;
    Method method;
    std::uint64_t seed;
    RunOptions options;
};

std::vector<ExperimentRecord> run_cells(const GrayImage& original, const std::vector<Cell>& cells) {
    std::vector<ExperimentRecord> out(cells.size());
    std::vector<std::exception_ptr> errors(cells.size());
    const auto n = static_cast<std::ptrdiff_t>(cells.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto& c = cells[static_cast<std::size_t>(i)];
        try {
            out[static_cast<std::size_t>(i)] = run_cell(original, c.loss_ratio, c.method, c.seed, c.options);
        } catch (...) {
            errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
    }
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (!errors[i]) continue;
        const auto& c = cells[i];
        const std::string context = "cell (method=" + std::string(to_string(c.method)) +
                                    ", loss=" + std::to_string(c.loss_ratio) + ", seed=" + std::to_string(c.seed) +
                                    ", generations=" + std::to_string(c.options.engine.generations) + "): ";
        try {
            std::rethrow_exception(errors[i]);
        } catch (const ConfigError& e) {
            throw ConfigError(context + e.what());
        } catch (const std::exception& e) {
            throw std::runtime_error(context + e.what());
        }
    }
    return out;
}

void check_ratios(const std::vector<double>& ratios) {
    for (double p : ratios) {
        if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("loss ratios must lie in [0, 1]");
    }
}

}  // namespace

std::vector<ExperimentRecord> sweep(const GrayImage& original, const std::vector<double>& loss_ratios,
                                    const std::vector<std::uint64_t>& seeds, const std::vector<Method>& methods,
                                    const RunOptions& options) {
    if (loss_ratios.empty() || seeds.empty() || methods.empty()) {
        throw ConfigError("sweep needs at least one loss ratio, seed and method");
    }
    check_ratios(loss_ratios);
    options.ec.validate();
    if (std::find(methods.begin(), methods.end(), Method::ce) != methods.end()) options.engine.validate();
    std::vector<Cell> cells;
    for (auto m : methods) {
        for (double p : loss_ratios) {
            for (auto s : seeds) cells.push_back({p, m, s, options});
        }
    }
    return run_cells(original, cells);
}

std::vector<ExperimentRecord> gens_sweep(const GrayImage& original, double loss_ratio,
                                         const std::vector<int>& generations, const std::vector<std::uint64_t>& seeds,
                                         const RunOptions& options) {
    if (generations.empty()) throw ConfigError("generation sweep needs at least one generation count");
    if (seeds.empty()) throw ConfigError("generation sweep needs at least one seed");
    check_ratios({loss_ratio});
    options.ec.validate();
    std::vector<Cell> cells;
    for (int g : generations) {
        auto opts = options;
        opts.engine.generations = g;
        opts.engine.validate();
        for (auto s : seeds) cells.push_back({loss_ratio, Method::ce, s, opts});
    }
    return run_cells(original, cells);
}

ParetoProblem pareto_problem(std::string_view id) {
    if (id == "corner") {
        return {"corner", moga::GenomeDomain({0, 0}, {9, 9}),
                {[](const moga::Genome& g) { return -std::abs(g.coords[0] - 2.0); },
                 [](const moga::Genome& g) { return -std::abs(g.coords[1] - 7.0); }}};
    }
    if (id == "ridge") {
        return {"ridge", moga::GenomeDomain({0, 0}, {9, 9}),
                {[](const moga::Genome& g) {
                     const double dx = g.coords[0] - 2.0;
                     return -dx * dx - g.coords[1];
                 },
                 [](const moga::Genome& g) {
                     const double dx = g.coords[0] - 7.0;
                     return -dx * dx - g.coords[1];
                 }}};
    }
    throw ConfigError("unknown problem '" + std::string(id) + "'");
}

std::vector<std::string> pareto_problem_ids() { return {"corner", "ridge"}; }

std::vector<double> objective_vector(const ParetoProblem& problem, const moga::Genome& genome) {
    std::vector<double> v;
    v.reserve(problem.objectives.size());
    for (const auto& f : problem.objectives) v.push_back(f(genome));
    return v;
}

std::vector<moga::Genome> brute_force_front(const ParetoProblem& problem) {
    const auto& d = problem.domain;
    std::vector<moga::Genome> points;
    moga::Genome g;
    for (std::size_t i = 0; i < d.dimension(); ++i) g.coords.push_back(d.lower(i));
    for (;;) {
        if (d.contains(g)) points.push_back(g);
        std::size_t i = g.coords.size();
        while (i-- > 0) {
            if (g.coords[i] < d.upper(i)) {
                ++g.coords[i];
                break;
            }
            g.coords[i] = d.lower(i);
        }
        if (i == static_cast<std::size_t>(-1)) break;
    }
    std::vector<std::vector<double>> values;
    values.reserve(points.size());
    for (const auto& p : points) values.push_back(objective_vector(problem, p));

    std::vector<moga::Genome> front;
    for (std::size_t a = 0; a < points.size(); ++a) {
        bool dominated = false;
        for (std::size_t b = 0; b < points.size() && !dominated; ++b) dominated = moga::dominates(values[b], values[a]);
        if (!dominated) front.push_back(points[a]);
    }
    return front;
}

moga::MogaConfig default_pareto_config() {
    moga::MogaConfig cfg;
    cfg.population = 20;
    cfg.genders = 2;
    cfg.groups_per_family = 3;
    cfg.generations = 20;
    cfg.mutation_rate = 0.2;
    cfg.mutation_step = 2;
    return cfg;
}

std::vector<ParetoTrial> pareto_demo(const ParetoProblem& problem, const moga::MogaConfig& base, int trials) {
    if (trials < 0) throw ConfigError("trial count must be non-negative");
    if (static_cast<std::size_t>(base.genders) != problem.objectives.size()) {
        throw ConfigError("problem '" + problem.id + "' has " + std::to_string(problem.objectives.size()) +
                          " objectives; gender count must match");
    }
    const auto front = brute_force_front(problem);
    std::vector<ParetoTrial> out;
    out.reserve(static_cast<std::size_t>(trials));
    for (int t = 0; t < trials; ++t) {
        auto cfg = base;
        cfg.seed = base.seed + static_cast<std::uint64_t>(t);
        auto result = moga::evolve(cfg, problem.domain, problem.objectives);
        ParetoTrial row;
        row.trial = t;
        row.seed = cfg.seed;
        row.objectives = objective_vector(problem, result.solution);
        row.on_front = std::find(front.begin(), front.end(), result.solution) != front.end();
        row.genome = std::move(result.solution);
        out.push_back(std::move(row));
    }
    return out;
}

std::string pareto_csv(const std::vector<ParetoTrial>& trials) {
    std::string out = "trial,seed,x,y,f1,f2,on_front\n";
    char buf[160];
    for (const auto& t : trials) {
        std::snprintf(buf, sizeof buf, "%d,%llu,%d,%d,%g,%g,%d\n", t.trial, static_cast<unsigned long long>(t.seed),
                      t.genome.coords.at(0), t.genome.coords.at(1), t.objectives.at(0), t.objectives.at(1),
                      t.on_front ? 1 : 0);
        out += buf;
    }
    return out;
}

}  // namespace cevo::harness
