#pragma once

// Black-box maximizers over the unit box: CMA-ES for a single best solution
// and MAP-Elites for an archive of elites keyed by a behaviour descriptor.

#include "farmintel/common.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <thread>
#include <vector>

namespace farmintel::optimize {

using Genotype = std::vector<double>;
using Descriptor = std::vector<std::uint8_t>;

struct CmaesParams {
    double sigma0 = 0.3;
    int population = 0;  // 0 selects 4 + floor(3 ln dim)
};

struct MapElitesParams {
    int batch = 64;
    int init_random = 2000;
    double mutation_sigma = 0.1;
    double mutation_rate = 1.0;  // per-gene probability; 1 mutates every gene
};

struct OptimizerConfig {
    int dim = 0;
    std::int64_t max_evaluations = 0;
    std::uint64_t seed = 0;
    CmaesParams cmaes;
    MapElitesParams map_elites;
    int threads = 1;  // parallel objective evaluation; results do not depend on it

    int population() const
    {
        return cmaes.population > 0 ? cmaes.population
                                    : 4 + static_cast<int>(std::floor(3.0 * std::log(static_cast<double>(dim))));
    }

    void validate() const
    {
        if (dim <= 0) throw ValidationError("optimizer dim must be positive");
        if (max_evaluations <= 0) throw ValidationError("max_evaluations must be positive");
        if (!(cmaes.sigma0 > 0.0 && cmaes.sigma0 <= 1.0)) throw ValidationError("cmaes.sigma0 must lie in (0, 1]");
        if (population() < 4) throw ValidationError("cmaes.population must be at least 4");
        if (map_elites.batch < 1) throw ValidationError("map_elites.batch must be positive");
        if (map_elites.init_random < map_elites.batch)
            throw ValidationError("map_elites.init_random must be at least map_elites.batch");
        if (!(map_elites.mutation_sigma > 0.0)) throw ValidationError("map_elites.mutation_sigma must be positive");
        if (!(map_elites.mutation_rate > 0.0 && map_elites.mutation_rate <= 1.0))
            throw ValidationError("map_elites.mutation_rate must lie in (0, 1]");
        if (threads < 1) throw ValidationError("threads must be at least 1");
    }
};

struct OptimizationResult {
    Genotype best;
    double fitness = -std::numeric_limits<double>::infinity();
    std::int64_t evaluations = 0;
    std::int64_t generations = 0;
    double wall_seconds = 0.0;
    std::uint64_t seed = 0;
    std::vector<double> best_history;  // best-so-far after each generation
};

namespace detail {

inline void check_finite(double v, std::int64_t eval_index)
{
    if (!std::isfinite(v))
        throw RuntimeFault("objective returned a non-finite value at evaluation " + std::to_string(eval_index));
}

/// Evaluates `batch` with `make_objective()` instances, one per worker thread.
/// Output order follows input order, so thread count never changes results.
template <class ObjectiveFactory>
std::vector<double> evaluate_batch(ObjectiveFactory& factory, const std::vector<Genotype>& batch, int threads,
                                   std::vector<decltype(factory())>& workers)
{
    std::vector<double> out(batch.size());
    const auto n_threads = static_cast<std::size_t>(std::max(1, threads));
    while (workers.size() < n_threads) workers.push_back(factory());
    if (n_threads == 1 || batch.size() < 2) {
        for (std::size_t i = 0; i < batch.size(); ++i) out[i] = workers[0](std::span<const double>(batch[i]));
        return out;
    }
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) {
        pool.emplace_back([&, t] {
            for (std::size_t i = t; i < batch.size(); i += n_threads)
                out[i] = workers[t](std::span<const double>(batch[i]));
        });
    }
    for (auto& th : pool) th.join();
    return out;
}

}  // namespace detail

/// (mu/mu_w, lambda) CMA-ES with cumulative step-size adaptation and
/// rank-one plus rank-mu covariance updates, maximizing over [0, 1]^dim.
///
/// Samples are clamped into the box before evaluation (and stored clamped);
/// the distribution update uses the unclamped samples. The full evaluation
/// budget is always consumed.
///
/// `factory()` must return a callable `double(std::span<const double>)`; one
/// is created per worker thread.
template <class ObjectiveFactory>
OptimizationResult cmaes_run_with(ObjectiveFactory factory, const OptimizerConfig& config)
{
    config.validate();
    using Eigen::MatrixXd;
    using Eigen::VectorXd;
    const auto start = std::chrono::steady_clock::now();

    const int n = config.dim;
    const int lambda = config.population();
    const int mu = lambda / 2;
    VectorXd weights(mu);
    for (int i = 0; i < mu; ++i) weights[i] = std::log(mu + 0.5) - std::log(i + 1.0);
    weights /= weights.sum();
    const double mueff = 1.0 / weights.squaredNorm();

    const double nd = n;
    const double cc = (4.0 + mueff / nd) / (nd + 4.0 + 2.0 * mueff / nd);
    const double cs = (mueff + 2.0) / (nd + mueff + 5.0);
    const double c1 = 2.0 / ((nd + 1.3) * (nd + 1.3) + mueff);
    const double cmu = std::min(1.0 - c1, 2.0 * (mueff - 2.0 + 1.0 / mueff) / ((nd + 2.0) * (nd + 2.0) + mueff));
    const double damps = 1.0 + 2.0 * std::max(0.0, std::sqrt((mueff - 1.0) / (nd + 1.0)) - 1.0) + cs;
    const double chi_n = std::sqrt(nd) * (1.0 - 1.0 / (4.0 * nd) + 1.0 / (21.0 * nd * nd));

    VectorXd mean = VectorXd::Constant(n, 0.5);
    double sigma = config.cmaes.sigma0;
    MatrixXd cov = MatrixXd::Identity(n, n);
    MatrixXd basis = MatrixXd::Identity(n, n);
    VectorXd scales = VectorXd::Ones(n);
    VectorXd pc = VectorXd::Zero(n);
    VectorXd ps = VectorXd::Zero(n);

    Rng rng(config.seed);
    OptimizationResult result;
    result.seed = config.seed;
    std::vector<decltype(factory())> workers;

    std::vector<Genotype> batch;
    std::vector<VectorXd> raw;  // unclamped samples drive the update
    while (result.evaluations < config.max_evaluations) {
        const auto remaining = config.max_evaluations - result.evaluations;
        const int count = static_cast<int>(std::min<std::int64_t>(lambda, remaining));

        batch.assign(static_cast<std::size_t>(count), Genotype(static_cast<std::size_t>(n)));
        raw.assign(static_cast<std::size_t>(count), VectorXd(n));
        for (int k = 0; k < count; ++k) {
            VectorXd z(n);
            for (int i = 0; i < n; ++i) z[i] = rng.normal();
            raw[k] = mean + sigma * (basis * scales.cwiseProduct(z));
            for (int i = 0; i < n; ++i) batch[k][i] = std::clamp(raw[k][i], 0.0, 1.0);
        }
        const auto values = detail::evaluate_batch(factory, batch, config.threads, workers);
        for (int k = 0; k < count; ++k) {
            detail::check_finite(values[k], result.evaluations + k);
            if (values[k] > result.fitness) {
                result.fitness = values[k];
                result.best = batch[k];
            }
        }
        result.evaluations += count;
        ++result.generations;
        result.best_history.push_back(result.fitness);
        if (count < lambda) break;  // budget ran out mid-generation

        std::vector<int> order(static_cast<std::size_t>(lambda));
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return values[a] > values[b]; });

        const VectorXd old_mean = mean;
        MatrixXd steps(n, mu);  // (x_i - m) / sigma for the selected points
        for (int i = 0; i < mu; ++i)
            for (int j = 0; j < n; ++j) steps(j, i) = (raw[order[i]][j] - old_mean[j]) / sigma;
        const VectorXd step_w = steps * weights;
        mean = old_mean + sigma * step_w;

        const MatrixXd inv_sqrt = basis * scales.cwiseInverse().asDiagonal() * basis.transpose();
        ps = (1.0 - cs) * ps + std::sqrt(cs * (2.0 - cs) * mueff) * (inv_sqrt * step_w);
        const double ps_norm = ps.norm();
        const double denom = std::sqrt(1.0 - std::pow(1.0 - cs, 2.0 * static_cast<double>(result.generations)));
        const bool hsig = ps_norm / denom / chi_n < 1.4 + 2.0 / (nd + 1.0);
        pc = (1.0 - cc) * pc + (hsig ? std::sqrt(cc * (2.0 - cc) * mueff) : 0.0) * step_w;

        MatrixXd rank_mu = steps * weights.asDiagonal() * steps.transpose();
        cov = (1.0 - c1 - cmu) * cov + c1 * (pc * pc.transpose() + (hsig ? 0.0 : cc * (2.0 - cc)) * cov) +
              cmu * rank_mu;
        cov = 0.5 * (cov + cov.transpose());

        sigma *= std::exp((cs / damps) * (ps_norm / chi_n - 1.0));
        sigma = std::clamp(sigma, 1e-300, 1e6);

        Eigen::SelfAdjointEigenSolver<MatrixXd> eig(cov);
        if (eig.info() != Eigen::Success) throw RuntimeFault("covariance eigendecomposition failed");
        basis = eig.eigenvectors();
        scales = eig.eigenvalues().cwiseMax(1e-30).cwiseSqrt();
    }

    result.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

/// Convenience overload for a single objective shared by value.
template <class Objective>
OptimizationResult cmaes_run(Objective objective, OptimizerConfig config)
{
    config.threads = 1;
    return cmaes_run_with([&objective] { return std::ref(objective); }, config);
}

struct Elite {
    Genotype genotype;
    double fitness = 0.0;
};

/// Collection of elites with at most one entry per descriptor. Keys are kept
/// in a sorted map, plus an insertion-ordered key list for uniform selection.
class Archive {
public:
    Archive() = default;
    explicit Archive(std::size_t descriptor_length) : length_(descriptor_length) {}

    std::size_t descriptor_length() const { return length_; }

    /// Inserts when the cell is empty or `fitness` strictly beats the incumbent.
    bool try_insert(const Descriptor& key, const Genotype& genotype, double fitness)
    {
        if (key.size() != length_)
            throw ValidationError("descriptor length " + std::to_string(key.size()) + " != " +
                                  std::to_string(length_));
        auto it = cells_.find(key);
        if (it == cells_.end()) {
            cells_.emplace(key, Elite{genotype, fitness});
            order_.push_back(key);
            return true;
        }
        if (fitness > it->second.fitness) {
            it->second = Elite{genotype, fitness};
            return true;
        }
        return false;
    }

    std::size_t size() const { return cells_.size(); }
    bool empty() const { return cells_.empty(); }
    const std::map<Descriptor, Elite>& cells() const { return cells_; }
    const Elite* find(const Descriptor& key) const
    {
        auto it = cells_.find(key);
        return it == cells_.end() ? nullptr : &it->second;
    }

    /// The i-th occupied cell in first-insertion order.
    const Elite& nth(std::size_t i) const { return cells_.at(order_.at(i)); }
    const Descriptor& nth_key(std::size_t i) const { return order_.at(i); }

    std::pair<Descriptor, Elite> best() const
    {
        if (cells_.empty()) throw RuntimeFault("archive is empty");
        auto it = std::max_element(cells_.begin(), cells_.end(),
                                   [](const auto& a, const auto& b) { return a.second.fitness < b.second.fitness; });
        return *it;
    }

private:
    std::size_t length_ = 0;
    std::map<Descriptor, Elite> cells_;
    std::vector<Descriptor> order_;
};

struct MapElitesResult {
    Archive archive;
    std::int64_t evaluations = 0;
    double wall_seconds = 0.0;
    std::uint64_t seed = 0;
};

/// Gaussian mutation clamped to the box. With `mutation_rate < 1` each gene is
/// perturbed with that probability and at least one gene always changes.
inline void mutate(Genotype& g, const MapElitesParams& p, Rng& rng)
{
    auto perturb = [&](std::size_t i) { g[i] = std::clamp(g[i] + p.mutation_sigma * rng.normal(), 0.0, 1.0); };
    if (p.mutation_rate >= 1.0) {
        for (std::size_t i = 0; i < g.size(); ++i) perturb(i);
        return;
    }
    bool changed = false;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (rng.uniform() < p.mutation_rate) {
            perturb(i);
            changed = true;
        }
    }
    if (!changed) perturb(rng.index(g.size()));
}

/// MAP-Elites with uniform random initialization followed by batches of
/// Gaussian-mutated offspring of uniformly chosen elites.
///
/// `factory()` returns a callable `double(std::span<const double>)`;
/// `descriptor_fn(genotype)` returns the behaviour descriptor.
template <class ObjectiveFactory, class DescriptorFn>
MapElitesResult map_elites_run_with(ObjectiveFactory factory, DescriptorFn descriptor_fn,
                                    const OptimizerConfig& config)
{
    config.validate();
    const auto start = std::chrono::steady_clock::now();
    const auto n = static_cast<std::size_t>(config.dim);
    const auto& p = config.map_elites;

    Rng rng(config.seed);
    MapElitesResult result;
    result.seed = config.seed;
    std::vector<decltype(factory())> workers;
    std::optional<std::size_t> desc_len;

    std::vector<Genotype> batch;
    while (result.evaluations < config.max_evaluations) {
        const bool initializing = result.evaluations < p.init_random || result.archive.empty();
        std::int64_t want = p.batch;
        if (result.evaluations < p.init_random) want = std::min<std::int64_t>(p.batch, p.init_random - result.evaluations);
        want = std::min(want, config.max_evaluations - result.evaluations);

        batch.assign(static_cast<std::size_t>(want), Genotype(n));
        for (auto& g : batch) {
            if (initializing) {
                for (auto& v : g) v = rng.uniform();
            } else {
                g = result.archive.nth(rng.index(result.archive.size())).genotype;
                mutate(g, p, rng);
            }
        }
        const auto values = detail::evaluate_batch(factory, batch, config.threads, workers);
        for (std::size_t k = 0; k < batch.size(); ++k) {
            detail::check_finite(values[k], result.evaluations + static_cast<std::int64_t>(k));
            Descriptor d = descriptor_fn(std::span<const double>(batch[k]));
            if (!desc_len) {
                desc_len = d.size();
                result.archive = Archive(d.size());
            }
            if (d.size() != *desc_len) throw ValidationError("descriptor length changed during the run");
            result.archive.try_insert(d, batch[k], values[k]);
        }
        result.evaluations += want;
    }
    result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

template <class Objective, class DescriptorFn>
MapElitesResult map_elites_run(Objective objective, DescriptorFn descriptor_fn, OptimizerConfig config)
{
    config.threads = 1;
    return map_elites_run_with([&objective] { return std::ref(objective); }, descriptor_fn, config);
}

}  // namespace farmintel::optimize
