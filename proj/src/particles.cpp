#include "abf/particles.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <exception>
#include <limits>
#include <mutex>
#include <string>
#include <thread>

#include "abf/errors.hpp"
#include "abf/helmholtz.hpp"
#include "abf/rng.hpp"

namespace abf {

namespace {

constexpr std::size_t kChunk = 4096;
constexpr int kMaxDim = 16;

/**
 * Fixed-size chunks processed in any thread order; every chunk writes only
 * its own outputs, so results cannot depend on the thread count.
 */
template <typename Fn>
void parallel_chunks(std::size_t n_items, int threads, Fn&& fn) {
    const std::size_t chunks = (n_items + kChunk - 1) / kChunk;
    if (threads <= 1 || chunks <= 1) {
        for (std::size_t c = 0; c < chunks; ++c)
            fn(c, c * kChunk, std::min(n_items, (c + 1) * kChunk));
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex err_mutex;
    std::exception_ptr err;
    auto worker = [&]() {
        try {
            for (;;) {
                std::size_t c = next.fetch_add(1);
                if (c >= chunks) return;
                fn(c, c * kChunk, std::min(n_items, (c + 1) * kChunk));
            }
        } catch (...) {
            std::lock_guard<std::mutex> lock(err_mutex);
            if (!err) err = std::current_exception();
        }
    };
    const int workers = static_cast<int>(
        std::min<std::size_t>(chunks, static_cast<std::size_t>(threads)));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

double wrap01(double x) {
    double w = x - std::floor(x);
    return w < 1.0 ? w : 0.0;
}

} // namespace

ParticleEnsemble init_ensemble(std::size_t n_particles, int dimension, std::uint64_t seed) {
    if (n_particles < 1) throw ContractViolation("particles: need at least one particle");
    if (dimension < 1 || dimension > kMaxDim)
        throw ContractViolation("particles: dimension must be in 1..16");
    ParticleEnsemble ens;
    ens.dimension = dimension;
    ens.seed = seed;
    ens.positions.resize(n_particles * static_cast<std::size_t>(dimension));
    CounterRng rng(seed, CounterRng::kInit);
    for (std::size_t i = 0; i < n_particles; ++i) {
        for (int p = 0; 2 * p < dimension; ++p) {
            auto u = rng.uniforms(i, 0, static_cast<std::uint32_t>(p));
            for (int s = 0; s < 2 && 2 * p + s < dimension; ++s) {
                double v = u[static_cast<std::size_t>(s)];
                ens.positions[i * static_cast<std::size_t>(dimension) + 2 * p + s] =
                    v < 1.0 ? v : 0.0;
            }
        }
    }
    return ens;
}

BinnedBias::BinnedBias(std::vector<int> bins)
    : grid_(bins, static_cast<int>(bins.size())),
      counts_(grid_.size(), 0),
      g_hat_(grid_, grid_.n()),
      b_hat_(grid_, grid_.n()),
      h_hat_(grid_) {
    if (grid_.n() > 8) throw ContractViolation("binned bias: at most 8 xi axes");
}

std::size_t BinnedBias::bin_of(std::span<const double> x) const {
    const int m = grid_.n();
    if (static_cast<int>(x.size()) < m) throw ContractViolation("binned bias: point too short");
    int idx[8];
    for (int d = 0; d < m; ++d) {
        const int res = grid_.resolution()[d];
        double v = x[d] - std::floor(x[d]);
        int i = static_cast<int>(v * res);
        if (i >= res) i = res - 1;
        idx[d] = i;
    }
    return grid_.flatten(std::span<const int>(idx, static_cast<std::size_t>(m)));
}

void BinnedBias::bias_at(std::span<const double> x, std::span<double> out) const {
    const int m = grid_.n();
    if (static_cast<int>(x.size()) < m || static_cast<int>(out.size()) < m)
        throw ContractViolation("binned bias: bad interpolation buffers");
    int base[8];
    double w[8];
    for (int d = 0; d < m; ++d) {
        const int res = grid_.resolution()[d];
        double v = x[d] - std::floor(x[d]);
        double u = v * res - 0.5;
        double fl = std::floor(u);
        base[d] = static_cast<int>(fl);
        w[d] = u - fl;
    }
    for (int a = 0; a < m; ++a) out[a] = 0.0;
    const int corners = 1 << m;
    int idx[8];
    for (int c = 0; c < corners; ++c) {
        double weight = 1.0;
        for (int d = 0; d < m; ++d) {
            const int res = grid_.resolution()[d];
            const int bit = (c >> d) & 1;
            weight *= bit ? w[d] : 1.0 - w[d];
            int i = (base[d] + bit) % res;
            if (i < 0) i += res;
            idx[d] = i;
        }
        if (weight == 0.0) continue;
        const std::size_t flat = grid_.flatten(std::span<const int>(idx, static_cast<std::size_t>(m)));
        for (int a = 0; a < m; ++a) out[a] += weight * b_hat_.value(a, flat);
    }
}

void BinnedBias::assign(std::vector<long> counts, const std::vector<double>& sums,
                        BiasMethod method, const BinnedBias* previous) {
    const int m = grid_.n();
    const std::size_t nb = grid_.size();
    if (counts.size() != nb || sums.size() != nb * static_cast<std::size_t>(m))
        throw ContractViolation("binned bias: accumulator size mismatch");
    counts_ = std::move(counts);
    for (std::size_t b = 0; b < nb; ++b) {
        if (counts_[b] > 0) {
            for (int a = 0; a < m; ++a)
                g_hat_.value(a, b) = sums[b * static_cast<std::size_t>(m) + a] /
                                     static_cast<double>(counts_[b]);
        } else {
            for (int a = 0; a < m; ++a)
                g_hat_.value(a, b) = previous ? previous->g_hat_.value(a, b) : 0.0;
        }
    }
    switch (method) {
        case BiasMethod::None:
            b_hat_ = VectorField(grid_, m);
            h_hat_ = ScalarField(grid_);
            break;
        case BiasMethod::Abf:
            b_hat_ = g_hat_;
            h_hat_ = ScalarField(grid_);
            break;
        case BiasMethod::Pabf: {
            HelmholtzResult hr = project_lebesgue(g_hat_);
            b_hat_ = std::move(hr.projected);
            h_hat_ = std::move(hr.potential);
            break;
        }
    }
}

void particle_step(ParticleEnsemble& ens, const ForceField& force, const BinnedBias& bias,
                   double dt, int threads) {
    if (!(dt > 0.0)) throw ContractViolation("particle step: need dt > 0");
    const int n = ens.dimension;
    const int m = bias.m();
    if (n != force.dimension()) throw ContractViolation("particle step: dimension mismatch");
    if (m > n) throw ContractViolation("particle step: bias has more axes than the state");
    const double sig = std::sqrt(2.0 * dt / force.beta());
    const std::size_t count = ens.count();
    const std::uint64_t step_index = ens.steps;
    const CounterRng noise(ens.seed, CounterRng::kNoise);
    double* pos = ens.positions.data();

    parallel_chunks(count, threads, [&](std::size_t, std::size_t begin, std::size_t end) {
        double z[kMaxDim], f[kMaxDim], bb[8];
        for (std::size_t i = begin; i < end; ++i) {
            double* zi = pos + i * static_cast<std::size_t>(n);
            std::memcpy(z, zi, sizeof(double) * static_cast<std::size_t>(n));
            force.force_at(std::span<const double>(z, static_cast<std::size_t>(n)),
                           std::span<double>(f, static_cast<std::size_t>(n)));
            bias.bias_at(std::span<const double>(z, static_cast<std::size_t>(n)),
                         std::span<double>(bb, 8));
            for (int a = 0; a < m; ++a) f[a] += bb[a];
            for (int p = 0; 2 * p < n; ++p) {
                auto g2 = noise.gaussians(i, step_index, static_cast<std::uint32_t>(p));
                for (int s = 0; s < 2 && 2 * p + s < n; ++s) {
                    const int a = 2 * p + s;
                    double next = z[a] + f[a] * dt + sig * g2[static_cast<std::size_t>(s)];
                    if (!std::isfinite(next))
                        throw SolverFailure("particle step: non-finite position, particle " +
                                            std::to_string(i) + " step " +
                                            std::to_string(step_index));
                    zi[a] = wrap01(next);
                }
            }
        }
    });
    ens.steps += 1;
    ens.time += dt;
}

BinnedBias update_bias(const ParticleEnsemble& ens, const ForceField& force, BiasMethod method,
                       const BinnedBias& previous, int threads) {
    const int n = ens.dimension;
    const int m = previous.m();
    if (n != force.dimension()) throw ContractViolation("bias update: dimension mismatch");
    if (m > n) throw ContractViolation("bias update: bias has more axes than the state");
    const std::size_t count = ens.count();
    const std::size_t nb = previous.bin_count();
    const std::size_t chunks = (count + kChunk - 1) / kChunk;
    std::vector<long> part_counts(chunks * nb, 0);
    std::vector<double> part_sums(chunks * nb * static_cast<std::size_t>(m), 0.0);
    const double* pos = ens.positions.data();

    parallel_chunks(count, threads, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
        long* pc = part_counts.data() + chunk * nb;
        double* ps = part_sums.data() + chunk * nb * static_cast<std::size_t>(m);
        double f[kMaxDim];
        for (std::size_t i = begin; i < end; ++i) {
            const double* zi = pos + i * static_cast<std::size_t>(n);
            std::span<const double> z(zi, static_cast<std::size_t>(n));
            const std::size_t b = previous.bin_of(z);
            force.force_at(z, std::span<double>(f, static_cast<std::size_t>(n)));
            pc[b] += 1;
            for (int a = 0; a < m; ++a) ps[b * static_cast<std::size_t>(m) + a] -= f[a];
        }
    });

    std::vector<long> counts(nb, 0);
    std::vector<double> sums(nb * static_cast<std::size_t>(m), 0.0);
    for (std::size_t c = 0; c < chunks; ++c) {
        const long* pc = part_counts.data() + c * nb;
        const double* ps = part_sums.data() + c * nb * static_cast<std::size_t>(m);
        for (std::size_t b = 0; b < nb; ++b) counts[b] += pc[b];
        for (std::size_t k = 0; k < nb * static_cast<std::size_t>(m); ++k) sums[k] += ps[k];
    }

    BinnedBias out(previous.bin_grid().resolution());
    out.assign(std::move(counts), sums, method, &previous);
    return out;
}

ParticleRunResult run_particles(const ForceField& force, BiasMethod method,
                                std::size_t n_particles, double dt, double t_end,
                                std::span<const double> schedule, std::vector<int> bins,
                                std::uint64_t seed, int threads) {
    if (!(t_end > 0.0)) throw ContractViolation("particle run: need t_end > 0");
    for (std::size_t i = 0; i + 1 < schedule.size(); ++i)
        if (!(schedule[i] <= schedule[i + 1]))
            throw ContractViolation("particle run: schedule must be ascending");

    ParticleEnsemble ens = init_ensemble(n_particles, force.dimension(), seed);
    BinnedBias bias(std::move(bins));
    bias = update_bias(ens, force, method, bias, threads);

    ParticleRunResult result{{}, ParticleEnsemble{}, bias};
    const double inv_n = 1.0 / static_cast<double>(n_particles);
    auto snapshot = [&](double t) {
        std::vector<double> hist(bias.bin_count());
        for (std::size_t b = 0; b < bias.bin_count(); ++b)
            hist[b] = static_cast<double>(bias.counts()[b]) * inv_n;
        result.snapshots.push_back(ParticleSnapshot{t, std::move(hist), bias});
    };

    std::size_t sched_pos = 0;
    while (sched_pos < schedule.size() && schedule[sched_pos] <= 0.0) {
        snapshot(0.0);
        ++sched_pos;
    }
    const long total_steps = static_cast<long>(std::ceil(t_end / dt - 1e-9));
    for (long k = 0; k < total_steps; ++k) {
        particle_step(ens, force, bias, dt, threads);
        bias = update_bias(ens, force, method, bias, threads);
        const double t = static_cast<double>(k + 1) * dt;
        while (sched_pos < schedule.size() && schedule[sched_pos] <= t + 1e-12) {
            snapshot(t);
            ++sched_pos;
        }
    }
    result.ensemble = std::move(ens);
    result.bias = std::move(bias);
    return result;
}

BootstrapReport bootstrap_bias_se(const ParticleEnsemble& ens, const ForceField& force,
                                  BiasMethod method, const BinnedBias& bias, int replicates,
                                  std::uint64_t seed) {
    if (replicates < 2) throw ContractViolation("bootstrap: need at least two replicates");
    const int n = ens.dimension;
    const int m = bias.m();
    const std::size_t count = ens.count();
    const std::size_t nb = bias.bin_count();

    std::vector<std::uint32_t> rbin(count);
    std::vector<double> rval(count * static_cast<std::size_t>(m));
    double f[kMaxDim];
    for (std::size_t i = 0; i < count; ++i) {
        std::span<const double> z(ens.positions.data() + i * static_cast<std::size_t>(n),
                                  static_cast<std::size_t>(n));
        rbin[i] = static_cast<std::uint32_t>(bias.bin_of(z));
        force.force_at(z, std::span<double>(f, static_cast<std::size_t>(n)));
        for (int a = 0; a < m; ++a) rval[i * static_cast<std::size_t>(m) + a] = -f[a];
    }

    CounterRng rng(seed, CounterRng::kBootstrap);
    double dev2_sum = 0.0;
    std::vector<long> counts(nb);
    std::vector<double> sums(nb * static_cast<std::size_t>(m));
    for (int r = 0; r < replicates; ++r) {
        std::fill(counts.begin(), counts.end(), 0);
        std::fill(sums.begin(), sums.end(), 0.0);
        for (std::size_t i = 0; i < count; ++i) {
            const std::size_t j = rng.uniform_index(static_cast<std::uint64_t>(r), i, 0, count);
            const std::size_t b = rbin[j];
            counts[b] += 1;
            for (int a = 0; a < m; ++a)
                sums[b * static_cast<std::size_t>(m) + a] += rval[j * static_cast<std::size_t>(m) + a];
        }
        BinnedBias rb(bias.bin_grid().resolution());
        rb.assign(counts, sums, method, &bias);
        VectorField diff = rb.b_hat();
        diff -= bias.b_hat();
        const double d = diff.norm_l2();
        dev2_sum += d * d;
    }
    return BootstrapReport{std::sqrt(dev2_sum / replicates), replicates};
}

namespace {

/** Regularized lower incomplete gamma P(a,x) by series (x < a+1). */
double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int i = 0; i < 500; ++i) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::fabs(del) < std::fabs(sum) * 1e-15) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

/** Regularized upper incomplete gamma Q(a,x) by continued fraction (x >= a+1). */
double gamma_q_cf(double a, double x) {
    const double fpmin = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / fpmin;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 500; ++i) {
        double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = b + an / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-15) break;
    }
    return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

} // namespace

double chi_squared_pvalue(double statistic, int dof) {
    if (!(statistic >= 0.0) || dof < 1)
        throw ContractViolation("chi-squared: need statistic >= 0 and dof >= 1");
    const double a = 0.5 * dof;
    const double x = 0.5 * statistic;
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
    return gamma_q_cf(a, x);
}

} // namespace abf
