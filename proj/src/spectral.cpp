#include "abf/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "abf/errors.hpp"

namespace abf::spectral {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

/**
 * Per-shape FFTW plan cache. Plans are created once per resolution vector on
 * owned aligned buffers (FFTW_ESTIMATE keeps planning deterministic) and every
 * execution copies through those buffers under the shape lock, which avoids
 * all alignment and input-destruction pitfalls of the new-array interface.
 */
class Fft {
public:
    static Fft& instance() {
        static Fft f;
        return f;
    }

    static std::size_t real_size(const std::vector<int>& dims) {
        std::size_t s = 1;
        for (int d : dims) s *= static_cast<std::size_t>(d);
        return s;
    }

    static std::size_t half_size(const std::vector<int>& dims) {
        std::size_t s = 1;
        for (std::size_t a = 0; a + 1 < dims.size(); ++a) s *= static_cast<std::size_t>(dims[a]);
        return s * static_cast<std::size_t>(dims.back() / 2 + 1);
    }

    void forward(const std::vector<int>& dims, const double* in, std::complex<double>* out) {
        Shape& s = shape(dims);
        std::lock_guard<std::mutex> lock(*s.mu);
        std::memcpy(s.rbuf, in, s.rn * sizeof(double));
        fftw_execute(s.fwd);
        std::memcpy(out, s.cbuf, s.cn * sizeof(fftw_complex));
    }

    /** Inverse transform normalized by 1/N. */
    void backward(const std::vector<int>& dims, const std::complex<double>* in, double* out) {
        Shape& s = shape(dims);
        std::lock_guard<std::mutex> lock(*s.mu);
        std::memcpy(s.cbuf, in, s.cn * sizeof(fftw_complex));
        fftw_execute(s.bwd);
        const double scale = 1.0 / static_cast<double>(s.rn);
        for (std::size_t i = 0; i < s.rn; ++i) out[i] = s.rbuf[i] * scale;
    }

private:
    struct Shape {
        fftw_plan fwd = nullptr;
        fftw_plan bwd = nullptr;
        double* rbuf = nullptr;
        fftw_complex* cbuf = nullptr;
        std::size_t rn = 0;
        std::size_t cn = 0;
        std::unique_ptr<std::mutex> mu;
    };

    Shape& shape(const std::vector<int>& dims) {
        std::lock_guard<std::mutex> lock(table_mu_);
        auto it = shapes_.find(dims);
        if (it != shapes_.end()) return it->second;
        Shape s;
        s.rn = real_size(dims);
        s.cn = half_size(dims);
        s.rbuf = fftw_alloc_real(s.rn);
        s.cbuf = fftw_alloc_complex(s.cn);
        s.mu = std::make_unique<std::mutex>();
        s.fwd = fftw_plan_dft_r2c(static_cast<int>(dims.size()), dims.data(), s.rbuf, s.cbuf,
                                  FFTW_ESTIMATE);
        s.bwd = fftw_plan_dft_c2r(static_cast<int>(dims.size()), dims.data(), s.cbuf, s.rbuf,
                                  FFTW_ESTIMATE);
        if (!s.fwd || !s.bwd) throw SolverFailure("fft: plan creation failed");
        return shapes_.emplace(dims, std::move(s)).first->second;
    }

    std::map<std::vector<int>, Shape> shapes_;
    std::mutex table_mu_;
};

/** Integer wavenumber of storage index i on an axis of resolution n. */
inline int wavenumber(int i, int n) { return i <= n / 2 ? i : i - n; }

/** Iterates the r2c half-spectrum, handing (flat index, k vector) to fn. */
template <typename Fn>
void for_each_mode(const std::vector<int>& dims, Fn&& fn) {
    const int d = static_cast<int>(dims.size());
    std::vector<int> cdims(dims.begin(), dims.end());
    cdims[d - 1] = dims[d - 1] / 2 + 1;
    std::size_t total = 1;
    for (int x : cdims) total *= static_cast<std::size_t>(x);
    std::vector<int> idx(d, 0);
    std::vector<int> k(d, 0);
    for (std::size_t flat = 0; flat < total; ++flat) {
        for (int a = 0; a < d; ++a) k[a] = wavenumber(idx[a], dims[a]);
        fn(flat, k);
        for (int a = d - 1; a >= 0; --a) {
            if (++idx[a] < cdims[a]) break;
            idx[a] = 0;
        }
    }
}

/** True when the mode hits an even axis's unpaired Nyquist frequency on axis a. */
inline bool nyquist_on_axis(const std::vector<int>& dims, const std::vector<int>& k, int a) {
    return dims[a] % 2 == 0 && k[a] == dims[a] / 2;
}

} // namespace

VectorField gradient(const ScalarField& f) {
    const TorusGrid& g = f.grid();
    const std::vector<int>& dims = g.resolution();
    const std::size_t hn = Fft::half_size(dims);
    std::vector<std::complex<double>> spec(hn), work(hn);
    Fft::instance().forward(dims, f.values().data(), spec.data());
    VectorField grad(g, g.n());
    for (int a = 0; a < g.n(); ++a) {
        for_each_mode(dims, [&](std::size_t i, const std::vector<int>& k) {
            // Odd derivative: the unpaired Nyquist mode has no consistent slope.
            if (nyquist_on_axis(dims, k, a)) {
                work[i] = 0.0;
            } else {
                work[i] = spec[i] * std::complex<double>(0.0, kTwoPi * k[a]);
            }
        });
        Fft::instance().backward(dims, work.data(), grad.component(a).data());
    }
    return grad;
}

ScalarField divergence(const VectorField& v) {
    const TorusGrid& g = v.grid();
    if (v.dim() != g.n()) throw ContractViolation("divergence: component count must match grid dimension");
    const std::vector<int>& dims = g.resolution();
    const std::size_t hn = Fft::half_size(dims);
    std::vector<std::complex<double>> acc(hn, 0.0), spec(hn);
    for (int a = 0; a < g.n(); ++a) {
        Fft::instance().forward(dims, v.component(a).data(), spec.data());
        for_each_mode(dims, [&](std::size_t i, const std::vector<int>& k) {
            if (!nyquist_on_axis(dims, k, a))
                acc[i] += spec[i] * std::complex<double>(0.0, kTwoPi * k[a]);
        });
    }
    ScalarField out(g);
    Fft::instance().backward(dims, acc.data(), out.values().data());
    return out;
}

ScalarField laplacian(const ScalarField& f) {
    const TorusGrid& g = f.grid();
    const std::vector<int>& dims = g.resolution();
    std::vector<std::complex<double>> spec(Fft::half_size(dims));
    Fft::instance().forward(dims, f.values().data(), spec.data());
    for_each_mode(dims, [&](std::size_t i, const std::vector<int>& k) {
        double k2 = 0.0;
        for (int ka : k) k2 += static_cast<double>(ka) * ka;
        spec[i] *= -kTwoPi * kTwoPi * k2;
    });
    ScalarField out(g);
    Fft::instance().backward(dims, spec.data(), out.values().data());
    return out;
}

void heat_inplace(ScalarField& f, double nu_tau) {
    if (nu_tau < 0.0) throw ContractViolation("heat: negative diffusion time");
    if (nu_tau == 0.0) return;
    const std::vector<int>& dims = f.grid().resolution();
    std::vector<std::complex<double>> spec(Fft::half_size(dims));
    Fft::instance().forward(dims, f.values().data(), spec.data());
    for_each_mode(dims, [&](std::size_t i, const std::vector<int>& k) {
        double k2 = 0.0;
        for (int ka : k) k2 += static_cast<double>(ka) * ka;
        spec[i] *= std::exp(-kTwoPi * kTwoPi * k2 * nu_tau);
    });
    Fft::instance().backward(dims, spec.data(), f.values().data());
}

ScalarField inverse_laplacian(const ScalarField& f) {
    const std::vector<int>& dims = f.grid().resolution();
    std::vector<std::complex<double>> spec(Fft::half_size(dims));
    Fft::instance().forward(dims, f.values().data(), spec.data());
    for_each_mode(dims, [&](std::size_t i, const std::vector<int>& k) {
        double k2 = 0.0;
        for (int ka : k) k2 += static_cast<double>(ka) * ka;
        spec[i] = k2 == 0.0 ? 0.0 : spec[i] / (-kTwoPi * kTwoPi * k2);
    });
    ScalarField out(f.grid());
    Fft::instance().backward(dims, spec.data(), out.values().data());
    return out;
}

ScalarField roundtrip(const ScalarField& f) {
    const std::vector<int>& dims = f.grid().resolution();
    std::vector<std::complex<double>> spec(Fft::half_size(dims));
    Fft::instance().forward(dims, f.values().data(), spec.data());
    ScalarField out(f.grid());
    Fft::instance().backward(dims, spec.data(), out.values().data());
    return out;
}

namespace {

/** One representative per +-k pair: first nonzero component positive. */
bool canonical_mode(const std::vector<int>& k) {
    for (int ka : k) {
        if (ka > 0) return true;
        if (ka < 0) return false;
    }
    return false;
}

void add_random_modes(ScalarField& f, int max_mode, const CounterRng& rng, std::uint64_t stream) {
    const TorusGrid& g = f.grid();
    const int d = g.n();
    const std::vector<int>& res = g.resolution();
    std::vector<int> k(d, -max_mode);
    std::uint64_t mode_id = 0;
    std::vector<std::vector<double>> angle(d);
    std::vector<int> idx(d);
    while (true) {
        if (canonical_mode(k)) {
            auto gg = rng.gaussians(stream, mode_id, 0);
            auto uu = rng.uniforms(stream, mode_id, 1);
            const double amp = gg[0];
            const double phase = kTwoPi * uu[0];
            for (int a = 0; a < d; ++a) {
                angle[a].assign(res[a], 0.0);
                for (int i = 0; i < res[a]; ++i)
                    angle[a][i] = kTwoPi * k[a] * (static_cast<double>(i) / res[a]);
            }
            std::fill(idx.begin(), idx.end(), 0);
            for (std::size_t i = 0; i < g.size(); ++i) {
                double arg = phase;
                for (int a = 0; a < d; ++a) arg += angle[a][idx[a]];
                f[i] += amp * std::cos(arg);
                for (int a = d - 1; a >= 0; --a) {
                    if (++idx[a] < res[a]) break;
                    idx[a] = 0;
                }
            }
            ++mode_id;
        }
        int a = d - 1;
        while (a >= 0 && ++k[a] > max_mode) k[a--] = -max_mode;
        if (a < 0) break;
    }
}

} // namespace

ScalarField random_trig_poly(const TorusGrid& grid, int max_mode, std::uint64_t seed,
                             std::uint64_t stream) {
    if (max_mode < 1) throw ContractViolation("random_trig_poly: need max_mode >= 1");
    ScalarField f(grid);
    CounterRng rng(seed, CounterRng::kFieldSynthesis);
    add_random_modes(f, max_mode, rng, stream * 16);
    return f;
}

VectorField random_trig_vector(const TorusGrid& grid, int max_mode, std::uint64_t seed,
                               std::uint64_t stream) {
    VectorField v(grid, grid.n());
    CounterRng rng(seed, CounterRng::kFieldSynthesis);
    for (int a = 0; a < grid.n(); ++a) {
        ScalarField f(grid);
        add_random_modes(f, max_mode, rng, stream * 16 + 1 + static_cast<std::uint64_t>(a));
        std::copy(f.values().begin(), f.values().end(), v.component(a).begin());
    }
    return v;
}

} // namespace abf::spectral
