#include "qpr/scsa.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>

#include "qpr/error.hpp"

namespace qpr::scsa {

namespace {

constexpr int kMaxSweepsPerEigenvalue = 64;
constexpr int kInverseIterations = 3;

double one_norm(const Tridiagonal& t) {
    const std::size_t n = t.size();
    double norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double col = std::abs(t.diag[i]);
        if (i > 0) col += std::abs(t.off[i - 1]);
        if (i + 1 < n) col += std::abs(t.off[i]);
        norm = std::max(norm, col);
    }
    return norm;
}

// LU factorization with partial pivoting of (t - shift*I), solved in place.
// Zero pivots are replaced by `tiny`, which is what makes the nearly singular
// shifted system usable for inverse iteration.
class ShiftedTridiagonalLU {
public:
    ShiftedTridiagonalLU(const Tridiagonal& t, double shift, double tiny)
        : n_(t.size()), lower_(t.off), diag_(t.diag), upper_(t.off), upper2_(n_, 0.0), swapped_(n_, false) {
        for (auto& d : diag_) d -= shift;
        if (n_ == 0) return;
        for (std::size_t i = 0; i + 1 < n_; ++i) {
            if (std::abs(diag_[i]) >= std::abs(lower_[i])) {
                if (diag_[i] == 0.0) diag_[i] = tiny;
                const double fact = lower_[i] / diag_[i];
                lower_[i] = fact;
                diag_[i + 1] -= fact * upper_[i];
            } else {
                const double fact = diag_[i] / lower_[i];
                diag_[i] = lower_[i];
                lower_[i] = fact;
                const double temp = upper_[i];
                upper_[i] = diag_[i + 1];
                diag_[i + 1] = temp - fact * diag_[i + 1];
                if (i + 2 < n_) {
                    upper2_[i] = upper_[i + 1];
                    upper_[i + 1] = -fact * upper_[i + 1];
                }
                swapped_[i] = true;
            }
        }
        if (diag_[n_ - 1] == 0.0) diag_[n_ - 1] = tiny;
    }

    void solve(std::vector<double>& b) const {
        if (n_ == 0) return;
        for (std::size_t i = 0; i + 1 < n_; ++i) {
            if (!swapped_[i]) {
                b[i + 1] -= lower_[i] * b[i];
            } else {
                const double temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - lower_[i] * b[i];
            }
        }
        for (std::size_t k = n_; k-- > 0;) {
            double v = b[k];
            if (k + 1 < n_) v -= upper_[k] * b[k + 1];
            if (k + 2 < n_) v -= upper2_[k] * b[k + 2];
            b[k] = v / diag_[k];
        }
    }

private:
    std::size_t n_;
    std::vector<double> lower_, diag_, upper_, upper2_;
    std::vector<bool> swapped_;
};

void normalize_euclidean(std::vector<double>& v) {
    double scale = 0.0;
    for (double x : v) scale = std::max(scale, std::abs(x));
    if (scale == 0.0) return;
    double ss = 0.0;
    for (double x : v) ss += (x / scale) * (x / scale);
    const double norm = scale * std::sqrt(ss);
    for (double& x : v) x /= norm;
}

void project_out(std::vector<double>& v, const std::vector<std::vector<double>>& basis) {
    for (const auto& q : basis) {
        const double dot = std::inner_product(v.begin(), v.end(), q.begin(), 0.0);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] -= dot * q[i];
    }
}

}  // namespace

void Signal::validate() const {
    if (samples.size() < 2) {
        throw Error("SignalTooShort", "signal needs at least 2 samples, got " + std::to_string(samples.size()));
    }
    if (!(fs > 0.0) || !std::isfinite(fs)) {
        throw Error("InvalidSamplingRate", "sampling rate must be positive and finite");
    }
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (!std::isfinite(samples[i])) {
            throw Error("NonFiniteSample", "sample " + std::to_string(i) + " is not finite");
        }
    }
}

Tridiagonal build_operator(const Signal& signal, double h) {
    if (!(h > 0.0) || !std::isfinite(h)) {
        throw Error("NonPositiveH", "semi-classical parameter h must be positive, got " + std::to_string(h));
    }
    signal.validate();
    const double dt = signal.dt();
    const double kinetic = h * h / (dt * dt);
    const std::size_t n = signal.size();

    Tridiagonal t;
    t.diag.resize(n);
    t.off.assign(n - 1, -kinetic);
    for (std::size_t i = 0; i < n; ++i) t.diag[i] = 2.0 * kinetic - signal.samples[i];
    return t;
}

std::vector<double> tridiagonal_eigenvalues(const Tridiagonal& t) {
    const std::size_t n = t.size();
    std::vector<double> d = t.diag;
    std::vector<double> e(n, 0.0);
    std::copy(t.off.begin(), t.off.end(), e.begin());

    for (std::size_t l = 0; l < n; ++l) {
        int sweeps = 0;
        std::size_t m;
        do {
            for (m = l; m + 1 < n; ++m) {
                const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
                if (std::abs(e[m]) + dd == dd) break;
            }
            if (m != l) {
                if (sweeps++ == kMaxSweepsPerEigenvalue) {
                    throw Error("EigenSolverNoConvergence",
                                "implicit QL exceeded " + std::to_string(kMaxSweepsPerEigenvalue) +
                                    " sweeps at eigenvalue index " + std::to_string(l));
                }
                double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
                double r = std::hypot(g, 1.0);
                g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
                double s = 1.0, c = 1.0, p = 0.0;
                bool deflated = false;
                for (std::size_t i = m; i-- > l;) {
                    const double f = s * e[i];
                    const double b = c * e[i];
                    r = std::hypot(f, g);
                    e[i + 1] = r;
                    if (r == 0.0) {
                        d[i + 1] -= p;
                        e[m] = 0.0;
                        deflated = true;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[i + 1] - p;
                    r = (d[i] - g) * s + 2.0 * c * b;
                    p = s * r;
                    d[i + 1] = g + p;
                    g = c * r - b;
                }
                if (deflated) continue;
                d[l] -= p;
                e[l] = g;
                e[m] = 0.0;
            }
        } while (m != l);
    }
    std::sort(d.begin(), d.end());
    return d;
}

std::vector<double> tridiagonal_eigenvector(const Tridiagonal& t, double eigenvalue,
                                            const std::vector<std::vector<double>>& previous) {
    const std::size_t n = t.size();
    const double tiny = std::numeric_limits<double>::epsilon() * std::max(one_norm(t), 1.0);
    const ShiftedTridiagonalLU lu(t, eigenvalue, tiny);

    // Fixed pseudo-random start so results are reproducible bit for bit.
    std::vector<double> v(n);
    std::uint64_t state = 0x9E3779B97F4A7C15ull;
    for (double& x : v) {
        state = state * 6364136223846793005ull + 1442695040888963407ull;
        x = static_cast<double>(state >> 11) * 0x1.0p-53 * 2.0 - 1.0;
    }
    project_out(v, previous);
    normalize_euclidean(v);

    for (int it = 0; it < kInverseIterations; ++it) {
        lu.solve(v);
        normalize_euclidean(v);
        project_out(v, previous);
        normalize_euclidean(v);
    }

    std::size_t peak = 0;
    for (std::size_t i = 1; i < n; ++i) {
        if (std::abs(v[i]) > std::abs(v[peak])) peak = i;
    }
    if (n > 0 && v[peak] < 0.0) {
        for (double& x : v) x = -x;
    }
    return v;
}

SchrodingerSpectrum solve_negative_spectrum(const Tridiagonal& op, double h, double dt) {
    if (!(dt > 0.0)) throw Error("InvalidSamplingRate", "grid spacing must be positive");
    const std::vector<double> eigenvalues = tridiagonal_eigenvalues(op);

    SchrodingerSpectrum spectrum;
    spectrum.h = h;
    spectrum.dt = dt;

    std::vector<double> negative;
    for (double lambda : eigenvalues) {
        if (lambda < 0.0) negative.push_back(lambda);  // ascending lambda == descending kappa
    }

    const std::size_t n = op.size();
    const double separation = 10.0 * std::numeric_limits<double>::epsilon() * std::max(one_norm(op), 1.0);
    spectrum.eigenfunctions = Matrix(negative.size(), n);
    std::vector<std::vector<double>> found;
    found.reserve(negative.size());
    double last_shift = -std::numeric_limits<double>::infinity();
    const double inv_sqrt_dt = 1.0 / std::sqrt(dt);

    for (std::size_t k = 0; k < negative.size(); ++k) {
        // Coincident eigenvalues still need distinct shifts.
        double shift = negative[k];
        if (shift - last_shift < separation) shift = last_shift + separation;
        last_shift = shift;

        std::vector<double> v = tridiagonal_eigenvector(op, shift, found);
        auto row = spectrum.eigenfunctions.row(k);
        for (std::size_t i = 0; i < n; ++i) row[i] = v[i] * inv_sqrt_dt;
        found.push_back(std::move(v));
        spectrum.kappas.push_back(std::sqrt(-negative[k]));
    }
    return spectrum;
}

ComponentStack components_from_spectrum(const SchrodingerSpectrum& spectrum, std::size_t n_components) {
    if (spectrum.count() < n_components) throw InsufficientSpectrum(spectrum.count(), n_components);
    const std::size_t n = spectrum.eigenfunctions.cols;

    ComponentStack stack;
    stack.h = spectrum.h;
    stack.components = Matrix(n_components, n);
    stack.reconstruction.assign(n, 0.0);
    for (std::size_t k = 0; k < n_components; ++k) {
        const double scale = 4.0 * spectrum.h * spectrum.kappas[k];
        const auto psi = spectrum.eigenfunctions.row(k);
        auto out = stack.components.row(k);
        for (std::size_t i = 0; i < n; ++i) out[i] = scale * psi[i] * psi[i];
    }
    for (std::size_t k = 0; k < n_components; ++k) {
        const auto comp = stack.components.row(k);
        for (std::size_t i = 0; i < n; ++i) stack.reconstruction[i] += comp[i];
    }
    return stack;
}

ComponentStack scsa_reconstruction(double h, const Signal& signal, std::size_t n_components) {
    if (n_components == 0) throw Error("InvalidDepth", "requested decomposition depth must be >= 1");
    const Tridiagonal op = build_operator(signal, h);
    const SchrodingerSpectrum spectrum = solve_negative_spectrum(op, h, signal.dt());
    return components_from_spectrum(spectrum, n_components);
}

}  // namespace qpr::scsa
