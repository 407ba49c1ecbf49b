#pragma once

// Semi-classical signal analysis: the signal is used as the attractive
// potential of a 1-D Schrodinger operator  H = -h^2 d^2/dt^2 - y(t); the
// bound states (negative eigenvalues) of H give a non-negative series
// expansion  y_h(t) = 4 h sum_n kappa_n psi_n(t)^2.

#include <cstddef>
#include <vector>

#include "qpr/matrix.hpp"

namespace qpr::scsa {

struct Signal {
    std::vector<double> samples;
    double fs = 1.0;  // Hz

    double dt() const { return 1.0 / fs; }
    std::size_t size() const { return samples.size(); }

    // Throws SignalTooShort, NonFiniteSample or InvalidSamplingRate.
    void validate() const;
};

// Symmetric tridiagonal matrix; off[i] couples rows i and i+1.
struct Tridiagonal {
    std::vector<double> diag;
    std::vector<double> off;

    std::size_t size() const { return diag.size(); }
};

struct SchrodingerSpectrum {
    double h = 0.0;
    double dt = 0.0;
    std::vector<double> kappas;  // strictly positive, descending
    Matrix eigenfunctions;       // row n = psi_n on the signal grid, sum(psi^2) dt = 1

    std::size_t count() const { return kappas.size(); }
};

struct ComponentStack {
    double h = 0.0;
    Matrix components;                 // row n = 4 h kappa_n psi_n^2
    std::vector<double> reconstruction;  // column sums of components
};

// Three-point central difference for -h^2 d^2/dt^2 with Dirichlet boundaries,
// minus the potential on the diagonal.
Tridiagonal build_operator(const Signal& signal, double h);

// All eigenvalues of a symmetric tridiagonal matrix, ascending. Implicit-shift
// QL with at most 64 sweeps per eigenvalue.
std::vector<double> tridiagonal_eigenvalues(const Tridiagonal& t);

// Eigenvector of t for an (accurately known) eigenvalue, unit Euclidean norm.
// Vectors in `previous` are projected out on every iteration, which keeps
// eigenvectors of clustered eigenvalues mutually orthogonal.
std::vector<double> tridiagonal_eigenvector(const Tridiagonal& t, double eigenvalue,
                                            const std::vector<std::vector<double>>& previous);

SchrodingerSpectrum solve_negative_spectrum(const Tridiagonal& op, double h, double dt);

// Throws InsufficientSpectrum when fewer than n_components bound states exist.
ComponentStack scsa_reconstruction(double h, const Signal& signal, std::size_t n_components);

// Stack built from the leading n_components rows of an already solved spectrum.
ComponentStack components_from_spectrum(const SchrodingerSpectrum& spectrum,
                                        std::size_t n_components);

}  // namespace qpr::scsa
