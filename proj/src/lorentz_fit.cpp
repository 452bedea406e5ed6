#include "spincell/lorentz_fit.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>

namespace spincell {

namespace {

using cd = std::complex<double>;
constexpr double two_pi = 2.0 * phys::pi;

struct Problem {
    std::vector<double> f, xs, ys;
};

Problem gather(const RfSpectrum& s) {
    s.validate();
    Problem p;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!s.flags.empty() && s.flags[i]) continue;
        if (std::isnan(s.x[i]) || std::isnan(s.y[i])) continue;
        p.f.push_back(s.frequencies_hz[i]);
        p.xs.push_back(s.x[i]);
        p.ys.push_back(s.y[i]);
    }
    if (p.f.size() < 8) throw std::invalid_argument("too few valid points to fit");
    return p;
}

cd model_point(const Eigen::VectorXd& th, int n, double f) {
    cd z{0, 0};
    for (int k = 0; k < n; ++k) {
        double a = th[4 * k], phi = th[4 * k + 1], c = th[4 * k + 2], w = th[4 * k + 3];
        double gam = phys::pi * w;
        cd l = gam / cd(gam, two_pi * (f - c));
        z += a * std::polar(1.0, phi) * l;
    }
    return z;
}

// residual r = data - model, jacobian of the model (so J^T r is the descent direction)
double assemble(const Problem& p, const Eigen::VectorXd& th, int n, Eigen::VectorXd& r,
                Eigen::MatrixXd& jac) {
    const int m = int(p.f.size());
    r.resize(2 * m);
    jac.resize(2 * m, 4 * n);
    for (int j = 0; j < m; ++j) {
        cd z{0, 0};
        for (int k = 0; k < n; ++k) {
            double a = th[4 * k], phi = th[4 * k + 1], c = th[4 * k + 2], w = th[4 * k + 3];
            double gam = phys::pi * w;
            cd den = cd(gam, two_pi * (p.f[j] - c));
            cd l = gam / den;
            cd e = std::polar(1.0, phi);
            cd base = a * e * l;
            z += base;
            cd d_a = e * l;
            cd d_phi = cd(0, 1) * base;
            cd d_c = a * e * cd(0, two_pi) * gam / (den * den);
            cd d_w = a * e * cd(0, phys::pi) * (two_pi * (p.f[j] - c)) / (den * den);
            jac(j, 4 * k) = d_a.real();        jac(m + j, 4 * k) = d_a.imag();
            jac(j, 4 * k + 1) = d_phi.real();  jac(m + j, 4 * k + 1) = d_phi.imag();
            jac(j, 4 * k + 2) = d_c.real();    jac(m + j, 4 * k + 2) = d_c.imag();
            jac(j, 4 * k + 3) = d_w.real();    jac(m + j, 4 * k + 3) = d_w.imag();
        }
        r[j] = p.xs[j] - z.real();
        r[m + j] = p.ys[j] - z.imag();
    }
    return r.squaredNorm();
}

double cost_only(const Problem& p, const Eigen::VectorXd& th, int n) {
    double c = 0;
    const int m = int(p.f.size());
    for (int j = 0; j < m; ++j) {
        cd z = model_point(th, n, p.f[j]);
        double rx = p.xs[j] - z.real(), ry = p.ys[j] - z.imag();
        c += rx * rx + ry * ry;
    }
    return c;
}

std::vector<LorentzComponent> self_seed(const Problem& p, int n, double span) {
    int m = int(p.f.size());
    int jmax = 0;
    double best = -1;
    std::vector<double> mag(m);
    for (int j = 0; j < m; ++j) {
        mag[j] = std::hypot(p.xs[j], p.ys[j]);
        if (mag[j] > best) { best = mag[j]; jmax = j; }
    }
    double half = best * best / 2.0;
    double fl = p.f.front(), fr = p.f.back();
    for (int j = jmax; j > 0; --j)
        if (mag[j - 1] * mag[j - 1] < half) {
            double t = (half - mag[j] * mag[j]) / (mag[j - 1] * mag[j - 1] - mag[j] * mag[j]);
            fl = p.f[j] + t * (p.f[j - 1] - p.f[j]);
            break;
        }
    for (int j = jmax; j < m - 1; ++j)
        if (mag[j + 1] * mag[j + 1] < half) {
            double t = (half - mag[j] * mag[j]) / (mag[j + 1] * mag[j + 1] - mag[j] * mag[j]);
            fr = p.f[j] + t * (p.f[j + 1] - p.f[j]);
            break;
        }
    double w0 = fr - fl;
    if (!(w0 > 0) || w0 >= span) w0 = span / 4.0;
    LorentzComponent c1;
    c1.amplitude = best;
    c1.center_hz = p.f[jmax];
    c1.fwhm_hz = w0;
    c1.phase = std::atan2(p.ys[jmax], p.xs[jmax]);
    std::vector<LorentzComponent> seed{c1};
    if (n == 2) {
        LorentzComponent c2 = c1;
        c2.amplitude = 0.3 * c1.amplitude;
        c2.fwhm_hz = 3.0 * c1.fwhm_hz;
        seed.push_back(c2);
    }
    return seed;
}

void normalize(Eigen::VectorXd& th, int n) {
    for (int k = 0; k < n; ++k) {
        if (th[4 * k] < 0) {
            th[4 * k] = -th[4 * k];
            th[4 * k + 1] += phys::pi;
        }
        th[4 * k + 3] = std::abs(th[4 * k + 3]);
        th[4 * k + 1] = std::remainder(th[4 * k + 1], two_pi);
    }
}

}  // namespace

const LorentzComponent& LorentzianFit::main() const {
    if (components.empty()) throw std::logic_error("empty fit");
    std::size_t best = 0;
    for (std::size_t i = 1; i < components.size(); ++i)
        if (std::abs(components[i].amplitude) > std::abs(components[best].amplitude)) best = i;
    return components[best];
}

LorentzianFit fit_lorentzian(const RfSpectrum& spectrum, int n_components,
                             const std::vector<LorentzComponent>* initial_guess) {
    if (n_components != 1 && n_components != 2)
        throw std::invalid_argument("n_components must be 1 or 2");
    Problem p = gather(spectrum);
    const int n = n_components;
    double span = p.f.back() - p.f.front();

    std::vector<LorentzComponent> seed =
        initial_guess && int(initial_guess->size()) == n ? *initial_guess : self_seed(p, n, span);
    Eigen::VectorXd th(4 * n);
    for (int k = 0; k < n; ++k) {
        th[4 * k] = seed[k].amplitude;
        th[4 * k + 1] = seed[k].phase;
        th[4 * k + 2] = seed[k].center_hz;
        th[4 * k + 3] = std::max(seed[k].fwhm_hz, span * 1e-6);
    }

    Eigen::VectorXd r;
    Eigen::MatrixXd jac;
    double cost = assemble(p, th, n, r, jac);
    double lambda = 1e-3;
    LorentzianFit fit;
    const int max_iter = 200;
    int it = 0;
    for (; it < max_iter; ++it) {
        Eigen::MatrixXd jtj = jac.transpose() * jac;
        Eigen::VectorXd g = jac.transpose() * r;
        if (g.lpNorm<Eigen::Infinity>() < 1e-12 * (1.0 + cost)) {
            fit.converged = true;
            break;
        }
        Eigen::MatrixXd a = jtj;
        for (int d = 0; d < a.rows(); ++d)
            a(d, d) = jtj(d, d) * (1.0 + lambda) + 1e-300;
        Eigen::VectorXd step = a.ldlt().solve(g);
        double rel = 0;
        for (int d = 0; d < step.size(); ++d)
            rel = std::max(rel, std::abs(step[d]) / (std::abs(th[d]) + 1e-300));
        if (rel < 1e-8 && g.lpNorm<Eigen::Infinity>() < 1e-8 * (1.0 + cost)) {
            fit.converged = true;  // at the optimum; do not move
            break;
        }
        Eigen::VectorXd cand = th + step;
        double cand_cost = cost_only(p, cand, n);
        if (cand_cost < cost) {
            th = cand;
            normalize(th, n);
            cost = assemble(p, th, n, r, jac);
            lambda = std::max(lambda * 0.1, 1e-12);
        } else {
            lambda *= 10.0;
            if (lambda > 1e12) break;
        }
    }
    fit.iterations = it;

    const int m = int(p.f.size());
    fit.residual_rms = std::sqrt(cost / (2.0 * m));
    fit.components.resize(n);
    for (int k = 0; k < n; ++k) {
        fit.components[k].amplitude = th[4 * k];
        fit.components[k].phase = th[4 * k + 1];
        fit.components[k].center_hz = th[4 * k + 2];
        fit.components[k].fwhm_hz = th[4 * k + 3];
    }

    double data_peak = 0;
    for (int j = 0; j < m; ++j) data_peak = std::max(data_peak, std::hypot(p.xs[j], p.ys[j]));
    if (fit.main().amplitude <= 1e3 * std::numeric_limits<double>::epsilon() * std::max(1.0, data_peak))
        fit.degenerate = true;
    if (n == 2) {
        const auto& a = fit.components[0];
        const auto& b = fit.components[1];
        double wmax = std::max(a.fwhm_hz, b.fwhm_hz);
        if (std::abs(a.center_hz - b.center_hz) < 1e-3 * span &&
            std::abs(a.fwhm_hz - b.fwhm_hz) < 0.05 * wmax)
            fit.degenerate = true;
    }

    // covariance = variance * (J^T J)^-1 at the solution
    Eigen::MatrixXd jtj = jac.transpose() * jac;
    double dof = std::max(1, 2 * m - 4 * n);
    Eigen::MatrixXd cov = (cost / dof) * jtj.completeOrthogonalDecomposition().pseudoInverse();
    fit.covariance.assign(cov.data(), cov.data() + cov.size());
    return fit;
}

int select_model(const RfSpectrum& spectrum, double residual_factor) {
    LorentzianFit f1 = fit_lorentzian(spectrum, 1);
    LorentzianFit f2 = fit_lorentzian(spectrum, 2);
    if (!f1.converged && !f2.converged)
        throw std::runtime_error("model selection failed: neither fit converged");
    if (f2.converged && !f2.degenerate &&
        f1.residual_rms > residual_factor * f2.residual_rms)
        return 2;
    return 1;
}

}  // namespace spincell
