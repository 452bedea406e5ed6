#pragma once
#include <array>
#include <vector>

#include "spincell/spectrum.hpp"

namespace spincell {

struct LorentzComponent {
    double center_hz = 0;
    double fwhm_hz = 0;
    double amplitude = 0;  // complex magnitude at line center
    double phase = 0;      // rad
};

struct LorentzianFit {
    std::vector<LorentzComponent> components;  // 1 or 2
    double residual_rms = 0;
    bool converged = false;
    bool degenerate = false;
    int iterations = 0;
    std::vector<double> covariance;  // row-major (4n x 4n)

    const LorentzComponent& main() const;  // widest-amplitude component
};

// complex Levenberg-Marquardt fit of n_components absorptive Lorentzians.
// Self-seeds from the |X+iY| peak when no guess is given.
LorentzianFit fit_lorentzian(const RfSpectrum& spectrum, int n_components,
                             const std::vector<LorentzComponent>* initial_guess = nullptr);

// 1 unless the two-component fit is clearly better (residual factor) and
// non-degenerate
int select_model(const RfSpectrum& spectrum, double residual_factor = 1.3);

}  // namespace spincell
