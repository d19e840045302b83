#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace fdsmooth {

// Compactly supported smoothing kernels on [-1, 1], all integrating to 1.
enum class Kernel { Epanechnikov, Uniform, Triangular };

inline double kernel_eval(Kernel k, double u) noexcept {
    const double a = std::fabs(u);
    if (a > 1.0) return 0.0;
#ifdef FDSMOOTH_FAULT_KERNEL_AT_ZERO
    // Deliberate corruption used by the fault-injection self-check to prove
    // the acceptance oracles have teeth. Never define this in real builds.
    if (u == 0.0) return 0.7;
#endif
    switch (k) {
        case Kernel::Epanechnikov: return 0.75 * (1.0 - u * u);
        case Kernel::Uniform:      return 0.5;
        case Kernel::Triangular:   return 1.0 - a;
    }
    return 0.0;
}

// K_h(x) = K(x/h)/h
inline double kernel_eval_scaled(Kernel k, double x, double h) noexcept {
    return kernel_eval(k, x / h) / h;
}

inline std::string kernel_name(Kernel k) {
    switch (k) {
        case Kernel::Epanechnikov: return "epanechnikov";
        case Kernel::Uniform:      return "uniform";
        case Kernel::Triangular:   return "triangular";
    }
    return "?";
}

inline Kernel kernel_from_name(const std::string& s) {
    if (s == "epanechnikov") return Kernel::Epanechnikov;
    if (s == "uniform") return Kernel::Uniform;
    if (s == "triangular") return Kernel::Triangular;
    throw std::invalid_argument("unknown kernel: " + s);
}

}  // namespace fdsmooth
