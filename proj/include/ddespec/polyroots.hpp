#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "charfn.hpp"

namespace ddespec {

/// All roots of a polynomial (ascending coefficients) by Aberth-Ehrlich
/// simultaneous iteration, followed by a Newton polish of each root.
/// Exact zero high-order coefficients are ignored; exact zero low-order
/// coefficients give roots at x = 0.
inline std::vector<Complex> polynomial_roots(std::vector<Complex> c) {
    while (!c.empty() && c.back() == Complex(0.0)) c.pop_back();
    std::vector<Complex> roots;
    std::size_t zeros = 0;
    while (zeros < c.size() && c[zeros] == Complex(0.0)) ++zeros;
    roots.assign(zeros, Complex(0.0));
    c.erase(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(zeros));
    if (c.size() <= 1) return roots;
    const std::size_t m = c.size() - 1;
    if (m == 1) {
        roots.push_back(-c[0] / c[1]);
        return roots;
    }

    PolyC p{c, false};
    const double radius = std::pow(std::abs(c[0] / c[m]), 1.0 / static_cast<double>(m));
    std::vector<Complex> z(m);
    for (std::size_t k = 0; k < m; ++k)
        z[k] = std::polar(radius, 2.0 * std::numbers::pi * (static_cast<double>(k) + 0.25) / static_cast<double>(m) + 0.4);

    for (int iter = 0; iter < 500; ++iter) {
        double worst = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
            const Complex pk = p(z[k]);
            if (pk == Complex(0.0)) continue;
            const Complex ratio = pk / p.derivative(z[k]);
            Complex repulsion = 0.0;
            for (std::size_t j = 0; j < m; ++j)
                if (j != k) repulsion += 1.0 / (z[k] - z[j]);
            const Complex step = ratio / (1.0 - ratio * repulsion);
            z[k] -= step;
            worst = std::max(worst, std::abs(step) / std::max(1e-300, std::abs(z[k])));
        }
        if (worst < 1e-15) break;
    }
    for (auto& root : z) {
        for (int it = 0; it < 3; ++it) {
            const Complex dp = p.derivative(root);
            if (dp == Complex(0.0)) break;
            const Complex value = p(root);
            const Complex next = root - value / dp;
            if (!std::isfinite(std::abs(next)) || !(std::abs(p(next)) < std::abs(value))) break;
            root = next;
        }
        roots.push_back(root);
    }
    return roots;
}

}  // namespace ddespec
