#pragma once

#include <functional>
#include <utility>
#include <vector>

namespace chaoslab {

// Probabilists' Hermite polynomial H_q(x): H_0 = 1, H_1 = x,
// H_{q+1}(x) = x H_q(x) - q H_{q-1}(x).  E[H_p(N) H_q(N)] = delta_{pq} q!.
double hermite_eval(int q, double x);

// Monic Tchebycheff polynomial of the second kind on [-2, 2]:
// U_0 = 1, U_1 = x, U_{k+1}(x) = x U_k(x) - U_{k-1}(x).  These are
// orthonormal under the standard (unit-variance) semicircle law.
double tchebycheff_eval(int k, double x);

// Gauss-Hermite rule for the standard normal weight: returns n pairs
// (node, weight) with sum of weights equal to 1, so
// E[f(N)] ~= sum_i w_i f(x_i), exact for polynomials of degree < 2n.
std::vector<std::pair<double, double>> gauss_hermite_rule(int n);

// A function of a standard normal variable, stored by its Hermite
// coefficients: phi(x) = sum_q a[q] H_q(x).
struct HermiteSeries {
    std::vector<double> a;  // a[q] multiplies H_q

    int qmax() const { return static_cast<int>(a.size()) - 1; }
    double eval(double x) const;
};

// Projects phi onto H_0..H_qmax: a_q = E[phi(N) H_q(N)] / q!.
// `nodes` = 0 selects the default rule size 2*qmax + 16.
HermiteSeries hermite_expand(const std::function<double(double)>& phi, int qmax,
                             int nodes = 0);

// Index of the first coefficient exceeding eps relative to the largest
// coefficient magnitude; -1 if every coefficient is negligible.
int hermite_rank(const HermiteSeries& s, double eps = 1e-10);

// sum_q q! a_q^2 = E[phi(N)^2] when the expansion is complete.
double l2_norm_sq(const HermiteSeries& s);

// Ornstein-Uhlenbeck semigroup at time t >= 0 acting coefficientwise:
// a_q -> exp(-q t) a_q.
HermiteSeries ou_apply(const HermiteSeries& s, double t);

}  // namespace chaoslab
