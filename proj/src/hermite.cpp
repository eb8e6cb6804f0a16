#include "chaoslab/hermite.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "chaoslab/errors.hpp"
#include "chaoslab/special.hpp"

namespace chaoslab {

double hermite_eval(int q, double x) {
    if (q < 0) throw precondition_error("hermite_eval: q must be >= 0");
    if (q == 0) return 1.0;
    double prev = 1.0, cur = x;
    for (int k = 1; k < q; ++k) {
        const double next = x * cur - k * prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

double tchebycheff_eval(int k, double x) {
    if (k < 0) throw precondition_error("tchebycheff_eval: k must be >= 0");
    if (k == 0) return 1.0;
    double prev = 1.0, cur = x;
    for (int j = 1; j < k; ++j) {
        const double next = x * cur - prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

std::vector<std::pair<double, double>> gauss_hermite_rule(int n) {
    if (n < 1 || n > 512)
        throw precondition_error("gauss_hermite_rule: n must lie in [1, 512]");
    // Golub-Welsch on the physicists' weight exp(-t^2): the Jacobi matrix has
    // zero diagonal and off-diagonal sqrt(k/2).  Nodes for the normal weight
    // are sqrt(2) t_i; normalized weights are the squared first eigenvector
    // components (total mass 1).
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) {
        const double b = std::sqrt(0.5 * k);
        J(k, k - 1) = b;
        J(k - 1, k) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    std::vector<std::pair<double, double>> rule(n);
    for (int i = 0; i < n; ++i) {
        const double v0 = es.eigenvectors()(0, i);
        rule[i] = {std::sqrt(2.0) * es.eigenvalues()(i), v0 * v0};
    }
    return rule;
}

double HermiteSeries::eval(double x) const {
    double s = 0.0;
    double prev = 0.0, cur = 1.0;  // H_{q-1}, H_q starting at q = 0
    for (int q = 0; q < static_cast<int>(a.size()); ++q) {
        s += a[q] * cur;
        const double next = x * cur - q * prev;
        prev = cur;
        cur = next;
    }
    return s;
}

HermiteSeries hermite_expand(const std::function<double(double)>& phi, int qmax,
                             int nodes) {
    if (qmax < 0 || qmax > 30)
        throw precondition_error("hermite_expand: qmax must lie in [0, 30]");
    if (nodes == 0) nodes = 2 * qmax + 16;
    if (nodes < qmax + 1)
        throw precondition_error("hermite_expand: rule too small for qmax");
    const auto rule = gauss_hermite_rule(nodes);
    HermiteSeries out;
    out.a.assign(qmax + 1, 0.0);
    for (const auto& [x, w] : rule) {
        const double px = phi(x);
        double prev = 0.0, cur = 1.0;
        for (int q = 0; q <= qmax; ++q) {
            out.a[q] += w * px * cur;
            const double next = x * cur - q * prev;
            prev = cur;
            cur = next;
        }
    }
    for (int q = 0; q <= qmax; ++q) out.a[q] /= factorial(q);
    return out;
}

int hermite_rank(const HermiteSeries& s, double eps) {
    double amax = 0.0;
    for (double c : s.a) amax = std::max(amax, std::abs(c));
    if (amax == 0.0) return -1;
    for (int q = 0; q < static_cast<int>(s.a.size()); ++q)
        if (std::abs(s.a[q]) > eps * amax) return q;
    return -1;
}

double l2_norm_sq(const HermiteSeries& s) {
    double n2 = 0.0;
    for (int q = 0; q < static_cast<int>(s.a.size()); ++q)
        n2 += factorial(q) * s.a[q] * s.a[q];
    return n2;
}

HermiteSeries ou_apply(const HermiteSeries& s, double t) {
    if (t < 0.0) throw precondition_error("ou_apply: t must be >= 0");
    HermiteSeries out = s;
    for (int q = 0; q < static_cast<int>(out.a.size()); ++q)
        out.a[q] *= std::exp(-q * t);
    return out;
}

}  // namespace chaoslab
