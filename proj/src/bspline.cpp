#include "airgam/bspline.hpp"

#include "airgam/errors.hpp"

#include <algorithm>
#include <cmath>

namespace airgam {

BSplineBasis::BSplineBasis(double lo, double hi, std::vector<double> interior_knots, int degree)
    : lo_(lo), hi_(hi), interior_(std::move(interior_knots)), degree_(degree) {
    if (!(lo_ < hi_)) throw BadKnots("boundary knots must satisfy lo < hi");
    if (degree_ < 1 || degree_ > 7) throw BadKnots("degree must be in [1, 7]");
    double prev = lo_;
    for (double k : interior_) {
        if (!(k > prev)) throw BadKnots("interior knots must be strictly increasing inside (lo, hi)");
        prev = k;
    }
    if (!interior_.empty() && !(interior_.back() < hi_))
        throw BadKnots("interior knots must lie strictly below the upper boundary");

    size_ = static_cast<int>(interior_.size()) + degree_ + 1;
    knots_.reserve(size_ + degree_ + 1);
    for (int i = 0; i <= degree_; ++i) knots_.push_back(lo_);
    knots_.insert(knots_.end(), interior_.begin(), interior_.end());
    for (int i = 0; i <= degree_; ++i) knots_.push_back(hi_);
}

BSplineBasis BSplineBasis::from_quantiles(std::span<const double> values, int basis_size,
                                          int degree) {
    if (values.empty()) throw BadKnots("no values to place knots on");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    double lo = sorted.front(), hi = sorted.back();
    if (!(lo < hi)) throw BadKnots("feature is constant; cannot build a spline basis");

    int distinct = 1;
    for (std::size_t i = 1; i < sorted.size(); ++i)
        if (sorted[i] != sorted[i - 1]) distinct++;
    int k = std::max(degree + 1, std::min(basis_size, distinct));

    int n_interior = k - degree - 1;
    std::vector<double> interior;
    interior.reserve(n_interior);
    for (int i = 1; i <= n_interior; ++i) {
        double q = quantile_sorted(sorted, static_cast<double>(i) / (n_interior + 1));
        // quantile ties collapse; keep the knot sequence strictly increasing
        if (q <= lo || q >= hi) continue;
        if (!interior.empty() && q <= interior.back()) continue;
        interior.push_back(q);
    }
    return BSplineBasis(lo, hi, std::move(interior), degree);
}

bool BSplineBasis::evaluate(double x,
                            Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> row) const {
    bool clamped = false;
    if (x < lo_) {
        x = lo_;
        clamped = true;
    } else if (x > hi_) {
        x = hi_;
        clamped = true;
    }

    // span j: knots_[j] <= x < knots_[j+1], restricted to the nonempty spans
    // [degree_, size_-1]; x == hi falls into the closed last span.
    int j;
    if (x >= hi_) {
        j = size_ - 1;
    } else {
        auto it = std::upper_bound(knots_.begin() + degree_, knots_.begin() + size_, x);
        j = static_cast<int>(it - knots_.begin()) - 1;
    }

    row.setZero();
    // Cox-de Boor triangular scheme: the degree_+1 functions alive on span j.
    double n[8]; // degree <= 7
    double left[8], right[8];
    n[0] = 1.0;
    for (int r = 1; r <= degree_; ++r) {
        left[r] = x - knots_[j + 1 - r];
        right[r] = knots_[j + r] - x;
        double saved = 0.0;
        for (int t = 0; t < r; ++t) {
            double temp = n[t] / (right[t + 1] + left[r - t]);
            n[t] = saved + right[t + 1] * temp;
            saved = left[r - t] * temp;
        }
        n[r] = saved;
    }
    for (int t = 0; t <= degree_; ++t) row(j - degree_ + t) = n[t];
    return clamped;
}

Eigen::MatrixXd BSplineBasis::evaluate_matrix(std::span<const double> x, int* clamped) const {
    Eigen::MatrixXd out(static_cast<int>(x.size()), size_);
    int n_clamped = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (evaluate(x[i], out.row(static_cast<int>(i)))) n_clamped++;
    if (clamped) *clamped = n_clamped;
    return out;
}

Eigen::MatrixXd bspline_basis(std::span<const double> x, double lo, double hi,
                              const std::vector<double>& interior_knots, int degree) {
    BSplineBasis basis(lo, hi, interior_knots, degree);
    return basis.evaluate_matrix(x);
}

std::vector<double> BSplineBasis::greville_abscissae() const {
    std::vector<double> sites(size_);
    for (int k = 0; k < size_; ++k) {
        double sum = 0.0;
        for (int j = 1; j <= degree_; ++j) sum += knots_[k + j];
        sites[k] = sum / degree_;
    }
    return sites;
}

Eigen::MatrixXd second_difference_penalty(const BSplineBasis& basis) {
    const int k = basis.size();
    if (k < 3) throw BadKnots("second-difference penalty needs at least 3 coefficients");
    std::vector<double> sites = basis.greville_abscissae();
    double mean_spacing = (sites.back() - sites.front()) / (k - 1);

    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(k - 2, k);
    for (int i = 0; i < k - 2; ++i) {
        double a = 1.0 / (sites[i + 1] - sites[i]);
        double b = 1.0 / (sites[i + 2] - sites[i + 1]);
        d(i, i) = mean_spacing * a;
        d(i, i + 1) = -mean_spacing * (a + b);
        d(i, i + 2) = mean_spacing * b;
    }
    return d.transpose() * d;
}

double quantile_sorted(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw InsufficientData("quantile of empty data");
    if (p <= 0.0) return sorted.front();
    if (p >= 1.0) return sorted.back();
    double h = (static_cast<double>(sorted.size()) - 1.0) * p;
    std::size_t i = static_cast<std::size_t>(std::floor(h));
    double frac = h - static_cast<double>(i);
    if (i + 1 >= sorted.size()) return sorted.back();
    return sorted[i] + frac * (sorted[i + 1] - sorted[i]);
}

} // namespace airgam
