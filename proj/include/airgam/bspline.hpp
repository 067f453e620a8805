#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace airgam {

/// Cubic (by default) B-spline basis on an open knot vector: boundary knots
/// repeated degree+1 times, strictly increasing interior knots in between.
/// Inputs outside [lo, hi] are clamped to the boundary and counted.
class BSplineBasis {
public:
    BSplineBasis(double lo, double hi, std::vector<double> interior_knots, int degree = 3);

    /// Builds a basis for `basis_size` functions with interior knots at
    /// equally spaced quantiles (linear interpolation) of the values.
    /// The basis size shrinks when quantile ties would produce duplicate
    /// knots, and never exceeds the number of distinct values; it is floored
    /// at degree + 1.
    static BSplineBasis from_quantiles(std::span<const double> values, int basis_size,
                                       int degree = 3);

    int size() const { return size_; }
    int degree() const { return degree_; }
    double lower() const { return lo_; }
    double upper() const { return hi_; }
    const std::vector<double>& interior_knots() const { return interior_; }

    /// Greville abscissae: the coefficient sites; a spline with coefficients
    /// linear in these sites is exactly a linear polynomial.
    std::vector<double> greville_abscissae() const;

    /// Evaluates all basis functions at x into `row` (length size()).
    /// Returns true when x was clamped to a boundary.
    bool evaluate(double x,
                  Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> row) const;

    /// n x K evaluation matrix; `clamped` (optional) counts out-of-range inputs.
    Eigen::MatrixXd evaluate_matrix(std::span<const double> x, int* clamped = nullptr) const;

private:
    double lo_, hi_;
    std::vector<double> interior_;
    int degree_;
    int size_;
    std::vector<double> knots_; // full open vector, length size_ + degree_ + 1
};

/// De Boor evaluation of a basis defined by boundary knots [lo, hi] and the
/// given interior knots; rows are basis evaluations per input point.
Eigen::MatrixXd bspline_basis(std::span<const double> x, double lo, double hi,
                              const std::vector<double>& interior_knots, int degree = 3);

/// K x K penalty matrix D' * D, where D takes second divided differences of
/// the coefficients with respect to the Greville abscissae (scaled by the
/// mean site spacing, so uniform knots recover the classic [1,-2,1] rows).
/// Its null space is exactly the linear polynomials for any knot placement.
Eigen::MatrixXd second_difference_penalty(const BSplineBasis& basis);

/// Linear-interpolation (type-7) quantile of already sorted data.
double quantile_sorted(std::span<const double> sorted, double p);

} // namespace airgam
