#pragma once

#include <Eigen/Dense>

#include <span>
#include <string>

namespace kmax {

enum class CovFamily { identity, equicorrelated, ar1, block, explicit_matrix };

std::string to_string(CovFamily family);
CovFamily cov_family_from_string(const std::string& name);

/// Unit-diagonal covariance matrix together with the generating family.
///
/// Invariants (enforced by the builders and by validate_covariance):
///   * entries is symmetric and has exactly unit diagonal,
///   * smallest eigenvalue >= -1e-10 (rank deficiency is legal, rho = 1 works),
///   * family-generated entries match the closed form of the family.
struct CovarianceModel {
    int p = 0;
    CovFamily family = CovFamily::identity;
    double rho = 0.0;     // equicorrelated / ar1 / block
    int block_size = 0;   // block only
    Eigen::MatrixXd entries;

    std::string family_name() const { return to_string(family); }
    /// "rho=0.5" style parameter string; empty for identity/explicit.
    std::string params_string() const;
    /// Compact id like "equicorrelated(p=8,rho=0.5)" used in batch metadata.
    std::string describe() const;
};

/// Eigenvalue floor below which a matrix is rejected as indefinite. Separates
/// modeling error from floating-point noise.
inline constexpr double kPsdTolerance = -1e-10;

/// Relative Frobenius tolerance for factor reconstruction L L^T ~ Sigma.
inline constexpr double kFactorTolerance = 1e-8;

/// Builds a model from a named family.
///   identity:       no params
///   equicorrelated: {rho},            rho in [-1/(p-1), 1]
///   ar1:            {rho},            rho in (-1, 1)
///   block:          {rho, block_size} block_size divides p, rho in [-1/(bs-1), 1]
/// Throws std::invalid_argument on bad parameters or an indefinite result.
CovarianceModel build_covariance(CovFamily family, int p, std::span<const double> params);

/// Wraps a user-supplied matrix. The diagonal must be exactly 1 (no automatic
/// standardization) and the matrix exactly symmetric and PSD within tolerance.
CovarianceModel build_explicit_covariance(const Eigen::MatrixXd& sigma);

/// Rechecks all type invariants; throws std::invalid_argument on violation.
void validate_covariance(const CovarianceModel& model);

double smallest_eigenvalue(const Eigen::MatrixXd& sym);

/// Factor L with L L^T = Sigma within kFactorTolerance. Uses Cholesky when
/// Sigma is positive definite and falls back to a symmetric eigendecomposition
/// with eigenvalues in [-1e-10, 0] clamped to zero otherwise. Rows belonging
/// to perfectly correlated components (Sigma_ij == 1) are made bit-identical
/// so degenerate models produce exact ties when sampled.
Eigen::MatrixXd factorize(const CovarianceModel& model);

}  // namespace kmax
