#include "kmax/covariance.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace kmax {

namespace {

std::string format_param(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

void require(bool ok, const std::string& message) {
    if (!ok) throw std::invalid_argument(message);
}

double equicorrelated_lower_bound(int m) {
    return m > 1 ? -1.0 / (m - 1) : -1.0;
}

}  // namespace

std::string to_string(CovFamily family) {
    switch (family) {
        case CovFamily::identity: return "identity";
        case CovFamily::equicorrelated: return "equicorrelated";
        case CovFamily::ar1: return "ar1";
        case CovFamily::block: return "block";
        case CovFamily::explicit_matrix: return "explicit";
    }
    return "unknown";
}

CovFamily cov_family_from_string(const std::string& name) {
    if (name == "identity") return CovFamily::identity;
    if (name == "equicorrelated") return CovFamily::equicorrelated;
    if (name == "ar1") return CovFamily::ar1;
    if (name == "block") return CovFamily::block;
    if (name == "explicit") return CovFamily::explicit_matrix;
    throw std::invalid_argument("unknown covariance family: " + name);
}

std::string CovarianceModel::params_string() const {
    switch (family) {
        case CovFamily::equicorrelated:
        case CovFamily::ar1:
            return "rho=" + format_param(rho);
        case CovFamily::block:
            return "rho=" + format_param(rho) + ";block_size=" + std::to_string(block_size);
        default:
            return "";
    }
}

std::string CovarianceModel::describe() const {
    std::string s = family_name() + "(p=" + std::to_string(p);
    const std::string params = params_string();
    if (!params.empty()) s += "," + params;
    return s + ")";
}

double smallest_eigenvalue(const Eigen::MatrixXd& sym) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
        throw std::runtime_error("eigenvalue computation failed");
    }
    return solver.eigenvalues().minCoeff();
}

CovarianceModel build_covariance(CovFamily family, int p, std::span<const double> params) {
    require(p >= 1, "covariance dimension p must be >= 1");

    CovarianceModel model;
    model.p = p;
    model.family = family;
    model.entries = Eigen::MatrixXd::Identity(p, p);

    switch (family) {
        case CovFamily::identity:
            require(params.empty(), "identity family takes no parameters");
            break;

        case CovFamily::equicorrelated: {
            require(params.size() == 1, "equicorrelated family takes exactly one parameter (rho)");
            const double rho = params[0];
            require(rho >= equicorrelated_lower_bound(p) && rho <= 1.0,
                    "equicorrelated rho must lie in [-1/(p-1), 1]");
            model.rho = rho;
            for (int i = 0; i < p; ++i)
                for (int j = 0; j < p; ++j)
                    if (i != j) model.entries(i, j) = rho;
            break;
        }

        case CovFamily::ar1: {
            require(params.size() == 1, "ar1 family takes exactly one parameter (rho)");
            const double rho = params[0];
            require(rho > -1.0 && rho < 1.0, "ar1 rho must lie in (-1, 1)");
            model.rho = rho;
            for (int i = 0; i < p; ++i)
                for (int j = 0; j < p; ++j)
                    if (i != j) model.entries(i, j) = std::pow(rho, std::abs(i - j));
            break;
        }

        case CovFamily::block: {
            require(params.size() == 2, "block family takes two parameters (rho, block_size)");
            const double rho = params[0];
            const double bs_raw = params[1];
            const int bs = static_cast<int>(bs_raw);
            require(bs >= 1 && static_cast<double>(bs) == bs_raw, "block_size must be a positive integer");
            require(p % bs == 0, "block_size must divide p");
            require(rho >= equicorrelated_lower_bound(bs) && rho <= 1.0,
                    "block rho must lie in [-1/(block_size-1), 1]");
            model.rho = rho;
            model.block_size = bs;
            for (int i = 0; i < p; ++i)
                for (int j = 0; j < p; ++j)
                    if (i != j && i / bs == j / bs) model.entries(i, j) = rho;
            break;
        }

        case CovFamily::explicit_matrix:
            throw std::invalid_argument("use build_explicit_covariance for explicit matrices");
    }

    validate_covariance(model);
    return model;
}

CovarianceModel build_explicit_covariance(const Eigen::MatrixXd& sigma) {
    require(sigma.rows() >= 1 && sigma.rows() == sigma.cols(), "explicit covariance must be a square matrix");

    CovarianceModel model;
    model.p = static_cast<int>(sigma.rows());
    model.family = CovFamily::explicit_matrix;
    model.entries = sigma;
    validate_covariance(model);
    return model;
}

void validate_covariance(const CovarianceModel& model) {
    const auto& s = model.entries;
    require(model.p >= 1, "covariance dimension p must be >= 1");
    require(s.rows() == model.p && s.cols() == model.p, "entries must be p x p");

    for (int i = 0; i < model.p; ++i) {
        require(s(i, i) == 1.0, "covariance diagonal must be exactly 1");
        for (int j = 0; j < i; ++j) {
            require(s(i, j) == s(j, i), "covariance must be symmetric");
        }
    }

    if (smallest_eigenvalue(s) < kPsdTolerance) {
        throw std::invalid_argument("covariance is not positive semidefinite (smallest eigenvalue < -1e-10)");
    }
}

Eigen::MatrixXd factorize(const CovarianceModel& model) {
    const auto& sigma = model.entries;
    const int p = model.p;

    Eigen::MatrixXd factor;
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() == Eigen::Success) {
        factor = llt.matrixL();
    } else {
        // PSD-tolerant path: clamp tiny negative eigenvalues to zero.
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sigma);
        if (solver.info() != Eigen::Success) {
            throw std::runtime_error("eigendecomposition failed during factorization");
        }
        Eigen::VectorXd lambda = solver.eigenvalues();
        for (int i = 0; i < p; ++i) {
            if (lambda[i] < kPsdTolerance) {
                throw std::runtime_error("covariance is numerically indefinite; cannot factor");
            }
            lambda[i] = lambda[i] > 0.0 ? std::sqrt(lambda[i]) : 0.0;
        }
        factor = solver.eigenvectors() * lambda.asDiagonal();
    }

    // Perfectly correlated components share a factor row bit-for-bit, so their
    // samples tie exactly.
    for (int j = 1; j < p; ++j) {
        for (int i = 0; i < j; ++i) {
            if (sigma(i, j) == 1.0) {
                factor.row(j) = factor.row(i);
                break;
            }
        }
    }

    const double scale = std::max(1.0, sigma.norm());
    const double err = (factor * factor.transpose() - sigma).norm() / scale;
    if (err > kFactorTolerance) {
        throw std::runtime_error("factor reconstruction tolerance not met; input is numerically indefinite");
    }
    return factor;
}

}  // namespace kmax
