#pragma once

#include <Eigen/Core>
#include <span>
#include <vector>

#include "invbo/rng.hpp"

namespace invbo {

using Point = std::vector<double>;
using Points = std::vector<Point>;

struct GpHyperparams {
    std::vector<double> lengthscales;
    double signal_variance = 1.0;
    double noise_variance = 1e-2;

    static GpHyperparams isotropic(std::size_t dim, double lengthscale = 1.0, double signal = 1.0,
                                   double noise = 1e-2);
    void validate(std::size_t dim) const;
};

/// Box constraints applied after every optimizer step.
struct GpBounds {
    double lengthscale_min = 1e-3, lengthscale_max = 1e3;
    double signal_min = 1e-4, signal_max = 1e4;
    double noise_min = 1e-6, noise_max = 1e1;
};

/// Squared-exponential ARD kernel: sf2 * exp(-0.5 * sum_d ((a_d - b_d) / l_d)^2).
Eigen::MatrixXd kernel_matrix(const Points& a, const Points& b, const GpHyperparams& h);

/// Negative log marginal likelihood and its gradient with respect to the log
/// parameters [log l_1 .. log l_D, log sf2, log sn2].
struct NllResult {
    double value = 0.0;
    Eigen::VectorXd grad;
    double jitter = 0.0;
};
NllResult gp_nll(const Points& inputs, std::span<const double> targets, const GpHyperparams& h,
                 bool with_grad = true);

Eigen::VectorXd to_log_params(const GpHyperparams& h);
GpHyperparams from_log_params(const Eigen::VectorXd& theta);

struct Posterior {
    std::vector<double> means;
    std::vector<double> variances;
};

struct PosteriorSample {
    std::vector<double> candidate_values;
};

struct FitTrace {
    double initial_nll = 0.0;
    double final_nll = 0.0;
    int accepted_steps = 0;
};

/// Exact GP conditioned on a fixed dataset. Immutable once built; all queries
/// are const and safe to call concurrently.
class GpModel {
public:
    /// Conditions on (inputs, targets) with the given hyperparameters. Targets
    /// are standardized internally.
    static GpModel condition(Points inputs, std::vector<double> targets, GpHyperparams h);

    const GpHyperparams& hyperparams() const noexcept { return hyper_; }
    const Points& inputs() const noexcept { return inputs_; }
    const std::vector<double>& targets() const noexcept { return targets_; }
    const Eigen::MatrixXd& chol_factor() const noexcept { return chol_; }
    const Eigen::VectorXd& alpha() const noexcept { return alpha_; }
    double target_mean() const noexcept { return y_mean_; }
    double target_scale() const noexcept { return y_scale_; }
    double jitter() const noexcept { return jitter_; }
    std::size_t dim() const noexcept { return hyper_.lengthscales.size(); }
    const FitTrace& fit_trace() const noexcept { return trace_; }

    Posterior posterior(const Points& query) const;
    /// Mean vector and full covariance of the latent function over query, in target units.
    void joint_posterior(const Points& query, Eigen::VectorXd& mean, Eigen::MatrixXd& cov) const;

private:
    friend GpModel fit_gp(const Points&, const std::vector<double>&, const GpHyperparams&, int, double,
                          const GpBounds&);
    GpHyperparams hyper_;
    Points inputs_;
    std::vector<double> targets_;
    Eigen::MatrixXd chol_;
    Eigen::VectorXd alpha_;
    double y_mean_ = 0.0;
    double y_scale_ = 1.0;
    double jitter_ = 0.0;
    FitTrace trace_;
};

/// Gradient descent on the NLL in log-parameter space with step halving on
/// increase, so the final NLL never exceeds the initial one.
GpModel fit_gp(const Points& inputs, const std::vector<double>& targets, const GpHyperparams& init, int steps,
               double lr, const GpBounds& bounds = {});

/// One joint draw of the latent function over the candidates.
PosteriorSample thompson_sample(const GpModel& model, const Points& candidates, Rng& rng);

/// Lower Cholesky factor of a symmetric matrix, adding jitter * scale to the
/// diagonal (1e-8 .. 1e-4) when the plain factorization fails. Throws a
/// numerical error naming the last jitter tried.
Eigen::MatrixXd robust_cholesky(const Eigen::MatrixXd& a, double scale, double* jitter_used = nullptr);

}  // namespace invbo
