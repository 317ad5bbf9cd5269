#include <Eigen/Cholesky>
#include <cmath>
#include <numbers>
#include <sstream>

#include "invbo/errors.hpp"
#include "invbo/gp.hpp"
#include "invbo/simd.hpp"

namespace invbo {

GpHyperparams GpHyperparams::isotropic(std::size_t dim, double lengthscale, double signal, double noise) {
    return GpHyperparams{std::vector<double>(dim, lengthscale), signal, noise};
}

void GpHyperparams::validate(std::size_t dim) const {
    if (lengthscales.size() != dim) {
        throw input_error("lengthscale count " + std::to_string(lengthscales.size()) + " does not match dimension " +
                          std::to_string(dim));
    }
    for (double l : lengthscales) {
        if (!(l > 0.0) || !std::isfinite(l)) throw input_error("lengthscales must be positive and finite");
    }
    if (!(signal_variance > 0.0) || !(noise_variance > 0.0)) throw input_error("variances must be positive");
}

namespace {

void check_dims(const Points& pts, std::size_t dim, const char* what) {
    for (const auto& p : pts) {
        if (p.size() != dim) {
            throw input_error(std::string(what) + ": point dimension " + std::to_string(p.size()) +
                              " does not match " + std::to_string(dim));
        }
    }
}

std::vector<double> inverse_lengthscales(const GpHyperparams& h) {
    std::vector<double> inv(h.lengthscales.size());
    for (std::size_t d = 0; d < inv.size(); ++d) inv[d] = 1.0 / h.lengthscales[d];
    return inv;
}

Eigen::MatrixXd symmetric_kernel(const Points& a, const GpHyperparams& h) {
    const auto inv = inverse_lengthscales(h);
    const auto n = static_cast<Eigen::Index>(a.size());
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        k(i, i) = h.signal_variance;
        for (Eigen::Index j = 0; j < i; ++j) {
            const double r2 = simd::scaled_sq_dist(a[i], a[j], inv);
            k(i, j) = k(j, i) = h.signal_variance * std::exp(-0.5 * r2);
        }
    }
    return k;
}

struct Standardized {
    std::vector<double> values;
    double mean = 0.0;
    double scale = 1.0;
};

Standardized standardize(const std::vector<double>& y) {
    Standardized s;
    const double n = static_cast<double>(y.size());
    for (double v : y) s.mean += v;
    s.mean /= n;
    double var = 0.0;
    for (double v : y) var += (v - s.mean) * (v - s.mean);
    var /= n;
    s.scale = var > 1e-24 ? std::sqrt(var) : 1.0;
    s.values.reserve(y.size());
    for (double v : y) s.values.push_back((v - s.mean) / s.scale);
    return s;
}

}  // namespace

Eigen::MatrixXd kernel_matrix(const Points& a, const Points& b, const GpHyperparams& h) {
    const std::size_t dim = h.lengthscales.size();
    check_dims(a, dim, "kernel_matrix");
    check_dims(b, dim, "kernel_matrix");
    if (&a == &b) return symmetric_kernel(a, h);
    const auto inv = inverse_lengthscales(h);
    Eigen::MatrixXd k(static_cast<Eigen::Index>(a.size()), static_cast<Eigen::Index>(b.size()));
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < b.size(); ++j) {
            k(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                h.signal_variance * std::exp(-0.5 * simd::scaled_sq_dist(a[i], b[j], inv));
        }
    }
    return k;
}

Eigen::MatrixXd robust_cholesky(const Eigen::MatrixXd& a, double scale, double* jitter_used) {
    auto attempt = [](const Eigen::MatrixXd& m, Eigen::MatrixXd& out) {
        Eigen::LLT<Eigen::MatrixXd> llt(m);
        if (llt.info() != Eigen::Success) return false;
        out = llt.matrixL();
        return out.allFinite();
    };
    Eigen::MatrixXd l;
    if (attempt(a, l)) {
        if (jitter_used) *jitter_used = 0.0;
        return l;
    }
    double jitter = 0.0;
    for (int e = -8; e <= -4; ++e) {
        jitter = std::pow(10.0, e) * scale;
        Eigen::MatrixXd shifted = a;
        shifted.diagonal().array() += jitter;
        if (attempt(shifted, l)) {
            if (jitter_used) *jitter_used = jitter;
            return l;
        }
    }
    std::ostringstream msg;
    msg << "covariance not positive definite after jitter " << jitter;
    throw numerical_error(msg.str());
}

Eigen::VectorXd to_log_params(const GpHyperparams& h) {
    const auto dim = static_cast<Eigen::Index>(h.lengthscales.size());
    Eigen::VectorXd theta(dim + 2);
    for (Eigen::Index d = 0; d < dim; ++d) theta(d) = std::log(h.lengthscales[static_cast<std::size_t>(d)]);
    theta(dim) = std::log(h.signal_variance);
    theta(dim + 1) = std::log(h.noise_variance);
    return theta;
}

GpHyperparams from_log_params(const Eigen::VectorXd& theta) {
    const Eigen::Index dim = theta.size() - 2;
    GpHyperparams h;
    h.lengthscales.resize(static_cast<std::size_t>(dim));
    for (Eigen::Index d = 0; d < dim; ++d) h.lengthscales[static_cast<std::size_t>(d)] = std::exp(theta(d));
    h.signal_variance = std::exp(theta(dim));
    h.noise_variance = std::exp(theta(dim + 1));
    return h;
}

NllResult gp_nll(const Points& inputs, std::span<const double> targets, const GpHyperparams& h, bool with_grad) {
    const std::size_t dim = h.lengthscales.size();
    h.validate(dim);
    check_dims(inputs, dim, "gp_nll");
    if (inputs.size() != targets.size()) throw input_error("gp_nll: inputs and targets differ in length");
    const auto n = static_cast<Eigen::Index>(inputs.size());

    const Eigen::MatrixXd kf = symmetric_kernel(inputs, h);
    Eigen::MatrixXd k = kf;
    k.diagonal().array() += h.noise_variance;

    NllResult out;
    const Eigen::MatrixXd l = robust_cholesky(k, h.signal_variance, &out.jitter);
    const Eigen::Map<const Eigen::VectorXd> y(targets.data(), n);
    const auto tri = l.triangularView<Eigen::Lower>();
    const Eigen::VectorXd alpha = tri.transpose().solve(tri.solve(y));

    out.value = 0.5 * y.dot(alpha) + l.diagonal().array().log().sum() +
                0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
    if (!with_grad) return out;

    Eigen::MatrixXd kinv = tri.solve(Eigen::MatrixXd::Identity(n, n));
    kinv = tri.transpose().solve(kinv);
    const Eigen::MatrixXd w = alpha * alpha.transpose() - kinv;
    const Eigen::MatrixXd m = w.cwiseProduct(kf);

    const auto d_count = static_cast<Eigen::Index>(dim);
    out.grad.resize(d_count + 2);

    // sum_ij M_ij (x_id - x_jd)^2 = 2 sum_i x_id^2 r_i - 2 x_d^T M x_d
    Eigen::MatrixXd x(n, d_count);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index d = 0; d < d_count; ++d) x(i, d) = inputs[static_cast<std::size_t>(i)][static_cast<std::size_t>(d)];
    }
    const Eigen::VectorXd r = m.rowwise().sum();
    const Eigen::MatrixXd mx = m * x;
    for (Eigen::Index d = 0; d < d_count; ++d) {
        const double quad = 2.0 * (x.col(d).array().square() * r.array()).sum() - 2.0 * x.col(d).dot(mx.col(d));
        const double ls = h.lengthscales[static_cast<std::size_t>(d)];
        out.grad(d) = -0.5 * quad / (ls * ls);
    }
    out.grad(d_count) = -0.5 * m.sum();
    out.grad(d_count + 1) = -0.5 * h.noise_variance * w.trace();
    return out;
}

GpModel GpModel::condition(Points inputs, std::vector<double> targets, GpHyperparams h) {
    if (inputs.empty()) throw input_error("GP needs at least one training point");
    if (inputs.size() != targets.size()) throw input_error("inputs and targets differ in length");
    h.validate(inputs.front().size());
    check_dims(inputs, h.lengthscales.size(), "condition");

    GpModel m;
    const Standardized s = standardize(targets);
    m.y_mean_ = s.mean;
    m.y_scale_ = s.scale;
    Eigen::MatrixXd k = symmetric_kernel(inputs, h);
    k.diagonal().array() += h.noise_variance;
    m.chol_ = robust_cholesky(k, h.signal_variance, &m.jitter_);
    const Eigen::Map<const Eigen::VectorXd> y(s.values.data(), static_cast<Eigen::Index>(s.values.size()));
    const Eigen::MatrixXd& lc = m.chol_;
    const auto tri = lc.triangularView<Eigen::Lower>();
    m.alpha_ = tri.transpose().solve(tri.solve(y));
    m.hyper_ = std::move(h);
    m.inputs_ = std::move(inputs);
    m.targets_ = std::move(targets);
    return m;
}

Posterior GpModel::posterior(const Points& query) const {
    check_dims(query, dim(), "posterior");
    Posterior out;
    if (query.empty()) return out;
    const Eigen::MatrixXd ks = kernel_matrix(inputs_, query, hyper_);
    const Eigen::VectorXd mean = ks.transpose() * alpha_;
    const Eigen::MatrixXd v = chol_.triangularView<Eigen::Lower>().solve(ks);
    const Eigen::VectorXd reduction = v.colwise().squaredNorm().transpose();
    out.means.resize(query.size());
    out.variances.resize(query.size());
    for (std::size_t i = 0; i < query.size(); ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        out.means[i] = y_mean_ + y_scale_ * mean(ii);
        out.variances[i] = y_scale_ * y_scale_ * std::max(0.0, hyper_.signal_variance - reduction(ii));
    }
    return out;
}

void GpModel::joint_posterior(const Points& query, Eigen::VectorXd& mean, Eigen::MatrixXd& cov) const {
    check_dims(query, dim(), "joint_posterior");
    const Eigen::MatrixXd ks = kernel_matrix(inputs_, query, hyper_);
    const Eigen::MatrixXd v = chol_.triangularView<Eigen::Lower>().solve(ks);
    mean = (ks.transpose() * alpha_).array() * y_scale_ + y_mean_;
    cov = kernel_matrix(query, query, hyper_);
    cov.noalias() -= v.transpose() * v;
    cov *= y_scale_ * y_scale_;
    for (Eigen::Index i = 0; i < cov.rows(); ++i) cov(i, i) = std::max(0.0, cov(i, i));
}

GpModel fit_gp(const Points& inputs, const std::vector<double>& targets, const GpHyperparams& init, int steps,
               double lr, const GpBounds& bounds) {
    if (inputs.size() < 2) throw input_error("fit_gp needs at least two points");
    if (inputs.size() != targets.size()) throw input_error("inputs and targets differ in length");
    init.validate(inputs.front().size());
    const Standardized s = standardize(targets);
    const double n = static_cast<double>(inputs.size());
    const Eigen::Index dim = static_cast<Eigen::Index>(init.lengthscales.size());

    Eigen::VectorXd lo(dim + 2), hi(dim + 2);
    lo.head(dim).setConstant(std::log(bounds.lengthscale_min));
    hi.head(dim).setConstant(std::log(bounds.lengthscale_max));
    lo(dim) = std::log(bounds.signal_min);
    hi(dim) = std::log(bounds.signal_max);
    lo(dim + 1) = std::log(bounds.noise_min);
    hi(dim + 1) = std::log(bounds.noise_max);

    Eigen::VectorXd theta = to_log_params(init).cwiseMax(lo).cwiseMin(hi);
    NllResult cur = gp_nll(inputs, s.values, from_log_params(theta));
    FitTrace trace;
    trace.initial_nll = cur.value;

    for (int step = 0; step < steps; ++step) {
        // the objective is NLL / n so one learning rate serves every dataset size
        Eigen::VectorXd direction = cur.grad / n;
        double scale = lr;
        bool accepted = false;
        for (int halving = 0; halving < 10 && !accepted; ++halving, scale *= 0.5) {
            Eigen::VectorXd proposal = (theta - scale * direction).cwiseMax(lo).cwiseMin(hi);
            if (proposal == theta) break;
            NllResult next;
            try {
                next = gp_nll(inputs, s.values, from_log_params(proposal));
            } catch (const Error&) {
                continue;
            }
            if (std::isfinite(next.value) && next.value <= cur.value) {
                theta = std::move(proposal);
                cur = std::move(next);
                accepted = true;
                ++trace.accepted_steps;
            }
        }
        if (!accepted) break;
    }
    trace.final_nll = cur.value;

    GpModel model = GpModel::condition(inputs, targets, from_log_params(theta));
    model.trace_ = trace;
    return model;
}

PosteriorSample thompson_sample(const GpModel& model, const Points& candidates, Rng& rng) {
    if (candidates.empty()) throw input_error("thompson_sample needs at least one candidate");
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
    model.joint_posterior(candidates, mean, cov);
    const double scale = model.hyperparams().signal_variance * model.target_scale() * model.target_scale();
    const Eigen::MatrixXd l = robust_cholesky(cov, scale);
    Eigen::VectorXd xi(mean.size());
    for (Eigen::Index i = 0; i < xi.size(); ++i) xi(i) = standard_normal(rng);
    const Eigen::VectorXd draw = mean + l.triangularView<Eigen::Lower>() * xi;
    return PosteriorSample{std::vector<double>(draw.data(), draw.data() + draw.size())};
}

}  // namespace invbo
