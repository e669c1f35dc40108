#include "prml/kernels.hpp"

#include "prml/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace prml {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

template <class T>
const T& expect(const Observation& obs, const char* kernel) {
    const T* p = std::get_if<T>(&obs);
    if (!p) throw ArgumentError(std::string(kernel) + " kernel: wrong observation type");
    return *p;
}

void check_sizes(std::span<const double> theta, std::size_t k, std::span<const double> nodes,
                 std::size_t udim, std::span<double> out) {
    if (theta.size() != k) throw ArgumentError("kernel: theta has wrong dimension");
    if (nodes.size() != out.size() * udim) throw ArgumentError("kernel: node block and output disagree");
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// ---------------------------------------------------------------------------

class GaussianLocationKernel final : public Kernel {
public:
    std::string name() const override { return "density"; }
    std::size_t theta_dim() const override { return 1; }
    std::size_t u_dim() const override { return 1; }
    std::vector<Transform> transforms() const override { return {Transform::log}; }
    bool has_gradient() const override { return true; }

    void log_density(std::span<const double> theta, const Observation& obs, std::span<const double> nodes,
                     std::span<double> logp) const override {
        check_sizes(theta, 1, nodes, 1, logp);
        const double y = expect<Scalar>(obs, "density").y;
        const double sigma = checked_sigma(theta[0]);
        const double c = -0.5 * kLog2Pi - std::log(sigma), inv = 1.0 / (sigma * sigma);
        for (std::size_t j = 0; j < logp.size(); ++j) {
            const double z = y - nodes[j];
            logp[j] = c - 0.5 * z * z * inv;
        }
    }

    void log_density_grad(std::span<const double> theta, const Observation& obs, std::span<const double> nodes,
                          std::span<double> logp, std::span<double> grad) const override {
        log_density(theta, obs, nodes, logp);
        if (grad.size() != logp.size()) throw ArgumentError("kernel: gradient block has wrong size");
        const double y = std::get<Scalar>(obs).y;
        const double sigma = theta[0];
        for (std::size_t j = 0; j < logp.size(); ++j) {
            const double z = y - nodes[j];
            grad[j] = (z * z / (sigma * sigma) - 1.0) / sigma;
        }
    }

private:
    static double checked_sigma(double s) {
        if (!(s > 0.0) || !std::isfinite(s)) throw DomainError("density kernel: sigma must be positive");
        return s;
    }
};

// ---------------------------------------------------------------------------

class LinearRIKernel final : public Kernel {
public:
    LinearRIKernel(std::size_t d, std::size_t r) : d_(d), r_(r) {
        if (d == 0 || r == 0) throw ArgumentError("linear_ri kernel: d and r must be positive");
    }
    std::string name() const override { return "linear_ri"; }
    std::size_t theta_dim() const override { return d_ + 1; }
    std::size_t u_dim() const override { return 1; }
    std::vector<Transform> transforms() const override {
        std::vector<Transform> t(d_, Transform::identity);
        t.push_back(Transform::log);
        return t;
    }
    bool has_gradient() const override { return true; }

    void log_density(std::span<const double> theta, const Observation& obs, std::span<const double> nodes,
                     std::span<double> logp) const override {
        check_sizes(theta, d_ + 1, nodes, 1, logp);
        const Stats s = stats(theta, obs);
        for (std::size_t j = 0; j < logp.size(); ++j) {
            const double u = nodes[j];
            const double rss = s.see - 2.0 * u * s.se + static_cast<double>(r_) * u * u;
            logp[j] = s.c - 0.5 * rss * s.inv_var;
        }
    }

    void log_density_grad(std::span<const double> theta, const Observation& obs, std::span<const double> nodes,
                          std::span<double> logp, std::span<double> grad) const override {
        check_sizes(theta, d_ + 1, nodes, 1, logp);
        if (grad.size() != logp.size() * (d_ + 1)) throw ArgumentError("kernel: gradient block has wrong size");
        const Stats s = stats(theta, obs);
        const double sigma = theta[d_];
        const double rr = static_cast<double>(r_);
        for (std::size_t j = 0; j < logp.size(); ++j) {
            const double u = nodes[j];
            const double rss = s.see - 2.0 * u * s.se + rr * u * u;
            logp[j] = s.c - 0.5 * rss * s.inv_var;
            double* g = grad.data() + j * (d_ + 1);
            for (std::size_t k = 0; k < d_; ++k) g[k] = (s.sex[k] - u * s.sx[k]) * s.inv_var;
            g[d_] = (rss * s.inv_var - rr) / sigma;
        }
    }

private:
    struct Stats {
        double c = 0, inv_var = 0, se = 0, see = 0;
        std::vector<double> sx, sex;  // sum_j x_jk and sum_j e_j x_jk
    };

    Stats stats(std::span<const double> theta, const Observation& obs) const {
        const auto& o = expect<Replicated>(obs, "linear_ri");
        if (o.r != r_ || o.d != d_) throw ArgumentError("linear_ri kernel: observation dimensions mismatch");
        const double sigma = theta[d_];
        if (!(sigma > 0.0) || !std::isfinite(sigma)) throw DomainError("linear_ri kernel: sigma must be positive");
        Stats s;
        s.sx.assign(d_, 0.0);
        s.sex.assign(d_, 0.0);
        s.inv_var = 1.0 / (sigma * sigma);
        s.c = -0.5 * static_cast<double>(r_) * (kLog2Pi + 2.0 * std::log(sigma));
        for (std::size_t j = 0; j < r_; ++j) {
            const auto x = o.row(j);
            double e = o.y[j];
            for (std::size_t k = 0; k < d_; ++k) e -= x[k] * theta[k];
            s.se += e;
            s.see += e * e;
            for (std::size_t k = 0; k < d_; ++k) {
                s.sx[k] += x[k];
                s.sex[k] += e * x[k];
            }
        }
        return s;
    }

    std::size_t d_, r_;
};

// ---------------------------------------------------------------------------

class LogisticRIKernel final : public Kernel {
public:
    LogisticRIKernel(std::size_t d, std::size_t r) : d_(d), r_(r) {
        if (d == 0 || r == 0) throw ArgumentError("logistic_ri kernel: d and r must be positive");
    }
    std::string name() const override { return "logistic_ri"; }
    std::size_t theta_dim() const override { return d_; }
    std::size_t u_dim() const override { return 1; }
    std::vector<Transform> transforms() const override { return std::vector<Transform>(d_, Transform::identity); }
    bool has_gradient() const override { return true; }

    void log_density(std::span<const double> theta, const Observation& obs, std::span<const double> nodes,
                     std::span<double> logp) const override {
        check_sizes(theta, d_, nodes, 1, logp);
        const auto& o = checked(obs);
        const std::vector<double> eta = linear_predictor(theta, o);
        for (std::size_t j = 0; j < logp.size(); ++j) {
            double acc = 0.0;
            for (std::size_t i = 0; i < r_; ++i) {
                const double e = nodes[j] + eta[i];
                acc += o.y[i] * e - softplus(e);
            }
            logp[j] = acc;
        }
    }

    void log_density_grad(std::span<const double> theta, const Observation& obs, std::span<const double> nodes,
                          std::span<double> logp, std::span<double> grad) const override {
        check_sizes(theta, d_, nodes, 1, logp);
        if (grad.size() != logp.size() * d_) throw ArgumentError("kernel: gradient block has wrong size");
        const auto& o = checked(obs);
        const std::vector<double> eta = linear_predictor(theta, o);
        for (std::size_t j = 0; j < logp.size(); ++j) {
            double acc = 0.0;
            double* g = grad.data() + j * d_;
            std::fill(g, g + d_, 0.0);
            for (std::size_t i = 0; i < r_; ++i) {
                const double e = nodes[j] + eta[i];
                acc += o.y[i] * e - softplus(e);
                const double resid = o.y[i] - sigmoid(e);
                const auto x = o.row(i);
                for (std::size_t k = 0; k < d_; ++k) g[k] += resid * x[k];
            }
            logp[j] = acc;
        }
    }

private:
    const Replicated& checked(const Observation& obs) const {
        const auto& o = expect<Replicated>(obs, "logistic_ri");
        if (o.r != r_ || o.d != d_) throw ArgumentError("logistic_ri kernel: observation dimensions mismatch");
        for (double y : o.y)
            if (y != 0.0 && y != 1.0) throw ArgumentError("logistic_ri kernel: responses must be 0 or 1");
        return o;
    }

    std::vector<double> linear_predictor(std::span<const double> theta, const Replicated& o) const {
        std::vector<double> eta(r_, 0.0);
        for (std::size_t i = 0; i < r_; ++i) {
            const auto x = o.row(i);
            for (std::size_t k = 0; k < d_; ++k) eta[i] += x[k] * theta[k];
        }
        return eta;
    }

    std::size_t d_, r_;
};

// ---------------------------------------------------------------------------

// Sufficient statistics of one series for the tridiagonal AR(1) precision.
struct SeriesStats {
    double T = 0;
    double sum_sq = 0;     // sum y_t^2
    double end_sq = 0;     // y_1^2 + y_T^2
    double lag = 0;        // sum y_t y_{t+1}
    double end_sum = 0;    // y_1 + y_T
    double sum = 0;        // sum y_t

    explicit SeriesStats(std::span<const double> y) : T(static_cast<double>(y.size())) {
        if (y.size() < 2) throw ArgumentError("AR(1) density needs T >= 2");
        for (std::size_t t = 0; t < y.size(); ++t) {
            sum_sq += y[t] * y[t];
            sum += y[t];
            if (t + 1 < y.size()) lag += y[t] * y[t + 1];
        }
        end_sq = y.front() * y.front() + y.back() * y.back();
        end_sum = y.front() + y.back();
    }
};

struct ArPair {
    double null_log;
    double alt_log;
};

// S_u = s * R(phi) with s = sigma2 / (1 - phi); S_u^{-1} = Q / tau2 with
// tau2 = s (1 - phi^2) and Q tridiagonal (1, 1+phi^2, ..., 1; off-diagonal -phi).
ArPair ar1_pair(const SeriesStats& st, double sigma2, double phi) {
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw DomainError("AR(1) kernel: sigma^2 must be positive");
    if (!(std::abs(phi) < 1.0)) throw DomainError("AR(1) kernel: |phi| must be < 1");
    const double s = sigma2 / (1.0 - phi);
    const double one_m_phi2 = (1.0 - phi) * (1.0 + phi);
    const double tau2 = s * one_m_phi2;
    const double logdet = st.T * std::log(s) + (st.T - 1.0) * std::log(one_m_phi2);
    const double yQy = (1.0 + phi * phi) * st.sum_sq - phi * phi * st.end_sq - 2.0 * phi * st.lag;
    const double omp = 1.0 - phi;
    const double oneQy = omp * st.end_sum + omp * omp * (st.sum - st.end_sum);
    const double oneQone = 2.0 * omp + (st.T - 2.0) * omp * omp;
    const double q0 = yQy / tau2;
    const double b = oneQy / tau2;
    const double c = oneQone / tau2;
    const double base = -0.5 * st.T * kLog2Pi;
    return {base - 0.5 * (logdet + q0), base - 0.5 * (logdet + std::log1p(c) + q0 - b * b / (1.0 + c))};
}

double log_mix(double theta, const ArPair& p) {
    if (theta >= 1.0) return p.null_log;
    if (theta <= 0.0) return p.alt_log;
    const double a = std::log(theta) + p.null_log;
    const double b = std::log1p(-theta) + p.alt_log;
    const double m = std::max(a, b);
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

class Ar1MixKernel final : public Kernel {
public:
    explicit Ar1MixKernel(std::size_t T) : T_(T) {
        if (T < 2) throw ArgumentError("ar1_mix kernel: T must be at least 2");
    }
    std::string name() const override { return "ar1_mix"; }
    std::size_t theta_dim() const override { return 1; }
    std::size_t u_dim() const override { return 2; }
    std::vector<Transform> transforms() const override { return {Transform::logit}; }
    bool has_gradient() const override { return true; }
    bool has_null() const override { return true; }

    void log_density(std::span<const double> theta, const Observation& obs, std::span<const double> nodes,
                     std::span<double> logp) const override {
        check_sizes(theta, 1, nodes, 2, logp);
        const double th = checked_theta(theta[0]);
        const SeriesStats st(series(obs));
        for (std::size_t j = 0; j < logp.size(); ++j)
            logp[j] = log_mix(th, ar1_pair(st, nodes[2 * j], nodes[2 * j + 1]));
    }

    void log_density_grad(std::span<const double> theta, const Observation& obs, std::span<const double> nodes,
                          std::span<double> logp, std::span<double> grad) const override {
        check_sizes(theta, 1, nodes, 2, logp);
        if (grad.size() != logp.size()) throw ArgumentError("kernel: gradient block has wrong size");
        const double th = checked_theta(theta[0]);
        const SeriesStats st(series(obs));
        for (std::size_t j = 0; j < logp.size(); ++j) {
            const ArPair p = ar1_pair(st, nodes[2 * j], nodes[2 * j + 1]);
            logp[j] = log_mix(th, p);
            grad[j] = std::exp(p.null_log - logp[j]) - std::exp(p.alt_log - logp[j]);
        }
    }

    void null_log_density(std::span<const double> theta, const Observation& obs, std::span<const double> nodes,
                          std::span<double> logp) const override {
        check_sizes(theta, 1, nodes, 2, logp);
        const SeriesStats st(series(obs));
        for (std::size_t j = 0; j < logp.size(); ++j)
            logp[j] = ar1_pair(st, nodes[2 * j], nodes[2 * j + 1]).null_log;
    }

private:
    std::span<const double> series(const Observation& obs) const {
        const auto& s = expect<Series>(obs, "ar1_mix");
        if (s.y.size() != T_) throw ArgumentError("ar1_mix kernel: series length mismatch");
        return s.y;
    }
    static double checked_theta(double t) {
        if (!(t >= 0.0 && t <= 1.0)) throw DomainError("ar1_mix kernel: theta must lie in [0,1]");
        return t;
    }

    std::size_t T_;
};

}  // namespace

void Kernel::log_density_grad(std::span<const double>, const Observation&, std::span<const double>,
                              std::span<double>, std::span<double>) const {
    throw CapabilityError(name() + " kernel provides no gradient");
}

void Kernel::null_log_density(std::span<const double>, const Observation&, std::span<const double>,
                              std::span<double>) const {
    throw CapabilityError(name() + " kernel has no null component");
}

double Kernel::density(std::span<const double> theta, std::span<const double> u, const Observation& obs) const {
    double lp = 0.0;
    log_density(theta, obs, u, {&lp, 1});
    return std::exp(lp);
}

std::vector<double> Kernel::density_gradient(std::span<const double> theta, std::span<const double> u,
                                             const Observation& obs) const {
    double lp = 0.0;
    std::vector<double> g(theta_dim());
    log_density_grad(theta, obs, u, {&lp, 1}, g);
    const double p = std::exp(lp);
    for (double& v : g) v *= p;
    return g;
}

double Kernel::null_density(std::span<const double> theta, std::span<const double> u, const Observation& obs) const {
    double lp = 0.0;
    null_log_density(theta, obs, u, {&lp, 1});
    return std::exp(lp);
}

KernelPtr gaussian_location_kernel() { return std::make_shared<GaussianLocationKernel>(); }
KernelPtr linear_ri_kernel(std::size_t d, std::size_t r) { return std::make_shared<LinearRIKernel>(d, r); }
KernelPtr logistic_ri_kernel(std::size_t d, std::size_t r) { return std::make_shared<LogisticRIKernel>(d, r); }
KernelPtr ar1_mix_kernel(std::size_t T) { return std::make_shared<Ar1MixKernel>(T); }

KernelPtr make_kernel(const KernelSpec& spec) {
    if (spec.name == "density") return gaussian_location_kernel();
    if (spec.name == "linear_ri") return linear_ri_kernel(spec.d, spec.r);
    if (spec.name == "logistic_ri") return logistic_ri_kernel(spec.d, spec.r);
    if (spec.name == "ar1_mix") return ar1_mix_kernel(spec.T);
    throw ArgumentError("unknown kernel '" + spec.name + "'");
}

double ar1_log_normal(std::span<const double> y, double sigma2, double phi) {
    return ar1_pair(SeriesStats(y), sigma2, phi).null_log;
}

double ar1_log_normal_shifted(std::span<const double> y, double sigma2, double phi) {
    return ar1_pair(SeriesStats(y), sigma2, phi).alt_log;
}

}  // namespace prml
