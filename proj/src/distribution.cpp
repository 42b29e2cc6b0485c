#include "symreg/distribution.hpp"

#include <cmath>
#include <charconv>
#include <cstdio>
#include <numbers>

namespace symreg {

namespace {

constexpr double kPi = std::numbers::pi;

double parse_param(std::string_view text, std::string_view what) {
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size())
        throw parameter_domain_error(std::string("cannot parse ") + std::string(what) +
                                     " from '" + std::string(text) + "'");
    return value;
}

void validate(const FamilySpec& spec) {
    switch (spec.family) {
        case Family::student_t:
            if (!(spec.nu > 0.0) || !std::isfinite(spec.nu))
                throw parameter_domain_error("student-t: nu must be positive");
            break;
        case Family::power_exp:
            if (!(spec.k > -1.0 && spec.k <= 1.0))
                throw parameter_domain_error("pexp: k must lie in (-1, 1]");
            break;
        default:
            break;
    }
}

// sigma(-u) = e^{-u}/(1+e^{-u}), stable for u >= 0.
double sigmoid_neg(double u) {
    const double e = std::exp(-u);
    return e / (1.0 + e);
}

// Type I logistic normalization constant c with 1 = integral of
// c * exp(-z^2)/(1+exp(-z^2))^2 over R. The paper-rounded 1.4843 is the
// starting point; quadrature pins the rest of the digits.
double logistic1_norm_constant() {
    static const double c = [] {
        auto f = [](double z) {
            const double e = std::exp(-z * z);
            return e / ((1.0 + e) * (1.0 + e));
        };
        QuadResult q = integrate_real_line_even(f, 1e-13);
        if (!q.converged) throw numeric_error("logistic1 normalization quadrature failed");
        return 1.0 / q.value;
    }();
    return c;
}

double logistic1_quadrature_moment(int zpow) {
    auto f = [zpow](double z) {
        const double e = std::exp(-z * z);
        double v = logistic1_norm_constant() * e / ((1.0 + e) * (1.0 + e));
        for (int i = 0; i < zpow; ++i) v *= z;
        return v;
    };
    QuadResult q = integrate_real_line_even(f, 1e-12);
    if (!q.converged) throw numeric_error("logistic1 moment quadrature failed");
    return q.value;
}

}  // namespace

FamilySpec FamilySpec::parse(std::string_view text) {
    const auto colon = text.find(':');
    const std::string_view head = text.substr(0, colon);
    if (head == "normal") return FamilySpec::normal();
    if (head == "cauchy") return FamilySpec::cauchy();
    if (head == "logistic1") return FamilySpec::logistic1();
    if (head == "logistic2") return FamilySpec::logistic2();
    if (head == "student-t") {
        if (colon == std::string_view::npos)
            throw parameter_domain_error("student-t requires a degrees-of-freedom suffix, e.g. student-t:4");
        FamilySpec spec = FamilySpec::student_t(parse_param(text.substr(colon + 1), "nu"));
        validate(spec);
        return spec;
    }
    if (head == "pexp") {
        if (colon == std::string_view::npos)
            throw parameter_domain_error("pexp requires a shape suffix, e.g. pexp:0.3");
        FamilySpec spec = FamilySpec::power_exp(parse_param(text.substr(colon + 1), "k"));
        validate(spec);
        return spec;
    }
    throw parameter_domain_error("unknown family '" + std::string(text) + "'");
}

std::string FamilySpec::name() const {
    switch (family) {
        case Family::normal: return "normal";
        case Family::cauchy: return "cauchy";
        case Family::student_t: {
            char buf[48];
            std::snprintf(buf, sizeof buf, "student-t:%g", nu);
            return buf;
        }
        case Family::logistic1: return "logistic1";
        case Family::logistic2: return "logistic2";
        case Family::power_exp: {
            char buf[48];
            std::snprintf(buf, sizeof buf, "pexp:%g", k);
            return buf;
        }
    }
    return "?";
}

DistributionKernel::DistributionKernel(const FamilySpec& spec) : spec_(spec) {
    validate(spec);
    switch (spec_.family) {
        case Family::normal:
            log_norm_ = -0.5 * std::log(2.0 * kPi);
            xi_ = 1.0;
            d20000_ = 1.0;
            d20002_ = 3.0;
            break;
        case Family::cauchy:
            spec_.nu = 1.0;  // Cauchy is Student-t with nu = 1
            [[fallthrough]];
        case Family::student_t: {
            const double nu = spec_.nu;
            log_norm_ = 0.5 * nu * std::log(nu) -
                        (std::lgamma(0.5) + std::lgamma(0.5 * nu) - std::lgamma(0.5 * (nu + 1.0)));
            if (nu > 2.0) xi_ = nu / (nu - 2.0);
            d20000_ = (nu + 1.0) / (nu + 3.0);
            d20002_ = 3.0 * (nu + 1.0) / (nu + 3.0);
            break;
        }
        case Family::logistic1:
            log_norm_ = std::log(logistic1_norm_constant());
            xi_ = [] {
                static const double v = logistic1_quadrature_moment(2);
                return v;
            }();
            d20000_ = [] {
                static const double v = [] {
                    auto f = [](double z) {
                        const double e = std::exp(-z * z);
                        const double t = 2.0 * z * std::tanh(0.5 * z * z);
                        return t * t * logistic1_norm_constant() * e / ((1.0 + e) * (1.0 + e));
                    };
                    return integrate_real_line_even(f, 1e-12).value;
                }();
                return v;
            }();
            d20002_ = [] {
                static const double v = [] {
                    auto f = [](double z) {
                        const double e = std::exp(-z * z);
                        const double t = 2.0 * z * std::tanh(0.5 * z * z);
                        return z * z * t * t * logistic1_norm_constant() * e / ((1.0 + e) * (1.0 + e));
                    };
                    return integrate_real_line_even(f, 1e-12).value;
                }();
                return v;
            }();
            break;
        case Family::logistic2:
            xi_ = kPi * kPi / 3.0;
            d20000_ = 1.0 / 3.0;
            d20002_ = [] {
                static const double v = [] {
                    auto f = [](double z) {
                        const double t = std::tanh(0.5 * z);
                        const double sech2 = 1.0 - t * t;
                        return z * z * t * t * 0.25 * sech2;
                    };
                    return integrate_real_line_even(f, 1e-12).value;
                }();
                return v;
            }();
            break;
        case Family::power_exp: {
            const double k = spec_.k;
            beta_ = 2.0 / (1.0 + k);
            log_norm_ = -(std::lgamma(1.0 + 0.5 * (1.0 + k)) + (1.0 + 0.5 * (1.0 + k)) * std::log(2.0));
            xi_ = std::exp((1.0 + k) * std::log(2.0) + std::lgamma(1.5 * (1.0 + k)) -
                           std::lgamma(0.5 * (1.0 + k)));
            d20000_ = std::exp((1.0 - k) * std::log(2.0) + std::lgamma(0.5 * (3.0 - k)) -
                               std::lgamma(0.5 * (1.0 + k))) /
                      ((1.0 + k) * (1.0 + k));
            d20002_ = (3.0 + k) / (1.0 + k);
            break;
        }
    }
}

double DistributionKernel::g(double z) const {
    const double u = z * z;
    switch (spec_.family) {
        case Family::normal:
            return log_norm_ - 0.5 * u;
        case Family::cauchy:
        case Family::student_t:
            return log_norm_ - 0.5 * (spec_.nu + 1.0) * std::log(spec_.nu + u);
        case Family::logistic1:
            return log_norm_ - u - 2.0 * std::log1p(std::exp(-u));
        case Family::logistic2: {
            const double r = std::abs(z);
            return -r - 2.0 * std::log1p(std::exp(-r));
        }
        case Family::power_exp:
            return log_norm_ - 0.5 * std::pow(u, 0.5 * beta_);
    }
    return 0.0;
}

double DistributionKernel::h(double u) const {
    if (u < 0.0) throw std::domain_error("h: u >= 0 required");
    const double z = std::sqrt(u);
    return std::exp(g(z));
}

double DistributionKernel::g1(double z) const {
    switch (spec_.family) {
        case Family::normal:
            return -z;
        case Family::cauchy:
        case Family::student_t:
            return -(spec_.nu + 1.0) * z / (spec_.nu + z * z);
        case Family::logistic1: {
            const double u = z * z;
            const double s = sigmoid_neg(u);
            return 2.0 * z * (2.0 * s - 1.0);
        }
        case Family::logistic2:
            return -std::tanh(0.5 * z);
        case Family::power_exp: {
            const double r = std::abs(z);
            const double v = -0.5 * beta_ * std::pow(r, beta_ - 1.0);
            return z < 0.0 ? -v : v;
        }
    }
    return 0.0;
}

double DistributionKernel::g2(double z) const {
    switch (spec_.family) {
        case Family::normal:
            return -1.0;
        case Family::cauchy:
        case Family::student_t: {
            const double nu = spec_.nu;
            const double den = nu + z * z;
            return -(nu + 1.0) * (nu - z * z) / (den * den);
        }
        case Family::logistic1: {
            const double u = z * z;
            const double s = sigmoid_neg(u);
            const double p1 = 2.0 * s - 1.0;         // phi'(u)
            const double p2 = -2.0 * s * (1.0 - s);  // phi''(u)
            return 2.0 * p1 + 4.0 * u * p2;
        }
        case Family::logistic2: {
            const double t = std::tanh(0.5 * z);
            return -0.5 * (1.0 - t * t);
        }
        case Family::power_exp: {
            const double r = std::abs(z);
            return -0.5 * beta_ * (beta_ - 1.0) * std::pow(r, beta_ - 2.0);
        }
    }
    return 0.0;
}

double DistributionKernel::g3(double z) const {
    switch (spec_.family) {
        case Family::normal:
            return 0.0;
        case Family::cauchy:
        case Family::student_t: {
            const double nu = spec_.nu;
            const double den = nu + z * z;
            return 2.0 * (nu + 1.0) * z * (3.0 * nu - z * z) / (den * den * den);
        }
        case Family::logistic1: {
            const double u = z * z;
            const double s = sigmoid_neg(u);
            const double p2 = -2.0 * s * (1.0 - s);
            const double p3 = 2.0 * s * (1.0 - s) * (1.0 - 2.0 * s);
            return 12.0 * z * p2 + 8.0 * z * u * p3;
        }
        case Family::logistic2: {
            const double t = std::tanh(0.5 * z);
            return 0.5 * t * (1.0 - t * t);
        }
        case Family::power_exp: {
            const double r = std::abs(z);
            const double v = -0.5 * beta_ * (beta_ - 1.0) * (beta_ - 2.0) * std::pow(r, beta_ - 3.0);
            return z < 0.0 ? -v : v;
        }
    }
    return 0.0;
}

double DistributionKernel::g4(double z) const {
    switch (spec_.family) {
        case Family::normal:
            return 0.0;
        case Family::cauchy:
        case Family::student_t: {
            const double nu = spec_.nu;
            const double u = z * z;
            const double den = nu + u;
            const double den2 = den * den;
            return 6.0 * (nu + 1.0) * (nu * nu - 6.0 * nu * u + u * u) / (den2 * den2);
        }
        case Family::logistic1: {
            const double u = z * z;
            const double s = sigmoid_neg(u);
            const double s1 = 1.0 - s;
            const double one2s = 1.0 - 2.0 * s;
            const double p2 = -2.0 * s * s1;
            const double p3 = 2.0 * s * s1 * one2s;
            const double p4 = -2.0 * s * s1 * (one2s * one2s - 2.0 * s * s1);
            return 12.0 * p2 + 48.0 * u * p3 + 16.0 * u * u * p4;
        }
        case Family::logistic2: {
            const double t = std::tanh(0.5 * z);
            const double sech2 = 1.0 - t * t;
            return 0.25 * sech2 * (1.0 - 3.0 * t * t);
        }
        case Family::power_exp: {
            const double r = std::abs(z);
            return -0.5 * beta_ * (beta_ - 1.0) * (beta_ - 2.0) * (beta_ - 3.0) *
                   std::pow(r, beta_ - 4.0);
        }
    }
    return 0.0;
}

double DistributionKernel::weight(double z) const {
    switch (spec_.family) {
        case Family::normal:
            return 1.0;
        case Family::cauchy:
        case Family::student_t:
            return (spec_.nu + 1.0) / (spec_.nu + z * z);
        case Family::logistic1:
            return 2.0 * std::tanh(0.5 * z * z);
        case Family::logistic2: {
            const double r = std::abs(z);
            if (r == 0.0) return 0.5;
            return std::tanh(0.5 * r) / r;
        }
        case Family::power_exp: {
            const double u = z * z;
            return std::pow(u, -spec_.k / (1.0 + spec_.k)) / (1.0 + spec_.k);
        }
    }
    return 1.0;
}

DistributionKernel kernel(const FamilySpec& spec) { return DistributionKernel(spec); }

QuadResult delta_oracle(const DistributionKernel& kernel,
                        int a, int b, int c, int d, int e, double abs_tol) {
    if ((a + c + e) % 2 == 1) {  // odd integrand: exactly zero by symmetry
        QuadResult zero;
        zero.converged = true;
        return zero;
    }
    auto integrand = [&kernel, a, b, c, d, e](double z) -> double {
        const double lg = kernel.g(z);
        if (lg < -800.0) return 0.0;  // density underflow: factors grow at most polynomially
        double v = std::exp(lg);
        for (int i = 0; i < a; ++i) v *= kernel.g1(z);
        for (int i = 0; i < b; ++i) v *= kernel.g2(z);
        for (int i = 0; i < c; ++i) v *= kernel.g3(z);
        for (int i = 0; i < d; ++i) v *= kernel.g4(z);
        for (int i = 0; i < e; ++i) v *= z;
        return v;
    };
    return integrate_real_line_even(integrand, abs_tol);
}

namespace {

double oracle_value(const DistributionKernel& k, int a, int b, int c, int d, int e) {
    QuadResult q = delta_oracle(k, a, b, c, d, e);
    if (!q.converged)
        throw numeric_error("delta quadrature failed for " + k.spec().name() +
                            " index " + std::to_string(a) + std::to_string(b) +
                            std::to_string(c) + std::to_string(d) + std::to_string(e) +
                            " (error estimate " + std::to_string(q.error) + ")");
    return q.value;
}

}  // namespace

DeltaConstants delta_constants(const FamilySpec& spec) {
    const DistributionKernel k = kernel(spec);
    DeltaConstants d{};
    d.d20000 = k.delta_20000();
    d.d20002 = k.delta_20002();
    d.d01000 = oracle_value(k, 0, 1, 0, 0, 0);
    d.d01002 = oracle_value(k, 0, 1, 0, 0, 2);
    d.d00101 = oracle_value(k, 0, 0, 1, 0, 1);
    d.d00103 = oracle_value(k, 0, 0, 1, 0, 3);
    d.d00012 = oracle_value(k, 0, 0, 0, 1, 2);
    d.d11001 = oracle_value(k, 1, 1, 0, 0, 1);
    d.d11003 = oracle_value(k, 1, 1, 0, 0, 3);
    d.d21000 = oracle_value(k, 2, 1, 0, 0, 0);
    d.d10100 = oracle_value(k, 1, 0, 1, 0, 0);
    d.d40000 = oracle_value(k, 4, 0, 0, 0, 0);
    d.d30001 = oracle_value(k, 3, 0, 0, 0, 1);
    d.d40002 = oracle_value(k, 4, 0, 0, 0, 2);
    d.d21002 = oracle_value(k, 2, 1, 0, 0, 2);
    if (spec.family == Family::power_exp && spec.k > -1.0 / 3.0) {
        // E[g4] has a non-integrable singularity at 0; the regularity
        // relation delta_00010 = -delta_10100 defines the constant.
        d.d00010 = -d.d10100;
    } else {
        d.d00010 = oracle_value(k, 0, 0, 0, 1, 0);
    }
    return d;
}

CorrectionConstants correction_constants_from_deltas(const DeltaConstants& d) {
    CorrectionConstants c{};
    c.m1 = d.d01002 - 1.0;
    c.m2 = 4.0 - d.d00103 - 6.0 * d.d01002;
    c.m3 = (d.d00101 + 2.0 * d.d01000) / d.d20000;
    c.m4 = (d.d00012 - 6.0 * d.d11001) / d.d20000;
    if (c.m1 == 0.0) throw numeric_error("correction constants: m1 = 0");
    c.d0 = d.d00010 / (4.0 * d.d20000 * d.d20000);
    c.d1 = -c.m2 * c.m3 / (2.0 * c.m1 * c.m1) -
           (2.0 * c.m3 + c.m3 * c.m3 + c.m4) / (2.0 * c.m1);
    c.d2 = -c.m3 * c.m3 / (2.0 * c.m1);
    c.b0 = d.d21000 / (d.d20000 * d.d20000) + 1.0;
    c.b1 = d.d11001 * (d.d11001 - d.d01000) /
           (d.d20000 * d.d20000 * (d.d20002 - 1.0));
    c.b2 = (2.0 * d.d11001 * (2.0 * d.d01002 + d.d00103) +
            (d.d20002 - 1.0) * (4.0 * d.d30001 + d.d40002 + d.d21002 - 2.0 * d.d01000)) /
           (d.d20000 * (d.d20002 - 1.0) * (d.d20002 - 1.0));
    c.b3 = d.d11001 * d.d11001 / (d.d20000 * d.d20000 * (d.d20002 - 1.0));
    c.c0 = d.d00010 / (d.d20000 * d.d20000);
    c.c1 = -c.m3 * c.m3 / c.m1;
    c.c2 = -(c.m2 * c.m3 + 2.0 * c.m1 * c.m3) / (c.m1 * c.m1) - c.m4 / c.m1;
    return c;
}

namespace {

CorrectionConstants student_t_constants(double nu) {
    CorrectionConstants c{};
    const double n1 = nu + 1.0, n2 = nu + 2.0, n3 = nu + 3.0;
    const double n5 = nu + 5.0, n7 = nu + 7.0;
    c.d0 = 3.0 * n2 * n3 * n3 / (2.0 * nu * n1 * n5 * n7);
    c.d1 = n3 * (nu * nu * nu + 11.0 * nu * nu + 20.0 * nu + 4.0) / (nu * n7 * n5 * n5);
    c.d2 = n3 * n2 * n2 / (nu * n5 * n5);
    c.b0 = 6.0 * (nu * nu + 4.0 * nu - 1.0) / (nu * n5 * n7);
    c.b1 = (nu - 1.0) * n2 * n3 / (nu * n5 * n5);
    c.b2 = -12.0 * (nu * nu + 3.0 * nu + 2.0) * n3 / (nu * n7 * n5 * n5);
    c.b3 = (nu - 1.0) * (nu - 1.0) * n3 / (2.0 * nu * n5 * n5);
    c.c0 = 6.0 * n2 * n3 * n3 / (nu * n1 * n5 * n7);
    c.c1 = 2.0 * n2 * n2 * n3 / (nu * n5 * n5);
    c.c2 = -24.0 * n2 * n3 / (nu * n7 * n5 * n5);
    c.m1 = -2.0 * nu / n3;
    c.m2 = 4.0 - (18.0 * nu - 30.0) / (n3 * n5) - 6.0 * (3.0 - nu) / n3;
    c.m3 = -2.0 * n2 / n5;
    c.m4 = -6.0 * n2 * n3 / (n5 * n7);
    return c;
}

CorrectionConstants power_exp_constants(double k) {
    if (k >= 1.0 / 3.0)
        throw unsupported_correction_error(
            "pexp corrections require k < 1/3 (uncorrected tests remain available)");
    CorrectionConstants c{};
    const double lg = std::lgamma(0.5 * (1.0 - 3.0 * k)) + std::lgamma(0.5 * (1.0 + k)) -
                      2.0 * std::lgamma(0.5 * (3.0 - k));
    c.d0 = k * (1.0 - k) * std::exp(lg) / 8.0;
    c.d1 = 1.0 / (1.0 + k);
    c.d2 = c.d1;
    c.b0 = 1.0 - (1.0 - k) *
                     std::exp(std::lgamma(1.5 * (1.0 - k)) + std::lgamma(0.5 * (1.0 + k)) -
                              2.0 * std::lgamma(0.5 * (3.0 - k))) /
                     2.0;
    c.b1 = (1.0 - k) / (1.0 + k);
    c.b2 = -2.0 * k * (1.0 - k) / (1.0 + k);
    c.b3 = (1.0 - k) * (1.0 - k) / (2.0 * (1.0 + k));
    c.c0 = 4.0 * c.d0;
    c.c1 = 2.0 / (1.0 + k);
    c.c2 = 0.0;
    const double beta = 2.0 / (1.0 + k);
    c.m1 = -beta;
    c.m2 = 4.0 + (beta - 1.0) * (beta + 4.0);
    c.m3 = -beta;
    c.m4 = -beta * (beta + 1.0);
    return c;
}

}  // namespace

CorrectionConstants correction_constants(const FamilySpec& spec) {
    validate(spec);
    switch (spec.family) {
        case Family::normal: {
            CorrectionConstants c{};
            c.d0 = 0.0; c.d1 = 1.0; c.d2 = 1.0;
            c.b0 = 0.0; c.b1 = 1.0; c.b2 = 0.0; c.b3 = 0.5;
            c.c0 = 0.0; c.c1 = 2.0; c.c2 = 0.0;
            c.m1 = -2.0; c.m2 = 10.0; c.m3 = -2.0; c.m4 = -6.0;
            return c;
        }
        case Family::cauchy:
            return student_t_constants(1.0);
        case Family::student_t:
            return student_t_constants(spec.nu);
        case Family::logistic1: {
            static const CorrectionConstants c =
                correction_constants_from_deltas(delta_constants(FamilySpec::logistic1()));
            return c;
        }
        case Family::logistic2: {
            static const CorrectionConstants c =
                correction_constants_from_deltas(delta_constants(FamilySpec::logistic2()));
            return c;
        }
        case Family::power_exp:
            return power_exp_constants(spec.k);
    }
    throw parameter_domain_error("unknown family");
}

double draw(const DistributionKernel& kernel, RngStream& rng) {
    const FamilySpec& spec = kernel.spec();
    switch (spec.family) {
        case Family::normal: {
            std::normal_distribution<double> dist(0.0, 1.0);
            return dist(rng);
        }
        case Family::cauchy: {
            std::cauchy_distribution<double> dist(0.0, 1.0);
            return dist(rng);
        }
        case Family::student_t: {
            std::student_t_distribution<double> dist(spec.nu);
            return dist(rng);
        }
        case Family::logistic1: {
            // Rejection from N(0,1): the ratio h1(z^2) / phi_N(z) is maximized
            // at z^2 = log 3, giving acceptance probability ~0.83.
            std::normal_distribution<double> proposal(0.0, 1.0);
            std::uniform_real_distribution<double> unif(0.0, 1.0);
            const double bound = 16.0 * std::sqrt(3.0) / 9.0;
            for (;;) {
                const double z = proposal(rng);
                const double e = std::exp(-z * z);
                const double ratio = bound * std::exp(-0.5 * z * z) / ((1.0 + e) * (1.0 + e));
                if (unif(rng) <= ratio) return z;
            }
        }
        case Family::logistic2: {
            // Inverse CDF of the standard logistic law.
            std::uniform_real_distribution<double> unif(0.0, 1.0);
            double u;
            do {
                u = unif(rng);
            } while (u <= 0.0 || u >= 1.0);
            return std::log(u / (1.0 - u));
        }
        case Family::power_exp: {
            // |z|^beta ~ Gamma(1/beta, scale 2), random sign.
            const double inv_beta = 0.5 * (1.0 + spec.k);
            std::gamma_distribution<double> gamma(inv_beta, 2.0);
            std::uniform_int_distribution<int> sign(0, 1);
            const double g = gamma(rng);
            const double magnitude = std::pow(g, inv_beta);
            return sign(rng) ? magnitude : -magnitude;
        }
    }
    return 0.0;
}

std::vector<double> sample(const DistributionKernel& kernel, RngStream& rng,
                           std::size_t count) {
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i) out[i] = draw(kernel, rng);
    return out;
}

double cdf_numeric(const DistributionKernel& kernel, double x) {
    auto density = [&kernel](double z) { return std::exp(kernel.g(z)); };
    if (x <= 0.0) {
        QuadResult upper = integrate_half_line([&density, x](double t) {
            return density(-x + t);  // integral over (-inf, x] shifted to [0, inf)
        }, 1e-10);
        return upper.value;
    }
    QuadResult core = integrate_adaptive(density, 0.0, x, 1e-10);
    return 0.5 + core.value;
}

}  // namespace symreg
