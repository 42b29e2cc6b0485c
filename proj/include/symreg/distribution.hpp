#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "symreg/quadrature.hpp"
#include "symreg/rng.hpp"

namespace symreg {

/// Raised when a family parameter is outside its admissible range.
class parameter_domain_error : public std::domain_error {
    using std::domain_error::domain_error;
};

/// Raised when Bartlett-type correction constants do not exist for the
/// requested family parameters (power exponential with k >= 1/3).
class unsupported_correction_error : public std::domain_error {
    using std::domain_error::domain_error;
};

/// Raised when a numeric routine fails to converge; carries diagnostics.
class numeric_error : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Family {
    normal,
    cauchy,
    student_t,       // fixed degrees of freedom nu > 0
    logistic1,       // type I logistic
    logistic2,       // type II logistic
    power_exp,       // fixed shape k in (-1, 1]
};

/// A symmetric error law: family tag plus its fixed hyperparameters.
/// CLI / config spelling: normal, cauchy, student-t:NU, logistic1,
/// logistic2, pexp:K.
struct FamilySpec {
    Family family = Family::normal;
    double nu = 0.0;
    double k = 0.0;

    static FamilySpec normal() { return {Family::normal, 0.0, 0.0}; }
    static FamilySpec cauchy() { return {Family::cauchy, 0.0, 0.0}; }
    static FamilySpec student_t(double nu) { return {Family::student_t, nu, 0.0}; }
    static FamilySpec logistic1() { return {Family::logistic1, 0.0, 0.0}; }
    static FamilySpec logistic2() { return {Family::logistic2, 0.0, 0.0}; }
    static FamilySpec power_exp(double k) { return {Family::power_exp, 0.0, k}; }

    static FamilySpec parse(std::string_view text);
    std::string name() const;

    bool operator==(const FamilySpec&) const = default;
};

/// Moment constants delta_abcde = E(g1^a g2^b g3^c g4^d z^e) under S(0,1),
/// for the index combinations the corrections need.
struct DeltaConstants {
    double d20000, d20002, d01000, d01002;
    double d00010, d00101, d00103, d00012;
    double d11001, d11003, d21000, d10100;
    double d40000, d30001, d40002, d21002;
};

/// Per-family inputs to the corrected statistics.
struct CorrectionConstants {
    double d0, d1, d2;
    double b0, b1, b2, b3;
    double c0, c1, c2;
    double m1, m2, m3, m4;
};

/// A symmetric error distribution: density generator h, the derivatives of
/// g(z) = log h(z^2) up to fourth order, the estimation weight function,
/// and the variance constant xi when it exists. Immutable and cheap to
/// copy; safe to share across threads.
class DistributionKernel {
public:
    explicit DistributionKernel(const FamilySpec& spec);

    const FamilySpec& spec() const { return spec_; }

    double h(double u) const;       // density generator, u = z^2 >= 0
    double g(double z) const;       // log h(z^2)
    double g1(double z) const;
    double g2(double z) const;
    double g3(double z) const;
    double g4(double z) const;
    double weight(double z) const;  // -2 dlog h(u)/du at u = z^2

    std::optional<double> xi() const { return xi_; }

    // Fisher information constants (closed form, no quadrature at call time).
    double delta_20000() const { return d20000_; }
    double delta_20002() const { return d20002_; }

private:
    FamilySpec spec_;
    double log_norm_ = 0.0;   // additive constant of g
    double beta_ = 0.0;       // power exponential exponent 2/(1+k)
    std::optional<double> xi_;
    double d20000_ = 1.0;
    double d20002_ = 3.0;
};

/// Builds the kernel for a family, validating parameters.
DistributionKernel kernel(const FamilySpec& spec);

/// Numerical-integration oracle for delta_abcde at absolute tolerance
/// abs_tol. Non-convergent (e.g. divergent) integrands come back with
/// converged == false.
QuadResult delta_oracle(const DistributionKernel& kernel,
                        int a, int b, int c, int d, int e,
                        double abs_tol = 1e-8);

/// All delta constants for a family, quadrature-backed. delta_00010 for
/// the power exponential with k > -1/3 is obtained through the regularity
/// relation delta_00010 = -delta_10100 (the direct integral diverges).
/// Throws numeric_error when quadrature fails to converge.
DeltaConstants delta_constants(const FamilySpec& spec);

/// Correction constants evaluated through the m/b/c/d definitions from a
/// set of deltas.
CorrectionConstants correction_constants_from_deltas(const DeltaConstants& d);

/// Per-family correction constants: closed forms for normal, Student-t
/// (Cauchy is nu = 1), and power exponential; quadrature-delta-derived for
/// the two logistic families. Throws unsupported_correction_error for the
/// power exponential with k >= 1/3.
CorrectionConstants correction_constants(const FamilySpec& spec);

/// One standard draw from S(0,1) of the kernel's family.
double draw(const DistributionKernel& kernel, RngStream& rng);

/// count i.i.d. draws from S(0,1).
std::vector<double> sample(const DistributionKernel& kernel, RngStream& rng,
                           std::size_t count);

/// CDF of S(0,1) by numerical integration of the density (test oracle for
/// the samplers).
double cdf_numeric(const DistributionKernel& kernel, double x);

}  // namespace symreg
