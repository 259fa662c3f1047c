#include "robreg/priors.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "robreg/errors.hpp"
#include "robreg/specfun.hpp"

namespace robreg {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

double student_log_normalizer(double dof) {
  return std::lgamma(0.5 * (dof + 1.0)) - std::lgamma(0.5 * dof) -
         0.5 * std::log(dof * std::numbers::pi);
}

}  // namespace

PriorFamily PriorFamily::normal() { return PriorFamily(NormalFamily{}); }

PriorFamily PriorFamily::student(double dof) {
  if (!(dof > 0.0) || !std::isfinite(dof)) {
    throw DomainError("student: degrees of freedom must be positive and finite");
  }
  return PriorFamily(StudentFamily{dof});
}

PriorFamily PriorFamily::lptn(double mass) { return derive_lptn(mass); }
PriorFamily PriorFamily::ctn(double mass) { return derive_ctn(mass); }

PriorFamily derive_lptn(double mass) {
  const double lower = 2.0 * specfun::normal_cdf(1.0) - 1.0;
  if (!(mass > lower && mass < 1.0)) {
    std::ostringstream msg;
    msg << "lptn: mass rho must lie in (2*Phi(1) - 1, 1) = (" << lower
        << ", 1), got " << mass;
    throw DomainError(msg.str());
  }
  const double tau = specfun::normal_inv_cdf(0.5 * (1.0 + mass));
  const double theta =
      2.0 / (1.0 - mass) * specfun::normal_pdf(tau) * tau * std::log(tau) + 1.0;
  return PriorFamily(LptnFamily{mass, tau, theta});
}

PriorFamily derive_ctn(double mass) {
  if (!(mass > 0.0 && mass < 1.0)) {
    std::ostringstream msg;
    msg << "ctn: mass must lie in (0, 1), got " << mass;
    throw DomainError(msg.str());
  }
  const double kappa = specfun::normal_inv_cdf(0.5 * (1.0 + mass));
  return PriorFamily(CtnFamily{mass, kappa, specfun::normal_log_pdf(kappa)});
}

double PriorFamily::kink() const {
  return std::visit(overloaded{[](const LptnFamily& f) { return f.threshold; },
                               [](const CtnFamily& f) { return f.threshold; },
                               [](const auto&) { return 0.0; }},
                    family_);
}

std::string PriorFamily::tag() const {
  return std::visit(overloaded{[](const NormalFamily&) { return std::string("normal"); },
                               [](const StudentFamily&) { return std::string("student"); },
                               [](const LptnFamily&) { return std::string("lptn"); },
                               [](const CtnFamily&) { return std::string("ctn"); }},
                    family_);
}

std::string PriorFamily::label() const {
  std::ostringstream out;
  out << tag();
  std::visit(overloaded{[](const NormalFamily&) {},
                        [&](const StudentFamily& f) { out << '(' << f.dof << ')'; },
                        [&](const LptnFamily& f) { out << '(' << f.mass << ')'; },
                        [&](const CtnFamily& f) { out << '(' << f.mass << ')'; }},
             family_);
  return out.str();
}

double log_density(const PriorFamily& family, double z) {
  if (!std::isfinite(z)) throw DomainError("log_density: z must be finite");
  return std::visit(
      overloaded{
          [z](const NormalFamily&) { return specfun::normal_log_pdf(z); },
          [z](const StudentFamily& f) {
            // For huge |z| split off 2 log|z| so z^2 cannot overflow.
            const double r = std::abs(z) / std::sqrt(f.dof);
            const double log_term = r < 1e100 ? std::log1p(r * r) : 2.0 * std::log(r);
            return student_log_normalizer(f.dof) - 0.5 * (f.dof + 1.0) * log_term;
          },
          [z](const LptnFamily& f) {
            const double a = std::abs(z);
            if (a <= f.threshold) return specfun::normal_log_pdf(z);
            const double tau = f.threshold;
            return specfun::normal_log_pdf(tau) + std::log(tau) - std::log(a) +
                   f.tail_exponent * (std::log(std::log(tau)) - std::log(std::log(a)));
          },
          [z](const CtnFamily& f) {
            if (std::abs(z) <= f.threshold) return specfun::normal_log_pdf(z);
            return f.log_tail;
          }},
      family.variant());
}

double density(const PriorFamily& family, double z) {
  return std::exp(log_density(family, z));
}

double grad_log_density(const PriorFamily& family, double z) {
  if (!std::isfinite(z)) throw DomainError("grad_log_density: z must be finite");
  return std::visit(
      overloaded{[z](const NormalFamily&) { return -z; },
                 [z](const StudentFamily& f) { return -(f.dof + 1.0) * z / (f.dof + z * z); },
                 [z](const LptnFamily& f) {
                   const double a = std::abs(z);
                   if (a <= f.threshold) return -z;
                   return -1.0 / z - f.tail_exponent / (z * std::log(a));
                 },
                 [z](const CtnFamily& f) { return std::abs(z) <= f.threshold ? -z : 0.0; }},
      family.variant());
}

DensityPoint evaluate(const PriorFamily& family, double z) {
  return {z, log_density(family, z), grad_log_density(family, z)};
}

void validate(const CoefficientPrior& prior) {
  if (!(prior.scale > 0.0) || !std::isfinite(prior.scale)) {
    throw DomainError("coefficient prior: scale lambda must be positive and finite");
  }
  if (!std::isfinite(prior.location)) {
    throw DomainError("coefficient prior: location mu must be finite");
  }
}

double scaled_prior_log_density(const CoefficientPrior& prior, double beta, double sigma) {
  if (!(sigma > 0.0)) throw DomainError("scaled_prior_log_density: sigma must be positive");
  validate(prior);
  const double ratio = prior.scale / sigma;
  return std::log(ratio) + log_density(prior.family, ratio * (beta - prior.location));
}

}  // namespace robreg
