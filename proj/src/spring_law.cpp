#include "growlat/spring_law.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace growlat {

namespace {

// |d|^k for small integer k without going through std::pow.
inline double abs_ipow(double d, int k) {
    const double a = std::abs(d);
    double r = 1.0;
    for (int i = 0; i < k; ++i) r *= a;
    return r;
}

}  // namespace

Profile Profile::power_law(int q) {
    if (q < 2) throw std::invalid_argument("power-law exponent must be >= 2");
    Profile p;
    p.q_ = q;
    p.name_ = "power" + std::to_string(q);
    return p;
}

Profile Profile::custom(std::string name, Fn value, Fn derivative) {
    if (!value || !derivative) throw std::invalid_argument("custom profile needs value and derivative");
    Profile p;
    p.name_ = std::move(name);
    p.value_ = std::move(value);
    p.derivative_ = std::move(derivative);
    return p;
}

double Profile::value(double x) const {
    if (q_ > 0) return abs_ipow(x - 1.0, q_);
    return value_(x);
}

double Profile::derivative(double x) const {
    if (q_ > 0) {
        const double d = x - 1.0;
        if (d == 0.0) return 0.0;
        const double mag = q_ * abs_ipow(d, q_ - 1);
        return d > 0.0 ? mag : -mag;
    }
    return derivative_(x);
}

double Profile::second_derivative(double x) const {
    if (q_ > 0) return q_ * (q_ - 1) * abs_ipow(x - 1.0, q_ - 2);
    const double h = 1e-6 * std::max(1.0, std::abs(x));
    return (derivative_(x + h) - derivative_(x - h)) / (2.0 * h);
}

double profile_energy(const SpringLaw& law, double stretch) {
    if (!(stretch >= 0.0)) throw std::domain_error("stretch ratio must be non-negative");
    return law.profile.value(stretch);
}

double growable_energy(const SpringLaw& law, double rest, double current) {
    if (!(rest > 0.0)) throw std::domain_error("rest length must be positive");
    if (!(current >= 0.0)) throw std::domain_error("current length must be non-negative");
    const double scale = law.homogeneity == 0.0 ? 1.0 : std::pow(rest, law.homogeneity);
    return scale * law.profile.value(current / rest);
}

GrownDensity::GrownDensity(SpringLaw law, double growth)
    : law_(std::move(law)), growth_(growth) {
    if (!(growth > 0.0)) throw std::domain_error("growth factor must be positive");
    weight_ = law_.homogeneity == 0.0 ? 1.0 : std::pow(growth_, law_.homogeneity);
}

double GrownDensity::operator()(double stretch) const {
    return weight_ * law_.profile.value(stretch / growth_);
}

double GrownDensity::derivative(double stretch) const {
    return weight_ / growth_ * law_.profile.derivative(stretch / growth_);
}

GrownDensity grown_density(const SpringLaw& law, double growth) { return {law, growth}; }

}  // namespace growlat
