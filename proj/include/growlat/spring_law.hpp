#pragma once

#include <functional>
#include <string>

namespace growlat {

/// Scalar energy profile W of a spring as a function of the stretch ratio
/// (current length over rest length).
///
/// The closed family is the power law W(x) = |x - 1|^q for integer q >= 2.
/// Custom convex profiles with W(1) = 0 and W'(1) = 0 can be supplied as a
/// value/derivative pair.
class Profile {
public:
    using Fn = std::function<double(double)>;

    static Profile power_law(int q);
    static Profile custom(std::string name, Fn value, Fn derivative);

    double value(double x) const;
    double derivative(double x) const;
    /// Analytic for power laws; central difference of the derivative otherwise.
    double second_derivative(double x) const;

    bool is_power_law() const { return q_ > 0; }
    int exponent() const { return q_; }
    const std::string& name() const { return name_; }

private:
    Profile() = default;

    int q_ = 0;
    std::string name_;
    Fn value_;
    Fn derivative_;
};

/// Growable spring: energy W~(l, e) = l^p W(e / l).
/// p = 0 is recombination (constant mass), p = 1 replication.
struct SpringLaw {
    Profile profile = Profile::power_law(2);
    double homogeneity = 0.0;

    static SpringLaw recombination(int q) { return {Profile::power_law(q), 0.0}; }
    static SpringLaw replication(int q) { return {Profile::power_law(q), 1.0}; }
};

double profile_energy(const SpringLaw& law, double stretch);

double growable_energy(const SpringLaw& law, double rest, double current);

/// W_g(x) = g^p W(x / g): the energy profile of a spring after its rest
/// length has been multiplied by g.
class GrownDensity {
public:
    GrownDensity(SpringLaw law, double growth);

    double operator()(double stretch) const;
    double derivative(double stretch) const;
    double growth() const { return growth_; }

private:
    SpringLaw law_;
    double growth_;
    double weight_;
};

GrownDensity grown_density(const SpringLaw& law, double growth);

}  // namespace growlat
