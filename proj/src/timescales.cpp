#include "clab/timescales.hpp"

#include <cmath>
#include <limits>

#include "clab/constants.hpp"

namespace clab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// erf(x) == 1.0 in double precision for x >= 6, so beyond 12 sigma the kernel
// is exactly 1/d and the erf call can be skipped.
inline double kernel(double d, double sigma, double coincident) {
    if (d == 0.0) return coincident;
    if (d >= 12.0 * sigma) return 1.0 / d;
    return std::erf(d / (2.0 * sigma)) / d;
}

double self_sum(const MassDistribution& a) {
    const double coincident = 1.0 / (a.smear_sigma * std::sqrt(consts::pi));
    const std::size_t n = a.points.size();
    double diag = 0.0;
    for (std::size_t i = 0; i < n; ++i) diag += a.masses[i] * a.masses[i];
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            off += a.masses[i] * a.masses[j] *
                   kernel((a.points[i] - a.points[j]).norm(), a.smear_sigma, coincident);
    return diag * coincident + 2.0 * off;
}

double cross_sum(const MassDistribution& a, const MassDistribution& b) {
    const double coincident = 1.0 / (a.smear_sigma * std::sqrt(consts::pi));
    double acc = 0.0;
    for (std::size_t i = 0; i < a.points.size(); ++i)
        for (std::size_t j = 0; j < b.points.size(); ++j)
            acc += a.masses[i] * b.masses[j] *
                   kernel((a.points[i] - b.points[j]).norm(), a.smear_sigma, coincident);
    return acc;
}

}  // namespace

void GasParameters::check() const {
    if (!(number_density > 0.0)) throw BadParameter("number_density must be positive");
    if (!(temperature >= 0.0)) throw BadParameter("temperature must be >= 0");
    if (!(molecular_mass > 0.0)) throw BadParameter("molecular_mass must be positive");
    if (!(size > 0.0)) throw BadParameter("scatterer size must be positive");
    if (!(displacement >= 0.0)) throw BadParameter("displacement must be >= 0");
}

double joos_zeh_tau(const GasParameters& gas) {
    gas.check();
    if (gas.displacement == 0.0 || gas.temperature == 0.0) return kInf;
    const double thermal = std::sqrt(2.0 * consts::pi * gas.molecular_mass) *
                           std::pow(consts::boltzmann * gas.temperature, 1.5);
    const double rate = (8.0 / (3.0 * consts::hbar * consts::hbar)) * gas.number_density *
                        thermal * gas.size * gas.size * gas.displacement * gas.displacement;
    return 1.0 / rate;
}

std::complex<double> coherence_decay(std::complex<double> c0, double t, double tau_d) {
    if (!(t >= 0.0)) throw BadParameter("time must be >= 0");
    if (!(tau_d > 0.0)) throw BadParameter("decoherence time must be positive");
    return c0 * std::exp(-t / tau_d);  // t/inf == 0, so an infinite tau preserves c0
}

void MassDistribution::check() const {
    if (points.empty()) throw BadParameter("mass distribution needs at least one point");
    if (points.size() != masses.size())
        throw DimMismatch("one mass per distribution point required");
    for (double m : masses)
        if (!(m >= 0.0)) throw BadParameter("point masses must be >= 0");
    if (!(smear_sigma > 0.0)) throw BadSigma("smearing width must be positive");
}

double MassDistribution::total_mass() const {
    double total = 0.0;
    for (double m : masses) total += m;
    return total;
}

MassDistribution translated(const MassDistribution& dist, const Eigen::Vector3d& shift) {
    MassDistribution out = dist;
    for (Eigen::Vector3d& p : out.points) p += shift;
    return out;
}

double dp_self_energy(const MassDistribution& up, const MassDistribution& down) {
    up.check();
    down.check();
    if (up.smear_sigma != down.smear_sigma)
        throw BadSigma("both branches must share the same smearing width");
    if (up.points == down.points && up.masses == down.masses) return 0.0;
    const double s_uu = self_sum(up);
    const double s_dd = self_sum(down);
    const double s_ud = cross_sum(up, down);
    return 4.0 * consts::pi * consts::gravitation * (s_uu + s_dd - 2.0 * s_ud);
}

double dp_collapse_time(double e_delta_joules) {
    if (e_delta_joules < 0.0) throw BadParameter("difference self-energy must be >= 0");
    if (e_delta_joules == 0.0) return kInf;
    return consts::hbar / e_delta_joules;
}

MassDistribution make_sphere_lattice(double mass, double material_density, int linear_resolution,
                                     double smear_sigma, const Eigen::Vector3d& center) {
    if (!(mass > 0.0)) throw BadParameter("sphere mass must be positive");
    if (!(material_density > 0.0)) throw BadParameter("material density must be positive");
    if (linear_resolution < 2) throw BadParameter("lattice resolution must be >= 2");
    if (!(smear_sigma > 0.0)) throw BadSigma("smearing width must be positive");

    const double radius = std::cbrt(3.0 * mass / (4.0 * consts::pi * material_density));
    const double cell = 2.0 * radius / linear_resolution;
    MassDistribution dist;
    for (int i = 0; i < linear_resolution; ++i)
        for (int j = 0; j < linear_resolution; ++j)
            for (int k = 0; k < linear_resolution; ++k) {
                const Eigen::Vector3d r((i + 0.5) * cell - radius, (j + 0.5) * cell - radius,
                                        (k + 0.5) * cell - radius);
                if (r.norm() <= radius) dist.points.push_back(center + r);
            }
    dist.masses.assign(dist.points.size(), mass / static_cast<double>(dist.points.size()));
    dist.smear_sigma = std::max(smear_sigma, 0.5 * cell);
    return dist;
}

std::vector<DpSweepPoint> dp_mass_sweep(double material_density,
                                        const std::vector<double>& masses, double displacement,
                                        double smear_sigma, int base_resolution) {
    if (masses.empty()) throw BadParameter("mass sweep needs at least one mass");
    if (!(displacement > 0.0)) throw BadParameter("displacement must be positive");
    if (base_resolution < 4) throw BadParameter("base resolution must be >= 4");

    const Eigen::Vector3d shift(0.0, 0.0, displacement);
    // Both branches are rigid translates of the same lattice, so their self
    // sums are mathematically equal: E = 8 pi G (S_self - S_cross).
    auto energy_at = [&](double mass, int resolution) {
        const MassDistribution up =
            make_sphere_lattice(mass, material_density, resolution, smear_sigma,
                                Eigen::Vector3d::Zero());
        const MassDistribution down = translated(up, shift);
        return 8.0 * consts::pi * consts::gravitation * (self_sum(up) - cross_sum(up, down));
    };

    std::vector<DpSweepPoint> sweep;
    sweep.reserve(masses.size());
    for (double mass : masses) {
        const double coarse = energy_at(mass, base_resolution);
        const double fine = energy_at(mass, 2 * base_resolution);
        DpSweepPoint point;
        point.mass = mass;
        point.self_energy = fine;
        point.collapse_time = dp_collapse_time(fine);
        point.convergence = fine != 0.0 ? std::abs(fine - coarse) / std::abs(fine) : 0.0;
        sweep.push_back(point);
    }
    return sweep;
}

}  // namespace clab
