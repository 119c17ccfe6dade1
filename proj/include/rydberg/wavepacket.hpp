#pragma once

// The large-l Coulomb coherent-state wavepacket, its explicit WKB phase and
// the quantum potential of its modulus.

#include <complex>

#include "rydberg/coulomb_kinematics.hpp"

namespace rydberg {

struct PacketParams {
  OrbitParams orbit;
  double delta = 0.95;        ///< azimuthal fraction, (0, 1]
  double sigma2 = 1.0;        ///< sigma^2; the spreading constant is a = 1/(2 sigma^2)
  int winding_truncation = 3; ///< M: the winding sum keeps |mu| <= M

  /// Validating constructor; sigma2 <= 0 selects the default l0^3.
  static PacketParams make(const OrbitParams& orbit, double delta = 0.95, double sigma2 = 0.0,
                           int winding_truncation = 3);

  double spread_a() const { return 1.0 / (2.0 * sigma2); }
  /// Angular momentum carried by the azimuthal phase, delta * l0.
  double azimuthal_momentum() const { return delta * orbit.l0; }

  friend bool operator==(const PacketParams&, const PacketParams&) = default;
};

struct FieldPoint {
  double r = 0.0;
  double theta = 0.0;
  double phi = 0.0;  ///< unwrapped
  double t = 0.0;
};

/// Auxiliary quantities of the phase at one spacetime point.
struct PhaseTerms {
  double A = 0.0;
  double gamma = 0.0;
  double lambda = 0.0;
  double a = 0.0;
  double b = 0.0;
};

/// gamma = 2 pi^2 b delta^2 / (a^2 + b^2), lambda = pi delta A / (a^2 + b^2).
PhaseTerms complete_phase_terms(double A, double a, double b, double delta);

/// A = delta (phi - phi0(r)) - (t - t0(r))/l0^3, a = 1/(2 sigma^2),
/// b = 3 t / l0^4 + 2 f0(r). half_cycle selects the radial continuation.
///
/// On a circular orbit f0 diverges like 1/e, so b = +inf there: gamma and
/// lambda vanish, and so does every correction term of the phase and its
/// gradient.
PhaseTerms phase_terms(const FieldPoint& p, const PacketParams& params, const RadialProfile& profile,
                       int half_cycle = 0);

/// The phase split into its additive pieces. spread = spread_branch +
/// spread_rest where spread_branch is piecewise constant (0 or +-pi/4), so
/// spread_rest stays small when |b| >> a.
struct PhaseParts {
  double radial = 0.0;         ///< S0(r), continued
  double azimuthal = 0.0;      ///< delta l0 phi
  double spread_branch = 0.0;
  double spread_rest = 0.0;
  double winding = 0.0;        ///< lambda^2 / (4 gamma)
  double chirp = 0.0;          ///< -A^2 b / (2 (a^2 + b^2))

  double total() const { return radial + azimuthal + spread_branch + spread_rest + winding + chirp; }
  /// Everything beyond the classical S0 + delta l0 phi (minus the constant
  /// spread branch).
  double correction() const { return spread_rest + winding + chirp; }
};

PhaseParts phase_parts(const FieldPoint& p, const PacketParams& params, const RadialProfile& profile,
                       int half_cycle = 0);

/// S = S0 + delta l0 phi + (1/2) atan(b/a) + lambda^2/(4 gamma) - A^2 b / (2 (a^2 + b^2)).
/// Throws SingularConfiguration when gamma = 0 and lambda != 0.
double phase(const FieldPoint& p, const PacketParams& params, const RadialProfile& profile,
             int half_cycle = 0);

/// Analytic gradient of the phase by the chain rule through S0' = p0,
/// phi0' = l0/(r^2 p0), t0' = 1/p0 and f0'. The correction fields hold the
/// deviation from the classical values branch*p0 and delta*l0.
struct PhaseGradient {
  double dr = 0.0;
  double dtheta = 0.0;
  double dphi = 0.0;
  double dt = 0.0;
  double corr_r = 0.0;    ///< dr - branch * p0
  double corr_phi = 0.0;  ///< dphi - delta * l0
  double p0 = 0.0;
  int branch = 1;
};

PhaseGradient phase_gradient(const FieldPoint& p, const PacketParams& params, const RadialProfile& profile,
                             int half_cycle = 0);

struct WaveSample {
  std::complex<double> psi{0.0, 0.0};
  bool in_domain = false;
  bool truncation_warning = false;
};

/// The WKB coherent-state wavepacket (outgoing radial branch). Outside the clamped radial
/// domain returns 0 with in_domain = false.
WaveSample wavefunction(const FieldPoint& p, const PacketParams& params, const RadialProfile& profile);

/// |psi| relative to its angular maximum at the same (r, t): the product of
/// the theta, phi and A Gaussian factors of the dominant winding term, in [0, 1].
double envelope(const FieldPoint& p, const PacketParams& params, const RadialProfile& profile);

struct QuantumPotentialOptions {
  double step_scale = 1.0;           ///< multiplies every stencil step
  double amplitude_threshold = 1e-12;
};

/// Q = -(1/2) lap(R)/R with R = |psi|, by central differences of the
/// spherical Laplacian. Throws AmplitudeUnderflow below the threshold.
double quantum_potential(const FieldPoint& p, const PacketParams& params, const RadialProfile& profile,
                         QuantumPotentialOptions options = {});

/// r_minus + fraction (r_plus - r_minus), clamped into the profile domain.
double radius_at_fraction(const RadialProfile& profile, double fraction);

/// theta = pi/2, phi = phi0(r), t = t0(r) at the given radial fraction.
FieldPoint packet_center(const RadialProfile& profile, double fraction = 0.5);

}  // namespace rydberg
