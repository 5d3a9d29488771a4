#pragma once

#include <array>
#include <complex>

namespace qprep {

using cplx = std::complex<double>;

// Unit vector on the Bloch sphere. Components are kept explicitly; the
// polar/azimuth view is derived on demand.
struct BlochVector {
    double x = 0.0;
    double y = 0.0;
    double z = 1.0;

    double norm() const;
    BlochVector normalized() const;

    // Polar angle in [0, pi], azimuth in (-pi, pi].
    double theta() const;
    double phi() const;
};

double dot(const BlochVector& a, const BlochVector& b);
BlochVector cross(const BlochVector& a, const BlochVector& b);
BlochVector operator+(const BlochVector& a, const BlochVector& b);
BlochVector operator-(const BlochVector& a, const BlochVector& b);
BlochVector operator*(double s, const BlochVector& a);
double distance(const BlochVector& a, const BlochVector& b);

// Pure qubit state |psi> = a|up> + b|down>, stored normalized and with a
// canonical global phase: the up amplitude is made real and non-negative
// (or the down amplitude, when the up amplitude is below 1e-12 and dropped).
// The canonical form makes physically equal states directly comparable;
// replaying one sequence of operations twice is bit-for-bit reproducible.
class PureState {
  public:
    // Normalizes and canonicalizes. Throws std::invalid_argument for the
    // zero vector or non-finite amplitudes.
    PureState(cplx amp_up, cplx amp_down);

    static PureState up();
    static PureState down();

    cplx amp_up() const { return amp_up_; }
    cplx amp_down() const { return amp_down_; }
    std::array<cplx, 2> amplitudes() const { return {amp_up_, amp_down_}; }

    double theta() const;
    double phi() const;

  private:
    cplx amp_up_;
    cplx amp_down_;
};

// State with polar angle theta and azimuth phi, using the half-angle
// convention cos(theta/2) e^{-i phi/2} |up> + sin(theta/2) e^{+i phi/2} |down>.
// theta is clamped to [0, pi], phi is wrapped; NaN is rejected.
PureState from_angles(double theta, double phi);

BlochVector to_bloch(const PureState& state);

// |<a|b>|^2, in [0, 1].
double overlap2(const PureState& a, const PureState& b);

// Angle between the Bloch vectors, in [0, pi]. Equals 2*acos(sqrt(overlap2)).
double angular_distance(const PureState& a, const PureState& b);

// Wraps an angle into (-pi, pi].
double wrap_angle(double phi);

}  // namespace qprep
