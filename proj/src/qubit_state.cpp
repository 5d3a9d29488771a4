#include "qprep/qubit_state.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace qprep {

namespace {

constexpr double kPhaseFloor = 1e-12;  // below this the up amplitude is treated as zero

bool finite(cplx c) {
    return std::isfinite(c.real()) && std::isfinite(c.imag());
}

}  // namespace

double BlochVector::norm() const {
    return std::sqrt(x * x + y * y + z * z);
}

BlochVector BlochVector::normalized() const {
    double n = norm();
    if (n < 1e-300) {
        throw std::invalid_argument("cannot normalize a zero Bloch vector");
    }
    return {x / n, y / n, z / n};
}

double BlochVector::theta() const {
    return std::acos(std::clamp(z, -1.0, 1.0));
}

double BlochVector::phi() const {
    if (x == 0.0 && y == 0.0) {
        return 0.0;
    }
    double p = std::atan2(y, x);
    // atan2 returns [-pi, pi]; fold the -pi edge onto +pi.
    if (p <= -std::numbers::pi) {
        p = std::numbers::pi;
    }
    return p;
}

double dot(const BlochVector& a, const BlochVector& b) {
    return a.x * b.x + a.y * b.y + a.z * b.z;
}

BlochVector cross(const BlochVector& a, const BlochVector& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

BlochVector operator+(const BlochVector& a, const BlochVector& b) {
    return {a.x + b.x, a.y + b.y, a.z + b.z};
}

BlochVector operator-(const BlochVector& a, const BlochVector& b) {
    return {a.x - b.x, a.y - b.y, a.z - b.z};
}

BlochVector operator*(double s, const BlochVector& a) {
    return {s * a.x, s * a.y, s * a.z};
}

double distance(const BlochVector& a, const BlochVector& b) {
    return (a - b).norm();
}

PureState::PureState(cplx amp_up, cplx amp_down) : amp_up_(amp_up), amp_down_(amp_down) {
    if (!finite(amp_up_) || !finite(amp_down_)) {
        throw std::invalid_argument("state amplitudes must be finite");
    }
    double n2 = std::norm(amp_up_) + std::norm(amp_down_);
    if (n2 < 1e-300) {
        throw std::invalid_argument("state amplitudes must not both vanish");
    }
    double inv = 1.0 / std::sqrt(n2);
    amp_up_ *= inv;
    amp_down_ *= inv;

    // Remove the global phase: rotate so the dominant reference amplitude is
    // real and non-negative. The reference is rebuilt from its modulus so it
    // carries no residual imaginary part at all.
    if (std::abs(amp_up_) > kPhaseFloor) {
        double r = std::abs(amp_up_);
        amp_down_ *= std::conj(amp_up_) / r;
        amp_up_ = cplx(r, 0.0);
    } else {
        double r = std::abs(amp_down_);
        amp_up_ = 0.0;
        amp_down_ = cplx(r, 0.0);
    }
    // Scrub a negative-zero imaginary part so equal states print alike.
    if (amp_down_.imag() == 0.0) {
        amp_down_ = cplx(amp_down_.real(), 0.0);
    }
}

PureState PureState::up() {
    return PureState(1.0, 0.0);
}

PureState PureState::down() {
    return PureState(0.0, 1.0);
}

double PureState::theta() const {
    return to_bloch(*this).theta();
}

double PureState::phi() const {
    return to_bloch(*this).phi();
}

PureState from_angles(double theta, double phi) {
    if (std::isnan(theta) || std::isnan(phi)) {
        throw std::invalid_argument("state angles must not be NaN");
    }
    theta = std::clamp(theta, 0.0, std::numbers::pi);
    phi = wrap_angle(phi);
    double c = std::cos(theta / 2.0);
    double s = std::sin(theta / 2.0);
    cplx half_phase = std::polar(1.0, phi / 2.0);
    return PureState(c * std::conj(half_phase), s * half_phase);
}

BlochVector to_bloch(const PureState& state) {
    cplx a = state.amp_up();
    cplx b = state.amp_down();
    cplx coherence = std::conj(a) * b;
    return {2.0 * coherence.real(), 2.0 * coherence.imag(), std::norm(a) - std::norm(b)};
}

double overlap2(const PureState& a, const PureState& b) {
    cplx inner = std::conj(a.amp_up()) * b.amp_up() + std::conj(a.amp_down()) * b.amp_down();
    return std::clamp(std::norm(inner), 0.0, 1.0);
}

double angular_distance(const PureState& a, const PureState& b) {
    return std::acos(std::clamp(dot(to_bloch(a), to_bloch(b)), -1.0, 1.0));
}

double wrap_angle(double phi) {
    if (!std::isfinite(phi)) {
        throw std::invalid_argument("angle must be finite");
    }
    double two_pi = 2.0 * std::numbers::pi;
    double p = std::fmod(phi, two_pi);
    if (p > std::numbers::pi) {
        p -= two_pi;
    } else if (p <= -std::numbers::pi) {
        p += two_pi;
    }
    return p;
}

}  // namespace qprep
