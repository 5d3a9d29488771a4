#include "qprep/measurement.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace qprep {

namespace {

constexpr double kNegligibleProb = 1e-15;

std::array<cplx, 2> orthogonal_complement(const std::array<cplx, 2>& v) {
    return {-std::conj(v[1]), std::conj(v[0])};
}

// Dominant eigenvector of the Hermitian positive matrix M M^dag: the output
// direction of M. Used as the post-state placeholder on zero-probability
// branches, where M|psi> vanishes and renormalization is undefined.
PureState dominant_output_direction(const Mat2& op) {
    Mat2 g = op * op.adjoint();
    double a = g.m[0].real();
    double d = g.m[3].real();
    cplx b = g.m[1];
    double half_gap = 0.5 * (a - d);
    double lam = 0.5 * (a + d) + std::sqrt(half_gap * half_gap + std::norm(b));
    if (std::abs(b) > 1e-300) {
        return PureState(b, cplx(lam - a, 0.0));
    }
    return (a >= d) ? PureState::up() : PureState::down();
}

Outcome make_outcome(const Povm& povm, const PureState& state, std::size_t index) {
    auto v = povm.ops[index].apply(state.amplitudes());
    double p = std::norm(v[0]) + std::norm(v[1]);
    if (p < kNegligibleProb) {
        return {index, p, dominant_output_direction(povm.ops[index])};
    }
    return {index, p, PureState(v[0], v[1])};
}

}  // namespace

Mat2 Mat2::identity() {
    Mat2 r;
    r.m = {cplx(1.0), cplx(0.0), cplx(0.0), cplx(1.0)};
    return r;
}

Mat2 Mat2::zero() {
    return Mat2{};
}

Mat2 Mat2::outer(const std::array<cplx, 2>& u, const std::array<cplx, 2>& v) {
    Mat2 r;
    r.m = {u[0] * std::conj(v[0]), u[0] * std::conj(v[1]),
           u[1] * std::conj(v[0]), u[1] * std::conj(v[1])};
    return r;
}

Mat2 Mat2::adjoint() const {
    Mat2 r;
    r.m = {std::conj(m[0]), std::conj(m[2]), std::conj(m[1]), std::conj(m[3])};
    return r;
}

std::array<cplx, 2> Mat2::apply(const std::array<cplx, 2>& v) const {
    return {m[0] * v[0] + m[1] * v[1], m[2] * v[0] + m[3] * v[1]};
}

Mat2 operator+(const Mat2& a, const Mat2& b) {
    Mat2 r;
    for (int i = 0; i < 4; i++) {
        r.m[i] = a.m[i] + b.m[i];
    }
    return r;
}

Mat2 operator-(const Mat2& a, const Mat2& b) {
    Mat2 r;
    for (int i = 0; i < 4; i++) {
        r.m[i] = a.m[i] - b.m[i];
    }
    return r;
}

Mat2 operator*(const Mat2& a, const Mat2& b) {
    Mat2 r;
    r.m = {a.m[0] * b.m[0] + a.m[1] * b.m[2], a.m[0] * b.m[1] + a.m[1] * b.m[3],
           a.m[2] * b.m[0] + a.m[3] * b.m[2], a.m[2] * b.m[1] + a.m[3] * b.m[3]};
    return r;
}

Mat2 operator*(double s, const Mat2& a) {
    Mat2 r;
    for (int i = 0; i < 4; i++) {
        r.m[i] = s * a.m[i];
    }
    return r;
}

double max_abs_diff(const Mat2& a, const Mat2& b) {
    double worst = 0.0;
    for (int i = 0; i < 4; i++) {
        worst = std::max(worst, std::abs(a.m[i] - b.m[i]));
    }
    return worst;
}

MeasurementStrength::MeasurementStrength(double value) : value_(value) {
    if (!(value >= 0.0 && value <= 1.0)) {  // also rejects NaN
        throw std::invalid_argument("measurement strength must lie in [0, 1]");
    }
}

double Povm::completeness_defect() const {
    Mat2 sum = Mat2::zero();
    for (const Mat2& op : ops) {
        sum = sum + op.adjoint() * op;
    }
    return max_abs_diff(sum, Mat2::identity());
}

Povm axis_measurement(const BlochVector& axis, MeasurementStrength strength) {
    if (std::isnan(axis.x) || std::isnan(axis.y) || std::isnan(axis.z) ||
        std::abs(axis.norm() - 1.0) > 1e-9) {
        throw std::invalid_argument("measurement axis must be a unit Bloch vector");
    }
    // P_+/- = (I +/- axis . sigma) / 2, written out componentwise.
    Mat2 proj_plus;
    proj_plus.m = {cplx(0.5 * (1.0 + axis.z)), 0.5 * cplx(axis.x, -axis.y),
                   0.5 * cplx(axis.x, axis.y), cplx(0.5 * (1.0 - axis.z))};
    Mat2 proj_minus = Mat2::identity() - proj_plus;

    double eps = strength.value();
    double toward = std::sqrt((1.0 + eps) / 2.0);
    double away = std::sqrt((1.0 - eps) / 2.0);

    Povm povm;
    povm.ops = {toward * proj_plus + away * proj_minus,
                away * proj_plus + toward * proj_minus};
    povm.labels = {"+", "-"};
    return povm;
}

const std::array<PureState, 4>& sic_states() {
    // Vertex states of a regular tetrahedron: north pole plus three states
    // at cos(theta) = -1/3 with azimuths 0, +2pi/3, -2pi/3.
    static const std::array<PureState, 4> states = [] {
        double a = std::sqrt(1.0 / 3.0);
        double b = std::sqrt(2.0 / 3.0);
        cplx w = std::polar(1.0, 2.0 * std::numbers::pi / 3.0);
        return std::array<PureState, 4>{
            PureState(1.0, 0.0),
            PureState(a, b),
            PureState(a, b * w),
            PureState(a, b * std::conj(w)),
        };
    }();
    return states;
}

const std::array<BlochVector, 4>& sic_directions() {
    static const std::array<BlochVector, 4> dirs = [] {
        std::array<BlochVector, 4> d{};
        const auto& states = sic_states();
        for (int i = 0; i < 4; i++) {
            d[i] = to_bloch(states[i]);
        }
        return d;
    }();
    return dirs;
}

Povm sic_povm(MeasurementStrength strength) {
    double eps = strength.value();
    double toward = std::sqrt(1.0 + eps) / 2.0;
    double away = std::sqrt(1.0 - eps) / 2.0;

    Povm povm;
    povm.ops.reserve(4);
    povm.labels = {"1", "2", "3", "4"};
    for (const PureState& s : sic_states()) {
        auto v = s.amplitudes();
        povm.ops.push_back(toward * Mat2::outer(v, v) +
                           away * Mat2::outer(orthogonal_complement(v), orthogonal_complement(v)));
    }
    return povm;
}

Outcome apply(const Povm& povm, const PureState& state, double random_draw) {
    if (!(random_draw >= 0.0 && random_draw < 1.0)) {
        throw std::invalid_argument("random draw must lie in [0, 1)");
    }
    if (povm.ops.empty()) {
        throw std::invalid_argument("measurement has no outcomes");
    }
    auto amps = state.amplitudes();
    double cumulative = 0.0;
    std::size_t last_viable = povm.ops.size();
    for (std::size_t i = 0; i < povm.ops.size(); i++) {
        auto v = povm.ops[i].apply(amps);
        double p = std::norm(v[0]) + std::norm(v[1]);
        cumulative += p;
        if (p < kNegligibleProb) {
            continue;
        }
        last_viable = i;
        if (random_draw < cumulative) {
            return make_outcome(povm, state, i);
        }
    }
    if (last_viable == povm.ops.size()) {
        throw std::invalid_argument("measurement assigns no probability to any outcome");
    }
    return make_outcome(povm, state, last_viable);
}

Outcome apply_outcome(const Povm& povm, const PureState& state, std::size_t index) {
    if (index >= povm.ops.size()) {
        throw std::invalid_argument("outcome index out of range");
    }
    return make_outcome(povm, state, index);
}

std::vector<Outcome> enumerate_outcomes(const Povm& povm, const PureState& state) {
    std::vector<Outcome> outcomes;
    outcomes.reserve(povm.size());
    for (std::size_t i = 0; i < povm.size(); i++) {
        outcomes.push_back(make_outcome(povm, state, i));
    }
    return outcomes;
}

Povm compose(const Povm& a, const Povm& b) {
    Povm povm;
    povm.ops.reserve(a.size() * b.size());
    povm.labels.reserve(a.size() * b.size());
    for (std::size_t i = 0; i < a.size(); i++) {
        for (std::size_t j = 0; j < b.size(); j++) {
            povm.ops.push_back(b.ops[j] * a.ops[i]);
            povm.labels.push_back(a.labels[i] + ":" + b.labels[j]);
        }
    }
    return povm;
}

double fidelity_from_repetitions(MeasurementStrength strength, long n) {
    if (strength.value() <= 0.0) {
        throw std::invalid_argument("fidelity growth needs strictly positive strength");
    }
    if (n < 0) {
        throw std::invalid_argument("repetition count must be non-negative");
    }
    double f = std::erf(strength.value() * std::sqrt(static_cast<double>(n) * std::numbers::pi) / 2.0);
    return std::clamp(f, 0.0, 1.0);
}

double fidelity_from_repetitions_approx(MeasurementStrength strength, long n) {
    if (strength.value() <= 0.0) {
        throw std::invalid_argument("fidelity growth needs strictly positive strength");
    }
    if (n < 0) {
        throw std::invalid_argument("repetition count must be non-negative");
    }
    return 1.0 - std::exp(-static_cast<double>(n) * strength.value());
}

long repetitions_for_fidelity(MeasurementStrength strength, double target_f) {
    double eps = strength.value();
    if (eps <= 0.0) {
        throw std::invalid_argument("fidelity growth needs strictly positive strength");
    }
    if (std::isnan(target_f) || target_f < 0.0 || target_f > 1.0) {
        throw std::invalid_argument("target fidelity must lie in [0, 1]");
    }
    if (eps >= 1.0) {
        return 1;  // projective: one shot leaves an axis eigenstate
    }
    if (target_f >= 1.0) {
        throw UnreachableFidelityError(
            "fidelity 1 is unreachable at partial strength; only eps = 1 pins the state exactly");
    }
    if (target_f <= 0.0) {
        return 0;
    }
    long hi = 1;
    while (fidelity_from_repetitions(strength, hi) < target_f) {
        hi *= 2;
        if (hi > (1L << 58)) {
            throw UnreachableFidelityError("target fidelity not reached at any feasible count");
        }
    }
    long lo = hi / 2;  // fidelity(lo) < target <= fidelity(hi), or hi == 1
    while (lo + 1 < hi) {
        long mid = lo + (hi - lo) / 2;
        if (fidelity_from_repetitions(strength, mid) < target_f) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return hi;
}

FidelitySpec fidelity_spec_for(MeasurementStrength strength, double target_f) {
    long n = repetitions_for_fidelity(strength, target_f);
    return {fidelity_from_repetitions(strength, n), n};
}

}  // namespace qprep
