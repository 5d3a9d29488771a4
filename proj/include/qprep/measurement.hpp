#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include "qprep/qubit_state.hpp"

namespace qprep {

// 2x2 complex matrix, row-major. Just enough linear algebra for Kraus
// operators; no general matrix library is warranted at this size.
struct Mat2 {
    std::array<cplx, 4> m{};  // [ m[0] m[1] ; m[2] m[3] ]

    static Mat2 identity();
    static Mat2 zero();
    // |u><v|
    static Mat2 outer(const std::array<cplx, 2>& u, const std::array<cplx, 2>& v);

    Mat2 adjoint() const;
    std::array<cplx, 2> apply(const std::array<cplx, 2>& v) const;
};

Mat2 operator+(const Mat2& a, const Mat2& b);
Mat2 operator-(const Mat2& a, const Mat2& b);
Mat2 operator*(const Mat2& a, const Mat2& b);
Mat2 operator*(double s, const Mat2& a);
// max |a_ij - b_ij|
double max_abs_diff(const Mat2& a, const Mat2& b);

// Measurement strength in [0, 1]: 0 extracts nothing, 1 is projective.
class MeasurementStrength {
  public:
    explicit MeasurementStrength(double value);
    double value() const { return value_; }

  private:
    double value_;
};

// A finite measurement with Kraus operators {M_i}, sum_i M_i^dag M_i = I.
// Outcome i on |psi> occurs with probability ||M_i psi||^2 and leaves the
// state M_i|psi> / ||M_i psi||.
struct Povm {
    std::vector<Mat2> ops;
    std::vector<std::string> labels;

    std::size_t size() const { return ops.size(); }
    // max |(sum_i M_i^dag M_i - I)_jk|, should be ~0
    double completeness_defect() const;
};

struct Outcome {
    std::size_t index;
    double probability;
    PureState post_state;
};

// Two-outcome partial measurement along a Bloch axis (must be unit length).
// The operators are sqrt((1+eps)/2) P_+ + sqrt((1-eps)/2) P_- and its
// mirror, with P_+/- the projectors onto the axis eigenstates. Labels are
// "+" (toward the axis) and "-".
Povm axis_measurement(const BlochVector& axis, MeasurementStrength strength);

// Four-outcome partial measurement whose outcomes point at the vertices of
// a regular tetrahedron on the Bloch sphere; labels "1".."4". At strength 1
// the outcome probabilities realize the symmetric informationally complete
// measurement; at strength 0 every operator is I/2.
Povm sic_povm(MeasurementStrength strength);

// The tetrahedron states the four outcomes of sic_povm point at, and their
// Bloch vectors. sic_directions()[0] is the north pole.
const std::array<PureState, 4>& sic_states();
const std::array<BlochVector, 4>& sic_directions();

// Samples one outcome by inverse CDF over the Born probabilities using
// random_draw in [0, 1). Outcomes with probability below 1e-15 are skipped;
// a draw that lands past the accumulated total (floating-point slack) takes
// the last viable outcome.
Outcome apply(const Povm& povm, const PureState& state, double random_draw);

// Deterministically applies outcome `index` (for replay and planning).
// Zero-probability branches get the operator's dominant output direction as
// a placeholder post state.
Outcome apply_outcome(const Povm& povm, const PureState& state, std::size_t index);

// All outcomes with probabilities and post states, in label order.
std::vector<Outcome> enumerate_outcomes(const Povm& povm, const PureState& state);

// Sequential composition: outcome (i, j) of the result is "a's outcome i,
// then b's outcome j", with operator B_j A_i and label "ai:bj". Ordering is
// i-major: index = i * b.size() + j.
Povm compose(const Povm& a, const Povm& b);

class UnreachableFidelityError : public std::runtime_error {
  public:
    explicit UnreachableFidelityError(const std::string& what) : std::runtime_error(what) {}
};

// Expected fidelity after n repeated strength-eps measurements along a fixed
// axis, starting from an unknown state: erf(eps * sqrt(n * pi) / 2).
// Requires eps in (0, 1] and n >= 0.
double fidelity_from_repetitions(MeasurementStrength strength, long n);

// Crude large-n shorthand 1 - exp(-n * eps). Only a rough scale estimate:
// it undershoots the erf expression by several percent even at n*eps ~ 10.
// Kept for comparisons; not used internally.
double fidelity_from_repetitions_approx(MeasurementStrength strength, long n);

// Smallest n with fidelity_from_repetitions(strength, n) >= target_f.
// A projective measurement (eps = 1) pins the axis in one shot, so it
// returns 1 for any target < 1. Throws UnreachableFidelityError for
// target_f = 1 with eps < 1.
long repetitions_for_fidelity(MeasurementStrength strength, double target_f);

// A consistent point on that fidelity curve: `fidelity` is exactly the value
// reached after `repetitions` measurements of the strength it was built for.
struct FidelitySpec {
    double fidelity;
    long repetitions;
};

// Cheapest spec meeting target_f at the given strength: repetitions is
// minimal and fidelity is the value actually reached (>= target_f).
FidelitySpec fidelity_spec_for(MeasurementStrength strength, double target_f);

}  // namespace qprep
