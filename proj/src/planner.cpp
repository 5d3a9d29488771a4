#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <vector>

#include "qprep/protocols.hpp"

namespace qprep {

namespace {

// The planner searches in Bloch coordinates, where the post-measurement
// update has a simple closed form: the component along the outcome's
// tetrahedron direction moves from c to (c + eps) / (1 + eps c) and the
// transverse part shrinks by sqrt(1 - eps^2) / (1 + eps c).

// Euclidean landing tolerance. Roundoff in a strength eps shows up in the
// landing point as sqrt(1 - eps^2) noise near eps = 1 (about 2e-8 for one
// ulp), so the tolerance sits above that and still 10x inside the 1e-6 rad
// contract.
constexpr double kHitTol = 1e-7;
constexpr double kBranchFloor = 1e-9;  // reject branches this improbable (they are degenerate)

struct Hop {
    std::size_t outcome;
    double eps;
};

struct Candidate {
    std::vector<Hop> hops;
    double joint_prob;
};

double outcome_prob(const BlochVector& r, std::size_t i, double eps) {
    return (1.0 + eps * dot(r, sic_directions()[i])) / 4.0;
}

std::optional<BlochVector> post_bloch(const BlochVector& r, std::size_t i, double eps) {
    const BlochVector& n = sic_directions()[i];
    double c = dot(r, n);
    double denom = 1.0 + eps * c;
    if (denom < 1e-12) {
        return std::nullopt;  // vanishing branch, post state ill-defined
    }
    double along = (c + eps) / denom;
    double shrink = std::sqrt(std::max(0.0, 1.0 - eps * eps)) / denom;
    return (along * n + shrink * (r - c * n)).normalized();
}

// Closed-form last hop: outcome i moves the component along n_i upward, so
// the strength (t - c) / (1 - c t) lands exactly on the target whenever the
// target lies in the plane of (state, n_i) on the same side. Instead of
// testing those geometric conditions separately, candidates are verified by
// computing the landing point.
void final_hops(const BlochVector& s, const BlochVector& target, std::vector<Candidate>& out) {
    for (std::size_t i = 0; i < 4; i++) {
        const BlochVector& n = sic_directions()[i];
        double c = dot(s, n);
        double t = dot(target, n);
        double denom = 1.0 - c * t;
        if (denom < 1e-12) {
            continue;
        }
        double eps = (t - c) / denom;
        if (eps > 1.0 - 1e-12 && eps <= 1.0 + 1e-9) {
            eps = 1.0;  // snap a nearly projective hop; roundoff in eps blurs the landing
        }
        if (!(eps > 1e-12 && eps <= 1.0)) {
            continue;
        }
        double p = outcome_prob(s, i, eps);
        if (p < kBranchFloor) {
            continue;
        }
        auto landed = post_bloch(s, i, eps);
        if (landed && distance(*landed, target) < kHitTol) {
            out.push_back({{{i, eps}}, p});
        }
    }
}

// Coplanarity defect of the state reached by (i1, eps1) with respect to the
// plane spanned by n_i2 and the target. The last hop can only finish the
// job where this vanishes, so depth-2 solutions are roots in eps1.
double coplanarity(const BlochVector& s, std::size_t i1, double eps1, std::size_t i2,
                   const BlochVector& target) {
    auto mid = post_bloch(s, i1, eps1);
    if (!mid) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    return dot(cross(*mid, sic_directions()[i2]), target);
}

void try_two_hop(const BlochVector& s, const BlochVector& target, std::size_t i1, double eps1,
                 std::vector<Candidate>& out) {
    double p1 = outcome_prob(s, i1, eps1);
    if (p1 < kBranchFloor) {
        return;
    }
    auto mid = post_bloch(s, i1, eps1);
    if (!mid) {
        return;
    }
    std::vector<Candidate> tails;
    final_hops(*mid, target, tails);
    for (const Candidate& tail : tails) {
        Candidate c;
        c.hops = {{i1, eps1}, tail.hops[0]};
        c.joint_prob = p1 * tail.joint_prob;
        out.push_back(c);
    }
}

void two_hop_candidates(const BlochVector& s, const BlochVector& target, int scan_points,
                        std::vector<Candidate>& out) {
    double step = 1.0 / scan_points;
    for (std::size_t i1 = 0; i1 < 4; i1++) {
        for (std::size_t i2 = 0; i2 < 4; i2++) {
            double prev_x = step;
            double prev_g = coplanarity(s, i1, prev_x, i2, target);
            if (std::abs(prev_g) < 1e-12 && std::isfinite(prev_g)) {
                try_two_hop(s, target, i1, prev_x, out);
            }
            for (int k = 2; k <= scan_points; k++) {
                double x = static_cast<double>(k) * step;
                double g = coplanarity(s, i1, x, i2, target);
                if (std::abs(g) < 1e-12 && std::isfinite(g)) {
                    try_two_hop(s, target, i1, x, out);
                } else if (std::isfinite(prev_g) && std::isfinite(g) &&
                           (prev_g < 0.0) != (g < 0.0)) {
                    // bracketed root: bisect to machine precision
                    double lo = prev_x;
                    double hi = x;
                    double g_lo = prev_g;
                    for (int it = 0; it < 200 && hi - lo > 1e-15; it++) {
                        double midpt = 0.5 * (lo + hi);
                        double gm = coplanarity(s, i1, midpt, i2, target);
                        if (!std::isfinite(gm)) {
                            break;
                        }
                        if ((g_lo < 0.0) != (gm < 0.0)) {
                            hi = midpt;
                        } else {
                            lo = midpt;
                            g_lo = gm;
                        }
                    }
                    try_two_hop(s, target, i1, 0.5 * (lo + hi), out);
                }
                prev_x = x;
                prev_g = g;
            }
        }
    }
}

void three_hop_candidates(const BlochVector& s, const BlochVector& target, int scan_points,
                          std::vector<Candidate>& out) {
    double step = 1.0 / scan_points;
    for (std::size_t i1 = 0; i1 < 4; i1++) {
        for (int k = 1; k <= scan_points; k++) {
            double eps1 = static_cast<double>(k) * step;
            double p1 = outcome_prob(s, i1, eps1);
            if (p1 < kBranchFloor) {
                continue;
            }
            auto mid = post_bloch(s, i1, eps1);
            if (!mid) {
                continue;
            }
            std::vector<Candidate> tails;
            two_hop_candidates(*mid, target, scan_points, tails);
            for (const Candidate& tail : tails) {
                Candidate c;
                c.hops = {{i1, eps1}, tail.hops[0], tail.hops[1]};
                c.joint_prob = p1 * tail.joint_prob;
                out.push_back(c);
            }
        }
    }
}

bool better(const Candidate& a, const Candidate& b) {
    if (a.joint_prob != b.joint_prob) {
        return a.joint_prob > b.joint_prob;
    }
    for (std::size_t k = 0; k < a.hops.size(); k++) {
        if (a.hops[k].outcome != b.hops[k].outcome) {
            return a.hops[k].outcome < b.hops[k].outcome;
        }
    }
    for (std::size_t k = 0; k < a.hops.size(); k++) {
        if (a.hops[k].eps != b.hops[k].eps) {
            return a.hops[k].eps < b.hops[k].eps;
        }
    }
    return false;
}

std::vector<PlanStep> to_plan(const Candidate& cand, const BlochVector& start) {
    std::vector<PlanStep> plan;
    BlochVector r = start;
    for (const Hop& hop : cand.hops) {
        PlanStep ps;
        ps.epsilon = hop.eps;
        ps.outcome_index = hop.outcome;
        ps.outcome_label = std::to_string(hop.outcome + 1);
        ps.probability = outcome_prob(r, hop.outcome, hop.eps);
        plan.push_back(ps);
        r = *post_bloch(r, hop.outcome, hop.eps);
    }
    return plan;
}

}  // namespace

std::vector<PlanStep> plan_sic_sequence(const PureState& initial, const PureState& target,
                                        int max_depth, double grid) {
    if (max_depth < 0) {
        throw std::invalid_argument("plan depth must be non-negative");
    }
    if (!(grid > 1e-6 && grid <= 0.5)) {
        throw std::invalid_argument("strength grid resolution must lie in (1e-6, 0.5]");
    }
    BlochVector s = to_bloch(initial);
    BlochVector t = to_bloch(target);
    if (distance(s, t) < 1e-9) {
        return {};
    }

    int scan_points = std::max(8, static_cast<int>(std::lround(1.0 / grid)));
    // The three-hop search nests two scans; a coarser per-axis resolution
    // keeps it polynomial while bisection still sharpens every root found.
    int coarse = std::max(64, scan_points / 4);

    std::vector<Candidate> candidates;
    for (int depth = 1; depth <= std::min(max_depth, 3); depth++) {
        candidates.clear();
        if (depth == 1) {
            final_hops(s, t, candidates);
        } else if (depth == 2) {
            two_hop_candidates(s, t, scan_points, candidates);
        } else {
            three_hop_candidates(s, t, coarse, candidates);
        }
        if (!candidates.empty()) {
            const Candidate* best = &candidates[0];
            for (const Candidate& c : candidates) {
                if (better(c, *best)) {
                    best = &c;
                }
            }
            return to_plan(*best, s);
        }
    }

    std::ostringstream msg;
    msg << "no tetrahedral-measurement sequence of depth <= " << max_depth
        << " reaches (theta=" << t.theta() << ", phi=" << t.phi() << ") from (theta=" << s.theta()
        << ", phi=" << s.phi() << ")";
    throw PlannerFailure(msg.str());
}

}  // namespace qprep
