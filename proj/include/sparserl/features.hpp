#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "sparserl/mdp.hpp"

namespace sparserl {

/// d-dimensional feature vector per (state, action), with ||phi|| <= 1.
struct FeatureMap {
    int dim = 0;
    std::vector<std::vector<std::vector<double>>> phi;  // [state][action][component]

    std::span<const double> at(StateId s, ActionId a) const { return phi[s][a]; }

    /// Checks table shape against the MDP and the unit norm bound (1e-9 slack).
    void validate(const TabularMdp& mdp) const;
};

/// Unit-norm parameter supported on exactly k coordinates of [d].
struct SparseParam {
    std::vector<int> support;   // sorted, distinct
    std::vector<double> values;

    double dot(std::span<const double> phi) const {
        double s = 0.0;
        for (std::size_t i = 0; i < support.size(); ++i) s += values[i] * phi[support[i]];
        return s;
    }
    std::vector<double> dense(int dim) const;
    double norm() const;
    void validate(int dim) const;  // unit norm within 1e-9, support in range
};

/// Euclidean distance between two sparse parameters viewed as d-vectors.
double param_distance(const SparseParam& a, const SparseParam& b);

/// The finite candidate family: a separated subset of the k-sphere crossed
/// with every k-subset of [d]. Candidate idx = support_idx * |sphere| +
/// sphere_idx, which fixes "net order" for all tie-breaks.
struct ParamNet {
    int dim = 0;
    int sparsity = 0;
    double separation = 0.0;                  // eps_net
    std::vector<std::vector<double>> sphere;  // points in R^k, unit norm
    std::vector<std::vector<int>> supports;   // lexicographic k-subsets of [d]

    std::size_t size() const { return sphere.size() * supports.size(); }
    SparseParam candidate(std::size_t idx) const;

    /// (1 + 4/eps_net)^k * C(d, k); the candidate family never exceeds it.
    double candidate_count_bound() const;
};

/// Greedy sphere packing: seeds the 2k signed axis points, then streams
/// seeded-uniform sphere samples, accepting any point at distance
/// >= eps_net/2 from all accepted ones, and stops after 1e5 consecutive
/// rejections. k = 1 is exact ({+1, -1}) with no sampling.
ParamNet build_net(int d, int k, double eps_net, Rng& rng);

/// Index of the candidate closest to theta; first (lowest) index wins ties.
std::size_t nearest_candidate(const ParamNet& net, const SparseParam& theta);

/// Fraction of `probes` uniform points on the k-sphere that lie within
/// eps_net/2 of the sphere net. Near 1 certifies approximate maximality.
double covering_fraction(const ParamNet& net, int probes, Rng& rng);

double inner_value(const FeatureMap& fm, const SparseParam& theta, StateId s, ActionId a);

/// argmax_a <phi(s, a), theta>; ties resolve to the lowest action index.
ActionId greedy_action(const TabularMdp& mdp, const FeatureMap& fm, const SparseParam& theta,
                       StateId s);

/// max_a <phi(s, a), theta>.
double v_theta(const TabularMdp& mdp, const FeatureMap& fm, const SparseParam& theta, StateId s);

/// max over (h, s, a) of |<phi(s, a), theta_h> - Q*(s, a)|. An instance
/// satisfies the linear approximation assumption with error eps iff this
/// is <= eps.
double assumption_gap(const TabularMdp& mdp, const FeatureMap& fm,
                      const std::vector<SparseParam>& theta);

/// Audit/replay export: supports and sphere points at 17 significant digits.
void write_net(const ParamNet& net, std::ostream& out);

}  // namespace sparserl
