#include "sparserl/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace sparserl {

namespace {
constexpr double kNormTol = 1e-9;
constexpr int kRejectionStreak = 100000;

double sq(double x) { return x * x; }
}  // namespace

void FeatureMap::validate(const TabularMdp& mdp) const {
    if (dim < 1) throw StructuralError("feature dimension must be >= 1");
    if (static_cast<int>(phi.size()) != mdp.num_states())
        throw StructuralError("feature table does not cover the state set");
    for (StateId s = 0; s < mdp.num_states(); ++s) {
        if (static_cast<int>(phi[s].size()) != mdp.num_actions())
            throw StructuralError("feature table does not cover the action set");
        for (const auto& vec : phi[s]) {
            if (static_cast<int>(vec.size()) != dim)
                throw StructuralError("feature vector has wrong dimension");
            double n2 = 0.0;
            for (double x : vec) n2 += sq(x);
            if (n2 > 1.0 + 2.0 * kNormTol)
                throw StructuralError("feature norm exceeds 1");
        }
    }
}

std::vector<double> SparseParam::dense(int dim) const {
    std::vector<double> out(dim, 0.0);
    for (std::size_t i = 0; i < support.size(); ++i) out[support[i]] = values[i];
    return out;
}

double SparseParam::norm() const {
    double n2 = 0.0;
    for (double v : values) n2 += sq(v);
    return std::sqrt(n2);
}

void SparseParam::validate(int dim) const {
    if (support.empty() || support.size() != values.size())
        throw StructuralError("sparse parameter support/value size mismatch");
    for (std::size_t i = 0; i < support.size(); ++i) {
        if (support[i] < 0 || support[i] >= dim)
            throw StructuralError("sparse parameter support index out of range");
        if (i > 0 && support[i] <= support[i - 1])
            throw StructuralError("sparse parameter support not sorted/distinct");
    }
    if (std::abs(norm() - 1.0) > kNormTol)
        throw StructuralError("sparse parameter is not unit norm");
}

double param_distance(const SparseParam& a, const SparseParam& b) {
    double d2 = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.support.size() || j < b.support.size()) {
        if (j >= b.support.size() || (i < a.support.size() && a.support[i] < b.support[j])) {
            d2 += sq(a.values[i]);
            ++i;
        } else if (i >= a.support.size() || b.support[j] < a.support[i]) {
            d2 += sq(b.values[j]);
            ++j;
        } else {
            d2 += sq(a.values[i] - b.values[j]);
            ++i;
            ++j;
        }
    }
    return std::sqrt(d2);
}

SparseParam ParamNet::candidate(std::size_t idx) const {
    const std::size_t support_idx = idx / sphere.size();
    const std::size_t sphere_idx = idx % sphere.size();
    SparseParam p;
    p.support = supports[support_idx];
    p.values = sphere[sphere_idx];
    return p;
}

double ParamNet::candidate_count_bound() const {
    double bound = std::pow(1.0 + 4.0 / separation, sparsity);
    double binom = 1.0;
    for (int i = 0; i < sparsity; ++i)
        binom = binom * static_cast<double>(dim - i) / static_cast<double>(i + 1);
    return bound * binom;
}

namespace {

std::vector<std::vector<int>> k_subsets(int d, int k) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur(k);
    for (int i = 0; i < k; ++i) cur[i] = i;
    while (true) {
        out.push_back(cur);
        int i = k - 1;
        while (i >= 0 && cur[i] == d - k + i) --i;
        if (i < 0) break;
        ++cur[i];
        for (int j = i + 1; j < k; ++j) cur[j] = cur[j - 1] + 1;
    }
    return out;
}

std::vector<double> uniform_sphere_point(int k, Rng& rng) {
    std::vector<double> v(k);
    double n2;
    do {
        n2 = 0.0;
        for (double& x : v) {
            x = rng.gaussian();
            n2 += sq(x);
        }
    } while (n2 == 0.0);
    const double inv = 1.0 / std::sqrt(n2);
    for (double& x : v) x *= inv;
    return v;
}

double dist_k(const std::vector<double>& a, const std::vector<double>& b) {
    double d2 = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d2 += sq(a[i] - b[i]);
    return std::sqrt(d2);
}

}  // namespace

ParamNet build_net(int d, int k, double eps_net, Rng& rng) {
    if (k < 1 || k > d) throw ParameterError("need 1 <= k <= d");
    if (!(eps_net > 0.0) || eps_net > 2.0) throw ParameterError("need 0 < eps_net <= 2");

    ParamNet net;
    net.dim = d;
    net.sparsity = k;
    net.separation = eps_net;
    net.supports = k_subsets(d, k);

    // Signed axis points first: they guarantee the one-hot candidates that
    // the hard instances rely on, and for k = 1 they already fill the sphere.
    for (int i = 0; i < k; ++i) {
        std::vector<double> plus(k, 0.0), minus(k, 0.0);
        plus[i] = 1.0;
        minus[i] = -1.0;
        net.sphere.push_back(plus);
        net.sphere.push_back(minus);
    }

    if (k > 1) {
        const double min_dist = eps_net / 2.0;
        int streak = 0;
        while (streak < kRejectionStreak) {
            std::vector<double> p = uniform_sphere_point(k, rng);
            bool ok = true;
            for (const auto& q : net.sphere) {
                if (dist_k(p, q) < min_dist) {
                    ok = false;
                    break;
                }
            }
            if (ok) {
                net.sphere.push_back(std::move(p));
                streak = 0;
            } else {
                ++streak;
            }
        }
    }

    // Packing bound from the volume argument; exceeding it means a bug.
    if (static_cast<double>(net.sphere.size()) > std::pow(1.0 + 4.0 / eps_net, k))
        throw StructuralError("sphere net exceeds the packing bound");
    return net;
}

std::size_t nearest_candidate(const ParamNet& net, const SparseParam& theta) {
    std::size_t best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t idx = 0; idx < net.size(); ++idx) {
        const double dist = param_distance(net.candidate(idx), theta);
        if (dist < best_dist) {
            best_dist = dist;
            best = idx;
        }
    }
    return best;
}

double covering_fraction(const ParamNet& net, int probes, Rng& rng) {
    const double radius = net.separation / 2.0;
    int covered = 0;
    for (int i = 0; i < probes; ++i) {
        const std::vector<double> p = uniform_sphere_point(net.sparsity, rng);
        for (const auto& q : net.sphere) {
            if (dist_k(p, q) <= radius) {
                ++covered;
                break;
            }
        }
    }
    return static_cast<double>(covered) / static_cast<double>(probes);
}

double inner_value(const FeatureMap& fm, const SparseParam& theta, StateId s, ActionId a) {
    return theta.dot(fm.at(s, a));
}

ActionId greedy_action(const TabularMdp& mdp, const FeatureMap& fm, const SparseParam& theta,
                       StateId s) {
    ActionId best = 0;
    double best_value = theta.dot(fm.at(s, 0));
    for (ActionId a = 1; a < mdp.num_actions(); ++a) {
        const double value = theta.dot(fm.at(s, a));
        if (value > best_value) {
            best_value = value;
            best = a;
        }
    }
    return best;
}

double v_theta(const TabularMdp& mdp, const FeatureMap& fm, const SparseParam& theta, StateId s) {
    double best = theta.dot(fm.at(s, 0));
    for (ActionId a = 1; a < mdp.num_actions(); ++a)
        best = std::max(best, theta.dot(fm.at(s, a)));
    return best;
}

double assumption_gap(const TabularMdp& mdp, const FeatureMap& fm,
                      const std::vector<SparseParam>& theta) {
    if (static_cast<int>(theta.size()) != mdp.horizon)
        throw ParameterError("need one parameter per level");
    const OptimalSolution sol = exact_optimal(mdp);
    double gap = 0.0;
    for (int h = 0; h < mdp.horizon; ++h) {
        for (const StateId s : mdp.levels[h]) {
            for (ActionId a = 0; a < mdp.num_actions(); ++a) {
                gap = std::max(gap, std::abs(inner_value(fm, theta[h], s, a) - sol.q[s][a]));
            }
        }
    }
    return gap;
}

void write_net(const ParamNet& net, std::ostream& out) {
    char buf[64];
    out << "dim " << net.dim << "\nsparsity " << net.sparsity << "\n";
    std::snprintf(buf, sizeof buf, "%.17g", net.separation);
    out << "separation " << buf << "\n";
    out << "sphere " << net.sphere.size() << "\n";
    for (const auto& p : net.sphere) {
        for (std::size_t i = 0; i < p.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", p[i]);
            out << (i ? " " : "") << buf;
        }
        out << "\n";
    }
    out << "supports " << net.supports.size() << "\n";
    for (const auto& sup : net.supports) {
        for (std::size_t i = 0; i < sup.size(); ++i) out << (i ? " " : "") << sup[i];
        out << "\n";
    }
}

}  // namespace sparserl
