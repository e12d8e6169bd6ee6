#pragma once

#include <stdexcept>
#include <string>

namespace sparserl {

/// Invalid arguments passed to an operation or generator.
struct ParameterError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// An MDP, feature map, policy, or trajectory violates a structural invariant
/// (missing entry, bad level, probability row off, reward out of range, ...).
struct StructuralError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A per-level candidate set ran empty while the elimination loop still
/// needed to select from it.
struct EliminationExhausted : std::runtime_error {
    int level;
    explicit EliminationExhausted(int level_, const std::string& msg)
        : std::runtime_error(msg), level(level_) {}
};

/// The elimination loop reached its hard iteration bound without terminating.
struct IterationCapExceeded : std::runtime_error {
    long long cap;
    explicit IterationCapExceeded(long long cap_, const std::string& msg)
        : std::runtime_error(msg), cap(cap_) {}
};

/// An index-query strategy produced an out-of-range query.
struct StrategyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Observed trajectory data contradicts the instance that supposedly
/// produced it.
struct InstanceIntegrityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace sparserl
