#pragma once

// Anticipatory mobility prediction. Inputs are limited to the association
// history, the velocity-class transition matrix and the observation model;
// nothing in here can see vehicle positions.

#include "sdvec/association.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace sdvec {

template <typename Scalar>
using Belief = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using CellMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// P(AP bit observed = 1 | cell), cells x APs. AP bits are treated as
/// conditionally independent given the cell.
template <typename Scalar = double>
struct ObservationModel {
    CellMatrix<Scalar> p_observed;

    std::size_t cell_count() const noexcept { return static_cast<std::size_t>(p_observed.rows()); }
    std::size_t ap_count() const noexcept { return static_cast<std::size_t>(p_observed.cols()); }
};

template <typename Scalar>
Belief<Scalar> uniform_belief(std::size_t cells)
{
    return Belief<Scalar>::Constant(static_cast<Eigen::Index>(cells), Scalar(1) / static_cast<Scalar>(cells));
}

/// Likelihood of an association vector in every cell.
template <typename Scalar>
Belief<Scalar> observation_likelihood(const AssociationVector& obs, const ObservationModel<Scalar>& model)
{
    if (obs.bits.size() != model.ap_count()) {
        throw std::invalid_argument("association vector length does not match AP count");
    }
    Belief<Scalar> lik = Belief<Scalar>::Ones(model.p_observed.rows());
    for (Eigen::Index a = 0; a < model.p_observed.cols(); ++a) {
        if (obs.bits[static_cast<std::size_t>(a)] != 0) {
            lik.array() *= model.p_observed.col(a).array();
        } else {
            lik.array() *= (Scalar(1) - model.p_observed.col(a).array());
        }
    }
    return lik;
}

/// One-step prior: b+(c) = sum_c0 P(c | c0) b(c0), rows of `transition` indexed by c0.
template <typename Scalar>
Belief<Scalar> predict_prior(const Belief<Scalar>& belief, const CellMatrix<Scalar>& transition)
{
    return transition.transpose() * belief;
}

template <typename Scalar>
struct BeliefUpdate {
    Belief<Scalar> belief;
    bool zero_likelihood = false; // observation impossible under the model; prior kept
};

/// Recursive Bayesian filter step (predict, then weight by the observation
/// likelihood and renormalize). A zero-total likelihood skips the update and
/// returns the predicted prior with the flag set.
template <typename Scalar>
BeliefUpdate<Scalar> update_belief(const Belief<Scalar>& belief, const AssociationVector& obs,
                                   const CellMatrix<Scalar>& transition, const ObservationModel<Scalar>& obs_model)
{
    if (belief.size() != transition.rows() || transition.rows() != transition.cols()
        || static_cast<std::size_t>(belief.size()) != obs_model.cell_count()) {
        throw std::invalid_argument("update_belief: dimension mismatch");
    }
    BeliefUpdate<Scalar> out;
    const Belief<Scalar> prior = predict_prior(belief, transition);
    Belief<Scalar> post = prior.cwiseProduct(observation_likelihood(obs, obs_model));
    const Scalar total = post.sum();
    if (!(total > Scalar(0))) {
        out.belief = prior / prior.sum();
        out.zero_likelihood = true;
        return out;
    }
    out.belief = post / total;
    return out;
}

/// Marginal probability of each AP appearing in next slot's association vector.
template <typename Scalar>
Belief<Scalar> association_marginals(const Belief<Scalar>& belief, const CellMatrix<Scalar>& transition,
                                     const ObservationModel<Scalar>& obs_model)
{
    return obs_model.p_observed.transpose() * predict_prior(belief, transition);
}

/// Next-slot association: AP bit set iff its predicted marginal >= threshold.
template <typename Scalar>
AssociationVector predict_association(const Belief<Scalar>& belief, const CellMatrix<Scalar>& transition,
                                      const ObservationModel<Scalar>& obs_model, Scalar threshold)
{
    if (!(threshold > Scalar(0) && threshold < Scalar(1))) {
        throw std::invalid_argument("predict_association: threshold must be in (0, 1)");
    }
    const Belief<Scalar> m = association_marginals(belief, transition, obs_model);
    AssociationVector out;
    out.bits.resize(static_cast<std::size_t>(m.size()));
    for (Eigen::Index a = 0; a < m.size(); ++a) {
        out.bits[static_cast<std::size_t>(a)] = m(a) >= threshold ? 1 : 0;
    }
    return out;
}

} // namespace sdvec
