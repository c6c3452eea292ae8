"""Convex-duality estimators and optimizers for tabular MDPs."""

import json

from ._dualrl import (
    Dataset,
    DualRLError,
    Mdp,
    Policy,
    check_method,
    conjugate,
    emit_catalog,
    exact_average_reward,
    exact_policy_gradient,
    exact_q_values,
    exact_value,
    exact_visitation,
    f_divergence,
    from_behavior,
    generator_value,
    load_mdp,
    method_patterns,
    random_mdp,
    random_policy,
    run_cli,
    save_mdp,
)


def run_method(method, mdp, dataset, target=None, solver=None, with_oracle=True):
    """Run one registered method; returns a dict of results.

    solver takes the same keys as the "solver" block of an experiment config.
    """
    return _dualrl._run_method(method, mdp, dataset, target, json.dumps(solver or {}), with_oracle)


from . import _dualrl  # noqa: E402

__all__ = [
    "Dataset",
    "DualRLError",
    "Mdp",
    "Policy",
    "check_method",
    "conjugate",
    "emit_catalog",
    "exact_average_reward",
    "exact_policy_gradient",
    "exact_q_values",
    "exact_value",
    "exact_visitation",
    "f_divergence",
    "from_behavior",
    "generator_value",
    "load_mdp",
    "method_patterns",
    "random_mdp",
    "random_policy",
    "run_cli",
    "run_method",
    "save_mdp",
]
