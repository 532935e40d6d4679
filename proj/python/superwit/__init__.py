"""Collective-spin entanglement witnesses.

States live on the symmetric (Dicke) space, the joint spin x field space or the
full 2^N space; witnesses return their reports as dicts whose ``terms`` add up
to ``value``. A value below ``-tolerance`` certifies entanglement.
"""

from ._superwit import (
    State,
    __version__,
    bec_ground_state,
    dicke_ground_state,
    dicke_state,
    eta_lower_bound,
    experiment_names,
    gn,
    linear_entropy_Q,
    load_state,
    mandel_q_field,
    mu_HZ,
    mu_SR,
    mu_spin,
    product_moments,
    random_state,
    run_experiment,
    save_state,
    single_mode_witness,
    spin_moments,
    xi_new,
    xi_spin,
)

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]
