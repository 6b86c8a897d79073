import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import haar_unitary, random_density, random_pure
from mediator.core import (
    DensityOperator,
    StateVector,
    SystemLayout,
    max_entangled_state,
    tensor_product,
)
from mediator.correlations import (
    ALL_MEASURES,
    MeasureKind,
    capacity_table,
    classical_lower_bound,
    correlation_capacity,
    dimension_witness,
    discord_lower_bound,
    evaluate_trajectory,
    initial_correlation_term,
    mutual_information,
    negativity,
    von_neumann_entropy,
)
from mediator.dynamics import build_jc_hamiltonian, unitary_trajectory
from mediator.errors import InvalidArgumentError, PositivityError


def bell():
    return StateVector(np.array([1, 0, 0, 1]) / np.sqrt(2), (2, 2), ("A", "B")).density()


def mixed_product(d=2):
    return DensityOperator(tensor_product([np.eye(d) / d, np.eye(d) / d]), (d, d), ("A", "B"))


def _all_measures(rho):
    return (
        mutual_information(rho),
        classical_lower_bound(rho),
        discord_lower_bound(rho),
        negativity(rho),
    )


# Entropy


def test_entropy_examples():
    assert von_neumann_entropy(bell()) == pytest.approx(0.0, abs=1e-12)
    assert von_neumann_entropy(DensityOperator(np.eye(2) / 2, (2,), ("A",))) == pytest.approx(1.0)
    assert von_neumann_entropy(DensityOperator(np.eye(5) / 5, (5,), ("A",))) == pytest.approx(math.log2(5))


def test_entropy_rejects_negative_spectrum():
    with pytest.raises(PositivityError):
        DensityOperator(np.diag([1.1, -0.1]), (2,), ("A",))


# Measures on textbook states


def test_bell_state_values():
    mi, cl, dl, neg = _all_measures(bell())
    assert mi == pytest.approx(2.0)
    assert cl == pytest.approx(1.0)
    assert dl == pytest.approx(1.0)
    assert neg == pytest.approx(0.5)


def test_maximally_mixed_product():
    mi, cl, dl, neg = _all_measures(mixed_product())
    assert mi == pytest.approx(0.0, abs=1e-12)
    assert cl == pytest.approx(0.0, abs=1e-12)
    assert dl == pytest.approx(-1.0)
    assert neg == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_max_entangled_reaches_capacity(d):
    psi = max_entangled_state(d, d + 1)
    rho = psi.density()
    assert mutual_information(rho) == pytest.approx(2 * math.log2(d))
    assert negativity(rho) == pytest.approx((d - 1) / 2)
    assert discord_lower_bound(rho) == pytest.approx(math.log2(d))


def test_max_entangled_examples():
    assert mutual_information(max_entangled_state(3, 3).density()) == pytest.approx(3.1699250014, abs=1e-9)
    assert negativity(max_entangled_state(4, 4).density()) == pytest.approx(1.5)


def test_classical_lower_bound_depends_on_basis():
    # |+>|+> is a product state, so every measure vanishes in any basis
    plus = np.array([1, 1]) / np.sqrt(2)
    rho = StateVector(np.kron(plus, plus), (2, 2), ("A", "B")).density()
    assert classical_lower_bound(rho) == pytest.approx(0.0, abs=1e-12)
    # the Bell state measured in a rotated basis on one side only loses correlation
    h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    assert classical_lower_bound(bell(), bases=(h, None)) == pytest.approx(0.0, abs=1e-12)
    assert classical_lower_bound(bell(), bases=(h, h.conj())) == pytest.approx(1.0)


def test_classical_basis_must_be_unitary():
    with pytest.raises(InvalidArgumentError):
        classical_lower_bound(bell(), bases=(np.ones((2, 2)), None))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31), st.integers(2, 4), st.integers(2, 4))
def test_product_states_have_no_correlations(seed, da, db):
    rng = np.random.default_rng(seed)
    rho = DensityOperator(tensor_product([random_density(rng, da), random_density(rng, db)]), (da, db), ("A", "B"))
    mi, cl, _, neg = _all_measures(rho)
    assert abs(mi) < 1e-10
    assert abs(cl) < 1e-10
    assert abs(neg) < 1e-10


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31), st.integers(2, 3), st.integers(2, 3), st.sampled_from([None, 1, 2]))
def test_chain_inequalities(seed, da, db, rank):
    rng = np.random.default_rng(seed)
    rho = DensityOperator(random_density(rng, da * db, rank), (da, db), ("A", "B"))
    mi = mutual_information(rho)
    assert discord_lower_bound(rho) <= mi + 1e-9
    assert classical_lower_bound(rho) <= mi + 1e-9
    assert negativity(rho) >= -1e-10


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31))
def test_local_unitary_invariance(seed):
    rng = np.random.default_rng(seed)
    da, db = 2, 3
    rho = DensityOperator(random_density(rng, da * db, 2), (da, db), ("A", "B"))
    ua, ub = haar_unitary(rng, da), haar_unitary(rng, db)
    u = np.kron(ua, ub)
    rotated = DensityOperator(u @ rho.matrix @ u.conj().T, (da, db), ("A", "B"))
    assert mutual_information(rotated) == pytest.approx(mutual_information(rho), abs=1e-9)
    assert discord_lower_bound(rotated) == pytest.approx(discord_lower_bound(rho), abs=1e-9)
    assert negativity(rotated) == pytest.approx(negativity(rho), abs=1e-9)
    # the classical bound is tied to a basis, so the basis rotates with the state
    assert classical_lower_bound(rotated, bases=(ua, ub)) == pytest.approx(classical_lower_bound(rho), abs=1e-9)


def test_classical_bound_invariant_under_basis_permutation_and_phases():
    rng = np.random.default_rng(11)
    rho = DensityOperator(random_density(rng, 9), (3, 3), ("A", "B"))
    perm = np.eye(3)[[2, 0, 1]] * np.exp(1j * rng.uniform(0, 2 * np.pi, 3))
    u = np.kron(perm, np.eye(3))
    rotated = DensityOperator(u @ rho.matrix @ u.conj().T, (3, 3), ("A", "B"))
    assert classical_lower_bound(rotated) == pytest.approx(classical_lower_bound(rho), abs=1e-12)


def test_cut_selects_and_orders_subsystems():
    layout = SystemLayout(2, 2, 2)
    # Bell pair on A and C, B in |0>
    amps = np.zeros(8)
    amps[layout.index(0, 0, 0)] = amps[layout.index(1, 0, 1)] = 1 / np.sqrt(2)
    rho = StateVector(amps, layout.dims).density()
    assert mutual_information(rho, ("A", "C")) == pytest.approx(2.0)
    assert mutual_information(rho, ("C", "A")) == pytest.approx(2.0)
    assert mutual_information(rho, ("A", "B")) == pytest.approx(0.0, abs=1e-12)
    assert negativity(rho, (("A",), ("C",))) == pytest.approx(0.5)
    assert mutual_information(rho, (("A", "C"), ("B",))) == pytest.approx(0.0, abs=1e-12)


def test_cut_errors():
    rho = StateVector(np.eye(8)[0], (2, 2, 2), ("A", "B", "C")).density()
    with pytest.raises(InvalidArgumentError):
        mutual_information(rho)
    with pytest.raises(InvalidArgumentError):
        mutual_information(rho, ("A", "A"))
    with pytest.raises(InvalidArgumentError):
        mutual_information(rho, ("A", "D"))


# Capacities and witness


def test_capacity_examples():
    assert correlation_capacity(MeasureKind.MUTUAL_INFORMATION, 2) == 2.0
    assert correlation_capacity(MeasureKind.NEGATIVITY, 2) == 0.5
    assert correlation_capacity(MeasureKind.CLASSICAL_LOWER_BOUND, 4) == 2.0
    assert correlation_capacity(MeasureKind.DISCORD_LOWER_BOUND, 4) == 2.0


@pytest.mark.parametrize("bad", [1, 0, -3, 2.5])
def test_capacity_rejects_small_dimension(bad):
    with pytest.raises(InvalidArgumentError):
        correlation_capacity(MeasureKind.NEGATIVITY, bad)


@pytest.mark.parametrize("kind", ALL_MEASURES)
def test_capacity_monotone(kind):
    caps = [correlation_capacity(kind, d) for d in range(2, 20)]
    assert all(a <= b for a, b in zip(caps, caps[1:]))


def test_capacity_table():
    table = capacity_table([2, 3])
    assert len(table) == 8
    assert table[(MeasureKind.NEGATIVITY, 3)] == 1.0


@pytest.mark.parametrize("kind", ALL_MEASURES)
@pytest.mark.parametrize("d", range(2, 9))
def test_witness_inverts_capacity(kind, d):
    assert dimension_witness(kind, correlation_capacity(kind, d)) == d


@pytest.mark.parametrize(
    "kind, value, expected",
    [
        (MeasureKind.NEGATIVITY, 0.7, 3),
        (MeasureKind.MUTUAL_INFORMATION, 2.5, 3),
        (MeasureKind.NEGATIVITY, 0.5, 2),
        (MeasureKind.MUTUAL_INFORMATION, 2.0, 2),
        (MeasureKind.NEGATIVITY, 1.5, 4),
        (MeasureKind.CLASSICAL_LOWER_BOUND, 1.0000001, 3),
        (MeasureKind.NEGATIVITY, 0.0, 1),
        (MeasureKind.DISCORD_LOWER_BOUND, -0.4, 1),
    ],
)
def test_witness_examples(kind, value, expected):
    assert dimension_witness(kind, value) == expected


def test_witness_errors():
    with pytest.raises(InvalidArgumentError):
        dimension_witness(MeasureKind.NEGATIVITY, -0.1)
    with pytest.raises(InvalidArgumentError):
        dimension_witness(MeasureKind.MUTUAL_INFORMATION, float("inf"))


def test_measure_kind_parse():
    assert MeasureKind.parse("MI") is MeasureKind.MUTUAL_INFORMATION
    assert MeasureKind.parse("classical") is MeasureKind.CLASSICAL_LOWER_BOUND
    assert MeasureKind.parse("negativity") is MeasureKind.NEGATIVITY
    with pytest.raises(InvalidArgumentError):
        MeasureKind.parse("concurrence")


# Initial correlations


def test_initial_term_product_states():
    rng = np.random.default_rng(5)
    parts = [random_density(rng, 2) for _ in range(3)]
    assert initial_correlation_term(DensityOperator(tensor_product(parts), (2, 2, 2))) == pytest.approx(0.0, abs=1e-12)
    layout = SystemLayout(2, 2, 2)
    assert initial_correlation_term(layout.basis_state(1, 1, 0)) == pytest.approx(0.0, abs=1e-12)


def test_initial_term_entangled_ac_with_product_b():
    layout = SystemLayout(2, 2, 2)
    amps = np.zeros(8)
    amps[layout.index(0, 1, 0)] = amps[layout.index(1, 1, 1)] = 1 / np.sqrt(2)
    psi = StateVector(amps, layout.dims)
    assert initial_correlation_term(psi) == pytest.approx(0.0, abs=1e-12)
    assert initial_correlation_term(psi.density()) == pytest.approx(0.0, abs=1e-12)


def test_initial_term_bell_across_ab():
    layout = SystemLayout(2, 2, 2)
    amps = np.zeros(8)
    amps[layout.index(0, 0, 0)] = amps[layout.index(1, 1, 0)] = 1 / np.sqrt(2)
    psi = StateVector(amps, layout.dims)
    assert initial_correlation_term(psi) == pytest.approx(2.0)
    assert initial_correlation_term(psi.density()) == pytest.approx(2.0)


def test_initial_term_pure_shortcut_agrees_with_mixed_route():
    rng = np.random.default_rng(8)
    psi = StateVector(random_pure(rng, 18), (3, 3, 2))
    assert initial_correlation_term(psi) == pytest.approx(initial_correlation_term(psi.density()), abs=1e-10)


# Trajectories


@pytest.fixture(scope="module")
def jc_110():
    layout = SystemLayout(3, 3, 2)
    spec = build_jc_hamiltonian(layout, 1.0)
    times = np.linspace(0, 4, 401)
    states = unitary_trajectory(layout.basis_state(1, 1, 0), spec, times)
    return layout, times, states


def test_trajectory_jc_110_violates_mutual_information(jc_110):
    layout, times, states = jc_110
    traj = evaluate_trajectory(states, layout, times=times)
    mi = MeasureKind.MUTUAL_INFORMATION
    assert traj.bound[mi] == 2.0
    assert traj.max_value(mi) > 2.0 + 1e-6
    flag, first = traj.violated[mi]
    assert flag and 0 < first < 4
    assert traj.notes == []


def test_trajectory_starts_uncorrelated(jc_110):
    layout, times, states = jc_110
    traj = evaluate_trajectory(states[:1], layout, times=times[:1])
    for kind in ALL_MEASURES:
        assert abs(traj.values[kind][0]) < 1e-10


def test_trajectory_chain_every_sample(jc_110):
    layout, times, states = jc_110
    traj = evaluate_trajectory(states, layout, times=times)
    mi = traj.values[MeasureKind.MUTUAL_INFORMATION]
    assert np.all(traj.values[MeasureKind.DISCORD_LOWER_BOUND] <= mi + 1e-9)
    assert np.all(traj.values[MeasureKind.CLASSICAL_LOWER_BOUND] <= mi + 1e-9)
    assert np.all(traj.values[MeasureKind.NEGATIVITY] >= -1e-10)


def test_trajectory_mixed_and_pure_inputs_agree(jc_110):
    layout, times, states = jc_110
    sub = states[::50]
    a = evaluate_trajectory(sub, layout)
    b = evaluate_trajectory([s.density() for s in sub], layout)
    for kind in ALL_MEASURES:
        np.testing.assert_allclose(a.values[kind], b.values[kind], atol=1e-10)


def test_trajectory_with_initial_correlation_has_note():
    layout = SystemLayout(2, 2, 2)
    amps = np.zeros(8)
    amps[layout.index(0, 0, 0)] = amps[layout.index(1, 1, 0)] = 1 / np.sqrt(2)
    psi = StateVector(amps, layout.dims)
    traj = evaluate_trajectory([psi], layout)
    assert traj.initial_correlation_term == pytest.approx(2.0)
    assert traj.bound[MeasureKind.MUTUAL_INFORMATION] == pytest.approx(4.0)
    assert traj.bound[MeasureKind.NEGATIVITY] == 0.5
    assert len(traj.notes) == 1 and "negativity" in traj.notes[0]
    # the Bell pair sits exactly at the negativity capacity, so it is not flagged
    assert traj.violated[MeasureKind.NEGATIVITY] == (False, None)


def test_trajectory_subset_of_measures(jc_110):
    layout, times, states = jc_110
    traj = evaluate_trajectory(states[:3], layout, measures=[MeasureKind.NEGATIVITY])
    assert list(traj.values) == [MeasureKind.NEGATIVITY]
    np.testing.assert_array_equal(traj.times, [0.0, 1.0, 2.0])


def test_trajectory_errors(jc_110):
    layout, times, states = jc_110
    with pytest.raises(InvalidArgumentError):
        evaluate_trajectory([], layout)
    with pytest.raises(InvalidArgumentError):
        evaluate_trajectory(states[:3], layout, times=[0.0, 1.0])


def test_compressed_evaluation_matches_direct():
    # a state large enough to trigger compression onto local supports
    rng = np.random.default_rng(2)
    layout = SystemLayout(9, 9, 2)
    low = np.zeros((9, 9, 2), dtype=complex)
    low[:3, :3, :] = random_pure(rng, 18).reshape(3, 3, 2)
    psi = StateVector(low.ravel(), layout.dims)
    traj = evaluate_trajectory([psi], layout)
    rho_ab = psi.density()
    for kind, fn in zip(
        ALL_MEASURES, (mutual_information, classical_lower_bound, discord_lower_bound, negativity)
    ):
        direct = fn(rho_ab, ("A", "B"))
        assert traj.values[kind][0] == pytest.approx(direct, abs=1e-10)
