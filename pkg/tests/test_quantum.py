import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from neuralgates import quantum, realrep
from neuralgates.errors import DegenerateInput, NotHermitian, UnknownGate
from neuralgates.quantum import (
    GateChainSpec,
    chain_exact,
    evolve,
    gate_cnot,
    gate_h1,
    gate_hr,
    gate_r2,
    hermitian_eigenvalues,
    pure_state,
    quantum_metrics,
    quantumness_map,
)

I4 = np.eye(4)


def random_density(rng, n):
    return quantumness_map(rng.uniform(-1, 1, (n, 8, 8)))


def random_hermitian(rng, n):
    m = rng.normal(size=(n, 4, 4)) + 1j * rng.normal(size=(n, 4, 4))
    return 0.5 * (m + quantum.dagger(m))


def test_quantumness_identity():
    np.testing.assert_allclose(quantumness_map(np.eye(8)), I4 / 4, atol=1e-16)


def test_quantumness_pure_state():
    c = np.diag([2.0, 0, 0, 0])
    np.testing.assert_allclose(quantumness_map(realrep.embed(c)), pure_state(0), atol=1e-16)


def test_quantumness_degenerate():
    with pytest.raises(DegenerateInput):
        quantumness_map(np.zeros((8, 8)))
    # only the complex-structured part counts: -I A I cancels A here
    a = np.zeros((8, 8))
    a[0, 0], a[4, 4] = 1.0, -1.0
    with pytest.raises(DegenerateInput):
        quantumness_map(a)


def test_quantumness_constraints_1000():
    rng = np.random.default_rng(0)
    rho = random_density(rng, 1000)
    assert np.max(np.abs(np.trace(rho, axis1=-2, axis2=-1) - 1)) < 1e-12
    assert np.max(np.linalg.norm(rho - quantum.dagger(rho), axis=(-2, -1))) < 1e-12
    assert np.min(hermitian_eigenvalues(rho)) >= -1e-10


@settings(max_examples=300, deadline=None)
@given(arrays(np.float64, (8, 8), elements=st.floats(-1, 1)))
def test_quantumness_property(a):
    c = realrep.extract(a)
    if np.sum(np.abs(c) ** 2) <= 1e-12:
        return
    assert quantum.is_density(quantumness_map(a))


def test_cnot():
    u = gate_cnot()
    assert quantum.is_unitary(u)
    np.testing.assert_array_equal(u, quantum.dagger(u))
    np.testing.assert_array_equal(u @ u, I4)
    np.testing.assert_array_equal(evolve(pure_state(2), u), pure_state(3))
    np.testing.assert_array_equal(evolve(pure_state(0), u), pure_state(0))


def test_hr_gates():
    np.testing.assert_allclose(gate_h1() @ gate_h1(), I4, atol=1e-15)
    np.testing.assert_allclose(np.linalg.matrix_power(gate_r2(), 8), I4, atol=1e-15)
    u = gate_hr()
    np.testing.assert_allclose(u @ quantum.dagger(u), I4, atol=1e-15)
    np.testing.assert_allclose(u, gate_h1() @ gate_r2(), atol=0)


def test_gate_names():
    assert quantum.gate_name("C") == "cnot"
    assert quantum.gate_name("HR") == "hr"
    with pytest.raises(UnknownGate):
        quantum.gate_name("toffoli")


def test_non_commuting():
    diff = gate_cnot() @ gate_hr() - gate_hr() @ gate_cnot()
    assert np.linalg.norm(diff) > 1e-12


def test_evolve_maximally_mixed_invariant():
    for u in (gate_cnot(), gate_hr()):
        np.testing.assert_allclose(evolve(I4 / 4, u), I4 / 4, atol=1e-16)


def test_evolve_bell_state():
    rho = evolve(pure_state(0), gate_cnot() @ gate_h1())
    expected = np.zeros((4, 4))
    for i in (0, 3):
        for j in (0, 3):
            expected[i, j] = 0.5
    np.testing.assert_allclose(rho, expected, atol=1e-15)


def test_evolve_preserves_spectrum_and_constraints():
    rng = np.random.default_rng(1)
    rho = random_density(rng, 500)
    before = hermitian_eigenvalues(rho)
    for u in (gate_cnot(), gate_hr()):
        out = evolve(rho, u)
        np.testing.assert_allclose(hermitian_eigenvalues(out), before, atol=1e-12)
        np.testing.assert_allclose(np.trace(out, axis1=-2, axis2=-1), 1, atol=1e-12)
        assert np.max(np.linalg.norm(out - quantum.dagger(out), axis=(-2, -1))) < 1e-12


def test_real_rep_consistency():
    rng = np.random.default_rng(2)
    rho = random_density(rng, 200)
    for u in (gate_cnot(), gate_hr()):
        eu = realrep.embed(u)
        np.testing.assert_allclose(realrep.embed(evolve(rho, u)), eu @ realrep.embed(rho) @ eu.T,
                                   rtol=0, atol=1e-12)


def test_chain_zero_layers():
    rho = random_density(np.random.default_rng(3), 1)[0]
    np.testing.assert_array_equal(chain_exact(rho, GateChainSpec(["hr", "cnot"], 0)), rho)


def test_chain_order():
    rho = random_density(np.random.default_rng(4), 1)[0]
    got = chain_exact(rho, GateChainSpec(["HR", "C"], 1))
    np.testing.assert_allclose(got, evolve(evolve(rho, gate_hr()), gate_cnot()), atol=1e-15)


def test_chain_order_swap_differs():
    a = chain_exact(pure_state(0), GateChainSpec(["hr", "cnot"], 2))
    b = chain_exact(pure_state(0), GateChainSpec(["cnot", "hr"], 2))
    assert np.linalg.norm(a - b) > 0.01


@pytest.mark.parametrize("n", [1, 7, 64, 1024, 2 ** 15])
def test_chain_matches_matrix_power(n):
    rho = random_density(np.random.default_rng(n), 4)
    spec = GateChainSpec(["hr", "cnot"], n)
    un = np.linalg.matrix_power(spec.unitary(), n)
    np.testing.assert_allclose(chain_exact(rho, spec), evolve(rho, un), rtol=0, atol=n * 1e-13)


def test_chain_trajectory_matches_chain():
    rho = random_density(np.random.default_rng(5), 3)
    spec = GateChainSpec(["hr", "cnot"], 0)
    traj = quantum.chain_exact_trajectory(rho, spec, [0, 1, 4, 16])
    for n, state in traj.items():
        np.testing.assert_array_equal(state, chain_exact(rho, GateChainSpec(["hr", "cnot"], n)))


def test_chain_spec_validation():
    with pytest.raises(ValueError):
        GateChainSpec(["hr"], -1)
    with pytest.raises(UnknownGate):
        GateChainSpec(["xx"], 1)


def test_eigenvalues_simple():
    np.testing.assert_allclose(hermitian_eigenvalues(I4), [1, 1, 1, 1], atol=1e-15)
    np.testing.assert_allclose(hermitian_eigenvalues(np.diag([0.1, 0.2, 0.3, 0.4])),
                               [0.1, 0.2, 0.3, 0.4], atol=1e-15)


def test_eigenvalue_trace_identities():
    rng = np.random.default_rng(6)
    h = random_hermitian(rng, 300)
    lam = hermitian_eigenvalues(h)
    np.testing.assert_allclose(lam.sum(-1), np.trace(h, axis1=-2, axis2=-1).real, atol=1e-10)
    np.testing.assert_allclose((lam ** 2).sum(-1), np.linalg.norm(h, axis=(-2, -1)) ** 2, atol=1e-10)
    assert np.all(np.diff(lam, axis=-1) >= 0)


def test_jacobi_converges_on_degenerate_spectrum():
    rng = np.random.default_rng(7)
    q, _ = np.linalg.qr(rng.normal(size=(8, 8)))
    a = q @ np.diag([1, 1, 1, 2, 2, 3, 3, 3.0]) @ q.T
    np.testing.assert_allclose(quantum.jacobi_eigenvalues(a), [1, 1, 1, 2, 2, 3, 3, 3], atol=1e-13)


def test_eigenvalues_not_hermitian():
    with pytest.raises(NotHermitian):
        hermitian_eigenvalues(np.triu(np.ones((4, 4))))


def test_metrics_on_density():
    rng = np.random.default_rng(8)
    rho = random_density(rng, 50)
    m = quantum_metrics(realrep.embed(rho))
    assert np.max(m.trace_residual) < 1e-14
    assert np.max(m.antiherm_norm) < 1e-14
    assert np.min(m.min_eigenvalue) >= -1e-10
    assert np.max(m.complex_residual) == 0.0


def test_metrics_trace_two():
    rho = random_density(np.random.default_rng(9), 1)[0]
    m = quantum_metrics(realrep.embed(2 * rho))
    assert m.trace_residual == pytest.approx(1.0, abs=1e-14)


def test_metrics_untrained_output_signs():
    from neuralgates import net as nn

    rng = np.random.default_rng(10)
    model = nn.init_network([64, 15, 64], seed=10)
    model.layers[-1].bias[:] = rng.uniform(-0.1, 0.1, 64)
    out = realrep.unflatten(model(rng.uniform(-1, 1, (20, 64))))
    m = quantum_metrics(out)
    assert np.all(m.trace_residual > 0)
    assert np.all(m.antiherm_norm > 0)
    assert np.all(m.complex_residual > 0)
    # random outputs are not positive semi-definite
    assert np.all(m.min_eigenvalue < 0)
