import itertools
import math

import numpy as np
import pytest

from pgsim.psystem import graph_stabilizers as gs
from pgsim.psystem.graph_stabilizers import PauliString
from pgsim.psystem.content.counts_table import CountsTable, all_patterns
from pgsim.psystem.log_system import RuntimeErrorWithLog, NumericErrorWithLog
from pgsim.psystem import opt_kernel


BASIS_CHANGE = {
    "Z" : opt_kernel.optlib["I"],
    "X" : opt_kernel.optlib["H"],
    "Y" : opt_kernel.optlib["H"] @ np.diag([1., -1.j]),
}


def ideal_counts(vector, settings, shots = 10**6):
    '''
    noiseless counts of a state vector measured in the given local bases
    '''
    n = int(round(math.log2(len(vector))))
    table = CountsTable(n)
    for setting in settings:
        u = opt_kernel.kron_all([BASIS_CHANGE[c] for c in setting])
        probs = np.abs(u @ vector)**2
        table.set_counts(setting, np.round(probs * shots).astype(int))
    return table


def group_counts(g, shots = 10**6):
    group = gs.generators_from_graph(g)
    settings = {e.setting for _, e in group}
    return group, ideal_counts(gs.ideal_state_vector(g), settings, shots)


def test_star_generators():
    group = gs.generators_from_graph(gs.star_state())
    assert [e.letters for e in group.generators] == ["XIIZ", "IXIZ", "IIXZ", "ZZZX"]


def test_line_generators():
    group = gs.generators_from_graph(gs.line_state())
    assert [e.letters for e in group.generators] == ["XZZI", "ZXIZ", "ZIXI", "IZIX"]


def test_make_graph_rejects_bad_edges():
    with pytest.raises(RuntimeErrorWithLog):
        gs.make_graph([1, 2], [(1, 1)])
    with pytest.raises(RuntimeErrorWithLog):
        gs.make_graph([1, 2], [(1, 2), (2, 1)])


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_group_closure_and_stabilization(n):
    rng = np.random.default_rng(n)
    edges = [e for e in itertools.combinations(range(1, n + 1), 2) if rng.random() < 0.5]
    g = gs.make_graph(range(1, n + 1), edges)
    group = gs.generators_from_graph(g)
    assert len(group) == 2**n

    elements = [e for _, e in group]
    for a in elements[:8]:
        for b in elements[:8]:
            assert a * b in group

    v = gs.ideal_state_vector(g)
    for _, e in group:
        assert np.allclose(e.matrix() @ v, v)


def test_product_label():
    assert gs.product_label([1, 2, 1]) == (2,)
    assert gs.product_label([4, 2, 4, 2]) == ()
    assert gs.product_label([3, 1]) == (1, 3)


def test_pauli_product_sign_matches_matrices():
    for a, b in itertools.product(["XZ", "ZX", "YY", "XX", "ZY", "IY"], repeat = 2):
        pa, pb = PauliString(a), PauliString(b)
        if not pa.commutes(pb):
            with pytest.raises(RuntimeErrorWithLog):
                pa * pb
            continue
        assert np.allclose((pa * pb).matrix(), pa.matrix() @ pb.matrix())


def test_pauli_rejects_bad_letters():
    with pytest.raises(RuntimeErrorWithLog):
        PauliString("XQ")
    with pytest.raises(RuntimeErrorWithLog):
        PauliString("XZ", 2)


def test_eigenvalues():
    p = PauliString("XIZ", -1)
    assert p.eigenvalue("000") == -1
    assert p.eigenvalue("100") == 1
    assert p.eigenvalue("010") == -1
    assert list(p.eigenvalues()) == [p.eigenvalue(s) for s in all_patterns(3)]
    assert p.setting == "XZZ"


def test_embed():
    assert PauliString("XZ", -1).embed([2, 4], 4) == PauliString("IXIZ", -1)


def test_expectation_all_plus_one():
    table = CountsTable(4)
    table.add("ZZZX", "0000", 100)
    assert gs.expectation_from_counts(table, PauliString("ZZZX")) == pytest.approx(1.)
    assert gs.expectation_from_counts(table, PauliString("ZZZX", -1)) == pytest.approx(-1.)
    assert gs.expectation_error(1., 100) == pytest.approx(0.)


def test_expectation_uniform_counts():
    table = CountsTable(4)
    table.set_counts(PauliString("XZZI").setting, np.full(16, 25))
    assert gs.expectation_from_counts(table, PauliString("XZZI")) == pytest.approx(0.)
    assert gs.expectation_error(0., 400) == pytest.approx(0.05)


def test_expectation_without_counts():
    table = CountsTable(2)
    table.set_counts("XX", np.zeros(4, dtype = int))
    with pytest.raises(NumericErrorWithLog):
        gs.expectation_from_counts(table, PauliString("XX"))
    with pytest.raises(RuntimeErrorWithLog):
        gs.expectation_from_counts(table, PauliString("ZZ"))


@pytest.mark.parametrize("graph", [gs.star_state, gs.line_state])
def test_ideal_fidelity_and_mermin(graph):
    group, table = group_counts(graph())
    values, errors = gs.group_expectations(table, group)
    for label in group.labels:
        assert values[label] == pytest.approx(1., abs = 1e-5)
    f = gs.fidelity(values.values())
    assert f == pytest.approx(1., abs = 1e-5)
    assert gs.witnesses_entanglement(f)

    m2 = gs.mermin_two_setting(group, values, errors = errors)
    assert m2.value == pytest.approx(4., abs = 1e-4)
    assert m2.classical_bound == 2. and m2.quantum_bound == 4.
    assert m2.violates
    assert all(v == pytest.approx(4., abs = 1e-4) for v in m2.variants.values())

    m3 = gs.mermin_three_setting(group, values, errors)
    assert m3.value == pytest.approx(16., abs = 1e-3)
    assert m3.classical_bound == 12.
    assert m3.violates


def test_mermin_three_setting_is_sixteen_fidelity():
    group = gs.generators_from_graph(gs.star_state())
    rng = np.random.default_rng(3)
    values = {label : (1. if label == () else float(rng.uniform(-1, 1))) for label in group.labels}
    m3 = gs.mermin_three_setting(group, values)
    assert m3.value == pytest.approx(16. * gs.fidelity(values.values()))


def test_mermin_variant_terms():
    star = gs.generators_from_graph(gs.star_state())
    variants = gs.mermin_variants(star)
    assert variants["II"] == [(4,), (2, 3, 4), (1, 2, 4), (1, 3, 4)]
    assert variants["II g4->g4g1"] == [(1, 4), (1, 2, 3, 4), (2, 4), (3, 4)]
    for terms in variants.values():
        assert len(terms) == 4

    line = gs.generators_from_graph(gs.line_state())
    assert "II'" in gs.mermin_variants(line)
    with pytest.raises(RuntimeErrorWithLog):
        gs.mermin_two_setting(line, {}, variant = "nope")

    other = gs.generators_from_graph(gs.star(3))
    with pytest.raises(RuntimeErrorWithLog):
        gs.mermin_variants(other)


def test_mermin_fixed_variant_with_noise():
    group = gs.generators_from_graph(gs.star_state())
    values = {label : 0.8 for label in group.labels}
    values[()] = 1.
    m = gs.mermin_two_setting(group, values, variant = "II")
    assert m.variant == "II"
    assert m.value == pytest.approx(3.2)


@pytest.mark.parametrize("graph, removed", [
    (graph, set(removed))
    for graph in (gs.star_state, gs.line_state)
    for k in (1, 2)
    for removed in itertools.combinations(range(1, 5), k)
])
def test_projection(graph, removed):
    g = graph()
    h = gs.project_zero(g, removed)
    assert set(h.nodes) == set(g.nodes) - removed
    assert gs.state_fidelity(gs.project_vector_zero(g, removed), gs.ideal_state_vector(h)) == pytest.approx(1., abs = 1e-6)


def test_projection_of_star_leaves_pair():
    h = gs.project_zero(gs.star_state(), {1, 2})
    assert set(h.nodes) == {3, 4}
    assert {frozenset(e) for e in h.edges} == {frozenset((3, 4))}
    bell = gs.ideal_state_vector(gs.star(2))
    assert gs.state_fidelity(gs.project_vector_zero(gs.star_state(), {1, 2}), bell) == pytest.approx(1., abs = 1e-6)


def test_projection_of_line_leaves_two_single_qubits():
    h = gs.project_zero(gs.line_state(), {1, 2})
    assert h.number_of_edges() == 0


def test_projection_errors():
    with pytest.raises(RuntimeErrorWithLog):
        gs.project_zero(gs.star_state(), {5})
    with pytest.raises(RuntimeErrorWithLog):
        gs.project_zero(gs.star_state(), {1, 2, 3, 4})


def test_projected_expectations_from_four_qubit_counts():
    g = gs.star_state()
    h = gs.project_zero(g, {3})
    sub = gs.generators_from_graph(h)
    positions = sorted(h.nodes)
    embedded = [e.embed(positions, 4) for _, e in sub]
    table = ideal_counts(gs.ideal_state_vector(g), {e.setting for e in embedded})
    values = [gs.expectation_from_counts(table, e, condition = {3 : 0}) for e in embedded]
    assert gs.fidelity(values) == pytest.approx(1., abs = 1e-5)


def test_chsh_ideal():
    phi = np.array([1., 0., 0., 1.], dtype = complex) / math.sqrt(2.)
    correlators = {}
    for key, ((ta, pa), (tb, pb)) in gs.CHSH_ANGLES.items():
        a = opt_kernel.bloch_state(ta, pa)
        b = opt_kernel.bloch_state(tb, pb)
        proj = np.outer(a, a.conj())
        pb_ = np.outer(b, b.conj())
        obs = np.kron(2 * proj - np.eye(2), 2 * pb_ - np.eye(2))
        correlators[key] = float(np.real(phi.conj() @ obs @ phi))
    s = gs.chsh(correlators)
    assert s.value == pytest.approx(2. * math.sqrt(2.))
    assert s.violates


def test_correlator_from_counts():
    table = CountsTable(2, {("XX", "00") : 40, ("XX", "11") : 40, ("XX", "01") : 20})
    assert gs.correlator_from_counts(table, "XX") == pytest.approx(0.6)


def test_large_graph_rejected():
    g = gs.star(17)
    with pytest.raises(RuntimeErrorWithLog):
        gs.generators_from_graph(g)
