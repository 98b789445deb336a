import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from circuit_dmrg.circuit import Circuit
from circuit_dmrg.exact import StateVector, evolve, porter_thomas_state
from circuit_dmrg.gates import Gate
from circuit_dmrg.mps import (MPSError, amplitude, amplitudes, apply_gate_exact, apply_gates_exact,
                              apply_internal_gates, canonicalize, from_statevector, load_mps,
                              norm2, overlap, pad_bonds, phys_indices, product_state, random_mps,
                              read_checkpoint_header, reduce_bonds, save_mps, to_statevector,
                              truncate)
from circuit_dmrg.sequences import sequence_I, sequence_II
from circuit_dmrg.topology import GridTopology, Grouping, standard_grouping

TOPO = GridTopology(2, 4, staggered=False)
V1 = standard_grouping(TOPO, "V1")
SHUFFLED = Grouping(((5, 0, 3), (7, 1), (2, 6, 4)), "custom")


def test_physical_index_encoding_golden():
    # group (5, 0, 3): qubit 5 is the most significant bit of the group index
    x = 0b10000100  # qubits 0 and 5 set
    assert phys_indices(SHUFFLED, [x]).tolist() == [[0b110, 0b00, 0b000]]
    assert V1.groups == ((0, 1), (2, 3, 4, 5), (6, 7))
    assert phys_indices(V1, [0b11000001, 0b00100100]).tolist() == [[0b11, 0b0000, 0b01], [0, 0b1001, 0]]


@pytest.mark.parametrize("grouping", [V1, SHUFFLED])
def test_product_state_amplitudes(grouping):
    mps = product_state(grouping, 0b01101001)
    assert norm2(mps) == pytest.approx(1)
    assert amplitude(mps, 0b01101001) == pytest.approx(1)
    assert amplitude(mps, 0) == 0
    ref = StateVector.basis(8, 0b01101001)
    np.testing.assert_allclose(to_statevector(mps).amplitudes, ref.amplitudes)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 1000), depth=st.integers(0, 6),
       grouping=st.sampled_from([V1, SHUFFLED, Grouping.contiguous([1] * 8)]))
def test_exact_absorption_matches_dense(seed, depth, grouping):
    c = sequence_I(TOPO, depth, seed)
    mps = apply_gates_exact(product_state(grouping, 0), c.gates)
    np.testing.assert_allclose(to_statevector(mps).amplitudes, evolve(c).amplitudes, atol=1e-10)
    xs = np.arange(0, 256, 7)
    np.testing.assert_allclose(amplitudes(mps, xs), evolve(c).amplitudes[xs], atol=1e-10)


def test_internal_layer_keeps_bonds():
    mps = random_mps(V1, 4, seed=0)
    layer = [Gate("sqrtX", (q,)) for q in range(8)] + [Gate("fsim", p, (1.0, np.pi / 2))
                                                       for p in TOPO.couplers["B"]]
    out = apply_internal_gates(mps, layer)
    assert out.bond_dims == mps.bond_dims
    with pytest.raises(MPSError, match="straddles"):
        apply_internal_gates(mps, [Gate("CZ", (0, 7))])


def test_long_range_gate_through_middle_group():
    grouping = Grouping.contiguous([2, 2, 2, 2])
    psi = porter_thomas_state(8, seed=3)
    mps = from_statevector(psi, grouping)
    g = Gate("fsim", (7, 0), (0.3, 1.2))
    out = apply_gate_exact(mps, g)
    ref = evolve(Circuit(8, ((g,),)), psi)
    np.testing.assert_allclose(to_statevector(out).amplitudes, ref.amplitudes, atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 1000), center=st.integers(0, 2))
def test_canonical_form(seed, center):
    mps = canonicalize(random_mps(V1, 3, seed), center)
    for t, a in enumerate(mps.tensors):
        if t < center:
            m = a.reshape(-1, a.shape[2])
            np.testing.assert_allclose(m.conj().T @ m, np.eye(m.shape[1]), atol=1e-12)
        elif t > center:
            m = a.reshape(a.shape[0], -1)
            np.testing.assert_allclose(m @ m.conj().T, np.eye(m.shape[0]), atol=1e-12)
    assert norm2(mps) == pytest.approx(1)


def test_overlap_matches_dense():
    a, b = random_mps(SHUFFLED, 3, 1), random_mps(SHUFFLED, 5, 2)
    assert overlap(a, b) == pytest.approx(np.vdot(to_statevector(a).amplitudes,
                                                  to_statevector(b).amplitudes))
    with pytest.raises(MPSError):
        overlap(a, random_mps(V1, 2, 0))


def test_truncation_is_optimal_for_two_sites():
    g = Grouping.contiguous([4, 4])
    psi = porter_thomas_state(8, seed=5)
    mps, kept = truncate(from_statevector(psi, g), 3)
    s = np.linalg.svd(psi.amplitudes.reshape(16, 16), compute_uv=False)
    assert kept == pytest.approx(np.sum(s[:3] ** 2))
    assert mps.bond_dims == [3]
    assert abs(np.vdot(to_statevector(mps).amplitudes, psi.amplitudes)) ** 2 == pytest.approx(kept)


def test_reduce_bonds_and_padding_preserve_state():
    c = sequence_II(TOPO, 4, 0)
    raw = product_state(V1, 0)
    for gate in c.gates:
        raw = apply_gate_exact(raw, gate, reduce=False)
    reduced = reduce_bonds(raw, force=True)
    ref = evolve(c).amplitudes
    np.testing.assert_allclose(to_statevector(reduced).amplitudes, ref, atol=1e-10)
    padded = pad_bonds(reduced, [b + 2 for b in reduced.bond_dims])
    assert padded.bond_dims == [b + 2 for b in reduced.bond_dims]
    np.testing.assert_allclose(to_statevector(padded).amplitudes, ref, atol=1e-10)


def test_random_mps_caps_and_norm():
    mps = random_mps(V1, [100, 3], seed=0)
    assert mps.bond_dims == [min(100, 2 ** V1.sizes[0]), 3]
    assert norm2(mps) == pytest.approx(1)
    assert random_mps(V1, 4, seed=9).tensors[0].tolist() == random_mps(V1, 4, seed=9).tensors[0].tolist()


def test_bitstring_range_checked():
    with pytest.raises(MPSError):
        product_state(V1, 256)


def test_checkpoint_round_trip(tmp_path):
    mps = random_mps(SHUFFLED, 4, seed=2)
    save_mps(mps, tmp_path / "m.npz", extra={"D": 3})
    header = read_checkpoint_header(tmp_path / "m.npz")
    assert header["version"] == 1 and header["bond_dims"] == mps.bond_dims
    assert header["extra"] == {"D": 3}
    back = load_mps(tmp_path / "m.npz")
    assert back.grouping == SHUFFLED
    for a, b in zip(back.tensors, mps.tensors):
        np.testing.assert_array_equal(a, b)
