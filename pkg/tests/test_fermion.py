import itertools

import numpy as np
import pytest

from qpband.fermion import (
    FermionOperator,
    SymmetrySet,
    TaperingError,
    find_z2_symmetries,
    jordan_wigner,
    sector_from_occupation,
    spin_parity_symmetries,
    split_by_symmetry,
    taper,
    tapered_occupation_bits,
)
from qpband.pauli import PauliString, PauliSum

from oracles import (
    brute_force_z_symmetries,
    fermion_operator_matrix,
    pauli_sum_matrix,
    sector_eigvalsh,
)


def _dense(h: PauliSum) -> np.ndarray:
    return pauli_sum_matrix({p.letters: c for p, c in h.items()})


class TestJordanWigner:
    def test_single_mode_creation(self):
        image = jordan_wigner(FermionOperator.creation(0), 1)
        assert image.terms == {PauliString("X"): 0.5, PauliString("Y"): -0.5j}

    def test_number_operator(self):
        number = FermionOperator.creation(0) @ FermionOperator.annihilation(0)
        image = jordan_wigner(number, 2)
        assert image.terms == {PauliString("II"): 0.5, PauliString("ZI"): -0.5}

    def test_two_body_term_matches_dense_fermion_oracle(self):
        term = FermionOperator.from_term(
            0.37, ((0, True), (2, True), (3, False), (1, False))
        )
        image = jordan_wigner(term, 4)
        dense = fermion_operator_matrix(term.terms, 4)
        assert np.allclose(_dense(image), dense, atol=1e-12)

    def test_mixed_operator_matches_dense(self):
        op = (
            FermionOperator.from_term(0.5, ((1, True), (0, False)))
            + FermionOperator.from_term(-0.25j, ((2, False),))
            + FermionOperator.from_term(1.5, ())
        )
        image = jordan_wigner(op, 3)
        assert np.allclose(_dense(image), fermion_operator_matrix(op.terms, 3), atol=1e-12)

    def test_anticommutation_preserved_exactly(self):
        n = 3
        identity = PauliString.identity(n)
        for i in range(n):
            for j in range(n):
                anti = (
                    FermionOperator.annihilation(i) @ FermionOperator.creation(j)
                    + FermionOperator.creation(j) @ FermionOperator.annihilation(i)
                )
                image = jordan_wigner(anti, n)
                if i == j:
                    assert image.terms == {identity: 1.0}
                else:
                    assert len(image) == 0

    def test_mode_overflow_rejected(self):
        with pytest.raises(ValueError):
            jordan_wigner(FermionOperator.creation(3), 3)


class TestFermionOperator:
    def test_canonicalize_idempotent(self):
        op = FermionOperator.from_term(1.0, ((0, True),)) + FermionOperator.from_term(
            2.0, ((0, True),)
        )
        once = op.canonicalize()
        assert once.canonicalize() == once
        assert once.terms == ((3.0, ((0, True),)),)

    def test_adjoint_matches_dense(self):
        op = FermionOperator.from_term(0.5 - 0.2j, ((0, True), (1, False)))
        dense = fermion_operator_matrix(op.terms, 2)
        dense_adj = fermion_operator_matrix(op.adjoint().terms, 2)
        assert np.allclose(dense.conj().T, dense_adj)


def _si_like_sum(si_gamma_qubit) -> PauliSum:
    return si_gamma_qubit


class TestFindZ2Symmetries:
    def test_si_hamiltonian_has_at_least_two_generators(self, si_gamma_qubit):
        found = find_z2_symmetries(si_gamma_qubit)
        assert len(found.generators) >= 2
        # every generator commutes with every term
        for g in found.generators:
            for p in si_gamma_qubit:
                assert p.commutes_with(g)

    def test_x_only_hamiltonian_has_no_z_symmetry(self):
        h = PauliSum.from_strings(2, {"XI": 1.0, "IX": 1.0})
        assert find_z2_symmetries(h).generators == ()

    def test_random_number_conserving_hamiltonian_contains_total_parity(self):
        rng = np.random.default_rng(3)
        terms = []
        for i in range(3):
            terms.append((rng.normal(), ((i, True), (i, False))))
        for i, j in ((0, 1), (1, 2), (0, 2)):
            w = rng.normal() * 0.5
            terms.append((w, ((i, True), (j, False))))
            terms.append((w, ((j, True), (i, False))))
        h = jordan_wigner(FermionOperator(tuple(terms)).canonicalize(), 3)
        found = find_z2_symmetries(h)
        assert PauliString("ZZZ") in found.generators
        brute = brute_force_z_symmetries({p.letters: c for p, c in h.items()})
        assert "ZZZ" in brute

    def test_count_matches_brute_force_kernel_dimension(self, si_gamma_qubit):
        found = find_z2_symmetries(si_gamma_qubit)
        brute = brute_force_z_symmetries(
            {p.letters: c for p, c in si_gamma_qubit.items()}
        )
        # brute force counts all 2^k - 1 non-identity elements of the group
        assert 2 ** len(found.generators) - 1 == len(brute)

    def test_non_hermitian_rejected(self):
        with pytest.raises(ValueError):
            find_z2_symmetries(PauliSum.from_strings(1, {"Z": 1.0j}))


class TestSectorFromOccupation:
    def test_even_parity(self):
        syms = SymmetrySet(
            generators=(PauliString("ZZZZ"),), single_qubit_x=(3,), sector=(1,)
        )
        assert sector_from_occupation(syms, (1, 1, 0, 0)) == [1]

    def test_odd_parity_on_support(self):
        syms = SymmetrySet(
            generators=(PauliString("ZZII"),), single_qubit_x=(1,), sector=(1,)
        )
        assert sector_from_occupation(syms, (1, 0, 0, 0)) == [-1]

    def test_si_hf_sector_reproduces_casci_after_taper(self, si_gamma_qubit, si_gamma):
        syms = spin_parity_symmetries(2).for_occupation(si_gamma.hf_occupation())
        tapered = taper(si_gamma_qubit, syms)
        ground_tapered = np.linalg.eigvalsh(_dense(tapered))[0]
        casci = sector_eigvalsh(_dense(si_gamma_qubit), 4, 2)[0]
        assert ground_tapered == pytest.approx(casci, abs=1e-10)


class TestTaper:
    def test_direct_substitution_one_qubit(self):
        h = PauliSum.from_strings(2, {"ZI": 1.0, "IZ": 1.0})
        syms = SymmetrySet(
            generators=(PauliString("ZI"),), single_qubit_x=(0,), sector=(1,)
        )
        out = taper(h, syms)
        assert out.terms == {PauliString("I"): 1.0, PauliString("Z"): 1.0}

    def test_si_hamiltonian_tapers_to_two_qubits_with_five_terms(
        self, si_gamma_qubit, si_gamma_symmetries
    ):
        tapered = taper(si_gamma_qubit, si_gamma_symmetries)
        assert tapered.n_qubits == 2
        assert len(tapered) <= 5
        assert tapered.is_hermitian(1e-12)

    def test_spectrum_union_over_sectors_matches_untapered(self, si_gamma_qubit):
        base = spin_parity_symmetries(2)
        full = np.sort(np.linalg.eigvalsh(_dense(si_gamma_qubit)))
        collected = []
        for sector in itertools.product((1, -1), repeat=2):
            import dataclasses

            syms = dataclasses.replace(base, sector=sector)
            collected.extend(np.linalg.eigvalsh(_dense(taper(si_gamma_qubit, syms))))
        assert np.allclose(np.sort(collected), full, atol=1e-10)

    def test_three_generator_taper_is_spectrum_faithful(self, si_gamma_qubit):
        # the crystal Hamiltonian here carries a third accidental symmetry;
        # tapering all of them must still tile the full spectrum
        found = find_z2_symmetries(si_gamma_qubit)
        assert len(found.generators) == 3
        full = np.sort(np.linalg.eigvalsh(_dense(si_gamma_qubit)))
        collected = []
        import dataclasses

        for sector in itertools.product((1, -1), repeat=3):
            syms = dataclasses.replace(found, sector=sector)
            collected.extend(np.linalg.eigvalsh(_dense(taper(si_gamma_qubit, syms))))
        assert np.allclose(np.sort(collected), full, atol=1e-10)

    def test_non_commuting_generator_rejected(self):
        h = PauliSum.from_strings(2, {"XI": 1.0})
        syms = SymmetrySet(
            generators=(PauliString("ZI"),), single_qubit_x=(0,), sector=(1,)
        )
        with pytest.raises(TaperingError):
            taper(h, syms)

    def test_tapered_hf_state_is_all_ones(self, si_gamma, si_gamma_symmetries):
        bits = tapered_occupation_bits(si_gamma_symmetries, si_gamma.hf_occupation())
        assert bits == (1, 1)

    def test_tapered_hf_energy_matches_dense_diagonal(
        self, si_gamma, si_gamma_qubit, si_gamma_tapered
    ):
        occupation = si_gamma.hf_occupation()
        index = int("".join(str(b) for b in occupation), 2)
        dense_energy = _dense(si_gamma_qubit)[index, index].real
        state = np.zeros(4, dtype=complex)
        state[0b11] = 1.0
        tapered_energy = (state.conj() @ _dense(si_gamma_tapered) @ state).real
        assert tapered_energy == pytest.approx(dense_energy, abs=1e-10)


class TestSplitBySymmetry:
    def test_partition_is_exact(self):
        h = PauliSum.from_strings(2, {"XI": 0.5, "ZZ": 1.0, "YI": 0.25})
        com, anti = split_by_symmetry(h, PauliString("ZI"))
        assert com.terms == {PauliString("ZZ"): 1.0}
        assert anti.terms == {PauliString("XI"): 0.5, PauliString("YI"): 0.25}
        assert (com + anti) == h


class TestSpinParitySymmetries:
    def test_pivots_are_highest_index_per_block(self):
        syms = spin_parity_symmetries(2)
        assert syms.generators == (PauliString("ZZII"), PauliString("IIZZ"))
        assert syms.single_qubit_x == (1, 3)

    def test_generators_commute_with_spin_conserving_hamiltonian(self, si_gamma_qubit):
        for g in spin_parity_symmetries(2).generators:
            for p in si_gamma_qubit:
                assert p.commutes_with(g)
