import pytest
from sympy import Matrix, eye

from src.core.errors import DegreeOutOfRangeError, MalformedPresentationError, PreconditionError
from src.models.schemas.report import Verdict
from src.services.cohom import cohom_service
from src.services.cohom.abelian import CohomologyGroup, GroupModule, ModuleMap
from src.services.fincat.group import FiniteGroup
from src.services.pro import pro_service
from src.services.pro.pro_object import ProObject
from src.services.protop import protop_service
from src.services.protop.protop import ProSite
from src.services.site.site import CoveringFamily
from src.utils.integer_matrix import AbelianInvariants, PresentedGroup, quotient_invariants, solve_columns


def H(degree: int, free_rank: int = 0, *torsion: int) -> CohomologyGroup:
    return CohomologyGroup(degree, free_rank, tuple(torsion))


@pytest.fixture
def z(bg2):
    return cohom_service.fixed_point_presheaf(bg2, GroupModule.trivial(bg2.cat.group))


@pytest.fixture
def sign_sequence(bg2):
    group = bg2.cat.group
    sign, regular, trivial = GroupModule.sign(group), GroupModule.regular(group), GroupModule.trivial(group)
    iota = ModuleMap(sign, regular, Matrix([[1], [-1]]), name="ι")
    eps = ModuleMap(regular, trivial, Matrix([[1, 1]]), name="ε")
    return cohom_service.module_sequence(bg2, iota, eps)


# ===== Modules and coefficients =====

class TestGroupModule:

    def test_standard_modules_are_valid(self, bg2):
        """Trivial, sign and regular modules satisfy the action laws."""
        group = bg2.cat.group
        for M in (GroupModule.trivial(group), GroupModule.trivial(group, 2), GroupModule.sign(group), GroupModule.regular(group)):
            assert M.violations() == []

    def test_broken_action(self, bg2):
        """An action that does not square to the identity is reported."""
        group = bg2.cat.group
        bad = GroupModule(group, PresentedGroup.free(1), (eye(1), Matrix([[2]])), name="bad")
        assert bad.violations()

    def test_fixed_points_of_regular(self, bg2):
        """Z[G]^G is spanned by the norm element."""
        basis, fixed = GroupModule.regular(bg2.cat.group).fixed_points(frozenset({0, 1}))
        assert fixed.generators == 1
        assert basis == Matrix([[1], [1]]) or basis == Matrix([[-1], [-1]])

    def test_sign_has_no_invariants(self, bg2):
        _, fixed = GroupModule.sign(bg2.cat.group).fixed_points(frozenset({0, 1}))
        assert fixed.invariants().is_zero

    def test_module_map_equivariance(self, bg2):
        """e0 is not an equivariant image of the sign generator."""
        group = bg2.cat.group
        sign, regular = GroupModule.sign(group), GroupModule.regular(group)
        assert ModuleMap(sign, regular, Matrix([[1], [-1]])).violations() == []
        assert ModuleMap(sign, regular, Matrix([[1], [0]])).violations()


class TestFixedPointPresheaf:

    def test_groups(self, z):
        """Hom_G(X, Z) has one Z per orbit."""
        assert z.invariants("∅").is_zero
        assert z.invariants("*") == AbelianInvariants(1)
        assert z.invariants("G") == AbelianInvariants(1)
        assert z.invariants("*⊔*") == AbelianInvariants(2)

    def test_restriction_along_orbit_map(self, bg2, z):
        f = bg2.cat.hom("G", "*")[0]
        assert z.restriction(f) == Matrix([[1]])

    def test_functorial(self, z):
        assert z.violations(["∅", "*", "G"]) == []

    def test_requires_gsets(self, b2, bg2):
        with pytest.raises(PreconditionError):
            cohom_service.fixed_point_presheaf(b2, GroupModule.trivial(bg2.cat.group))

    def test_requires_matching_group(self, bg2):
        with pytest.raises(PreconditionError):
            cohom_service.fixed_point_presheaf(bg2, GroupModule.trivial(FiniteGroup.cyclic(3)))


# ===== Čech cohomology =====

class TestCechComplex:

    def test_orbit_covering_integer_coefficients(self, bg2, z):
        """Ȟ({G -> *}, Z) is Z, 0, Z/2, 0, Z/2."""
        c = cohom_service.cech_complex(z, cohom_service.orbit_covering(bg2), 5)
        assert cohom_service.cohomology_sequence(c) == [H(0, 1), H(1), H(2, 0, 2), H(3), H(4, 0, 2)]

    def test_cochain_ranks(self, bg2, z):
        """G^{n+1} over * has 2^n free orbits, one of them non-degenerate."""
        fam = cohom_service.orbit_covering(bg2)
        full = cohom_service.cech_complex(z, fam, 5, normalized=False)
        assert full.ranks() == [1, 2, 4, 8, 16, 32]
        assert not full.normalized
        normalized = cohom_service.cech_complex(z, fam, 5)
        assert normalized.ranks() == [1] * 6
        assert normalized.normalized

    def test_normalized_matches_full(self, bg2):
        """Dropping degenerate cochains changes no cohomology group."""
        fam = cohom_service.orbit_covering(bg2)
        for M in (GroupModule.trivial(bg2.cat.group), GroupModule.sign(bg2.cat.group)):
            K = cohom_service.fixed_point_presheaf(bg2, M)
            full = cohom_service.cech_complex(K, fam, 5, normalized=False)
            normalized = cohom_service.cech_complex(K, fam, 5)
            assert cohom_service.cohomology_sequence(normalized) == cohom_service.cohomology_sequence(full)

    def test_mod_two_coefficients(self, bg2):
        K = cohom_service.fixed_point_presheaf(bg2, GroupModule.trivial(bg2.cat.group, 2))
        c = cohom_service.cech_complex(K, cohom_service.orbit_covering(bg2), 4)
        assert cohom_service.cohomology_sequence(c) == [H(j, 0, 2) for j in range(4)]

    def test_sign_coefficients(self, bg2):
        K = cohom_service.fixed_point_presheaf(bg2, GroupModule.sign(bg2.cat.group))
        c = cohom_service.cech_complex(K, cohom_service.orbit_covering(bg2), 4)
        assert cohom_service.cohomology_sequence(c) == [H(0), H(1, 0, 2), H(2), H(3, 0, 2)]

    def test_identity_covering(self, bg2, z):
        """The identity family has Ȟ^0 = K(U) and nothing above."""
        fam = CoveringFamily("G", (bg2.cat.identity("G"),))
        c = cohom_service.cech_complex(z, fam, 3)
        assert cohom_service.cohomology_sequence(c) == [H(0, 1), H(1), H(2)]

    def test_empty_family(self, z):
        c = cohom_service.cech_complex(z, CoveringFamily("∅", ()), 2)
        assert cohom_service.cohomology_sequence(c) == [H(0), H(1)]

    def test_degree_out_of_range(self, bg2, z):
        c = cohom_service.cech_complex(z, cohom_service.orbit_covering(bg2), 2)
        with pytest.raises(DegreeOutOfRangeError):
            cohom_service.cohomology(c, 2)
        with pytest.raises(DegreeOutOfRangeError):
            cohom_service.cohomology(c, -1)
        with pytest.raises(DegreeOutOfRangeError):
            cohom_service.cech_complex(z, cohom_service.orbit_covering(bg2), 0)

    def test_h0_equalizer(self, bg2, z):
        families = [cohom_service.orbit_covering(bg2), bg2.families("*⊔*")[0]]
        assert cohom_service.check_h0_equalizer(z, families).verdict == Verdict.PASS

    def test_presentation_independence(self, bg2, z):
        """A random unimodular change of basis leaves every Ȟ^j unchanged."""
        c = cohom_service.cech_complex(z, cohom_service.orbit_covering(bg2), 4)
        result = cohom_service.check_presentation_independence(c, seed=7)
        assert result.verdict == Verdict.PASS


# ===== The bar oracle =====

class TestBarOracle:

    def test_cyclic_of_order_three(self):
        group = FiniteGroup.cyclic(3)
        M = GroupModule.trivial(group)
        assert [cohom_service.bar_oracle(group, M, j) for j in range(3)] == [H(0, 1), H(1), H(2, 0, 3)]

    def test_trivial_group(self):
        group = FiniteGroup.trivial()
        M = GroupModule.trivial(group)
        assert cohom_service.bar_oracle(group, M, 0) == H(0, 1)
        assert cohom_service.bar_oracle(group, M, 1) == H(1)

    def test_negative_degree(self):
        group = FiniteGroup.cyclic(2)
        with pytest.raises(DegreeOutOfRangeError):
            cohom_service.bar_oracle(group, GroupModule.trivial(group), -1)

    def test_degree_cap(self):
        assert cohom_service.bar_degree_cap(FiniteGroup.cyclic(2), 5) == 5
        assert cohom_service.bar_degree_cap(FiniteGroup.cyclic(3), 5) == 5
        assert cohom_service.bar_degree_cap(FiniteGroup.cyclic(3), 6) == 5
        assert cohom_service.bar_degree_cap(FiniteGroup.cyclic(4), 5) == 3
        assert cohom_service.bar_degree_cap(FiniteGroup.cyclic(3), 5, normalized=False) == 3

    def test_normalized_bar_matches_full(self):
        """Normalized bar cochains keep (m-1)^n tuples and the same cohomology."""
        group = FiniteGroup.cyclic(3)
        M = GroupModule.trivial(group)
        full = cohom_service.bar_complex(group, M, 3, normalized=False)
        normalized = cohom_service.bar_complex(group, M, 3)
        assert normalized.ranks() == [1, 2, 4, 8]
        assert full.ranks() == [1, 3, 9, 27]
        assert [cohom_service.cohomology(normalized, j) for j in range(3)] == [
            cohom_service.cohomology(full, j) for j in range(3)
        ]

    def test_cech_matches_bar(self, bg2):
        assert cohom_service.check_cech_against_bar(bg2).verdict == Verdict.PASS

    def test_cech_matches_bar_with_sign(self, bg2):
        result = cohom_service.check_cech_against_bar(bg2, modules=[GroupModule.sign(bg2.cat.group)], max_degree=4)
        assert result.verdict == Verdict.PASS

    def test_cyclic_three_through_degree_four(self, bg3):
        """Z/3 compares in degrees 0..4: H^3 = 0 and H^4 = Z/3."""
        result = cohom_service.check_cech_against_bar(bg3)
        assert result.verdict == Verdict.PASS
        assert "degrees=0..4" in result.details
        assert "unverified" not in result.details
        pairs = cohom_service.orbit_cohomology(bg3)
        assert [cech for cech, _ in pairs] == [H(0, 1), H(1), H(2, 0, 3), H(3), H(4, 0, 3)]
        assert all(cech == bar for cech, bar in pairs)

    def test_not_a_gset_site(self, b2):
        assert cohom_service.check_cech_against_bar(b2).verdict == Verdict.UNVERIFIED

    def test_orbit_cohomology_degree_by_degree(self, bg2):
        """Ȟ^j({G -> *}, Z) for Z/2: Z, 0, Z/2, 0."""
        pairs = cohom_service.orbit_cohomology(bg2, max_degree=4)
        assert [cech for cech, _ in pairs] == [H(0, 1), H(1), H(2, 0, 2), H(3)]
        assert all(cech == bar for cech, bar in pairs)

    def test_orbit_cohomology_line(self, bg2):
        result = cohom_service.check_orbit_cohomology(bg2)
        assert result.verdict == Verdict.PASS
        assert "H^2(Z/2,Z)=Z/2" in result.line()

    def test_orbit_cohomology_needs_gsets(self, b2):
        assert cohom_service.check_orbit_cohomology(b2).verdict == Verdict.UNVERIFIED


# ===== Exactness =====

class TestExactness:

    def test_sign_sequence_is_exact_as_sheaves(self, sign_sequence):
        assert cohom_service.sequence_violations(sign_sequence, ["∅", "*", "G", "*⊔*"]) == []

    def test_sections_over_the_point_lose_surjectivity(self, sign_sequence):
        """Γ(*) of 0 -> Z⁻ -> Z[G] -> Z -> 0 has cokernel Z/2."""
        A, B, C = sign_sequence.terms
        defects = cohom_service.exactness_defects(
            A.group("*"), B.group("*"), C.group("*"),
            sign_sequence.first.component("*"), sign_sequence.second.component("*"),
        )
        assert set(defects) == {"right"}
        assert "Z/2" in defects["right"]

    def test_sections_over_the_free_orbit_are_exact(self, sign_sequence):
        A, B, C = sign_sequence.terms
        defects = cohom_service.exactness_defects(
            A.group("G"), B.group("G"), C.group("G"),
            sign_sequence.first.component("G"), sign_sequence.second.component("G"),
        )
        assert defects == {}

    def test_standard_sequences(self, bg2):
        """Doubling and the augmentation sequence, both exact as sheaves."""
        seqs = cohom_service.standard_sequences(bg2)
        assert [s.name for s in seqs] == ["0→Z→Z→Z/2→0", "0→I_G→Z[G]→Z→0"]
        for seq in seqs:
            assert cohom_service.sequence_violations(seq, ["∅", "*", "G", "*⊔*"]) == []

    def test_standard_sequences_trivial_group(self, bset_site):
        assert len(cohom_service.standard_sequences(bset_site)) == 1

    def test_standard_sequences_need_gsets(self, b2):
        with pytest.raises(PreconditionError):
            cohom_service.standard_sequences(b2)

    def test_augmentation_ideal_is_a_module(self, bg3):
        assert GroupModule.augmentation_ideal(bg3.cat.group).violations() == []

    def test_augmentation_ideal_of_trivial_group(self):
        with pytest.raises(MalformedPresentationError):
            GroupModule.augmentation_ideal(FiniteGroup.trivial())

    def test_nonzero_composite(self, bg2):
        group = bg2.cat.group
        Z = GroupModule.trivial(group)
        seq = cohom_service.module_sequence(bg2, ModuleMap(Z, Z, eye(1)), ModuleMap(Z, Z, eye(1)))
        assert cohom_service.sequence_violations(seq, ["*"])


# ===== The Čech colimit over a pro-site =====

class TestCechColimit:

    @pytest.fixture
    def ps(self, bg2):
        return ProSite(bg2, budget=4)

    @pytest.fixture
    def covering(self, ps, bg2):
        """The orbit covering pulled back to *⊔* -> *, read at the top level."""
        cat = ps.cat
        U = ProObject.chain(cat, ["*", "*⊔*"], [cat.hom("*⊔*", "*")[0]])
        return protop_service.make_weak_covering(ps, U, cohom_service.orbit_covering(bg2), level=U.top).maps[0]

    def test_pro_level_groups(self, ps, z, covering):
        """π*Z of the chain is Z², so every degree doubles."""
        c = cohom_service.pro_cech_complex(ps, z, covering, 3)
        assert cohom_service.cohomology_sequence(c) == [H(0, 2), H(1), H(2, 0, 2, 2)]

    def test_colimit_identity(self, ps, z, covering):
        assert cohom_service.cech_colim_check(ps, z, covering).verdict == Verdict.PASS

    def test_not_pro_covering(self, ps, z):
        cat = ps.cat
        f = pro_service.constant_morphism(cat, cat.hom("∅", "*")[0])
        with pytest.raises(PreconditionError):
            cohom_service.cech_colim_check(ps, z, f)


class TestIntegerMatrix:

    def test_quotient_invariants(self):
        """Z² / (2, 3) is Z/6."""
        assert quotient_invariants(Matrix([[2, 0], [0, 3]]), 2) == AbelianInvariants(0, (6,))

    def test_cyclic(self):
        assert PresentedGroup.cyclic(4).invariants() == AbelianInvariants(0, (4,))
        assert PresentedGroup.cyclic(1).invariants().is_zero

    def test_solve_columns(self):
        """One decomposition solves every column; a column off the lattice gives None."""
        basis = Matrix([[2, 0], [0, 3], [0, 0]])
        vectors = Matrix([[4, -2], [3, 6], [0, 0]])
        assert solve_columns(basis, vectors) == Matrix([[2, -1], [1, 2]])
        assert solve_columns(basis, Matrix([[1], [0], [0]])) is None
        assert solve_columns(basis, Matrix([[0], [0], [1]])) is None
        assert solve_columns(basis, Matrix.zeros(3, 0)).shape == (2, 0)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
