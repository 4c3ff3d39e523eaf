import pytest
from sympy import Matrix

from src.core.errors import PreconditionError, ViolationError
from src.models.schemas.report import Verdict
from src.services.cohom import cohom_service
from src.services.cohom.abelian import GroupModule, ModuleMap
from src.services.contract import contract_service
from src.services.contract.contract import Contractibility
from src.services.pro import pro_service
from src.services.protop import protop_service
from src.services.protop.protop import ProSite
from src.services.sheaf import sheaf_service
from src.services.sheaf.presheaf import Presheaf
from src.services.site import site_service
from src.services.site.site_service import KSelection


@pytest.fixture
def ps(bg2):
    return ProSite(bg2, budget=4)


def truncated(site) -> KSelection:
    """K(C) = {id} everywhere."""
    return KSelection(tuple((c, (site.cat.identity(c),)) for c in site.objects()))


def two_step(ps, K=None):
    return contract_service.iterate_P(ps, ps.constant("*"), 2, K)


# ===== Weak contractibility =====

class TestWeakContractibility:

    def test_free_orbit(self, bg2):
        """Every covering onto G splits."""
        witness = contract_service.is_weakly_contractible(bg2, "G")
        assert witness.verdict == Contractibility.CONTRACTIBLE
        assert witness.splittings
        for e, s in witness.splittings:
            assert bg2.cat.compose(e, s) == bg2.cat.identity("G")

    def test_point_is_not_contractible(self, bg2):
        """The witness is a covering from an object with no fixed point."""
        witness = contract_service.is_weakly_contractible(bg2, "*")
        assert witness.verdict == Contractibility.NOT_CONTRACTIBLE
        assert witness.failure.target == "*"
        assert bg2.cat.hom("*", witness.failure.source) == ()

    def test_empty(self, bg2):
        assert contract_service.is_weakly_contractible(bg2, "∅")

    def test_snapshot_contractibles(self, bg2):
        assert contract_service.contractibles(bg2) == ["∅", "G", "G⊔G"]

    def test_scope_is_reported(self, bg2):
        witness = contract_service.is_weakly_contractible(bg2, "G")
        assert "covering morphisms onto G" in witness.scope

    def test_pro_constant_free_orbit(self, ps):
        witness = contract_service.is_weakly_contractible(ps, "G")
        assert witness.verdict == Contractibility.CONTRACTIBLE
        for f, s in witness.splittings:
            assert pro_service.compose(f, s) == pro_service.identity(witness.target)

    def test_pro_constant_point(self, ps):
        assert contract_service.is_weakly_contractible(ps, "*").verdict == Contractibility.NOT_CONTRACTIBLE

    def test_describe(self, bg2):
        record = contract_service.is_weakly_contractible(bg2, "*").describe()
        assert record["verdict"] == "not-contractible"
        assert record["failure"] is not None

    def test_splitter_requires_contractible(self, bg2):
        with pytest.raises(ViolationError):
            contract_service.splitter_for(bg2, "*")
        assert contract_service.splitter_for(bg2, "G") is not None


# ===== The P construction =====

class TestBuildP:

    def test_point(self, ps):
        """P(*) is the constant free orbit."""
        rec = contract_service.build_P(ps, ps.constant("*"))
        assert rec.iterations == 1
        assert pro_service.pro_find_iso(rec.result, ps.constant("G")) is not None
        assert [ps.cat.describe(k) for k in rec.k_sets[0]] == [ps.cat.describe(ps.cat.hom("G", "*")[0])]

    def test_identity_K(self, ps, bg2):
        """K = {id} leaves U alone with a one-stage tower."""
        rec = contract_service.build_P(ps, ps.constant("*"), truncated(bg2))
        assert rec.result == ps.constant("*")
        assert rec.chain.tower.steps == ()
        assert rec.stabilized_at == 0

    def test_free_orbit_is_fixed(self, ps):
        rec = contract_service.build_P(ps, ps.constant("G"))
        assert rec.k_sets == ((),)
        assert rec.stabilized_at == 0

    def test_tower_steps_are_distinguished(self, ps):
        """Every step of the realization is a verified distinguished weak covering."""
        rec = contract_service.build_P(ps, ps.constant("*"))
        assert rec.chain.violations() == []
        for witness in rec.chain.witnesses:
            assert protop_service.weak_covering_violations(ps, witness.covering) == []

    def test_comparison_is_iso_over_the_target(self, ps):
        rec = contract_service.build_P(ps, ps.constant("*"))
        comparison = rec.comparisons[0]
        assert pro_service.inverse(comparison) is not None
        assert comparison.target == rec.results[0]


class TestIterateP:

    def test_second_iterate_of_point(self, ps):
        """P²(*) ≅ G and the second round changes nothing."""
        rec = two_step(ps)
        assert rec.iterations == 2
        assert pro_service.pro_find_iso(rec.result, ps.constant("G")) is not None
        assert rec.stabilized_at == 1

    def test_spliced_chain(self, ps):
        rec = two_step(ps)
        assert rec.chain.target == ps.constant("*")
        assert rec.chain.source == rec.result
        assert rec.chain.violations() == []

    def test_non_positive_count(self, ps):
        with pytest.raises(PreconditionError):
            contract_service.iterate_P(ps, ps.constant("*"), 0)

    def test_describe(self, ps):
        record = two_step(ps).describe()
        assert record["kind"] == "p-tower"
        assert record["stabilized_at"] == 1


class TestPContractible:

    def test_stabilized_point(self, ps):
        assert contract_service.check_P_contractible(ps, two_step(ps)).verdict == Verdict.PASS

    def test_already_contractible(self, ps):
        rec = contract_service.build_P(ps, ps.constant("G"))
        assert contract_service.check_P_contractible(ps, rec).verdict == Verdict.PASS

    def test_truncated_K_fails(self, ps, bg2):
        """With K(*) = {id} nothing splits G -> *."""
        K = truncated(bg2)
        rec = contract_service.iterate_P(ps, ps.constant("*"), 1, K)
        result = contract_service.check_P_contractible(ps, rec, K)
        assert result.verdict == Verdict.FAIL

    def test_unstabilized_is_unverified(self, ps):
        rec = contract_service.build_P(ps, ps.constant("*"), truncated(ps.base))
        K = site_service.generate_K(ps.base)
        result = contract_service.check_P_contractible(ps, rec, K)
        assert result.verdict == Verdict.UNVERIFIED


# ===== Transfinite splitting =====

class TestTransfiniteSplit:

    def test_chains_over_free_orbit_split(self, ps):
        result = contract_service.transfinite_split_check(ps, ps.constant("G"), depth=2, limit=6)
        assert result.verdict == Verdict.PASS

    def test_requires_contractible(self, ps):
        with pytest.raises(PreconditionError):
            contract_service.transfinite_split_check(ps, ps.constant("*"))


# ===== dc-categories and restriction =====

class TestDcCategory:

    def test_enough_contractibles(self, bg2):
        result = contract_service.has_enough_contractibles(bg2)
        assert result.verdict == Verdict.PASS
        assert "G⊔G" in result.details

    def test_gsets(self, bg2):
        """Free G-sets have disjoint, stable coproducts; larger ones fall outside the snapshot."""
        assert contract_service.check_dc_category(bg2).verdict == Verdict.PASS

    def test_poset_coproducts_are_not_disjoint(self, b2):
        result = contract_service.check_dc_category(b2)
        assert result.verdict == Verdict.FAIL
        assert "disjoint" in result.details

    def test_coproducts_stay_contractible(self, bg2):
        assert contract_service.coproduct_of_contractibles(bg2).verdict == Verdict.PASS


class TestDcRestriction:

    def test_default_samples(self, bg2):
        assert contract_service.dc_restriction_check(bg2).verdict == Verdict.PASS

    def test_constant_singleton(self, bg2):
        samples = [sheaf_service.constant_presheaf(bg2)]
        assert contract_service.dc_restriction_check(bg2, samples).verdict == Verdict.PASS

    def test_pro_site_yoneda(self, ps, bg2):
        """π*y(G⊔G) is recovered from contractible samples."""
        samples = [protop_service.pullback_sheaf(ps, sheaf_service.yoneda(bg2, "G⊔G"))]
        assert contract_service.dc_restriction_check(ps, samples).verdict == Verdict.PASS

    def test_not_a_sheaf_is_caught(self, bg2):
        """Two sections over * that agree on every contractible."""
        broken = Presheaf(
            bg2, "doubled",
            lambda U: ("a", "b") if U == "*" else ("a",),
            lambda f, x: x if f.source == f.target == "*" else "a",
        )
        assert contract_service.dc_restriction_check(bg2, [broken]).verdict == Verdict.FAIL


# ===== Exactness of sections =====

@pytest.fixture
def sign_sequence(bg2):
    group = bg2.cat.group
    sign, regular, trivial = GroupModule.sign(group), GroupModule.regular(group), GroupModule.trivial(group)
    return cohom_service.module_sequence(
        bg2, ModuleMap(sign, regular, Matrix([[1], [-1]])), ModuleMap(regular, trivial, Matrix([[1, 1]]))
    )


@pytest.fixture
def doubling_sequence(bg2):
    """0 -> Z -(x2)-> Z -> Z/2 -> 0 with trivial action."""
    group = bg2.cat.group
    Z, Z2 = GroupModule.trivial(group), GroupModule.trivial(group, 2)
    return cohom_service.module_sequence(bg2, ModuleMap(Z, Z, Matrix([[2]])), ModuleMap(Z, Z2, Matrix([[1]])))


class TestGammaExactness:

    def test_free_orbit(self, ps, sign_sequence):
        result = contract_service.gamma_exactness_check(ps, "G", sign_sequence)
        assert result.verdict == Verdict.PASS
        assert "contractible" in result.details

    def test_point_fails_right_exactness(self, ps, sign_sequence):
        """Fixed points of the sign sequence leave Z/2 behind."""
        result = contract_service.gamma_exactness_check(ps, "*", sign_sequence)
        assert result.verdict == Verdict.FAIL
        assert "Z/2" in result.details

    def test_doubling_at_free_orbit(self, ps, doubling_sequence):
        assert contract_service.gamma_exactness_check(ps, ps.constant("G"), doubling_sequence).verdict == Verdict.PASS

    def test_non_exact_sequence(self, ps, bg2):
        group = bg2.cat.group
        Z = GroupModule.trivial(group)
        seq = cohom_service.module_sequence(bg2, ModuleMap(Z, Z, Matrix([[1]])), ModuleMap(Z, Z, Matrix([[1]])))
        with pytest.raises(PreconditionError):
            contract_service.gamma_exactness_check(ps, "G", seq)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
