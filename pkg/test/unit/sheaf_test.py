import pytest

from src.core.errors import OutOfBudgetError
from src.models.schemas.report import Verdict
from src.services.fincat.functor import identity_functor, inclusion_functor
from src.services.sheaf import sheaf_service
from src.services.sheaf.presheaf import FiberProductPresheaf, Presheaf, identity_morphism, presheaf_violations
from src.services.site.site import CoveringFamily


def two_section_presheaf(site) -> Presheaf:
    """Two sections over {1,2}, one section everywhere else."""
    collapse = {"a": "*", "b": "*"}
    keep = {"*": "*"}
    return Presheaf.from_tables(
        site,
        "two",
        {"∅": ["*"], "{1}": ["*"], "{2}": ["*"], "{1,2}": ["a", "b"]},
        {"e1": keep, "e2": keep, "e12": collapse, "i1": collapse, "i2": collapse},
    )


def product_sheaf(site) -> Presheaf:
    """S({1}) = {p, q}, S({2}) = {r}, S({1,2}) = S({1}) x S({2})."""
    pairs = [("p", "r"), ("q", "r")]
    return Presheaf.from_tables(
        site,
        "S",
        {"∅": ["*"], "{1}": ["p", "q"], "{2}": ["r"], "{1,2}": pairs},
        {
            "e1": {"p": "*", "q": "*"},
            "e2": {"r": "*"},
            "e12": {pair: "*" for pair in pairs},
            "i1": {pair: pair[0] for pair in pairs},
            "i2": {pair: pair[1] for pair in pairs},
        },
    )


def section_counts(F: Presheaf, objects):
    return [len(F.sections(u)) for u in objects]


class TestPresheaves:

    def test_tables_are_functorial(self, b2):
        """Table presheaves respect identities and composites."""
        assert presheaf_violations(two_section_presheaf(b2)) == []
        assert presheaf_violations(product_sheaf(b2)) == []

    def test_outside_domain_is_out_of_budget(self, b2):
        """A presheaf never silently extends beyond its objects."""
        F = Presheaf.from_tables(b2, "partial", {"∅": ["*"]}, {})
        with pytest.raises(OutOfBudgetError):
            F.sections("{1}")


class TestYoneda:

    def test_terminal_is_constant_singleton(self, bg2):
        """y(*) has exactly one section everywhere."""
        assert section_counts(sheaf_service.yoneda(bg2, "*"), bg2.objects()) == [1] * 6

    def test_free_orbit_has_no_fixed_points(self, bg2):
        """y(G)(*) is empty and y(G)(G) has two elements."""
        y = sheaf_service.yoneda(bg2, "G")
        assert len(y.sections("*")) == 0
        assert len(y.sections("G")) == 2

    def test_yoneda_maps_are_natural(self, bg2):
        """Postcomposition commutes with restriction."""
        phi = sheaf_service.yoneda_map(bg2, bg2.cat.hom("G", "*")[0])
        assert phi.violations(bg2.objects()[:4]) == []


class TestSheafCondition:

    def test_constant_singleton_is_a_sheaf(self, bg2):
        """The terminal presheaf is a sheaf."""
        assert sheaf_service.is_sheaf(sheaf_service.constant_presheaf(bg2)).verdict == Verdict.PASS

    def test_representable_is_a_sheaf(self, bg2):
        """y(G) satisfies the sheaf condition for every basis family."""
        assert sheaf_service.is_sheaf(sheaf_service.yoneda(bg2, "G")).verdict == Verdict.PASS

    def test_free_orbit_covering(self, bg2):
        """For {G -> *}, y(G) glues: no sections over * and no matching families."""
        fam = CoveringFamily("*", (bg2.cat.hom("G", "*")[0],))
        y = sheaf_service.yoneda(bg2, "G")
        assert sheaf_service.matching_families(y, fam) == []
        assert sheaf_service.sheaf_condition(y, fam) is None

    def test_two_sections_over_union_is_not_a_sheaf(self, b2):
        """The union covering has one matching family but two sections over {1,2}."""
        F = two_section_presheaf(b2)
        fam = CoveringFamily("{1,2}", (b2.cat.morphism("i1"), b2.cat.morphism("i2")))
        assert len(sheaf_service.matching_families(F, fam)) == 1
        assert sheaf_service.sheaf_condition(F, fam) is not None
        assert sheaf_service.is_sheaf(F).verdict == Verdict.FAIL

    def test_product_sheaf(self, b2):
        """S({1,2}) = S({1}) x S({2}) is a sheaf on B2."""
        assert sheaf_service.is_sheaf(product_sheaf(b2)).passed


class TestSheafification:

    # ===== Plus construction =====

    def test_sections_over_union_collapse(self, b2):
        """Sheafifying the two-section presheaf leaves one section over {1,2}."""
        result = sheaf_service.sheafify(two_section_presheaf(b2))
        assert section_counts(result.sheaf, b2.objects()) == [1, 1, 1, 1]
        assert sheaf_service.is_sheaf(result.sheaf).passed

    def test_empty_presheaf_gains_a_section_over_empty(self, b2):
        """The empty family over ∅ glues the empty matching family."""
        empty = Presheaf.from_tables(b2, "empty", {u: [] for u in b2.objects()}, {})
        result = sheaf_service.sheafify(empty)
        assert section_counts(result.sheaf, b2.objects()) == [1, 0, 0, 0]

    def test_sheaf_unit_is_isomorphism(self, b2):
        """Sheafifying a sheaf changes nothing up to the unit."""
        S = product_sheaf(b2)
        result = sheaf_service.sheafify(S)
        for u in b2.objects():
            images = {result.unit(u, x) for x in S.sections(u)}
            assert len(images) == len(S.sections(u)) == len(result.sheaf.sections(u))

    def test_unit_is_universal(self, b2):
        """Every map into a sheaf factors uniquely through the unit."""
        result = sheaf_service.sheafify(two_section_presheaf(b2))
        S = product_sheaf(b2)
        assert len(sheaf_service.presheaf_morphisms(result.source, S)) == 2
        assert sheaf_service.verify_unit_universal(result, S) == []

    def test_factorization_composes_back(self, b2):
        """The glued factorization precomposed with the unit is the original map."""
        F = two_section_presheaf(b2)
        result = sheaf_service.sheafify(F)
        S = product_sheaf(b2)
        for phi in sheaf_service.presheaf_morphisms(F, S):
            induced = sheaf_service.factor_through_unit(result, phi)
            assert result.unit.then(induced).equals(phi)


class TestEpimorphisms:

    def test_identity(self, bg2):
        """Identities are epi."""
        assert sheaf_service.is_epi_sheaf(identity_morphism(sheaf_service.yoneda(bg2, "G")))

    def test_free_orbit_onto_point(self, bg2):
        """y(G) -> y(*) is locally surjective through {G -> *}."""
        assert sheaf_service.is_epi_sheaf(sheaf_service.yoneda_map(bg2, bg2.cat.hom("G", "*")[0]))

    def test_empty_onto_point(self, bg2):
        """y(∅) -> y(*) hits nothing over *."""
        assert not sheaf_service.is_epi_sheaf(sheaf_service.yoneda_map(bg2, bg2.cat.hom("∅", "*")[0]))

    def test_epi_is_stable_under_pullback(self, bg2):
        """Pulling y(G) -> y(*) back along y(*⊔*) -> y(*) stays epi."""
        cat = bg2.cat
        phi = sheaf_service.yoneda_map(bg2, cat.hom("G", "*")[0])
        psi = sheaf_service.yoneda_map(bg2, cat.hom("*⊔*", "*")[0])
        pulled = FiberProductPresheaf(phi, psi)
        assert sheaf_service.is_epi_sheaf(pulled.second, bg2.objects()[:4])


class TestTransport:

    def test_identity_pushforward(self, bg2):
        """Precomposition with the identity leaves sections unchanged."""
        F = sheaf_service.yoneda(bg2, "G")
        moved = sheaf_service.transport(F, identity_functor(bg2.cat), "pushforward", bg2)
        assert section_counts(moved, bg2.objects()) == section_counts(F, bg2.objects())

    def test_pushforward_along_inclusion_restricts(self, bg2, bg2_small):
        """Pushing forward along a snapshot inclusion restricts sections."""
        F = sheaf_service.yoneda(bg2, "G")
        u = inclusion_functor(bg2_small.cat, bg2.cat)
        moved = sheaf_service.transport(F, u, sheaf_service.TransportDirection.PUSHFORWARD, bg2_small)
        assert section_counts(moved, bg2_small.objects()) == [1, 0, 2]

    def test_pullback_of_representable_is_representable(self, bg2, bg2_small):
        """The comma-category colimit of y(G) is y(G) on the larger snapshot."""
        F = sheaf_service.yoneda(bg2_small, "G")
        u = inclusion_functor(bg2_small.cat, bg2.cat)
        moved = sheaf_service.transport(F, u, "pullback", bg2, sheafify_result=False)
        expected = [len(bg2.cat.hom(d, "G")) for d in bg2.objects()]
        assert section_counts(moved, bg2.objects()) == expected
        assert presheaf_violations(moved, bg2.objects()[:4]) == []

    def test_sheafified_pullback(self, bg2_small, bg2_four):
        """After sheafification the pullback still has the sections of y(G)."""
        target = bg2_four
        F = sheaf_service.yoneda(bg2_small, "G")
        u = inclusion_functor(bg2_small.cat, target.cat)
        moved = sheaf_service.transport(F, u, "pullback", target)
        assert section_counts(moved, target.objects()) == [1, 0, 2, 0]


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
