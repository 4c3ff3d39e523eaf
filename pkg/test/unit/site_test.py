import pytest

from src.core.errors import MalformedPresentationError
from src.models.schemas.report import Verdict
from src.services.fincat.category import TableCategory
from src.services.site import site_service
from src.services.site.site import CoveringFamily, ExplicitBasis, SiteSpec


def one_object_site() -> SiteSpec:
    cat = TableCategory("pt", ["x"], {"id": ("x", "x")}, {"x": "id"}, {})
    return SiteSpec(cat, ExplicitBasis({}))


class TestCoveringFamilies:

    def test_members_must_land_in_target(self, bg2):
        """A member with the wrong target is malformed."""
        with pytest.raises(MalformedPresentationError):
            CoveringFamily("*", (bg2.cat.identity("G"),))

    def test_jointly_surjective_families_over_a_point(self, bg2):
        """Over * the orbit-wise families are the identity and G -> *."""
        families = bg2.families("*")
        assert [tuple(m.source for m in f.members) for f in families] == [("*",), ("G",)]


class TestSieves:

    # ===== Generated sieves =====

    def test_identity_generates_maximal_sieve(self, bg2):
        """{id_U} generates every snapshot arrow into U."""
        sv = site_service.sieve_generated(bg2, CoveringFamily("G", (bg2.cat.identity("G"),)))
        assert sv.arrows == frozenset(bg2.cat.morphisms_into("G"))

    def test_free_orbit_sieve(self, bg2):
        """{G -> *} generates exactly the arrows from free G-sets."""
        g_to_point = bg2.cat.hom("G", "*")[0]
        sv = site_service.sieve_generated(bg2, CoveringFamily("*", (g_to_point,)))
        assert {f.source for f in sv.arrows} == {"∅", "G", "G⊔G"}
        assert len(bg2.cat.hom("G⊔G", "*")) == 1

    def test_empty_family_generates_empty_sieve(self, bg2):
        """No generators, no arrows."""
        sv = site_service.sieve_generated(bg2, CoveringFamily("∅", ()))
        assert len(sv) == 0

    # ===== Covering tests =====

    def test_maximal_sieve_covers(self, bg2):
        """The maximal sieve is covering."""
        sv = site_service.sieve_generated(bg2, CoveringFamily("*", (bg2.cat.identity("*"),)))
        assert site_service.is_covering_sieve(bg2, sv)

    def test_empty_set_does_not_cover_a_point(self, bg2):
        """No basis family refines {∅ -> *}."""
        sv = site_service.sieve_generated(bg2, CoveringFamily("*", (bg2.cat.hom("∅", "*")[0],)))
        assert not site_service.is_covering_sieve(bg2, sv)

    def test_covering_morphisms(self, bg2):
        """Isomorphisms and G -> * cover; ∅ -> * does not."""
        cat = bg2.cat
        swap = [f for f in cat.hom("G", "G") if f != cat.identity("G")][0]
        assert site_service.is_covering_morphism(bg2, swap)
        assert site_service.is_covering_morphism(bg2, cat.hom("G", "*")[0])
        assert not site_service.is_covering_morphism(bg2, cat.hom("∅", "*")[0])

    def test_union_covers_in_poset(self, b2):
        """{1} and {2} cover {1,2}; {1} alone does not."""
        cat = b2.cat
        assert site_service.is_covering_family(b2, CoveringFamily("{1,2}", (cat.morphism("i1"), cat.morphism("i2"))))
        assert not site_service.is_covering_morphism(b2, cat.morphism("i1"))

    def test_empty_family_covers_empty_subset(self, b2):
        """The empty family is listed as a covering of ∅."""
        assert site_service.is_covering_family(b2, CoveringFamily("∅", ()))


class TestSiteChecks:

    def test_coherent_gsets(self, bg2):
        """Finite Z/2-sets with jointly surjective families are coherent."""
        result = site_service.check_coherent(bg2)
        assert result.verdict == Verdict.PASS
        assert bg2.flags["coherent"]

    def test_oversized_family_fails_coherence(self, b2):
        """A basis family longer than the bound is a coherence failure."""
        i1 = b2.cat.morphism("i1")
        site = SiteSpec(b2.cat, ExplicitBasis({"{1,2}": [[i1] * 9]}))
        result = site_service.check_coherent(site)
        assert result.verdict == Verdict.FAIL
        assert "9 members" in result.details

    def test_empty_site_is_coherent(self):
        """A site with only an empty object passes."""
        cat = TableCategory("empty", ["∅"], {"id": ("∅", "∅")}, {"∅": "id"}, {})
        assert site_service.check_coherent(SiteSpec(cat, ExplicitBasis({}))).passed

    def test_subcanonical(self, bg2, b2):
        """Representables are sheaves on both fixtures."""
        assert site_service.check_subcanonical(bg2).verdict == Verdict.PASS
        assert site_service.check_subcanonical(b2).verdict == Verdict.PASS

    def test_empty_family_on_nonempty_object_breaks_subcanonicity(self, b2):
        """Declaring {1} covered by nothing forces every representable to have one section there."""
        site = SiteSpec(b2.cat, ExplicitBasis({"{1}": [[]]}))
        result = site_service.check_subcanonical(site)
        assert result.verdict == Verdict.FAIL

    def test_pullback_stability_and_closure(self, bg2):
        """Basis families pull back to coverings and compose to coverings."""
        assert site_service.check_pullback_stability(bg2).passed
        assert site_service.check_composition_closure(bg2).passed


class TestAdmissibility:

    def test_gsets_are_admissible(self, bg2):
        """Finite Z/2-sets pass admissibility within budget."""
        result = site_service.check_admissible(bg2)
        assert result.verdict == Verdict.PASS
        assert bg2.flags["admissible"]

    def test_poset_fails_on_disjointness(self, b2):
        """B2 fails precisely on coproduct disjointness."""
        result = site_service.check_admissible(b2)
        assert result.verdict == Verdict.FAIL
        assert "first-failure: disjointness: pullback of injections {1} -> {1} <- {1} is {1}, not initial" in result.details

    def test_one_object_category_has_no_strict_initial(self):
        """A single object is both initial and terminal."""
        result = site_service.check_admissible(one_object_site())
        assert result.verdict == Verdict.FAIL
        assert "strict-initial" in result.details


class TestKSelection:

    def test_free_orbit_needs_only_identity(self, bg2):
        """Every covering morphism onto G has a section, so K(G) = {id_G}."""
        assert site_service.k_set(bg2, "G") == (bg2.cat.identity("G"),)

    def test_point_needs_free_orbit(self, bg2):
        """K(*) contains id and G -> *."""
        chosen = site_service.k_set(bg2, "*")
        assert [f.source for f in chosen] == ["*", "G"]

    def test_generated_selection_verifies(self, bg2):
        """The greedy selection has the factorization property on the snapshot."""
        selection = site_service.generate_K(bg2)
        assert selection.objects() == bg2.objects()
        assert site_service.verify_K(bg2, selection).passed

    def test_truncated_selection_fails(self, bg2):
        """Dropping G -> * from K(*) leaves it unrefined."""
        selection = site_service.KSelection((("*", (bg2.cat.identity("*"),)),))
        assert site_service.verify_K(bg2, selection).verdict == Verdict.FAIL


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
