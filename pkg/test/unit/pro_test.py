import pytest

from src.core.errors import MalformedPresentationError
from src.services.fincat.functor import finite_sets, identity_functor
from src.services.pro import pro_service
from src.services.pro.index import IndexPoset, product_poset
from src.services.pro.pro_object import ProMorphism, ProObject


@pytest.fixture
def fs():
    return finite_sets(6)


def fold(cat, source: str, target: str):
    return cat.hom(source, target)[0]


def two_chain(fs, top: str = "*", below: str = "*⊔*") -> ProObject:
    """below -> top, with `below` at the bottom of the index."""
    return ProObject.chain(fs, [top, below], [fold(fs, below, top)])


def cospan_object(fs) -> ProObject:
    index = IndexPoset.from_relations(["i", "j", "k"], [("i", "k"), ("j", "k")])
    levels = {"i": "*⊔*", "j": "*⊔*", "k": "*"}
    generators = {("i", "k"): fold(fs, "*⊔*", "*"), ("j", "k"): fold(fs, "*⊔*", "*")}
    return ProObject.build(fs, index, levels, generators, name="cospan")


class TestIndexPosets:

    def test_chain_bottom(self):
        """The last chain element is the bottom."""
        chain = IndexPoset.chain(3)
        assert chain.bottom == 2
        assert chain.top == 0
        assert chain.is_cofiltered()

    def test_cospan_is_not_cofiltered(self):
        """Two minimal elements have no lower bound."""
        index = IndexPoset.from_relations(["i", "j", "k"], [("i", "k"), ("j", "k")])
        assert not index.is_cofiltered()
        with pytest.raises(MalformedPresentationError):
            index.require_cofiltered()

    def test_cycles_are_rejected(self):
        """Order relations must be antisymmetric."""
        with pytest.raises(MalformedPresentationError):
            IndexPoset.from_relations(["a", "b"], [("a", "b"), ("b", "a")])

    def test_product_of_chains(self):
        """The product of two 2-chains has four elements and a bottom."""
        square = product_poset([IndexPoset.chain(2), IndexPoset.chain(2)])
        assert len(square) == 4
        assert square.bottom == (1, 1)

    def test_grading_counts_elements_above(self):
        """Cofinite grading on a chain."""
        assert IndexPoset.chain(3).grading() == {0: 0, 1: 1, 2: 2}


class TestProObjects:

    def test_path_dependent_transitions_are_rejected(self, fs):
        """A diamond whose two paths disagree is not a functor."""
        index = IndexPoset.from_relations(["b", "l", "r", "t"], [("b", "l"), ("b", "r"), ("l", "t"), ("r", "t")])
        ident = fs.identity("*⊔*")
        other = next(f for f in fs.hom("*⊔*", "*⊔*") if f != ident)
        levels = {e: "*⊔*" for e in index.elements}
        generators = {("b", "l"): other, ("b", "r"): ident, ("l", "t"): ident, ("r", "t"): ident}
        with pytest.raises(MalformedPresentationError):
            ProObject.build(fs, index, levels, generators)

    def test_germs_must_be_compatible(self, fs):
        """A germ family that ignores the target transitions is flagged."""
        F = ProObject.constant(fs, "*⊔*")
        G = ProObject.chain(fs, ["*⊔*", "*⊔*"], [fs.identity("*⊔*")])
        maps = fs.hom("*⊔*", "*⊔*")
        bad = ProMorphism(F, G, ((0, maps[0]), (1, maps[1])))
        assert bad.violations() != []


class TestHomSets:

    def test_constants_are_fully_faithful(self, fs):
        """hom_set between constants has the base cardinality."""
        objects = fs.objects(4)
        for a in objects:
            for b in objects:
                const_a, const_b = ProObject.constant(fs, a), ProObject.constant(fs, b)
                assert len(pro_service.hom_set(const_a, const_b)) == len(fs.hom(a, b))

    def test_chain_into_two_points(self, fs):
        """The colimit of Hom over a 2-chain {a,b} -> {a} into a 2-element set has 4 elements."""
        F = two_chain(fs)
        G = ProObject.constant(fs, "*⊔*")
        assert len(pro_service.hom_set(F, G)) == 4

    def test_terminal_target(self, fs):
        """Every pro-object has exactly one map to the terminal constant."""
        assert len(pro_service.hom_set(two_chain(fs), ProObject.constant(fs, "*"))) == 1

    def test_composition_is_associative(self, fs):
        """Composites of pro-morphisms associate and identities are neutral."""
        X = two_chain(fs)
        Y = ProObject.constant(fs, "*⊔*")
        Z = two_chain(fs, "*⊔*", "*⊔*⊔*")
        for f in pro_service.hom_set(X, Y):
            assert pro_service.compose(f, pro_service.identity(X)) == f
            assert pro_service.compose(pro_service.identity(Y), f) == f
            for g in pro_service.hom_set(Y, Z):
                for h in pro_service.hom_set(Z, Y):
                    left = pro_service.compose(h, pro_service.compose(g, f))
                    right = pro_service.compose(pro_service.compose(h, g), f)
                    assert left == right

    def test_chain_is_isomorphic_to_bottom(self, fs):
        """A finite chain is isomorphic to the constant at its bottom level."""
        found = pro_service.pro_find_iso(two_chain(fs), ProObject.constant(fs, "*⊔*"))
        assert found is not None

    # ===== Bottom-level search =====

    def test_morphisms_match_hom_set(self, fs):
        """Reading maps off the bottom levels gives exactly the hom_set walk."""
        X, Y, Z = two_chain(fs), ProObject.constant(fs, "*⊔*"), two_chain(fs, "*⊔*", "*⊔*⊔*")
        for A in (X, Y, Z):
            for B in (X, Y, Z):
                assert set(pro_service.morphisms(A, B)) == set(pro_service.hom_set(A, B))

    def test_find_iso_gives_inverse_pair(self, fs):
        """Both composites of the found pair are identities."""
        X, Y = two_chain(fs), ProObject.constant(fs, "*⊔*")
        f, back = pro_service.pro_find_iso(X, Y)
        assert pro_service.compose(back, f) == pro_service.identity(X)
        assert pro_service.compose(f, back) == pro_service.identity(Y)
        assert pro_service.inverse(pro_service.hom_set(X, ProObject.constant(fs, "*"))[0]) is None

    def test_six_point_iso_is_immediate(self, fs):
        """Isomorphism search on six points never walks the 6^6 maps."""
        six = "⊔".join(["*"] * 6)
        F = ProObject.chain(fs, ["*", six], [fold(fs, six, "*")])
        f, back = pro_service.pro_find_iso(F, ProObject.constant(fs, six))
        assert pro_service.compose(f, back) == pro_service.identity(ProObject.constant(fs, six))

    def test_lifts_match_filtered_hom_set(self, fs):
        """lifts(given, over) is every u with over . u == given."""
        X, Z = two_chain(fs), two_chain(fs, "*⊔*", "*⊔*⊔*")
        Y = ProObject.constant(fs, "*⊔*")
        for over in pro_service.hom_set(Z, Y):
            for given in pro_service.hom_set(X, Y):
                expected = {u for u in pro_service.hom_set(X, Z) if pro_service.compose(over, u) == given}
                assert set(pro_service.lifts(given, over)) == expected
                assert pro_service.factors_through(given, over) == bool(expected)

    def test_isos_over_the_point(self, fs):
        """Over the terminal constant the isomorphisms X -> Y are the two bijections of a 2-set."""
        X, Y, T = two_chain(fs), ProObject.constant(fs, "*⊔*"), ProObject.constant(fs, "*")
        given, over = pro_service.hom_set(X, T)[0], pro_service.hom_set(Y, T)[0]
        found = set(pro_service.isos_over(given, over))
        assert len(found) == 2
        assert all(pro_service.inverse(u) is not None for u in found)

    def test_lifts_need_a_common_target(self, fs):
        X, Y = two_chain(fs), ProObject.constant(fs, "*⊔*")
        with pytest.raises(MalformedPresentationError):
            next(pro_service.lifts(pro_service.identity(X), pro_service.identity(Y)))


class TestLevelRepresentations:

    def test_directed_index_is_kept(self, fs):
        """An already directed index comes back with the identity."""
        F = two_chain(fs)
        rep = pro_service.level_representation(F)
        assert rep.pro == F
        assert rep.iso == pro_service.identity(F)
        assert not rep.completed

    def test_cospan_is_completed(self, fs):
        """The cospan gains a meet whose level is the fiber product."""
        rep = pro_service.level_representation(cospan_object(fs))
        assert rep.completed
        assert len(rep.pro.index) == 4
        assert rep.pro.index.is_cofiltered()
        assert rep.pro(rep.pro.bottom) == "*⊔*⊔*⊔*"
        assert pro_service.inverse(rep.iso) is not None

    def test_singleton_is_unchanged(self, fs):
        """A constant is its own level representation."""
        F = ProObject.constant(fs, "*⊔*")
        assert pro_service.level_representation(F).pro == F

    def test_morphism_at_levels(self, fs):
        """A map from a 2-chain to a constant is levelwise over the common reindex."""
        F, G = two_chain(fs), ProObject.constant(fs, "*⊔*")
        for f in pro_service.hom_set(F, G):
            lm = pro_service.level_morphism(f)
            assert lm.index.is_cofiltered()
            bottom = lm.index.bottom
            assert lm.at(bottom) == f.at_bottom


class TestProLimits:

    # ===== Finite limits =====

    def test_empty_diagram_is_terminal(self, fs):
        """The limit of nothing is the terminal constant."""
        result = pro_service.pro_finite_limits(fs, [])
        assert [result.pro(t) for t in result.pro.index.elements] == ["*"]

    def test_product_of_constants(self, fs):
        """Levelwise product of constants is the base product."""
        result = pro_service.pro_product(fs, [ProObject.constant(fs, "*⊔*"), ProObject.constant(fs, "*⊔*")])
        assert pro_service.pro_find_iso(result.pro, ProObject.constant(fs, "*⊔*⊔*⊔*")) is not None

    def test_fiber_product_of_chains(self, fs):
        """A fiber product of 2-chains over a point is universal against constant test objects."""
        X, Y, C = two_chain(fs), two_chain(fs), ProObject.constant(fs, "*")
        to_point_x = ProMorphism.from_level(X, C, X.bottom, fold(fs, X(X.bottom), "*"))
        to_point_y = ProMorphism.from_level(Y, C, Y.bottom, fold(fs, Y(Y.bottom), "*"))
        nodes, arrows = [X, Y, C], [(0, 2, to_point_x), (1, 2, to_point_y)]
        result = pro_service.pro_finite_limits(fs, nodes, arrows)
        tests = [ProObject.constant(fs, "*"), ProObject.constant(fs, "*⊔*")]
        assert pro_service.verify_pro_limit(nodes, arrows, result, tests) == []

    def test_pairing_recovers_legs(self, fs):
        """The induced map into a product composes back to the given maps."""
        A = ProObject.constant(fs, "*⊔*")
        result = pro_service.pro_product(fs, [A, A])
        ident = pro_service.identity(A)
        pair = pro_service.pro_pullback_pairing(result, [ident, ident])
        for leg in result.legs:
            assert pro_service.compose(leg, pair) == ident

    # ===== Cofiltered limits =====

    def test_singleton_diagram(self, fs):
        """A one-node diagram has the node as its limit."""
        X = two_chain(fs)
        result = pro_service.pro_limit(IndexPoset.single("p"), {"p": X}, {})
        assert pro_service.pro_find_iso(result.pro, X) is not None

    def test_chain_of_constants(self, fs):
        """A 2-chain of constants B -> A glues to a pro-object on a 2-chain index."""
        A, B = ProObject.constant(fs, "*"), ProObject.constant(fs, "*⊔*")
        step = ProMorphism(B, A, ((0, fold(fs, "*⊔*", "*")),))
        result = pro_service.pro_limit(IndexPoset.chain(2), {0: A, 1: B}, {(1, 0): step})
        assert len(result.pro.index) == 2
        assert result.pro(result.pro.bottom) == "*⊔*"

    def test_cospan_of_constants_is_the_pullback(self, fs):
        """The non-cofiltered shape falls back to a levelwise fiber product."""
        shape = IndexPoset.from_relations(["x", "y", "b"], [("x", "b"), ("y", "b")])
        X, Y, B = (ProObject.constant(fs, o) for o in ("*⊔*", "*⊔*⊔*", "*"))
        arrows = {
            ("x", "b"): ProMorphism(X, B, ((0, fold(fs, "*⊔*", "*")),)),
            ("y", "b"): ProMorphism(Y, B, ((0, fold(fs, "*⊔*⊔*", "*")),)),
        }
        result = pro_service.pro_limit(shape, {"x": X, "y": Y, "b": B}, arrows)
        expected = ProObject.constant(fs, "⊔".join(["*"] * 6))
        assert pro_service.pro_find_iso(result.pro, expected) is not None


class TestProCoproducts:

    def test_empty_part_is_neutral(self, fs):
        """X ⊔ ∅ is isomorphic to X."""
        X = two_chain(fs)
        result = pro_service.pro_coproduct(fs, [X, ProObject.constant(fs, "∅")])
        assert pro_service.pro_find_iso(result.pro, X) is not None

    def test_two_fixed_points(self, bg2):
        """* ⊔ * in finite Z/2-sets is the constant two-fixed-point object."""
        point = ProObject.constant(bg2.cat, "*")
        result = pro_service.pro_coproduct(bg2.cat, [point, point])
        assert [result.pro(t) for t in result.pro.index.elements] == ["*⊔*"]

    def test_chains_stay_chains(self, fs):
        """Two 2-chains on one index give a 2-chain of levelwise coproducts."""
        X = two_chain(fs)
        result = pro_service.pro_coproduct(fs, [X, X])
        assert len(result.pro.index) == 2
        assert result.pro(result.pro.bottom) == "*⊔*⊔*⊔*"

    def test_copair(self, fs):
        """Copairing the injections gives the identity."""
        X = two_chain(fs)
        result = pro_service.pro_coproduct(fs, [X, X])
        copair = pro_service.pro_copair(result, result.pro, result.injections)
        assert copair == pro_service.identity(result.pro)


class TestLimitFunctors:

    def test_constant_pro_object(self, fs):
        """lim F(c(C)) is F(C)."""
        assert pro_service.apply_limit_functor(identity_functor(fs), ProObject.constant(fs, "*⊔*")) == "*⊔*"

    def test_chain_limit_is_bottom_level(self, fs):
        """A finite chain has the size of its bottom level as limit."""
        apex = pro_service.apply_limit_functor(identity_functor(fs), two_chain(fs))
        assert fs.orbit_count(apex) == 2


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
