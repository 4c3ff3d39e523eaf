"""
Site files - the line-oriented workbench format for finite and generator-backed sites

A file is a list of bracketed sections. `#` starts a comment; blank lines are ignored.

    [site]          key = value: name, kind (table | finite-g-sets), group, order, budget, depth
    [objects]       one object per line
    [morphisms]     name: source -> target
    [identities]    object = morphism
    [compose]       g . f = h        (g after f, for every composable pair of non-identities)
    [coverings]     target: member member ...   (an empty member list is the empty family)
    [rule]          a registered basis rule, instead of [coverings]
    [flags]         key = true | false, properties the site is declared to have
"""
import hashlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple, Union

from loguru import logger

from src.config.settings import get_settings
from src.core.errors import MalformedPresentationError, PreconditionError, SiteFileError
from src.services.fincat import category_service
from src.services.fincat.category import Category, TableCategory
from src.services.fincat.group import FiniteGroup
from src.services.fincat.gset_category import GSetCategory
from src.services.site.site import BasisRule, ExplicitBasis, JointlySurjectiveBasis, SiteSpec

SECTIONS = ("site", "objects", "morphisms", "identities", "compose", "coverings", "rule", "flags")
TRUE_WORDS = {"true": True, "yes": True, "false": False, "no": False}

RULES: Dict[str, Callable[[], BasisRule]] = {
    JointlySurjectiveBasis.name: JointlySurjectiveBasis,
}


@dataclass(frozen=True)
class Line:
    number: int
    text: str
    raw: str

    def column(self, token: str) -> int:
        at = self.raw.find(token)
        return at + 1 if at >= 0 else 1


@dataclass
class Section:
    name: str
    header: Line
    lines: List[Line] = field(default_factory=list)


@dataclass(frozen=True)
class SiteFile:
    """A parsed site file together with the hash of the bytes it came from."""
    site: SiteSpec
    sha256: str
    path: Optional[str] = None
    flags: Dict[str, bool] = field(default_factory=dict)


# ===== Lexing =====

def _split_sections(text: str, path: Optional[str]) -> Dict[str, Section]:
    sections: Dict[str, Section] = {}
    current: Optional[Section] = None
    for number, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        line = Line(number, body, raw)
        if body.startswith("["):
            if not body.endswith("]"):
                raise SiteFileError("unterminated section header", number, len(raw.rstrip()) + 1, path)
            name = body[1:-1].strip().lower()
            if name not in SECTIONS:
                raise SiteFileError(f"unknown section [{name}]", number, line.column(name), path)
            if name in sections:
                raise SiteFileError(f"section [{name}] appears twice", number, 1, path)
            current = sections[name] = Section(name, line)
            continue
        if current is None:
            raise SiteFileError("content before the first section header", number, line.column(body), path)
        current.lines.append(line)
    return sections


def _key_values(section: Optional[Section], path: Optional[str]) -> Dict[str, Tuple[str, Line]]:
    found: Dict[str, Tuple[str, Line]] = {}
    for line in section.lines if section else ():
        key, sep, value = line.text.partition("=")
        if not sep or not key.strip() or not value.strip():
            raise SiteFileError("expected key = value", line.number, line.column(line.text), path)
        found[key.strip().lower()] = (value.strip(), line)
    return found


def _integer(value: str, line: Line, path: Optional[str]) -> int:
    try:
        return int(value)
    except ValueError:
        raise SiteFileError(f"{value!r} is not an integer", line.number, line.column(value), path) from None


# ===== Categories =====

def _table_category(name: str, sections: Dict[str, Section], path: Optional[str]) -> TableCategory:
    for required in ("objects", "morphisms", "identities"):
        if required not in sections:
            raise SiteFileError(f"a table site needs an [{required}] section", 1, 1, path)

    objects: List[str] = []
    for line in sections["objects"].lines:
        if line.text in objects:
            raise SiteFileError(f"object {line.text} is listed twice", line.number, line.column(line.text), path)
        objects.append(line.text)

    morphisms: Dict[str, Tuple[str, str]] = {}
    for line in sections["morphisms"].lines:
        mname, sep, ends = line.text.partition(":")
        source, arrow, target = ends.partition("->")
        mname, source, target = mname.strip(), source.strip(), target.strip()
        if not sep or not arrow or not mname:
            raise SiteFileError("expected name: source -> target", line.number, line.column(line.text), path)
        for obj in (source, target):
            if obj not in objects:
                raise SiteFileError(f"unknown object {obj!r}", line.number, line.column(obj), path)
        if mname in morphisms:
            raise SiteFileError(f"morphism {mname} is declared twice", line.number, line.column(mname), path)
        morphisms[mname] = (source, target)

    identities: Dict[str, str] = {}
    for line in sections["identities"].lines:
        obj, sep, mname = (part.strip() for part in line.text.partition("="))
        if not sep:
            raise SiteFileError("expected object = morphism", line.number, line.column(line.text), path)
        if obj not in objects:
            raise SiteFileError(f"unknown object {obj!r}", line.number, line.column(obj), path)
        if morphisms.get(mname) != (obj, obj):
            raise SiteFileError(f"{mname!r} is not an endomorphism of {obj}", line.number, line.column(mname), path)
        identities[obj] = mname
    for obj in objects:
        if obj not in identities:
            raise SiteFileError(f"object {obj} has no identity", sections["identities"].header.number, 1, path)

    table: Dict[Tuple[str, str], str] = {}
    compose = sections.get("compose")
    for line in compose.lines if compose else ():
        left, sep, h = (part.strip() for part in line.text.partition("="))
        g, dot, f = (part.strip() for part in left.partition("."))
        if not sep or not dot:
            raise SiteFileError("expected g . f = h", line.number, line.column(line.text), path)
        for mname in (g, f, h):
            if mname not in morphisms:
                raise SiteFileError(f"unknown morphism {mname!r}", line.number, line.column(mname), path)
        if morphisms[f][1] != morphisms[g][0]:
            raise SiteFileError(
                f"{g} . {f} is not composable: {f} ends at {morphisms[f][1]}, {g} starts at {morphisms[g][0]}",
                line.number, line.column(g), path,
            )
        if morphisms[h] != (morphisms[f][0], morphisms[g][1]):
            raise SiteFileError(
                f"{h} goes {morphisms[h][0]} -> {morphisms[h][1]}, not {morphisms[f][0]} -> {morphisms[g][1]}",
                line.number, line.column(h), path,
            )
        if (g, f) in table and table[(g, f)] != h:
            raise SiteFileError(f"{g} . {f} is given twice", line.number, line.column(g), path)
        table[(g, f)] = h

    plain = [m for m in morphisms if m not in identities.values()]
    where = compose.header.number if compose else sections["morphisms"].header.number
    for g in plain:
        for f in plain:
            if morphisms[f][1] == morphisms[g][0] and (g, f) not in table:
                raise SiteFileError(f"composition {g} . {f} is missing", where, 1, path)

    try:
        return TableCategory(name, objects, morphisms, identities, table)
    except MalformedPresentationError as exc:
        raise SiteFileError(str(exc), sections["morphisms"].header.number, 1, path) from exc


def _group(settings: Dict[str, Tuple[str, Line]], path: Optional[str]) -> FiniteGroup:
    kind, line = settings.get("group", ("cyclic", None))
    if kind == "trivial":
        return FiniteGroup.trivial()
    if kind != "cyclic":
        raise SiteFileError(f"unknown group {kind!r}", line.number, line.column(kind), path)
    if "order" not in settings:
        raise SiteFileError("a cyclic group needs an order", line.number if line else 1, 1, path)
    value, at = settings["order"]
    return FiniteGroup.cyclic(_integer(value, at, path))


def _generated_category(
    name: str, settings: Dict[str, Tuple[str, Line]], budget: Optional[int], path: Optional[str]
) -> GSetCategory:
    if budget is None and "budget" in settings:
        value, line = settings["budget"]
        budget = _integer(value, line, path)
    return GSetCategory(_group(settings, path), budget=budget, name=name)


GENERATORS = {"finite-g-sets": _generated_category}


# ===== Topologies =====

def _basis(cat: Category, sections: Dict[str, Section], path: Optional[str]) -> BasisRule:
    rule, coverings = sections.get("rule"), sections.get("coverings")
    if rule and coverings:
        raise SiteFileError("give either [coverings] or [rule], not both", rule.header.number, 1, path)
    if rule:
        if len(rule.lines) != 1:
            raise SiteFileError("[rule] names exactly one basis rule", rule.header.number, 1, path)
        line = rule.lines[0]
        factory = RULES.get(line.text)
        if factory is None:
            raise SiteFileError(f"unknown basis rule {line.text!r}", line.number, line.column(line.text), path)
        return factory()
    if not isinstance(cat, TableCategory):
        raise SiteFileError("a generator-backed site needs a [rule]", 1, 1, path)
    listed: Dict[str, List[list]] = {}
    for line in coverings.lines if coverings else ():
        target, sep, members = line.text.partition(":")
        target = target.strip()
        if not sep:
            raise SiteFileError("expected target: member ...", line.number, line.column(line.text), path)
        if not cat.contains(target):
            raise SiteFileError(f"unknown object {target!r}", line.number, line.column(target), path)
        family = []
        for mname in members.split():
            if mname not in cat.morphism_names():
                raise SiteFileError(f"unknown morphism {mname!r}", line.number, line.column(mname), path)
            m = cat.morphism(mname)
            if m.target != target:
                raise SiteFileError(f"{mname} lands in {m.target}, not {target}", line.number, line.column(mname), path)
            family.append(m)
        listed.setdefault(target, []).append(family)
    return ExplicitBasis(listed)


# ===== Entry points =====

def parse_site(text: str, path: Optional[str] = None, budget: Optional[int] = None) -> SiteFile:
    """Parse without the law check; `budget` overrides the snapshot size of generator-backed sites."""
    sections = _split_sections(text, path)
    settings = _key_values(sections.get("site"), path)
    name = settings.get("name", (Path(path).stem if path else "site", None))[0]
    kind, line = settings.get("kind", ("table", None))
    if kind == "table":
        cat: Category = _table_category(name, sections, path)
    elif kind in GENERATORS:
        cat = GENERATORS[kind](name, settings, budget, path)
    else:
        raise SiteFileError(f"unknown site kind {kind!r}", line.number, line.column(kind), path)
    depth = None
    if "depth" in settings:
        value, at = settings["depth"]
        depth = _integer(value, at, path)
    site = SiteSpec(cat, _basis(cat, sections, path), name=name, depth=depth)

    flags: Dict[str, bool] = {}
    for key, (value, at) in _key_values(sections.get("flags"), path).items():
        if value.lower() not in TRUE_WORDS:
            raise SiteFileError(f"flag {key} must be true or false", at.number, at.column(value), path)
        flags[key] = TRUE_WORDS[value.lower()]
    digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
    return SiteFile(site, digest, path, flags)


def read_site_file(path: Union[str, Path], budget: Optional[int] = None) -> SiteFile:
    """Parse a site file and verify the category laws on its snapshot."""
    file_path = Path(path)
    if not file_path.is_file():
        raise PreconditionError(f"no site file at {file_path}")
    parsed = parse_site(file_path.read_text(encoding="utf-8"), str(file_path), budget)
    cat = parsed.site.cat
    laws = category_service.check_category_laws(cat, len(cat.objects()) or 1)
    if not laws.passed:
        raise MalformedPresentationError(f"{file_path}: category laws fail: {laws.violations[0]}")
    logger.info(f"loaded {parsed.site.name} from {file_path}: {len(cat.objects())} objects, basis {parsed.site.basis.name}")
    return parsed


def load_site(path: Union[str, Path], budget: Optional[int] = None) -> SiteSpec:
    return read_site_file(path, budget).site


def dump_site(site: SiteSpec, flags: Optional[Dict[str, bool]] = None) -> str:
    """The site file text of a table-backed or finite G-set site."""
    cat = site.cat
    lines = ["[site]", f"name = {site.name}"]
    if isinstance(cat, GSetCategory):
        group = cat.group
        lines.append("kind = finite-g-sets")
        if group.order == 1:
            lines.append("group = trivial")
        elif group.name == f"Z/{group.order}":
            lines += ["group = cyclic", f"order = {group.order}"]
        else:
            raise PreconditionError(f"group {group.name} has no site file form")
        lines.append(f"budget = {cat.budget}")
    elif isinstance(cat, TableCategory):
        lines.append("kind = table")
    else:
        raise PreconditionError(f"{cat.name} has no site file form")
    if site.depth != get_settings().SATURATION_DEPTH:
        lines.append(f"depth = {site.depth}")

    if isinstance(cat, TableCategory):
        lines += ["", "[objects]", *cat.objects()]
        lines += ["", "[morphisms]"]
        for mname in cat.morphism_names():
            m = cat.morphism(mname)
            lines.append(f"{mname}: {m.source} -> {m.target}")
        lines += ["", "[identities]", *(f"{obj} = {cat.identity(obj).key}" for obj in cat.objects())]
        lines += ["", "[compose]", *(f"{g} . {f} = {h}" for g, f, h in cat.table_entries())]

    if isinstance(site.basis, ExplicitBasis):
        lines += ["", "[coverings]"]
        for target, families in site.basis.listed.items():
            for members in families:
                lines.append(f"{target}: " + " ".join(str(m.key) for m in members))
    else:
        lines += ["", "[rule]", site.basis.name]

    if flags:
        lines += ["", "[flags]", *(f"{k} = {'true' if v else 'false'}" for k, v in sorted(flags.items()))]
    return "\n".join(lines) + "\n"
