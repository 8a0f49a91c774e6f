"""Problem definitions: variant, target patterns, color regime and symmetry.

Problems can be named with the shorthand ``VARIANT(G)`` / ``CR(G,H)``, where
G and H are preset names (see ``data/presets.yaml``), ``K<p>``/``C<k>``
families, the integer shorthand of ``CR(s,t)`` for complete graphs, or an
inline ``m:bits`` code.  Longer definitions live in YAML problem files.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Optional

import yaml

from .graphs import ColoredCompleteGraph, GraphPattern, Symmetry, parse_graph
from .patterns import Kind, PatternKind


class Variant(Enum):
    ER = "ER"  # ordered, any number of colors, forbid a canonical copy of G
    CR = "CR"  # unordered, any number of colors, forbid orderable G or rainbow H
    OR = "OR"  # ordered, two colors, forbid a monochromatic copy of G
    R = "R"  # unordered, two colors, forbid a monochromatic copy of G


class ColorRegime(Enum):
    TWO = "two"
    UNBOUNDED = "unbounded"


_SYMMETRY = {
    Variant.ER: Symmetry.ORDERED,
    Variant.OR: Symmetry.ORDERED,
    Variant.CR: Symmetry.UNORDERED,
    Variant.R: Symmetry.UNORDERED,
}
_REGIME = {
    Variant.ER: ColorRegime.UNBOUNDED,
    Variant.CR: ColorRegime.UNBOUNDED,
    Variant.OR: ColorRegime.TWO,
    Variant.R: ColorRegime.TWO,
}


@dataclass(frozen=True)
class ProblemSpec:
    variant: Variant
    g: GraphPattern
    h: Optional[GraphPattern] = None
    extra: tuple[PatternKind, ...] = ()
    auxiliary: tuple[ColoredCompleteGraph, ...] = ()
    orderable_mode: str = "generic"
    name: str = ""
    forbidden: tuple[PatternKind, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        ordered = self.symmetry is Symmetry.ORDERED
        if self.g.ordered != ordered:
            raise ValueError(f"{self.variant.value} needs {'an ordered' if ordered else 'an unordered'} G")
        if self.variant is Variant.CR:
            if self.h is None:
                raise ValueError("CR needs a rainbow target H")
            if self.h.ordered:
                raise ValueError("CR needs an unordered H")
        elif self.h is not None:
            raise ValueError(f"{self.variant.value} takes a single target")
        if self.orderable_mode not in ("generic", "specialized"):
            raise ValueError(f"unknown orderable mode {self.orderable_mode!r}")
        for aux in self.auxiliary:
            if self.regime is ColorRegime.TWO and aux.num_classes > 2:
                raise ValueError("auxiliary graph uses more than two classes")
        if self.variant is Variant.ER:
            main = (PatternKind(Kind.CANONICAL, self.g),)
        elif self.variant is Variant.CR:
            main = (PatternKind(Kind.ORDERABLE, self.g), PatternKind(Kind.RAINBOW, self.h))
        else:
            main = (PatternKind(Kind.MONOCHROMATIC, self.g),)
        object.__setattr__(self, "forbidden", main + tuple(self.extra))

    @property
    def symmetry(self) -> Symmetry:
        return _SYMMETRY[self.variant]

    @property
    def regime(self) -> ColorRegime:
        return _REGIME[self.variant]

    @property
    def max_classes(self) -> Optional[int]:
        return 2 if self.regime is ColorRegime.TWO else None

    @property
    def id(self) -> str:
        if self.name:
            return self.name
        if self.h is not None:
            return f"{self.variant.value}({self.g},{self.h})"
        return f"{self.variant.value}({self.g})"

    def __str__(self) -> str:
        return self.id

    # convenience constructors

    @classmethod
    def er(cls, g: GraphPattern, **kw) -> "ProblemSpec":
        return cls(Variant.ER, g.with_order(True), **kw)

    @classmethod
    def cr(cls, g: GraphPattern, h: GraphPattern, **kw) -> "ProblemSpec":
        return cls(Variant.CR, g.with_order(False), h.with_order(False), **kw)

    @classmethod
    def ordered_ramsey(cls, g: GraphPattern, **kw) -> "ProblemSpec":
        return cls(Variant.OR, g.with_order(True), **kw)

    @classmethod
    def ramsey(cls, g: GraphPattern, **kw) -> "ProblemSpec":
        return cls(Variant.R, g.with_order(False), **kw)


# --------------------------------------------------------------------------
# presets and parsing


@lru_cache(maxsize=None)
def presets() -> dict:
    text = resources.files("ramseykit").joinpath("data/presets.yaml").read_text()
    return yaml.safe_load(text)


def _pattern_from_entry(name: str, entry: dict) -> GraphPattern:
    m = int(entry["m"])
    if "code" in entry:
        return GraphPattern.from_code(m, str(entry["code"]), ordered=False, name=name)
    edges = tuple((int(t[0]), int(t[1])) for t in str(entry["edges"]).split())
    return GraphPattern(m, edges, False, name)


def resolve_pattern(token: str, ordered: bool) -> GraphPattern:
    """Pattern from a preset name, ``K<p>``, ``C<k>``, a bare integer p or ``m:bits``."""
    token = token.strip()
    table = presets()["patterns"]
    if token in table:
        return _pattern_from_entry(token, table[token]).with_order(ordered)
    if re.fullmatch(r"\d+", token):
        return GraphPattern.complete(int(token), ordered)
    mt = re.fullmatch(r"K(\d+)", token)
    if mt:
        return GraphPattern.complete(int(mt.group(1)), ordered)
    mt = re.fullmatch(r"C(\d+)", token)
    if mt:
        return GraphPattern.cycle(int(mt.group(1)), ordered)
    mt = re.fullmatch(r"(\d+):([01]+)", token)
    if mt:
        return GraphPattern.from_code(int(mt.group(1)), mt.group(2), ordered, name=f"{mt.group(1)}:{mt.group(2)}")
    raise ValueError(f"unknown pattern {token!r}")


def _extra_from_entry(entry: dict, ordered: bool) -> PatternKind:
    return PatternKind(Kind(entry["kind"]), resolve_pattern(str(entry["pattern"]), ordered))


def problem_from_dict(d: dict, base_dir: Path | None = None, name: str = "") -> ProblemSpec:
    variant = Variant(d["variant"])
    ordered = _SYMMETRY[variant] is Symmetry.ORDERED
    g = resolve_pattern(str(d["g"]), ordered)
    h = resolve_pattern(str(d["h"]), False) if d.get("h") is not None else None
    extra = tuple(_extra_from_entry(e, ordered) for e in d.get("extra", []) or [])
    aux: list[ColoredCompleteGraph] = []
    for line in d.get("auxiliary", []) or []:
        aux.append(parse_graph(line))
    if d.get("auxiliary_file"):
        path = Path(d["auxiliary_file"])
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        for line in path.read_text().splitlines():
            if line.strip() and not line.lstrip().startswith("#"):
                aux.append(parse_graph(line))
    return ProblemSpec(
        variant,
        g,
        h,
        extra=extra,
        auxiliary=tuple(aux),
        orderable_mode=d.get("orderable_mode", "generic"),
        name=d.get("name", name),
    )


def parse_problem(text: str) -> ProblemSpec:
    """Problem from shorthand (``ER(C3)``, ``CR(4,3)``), a preset name or a YAML file path."""
    text = text.strip()
    named = presets().get("problems", {})
    if text in named:
        return problem_from_dict(named[text], name=text)
    path = Path(text)
    if text.endswith((".yaml", ".yml")) or path.is_file():
        d = yaml.safe_load(path.read_text())
        return problem_from_dict(d, base_dir=path.parent, name=d.get("name", path.stem))
    mt = re.fullmatch(r"(ER|CR|OR|R)\((.+)\)", text)
    if not mt:
        raise ValueError(f"cannot parse problem {text!r}")
    variant = Variant(mt.group(1))
    args = [a.strip() for a in mt.group(2).split(",")]
    d = {"variant": variant.value, "g": args[0]}
    if variant is Variant.CR:
        if len(args) != 2:
            raise ValueError("CR needs two targets")
        d["h"] = args[1]
    elif len(args) != 1:
        raise ValueError(f"{variant.value} takes one target")
    return problem_from_dict(d, name=text)
