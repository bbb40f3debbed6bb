"""Text labels for states and maps, as used on the command line."""

from __future__ import annotations

from dataclasses import dataclass

from .gme import GmeMap, build_gme_map
from .maps import (PAULI, SingleSiteMap, compose_unitary_after, from_lindblad, identity_map,
                   reduction_map, transposition_map)
from .qcore import DensityOperator, SystemShape
from .states import (FAMILIES, ghz, maximally_mixed, random_biseparable, random_density,
                     w_state)

STATE_LABELS = (
    "ghz3", "ghz4", "w3", "maximally-mixed-<N>",
    "noisy-ghz3:<mu>", "noisy-ghz4:<mu>", "noisy-w3:<mu>", "ghz-w-mixture:<mu>", "werner:<w>",
    "random:<N>,<seed>", "biseparable:<N>,<terms>,<seed>",
)
MAP_LABELS = ("transposition", "reduction", "identity", "lindblad:<g1>,<g2>,<g3>",
              "modified-transposition", "modified-reduction")


class UnknownLabel(ValueError):
    """A state or map label that is not in the catalog."""


def _numbers(text: str, count: int, label: str) -> list[float]:
    parts = [p for p in text.split(",") if p.strip()]
    if len(parts) != count:
        raise UnknownLabel(f"{label!r} expects {count} comma-separated parameter(s)")
    try:
        return [float(p) for p in parts]
    except ValueError as exc:
        raise UnknownLabel(f"bad number in {label!r}: {exc}") from None


def family_of(label: str) -> str | None:
    """Family name of a parametrized label (``noisy-ghz3:0.5`` -> ``noisy-ghz3``)."""
    name = label.split(":", 1)[0].strip()
    return name if name in FAMILIES else None


def parse_state(label: str) -> DensityOperator:
    """Resolve a state label; see ``STATE_LABELS`` for the accepted forms."""
    name, _, params = label.strip().partition(":")
    if name in FAMILIES:
        (value,) = _numbers(params, 1, label)
        return FAMILIES[name](value)
    if params == "":
        if name == "ghz3":
            return ghz(3)
        if name == "ghz4":
            return ghz(4)
        if name == "w3":
            return w_state(3)
        if name.startswith("maximally-mixed-") and name.rsplit("-", 1)[1].isdigit():
            return maximally_mixed(SystemShape.qubits(int(name.rsplit("-", 1)[1])))
    if name == "random":
        n, seed = _numbers(params, 2, label)
        return random_density(SystemShape.qubits(int(n)), int(seed))
    if name == "biseparable":
        n, terms, seed = _numbers(params, 3, label)
        return random_biseparable(int(n), int(terms), int(seed))
    raise UnknownLabel(f"unknown state {label!r}; known: {', '.join(STATE_LABELS)}")


def parse_base_map(label: str) -> SingleSiteMap:
    name, _, params = label.strip().partition(":")
    if name == "transposition" and not params:
        return transposition_map(2)
    if name == "reduction" and not params:
        return reduction_map(2)
    if name == "identity" and not params:
        return identity_map(2)
    if name == "lindblad":
        return from_lindblad(_numbers(params, 3, label))
    raise UnknownLabel(f"unknown map {label!r}; known: {', '.join(MAP_LABELS)}")


@dataclass(frozen=True)
class MapSpec:
    """Everything needed to build a GME map except the number of sites, which may come from the state."""

    base: str = "transposition"
    post_unitary: str | None = None
    n: int | None = None
    c: float | str = "auto"

    @classmethod
    def parse(cls, label: str, modify: str | None = None, n: int | None = None,
              c: float | str = "auto") -> "MapSpec":
        base = label.strip()
        if base.startswith("modified-"):
            base = base[len("modified-"):]
            modify = modify or "sx"
        if modify not in (None, "none", "sx"):
            raise UnknownLabel(f"unknown modification {modify!r}; known: sx")
        parse_base_map(base)
        if isinstance(c, str) and c != "auto":
            try:
                c = float(c)
            except ValueError:
                raise UnknownLabel(f"--c must be 'auto' or a number, got {c!r}") from None
        return cls(base, None if modify in (None, "none") else modify, n, c)

    def single_site(self) -> SingleSiteMap:
        m = parse_base_map(self.base)
        if self.post_unitary == "sx":
            m = compose_unitary_after(m, PAULI["x"], "σx")
        return m

    def build(self, n_sites: int | None = None) -> GmeMap:
        n = self.n if self.n is not None else n_sites
        if n is None:
            raise ValueError("number of sites unknown; pass --n")
        return build_gme_map(n, self.single_site(), c=self.c)

    @property
    def label(self) -> str:
        prefix = "modified-" if self.post_unitary == "sx" else ""
        return prefix + self.base
