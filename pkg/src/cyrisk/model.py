"""Systems, controls, insurance and portfolios; cost and feasibility logic."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Any, NamedTuple, Optional

from .errors import ConfigurationError

__all__ = [
    "Block",
    "SystemGraph",
    "Control",
    "ControlCatalog",
    "InsuranceProduct",
    "Portfolio",
    "Constraints",
    "PortfolioSpace",
    "PortfolioTable",
    "Feasibility",
    "portfolio_cost",
    "is_feasible",
    "enumerate_feasible",
    "DEFAULT_ENUMERATION_CAP",
]

DEFAULT_ENUMERATION_CAP = 4096


@dataclass(frozen=True)
class Block:
    id: str
    name: str = ""
    level: int = 1
    entry_capable: bool = False
    tags: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "tags", tuple(self.tags))
        if int(self.level) != self.level or self.level < 1:
            raise ConfigurationError(f"block {self.id!r}: level must be a positive integer")


@dataclass(frozen=True)
class SystemGraph:
    """Blocks in levels with directed attack-transit edges ``(from, to)``.

    Blocks must be listed in nondecreasing level order; an edge may stay in
    its level or go one level deeper, so cycles can only live inside a level.
    """

    blocks: tuple
    edges: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(self.blocks))
        object.__setattr__(self, "edges", tuple((str(a), str(b)) for a, b in self.edges))
        problems = self.validate()
        if problems:
            raise ConfigurationError("; ".join(problems))

    def validate(self):
        problems = []
        ids = [b.id for b in self.blocks]
        if len(set(ids)) != len(ids):
            problems.append("block ids must be unique")
        levels = [b.level for b in self.blocks]
        if levels != sorted(levels):
            problems.append("blocks must be ordered by level")
        if levels and sorted(set(levels)) != list(range(1, max(levels) + 1)):
            problems.append("levels must be contiguous from 1")
        level = {b.id: b.level for b in self.blocks}
        seen = set()
        for src, dst in self.edges:
            if src not in level or dst not in level:
                problems.append(f"edge {src}->{dst} references an unknown block")
                continue
            if src == dst:
                problems.append(f"edge {src}->{dst} is a self-loop")
            if level[dst] not in (level[src], level[src] + 1):
                problems.append(f"edge {src}->{dst} must stay in its level or go one level down")
            if (src, dst) in seen:
                problems.append(f"duplicate edge {src}->{dst}")
            seen.add((src, dst))
        return problems

    @property
    def k(self):
        return max((b.level for b in self.blocks), default=0)

    @property
    def ids(self):
        return [b.id for b in self.blocks]

    def index(self, block_id):
        for i, b in enumerate(self.blocks):
            if b.id == block_id:
                return i
        raise ConfigurationError(f"unknown block {block_id!r}")

    def entry_ids(self):
        return [b.id for b in self.blocks if b.entry_capable]

    def level_blocks(self, level):
        return [i for i, b in enumerate(self.blocks) if b.level == level]

    def level_order(self, level):
        """Block indices of ``level`` in topological order of the same-level edges
        (listing order breaks ties; cyclic levels keep listing order)."""
        members = self.level_blocks(level)
        ids = {self.blocks[i].id: i for i in members}
        indeg = {i: 0 for i in members}
        for s, d in self.edges:
            if s in ids and d in ids:
                indeg[ids[d]] += 1
        order, ready = [], [i for i in members if indeg[i] == 0]
        while ready:
            i = ready.pop(0)
            order.append(i)
            for d in self.successors(self.blocks[i].id):
                if d in ids:
                    indeg[ids[d]] -= 1
                    if indeg[ids[d]] == 0:
                        ready.append(ids[d])
                        ready.sort()
        return order if len(order) == len(members) else members

    def successors(self, block_id):
        return [dst for src, dst in self.edges if src == block_id]

    def cyclic_levels(self):
        """Levels containing a directed cycle among same-level edges."""
        out = set()
        for h in range(1, self.k + 1):
            members = {self.blocks[i].id for i in self.level_blocks(h)}
            adj = {m: [d for s, d in self.edges if s == m and d in members] for m in members}
            state = {}

            def visit(u):
                state[u] = 1
                for v in adj[u]:
                    if state.get(v) == 1 or (v not in state and visit(v)):
                        return True
                state[u] = 2
                return False

            if any(m not in state and visit(m) for m in sorted(members)):
                out.add(h)
        return out


@dataclass(frozen=True)
class Control:
    id: str
    name: str = ""
    icost: float = 0.0
    mcost: float = 0.0
    alpha: float = 0.0
    beta: float = 0.0
    counters: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "counters", frozenset(self.counters))
        for f in ("icost", "mcost", "alpha", "beta"):
            if getattr(self, f) < 0:
                raise ConfigurationError(f"control {self.id!r}: {f} must be >= 0")


@dataclass(frozen=True)
class ControlCatalog:
    controls: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "controls", tuple(self.controls))
        ids = self.ids
        if len(set(ids)) != len(ids):
            raise ConfigurationError("control ids must be unique")

    @property
    def ids(self):
        return [c.id for c in self.controls]

    def __len__(self):
        return len(self.controls)

    def __iter__(self):
        return iter(self.controls)

    def index(self, control_id):
        try:
            return self.ids.index(control_id)
        except ValueError:
            raise ConfigurationError(f"unknown control {control_id!r}") from None

    def mask_key(self, states, relevant=None):
        """Active-set string over the catalog, e.g. ``"011"``.

        Positions outside ``relevant`` (control ids) are written as ``0``.
        """
        keep = set(self.ids if relevant is None else relevant)
        return "".join(
            "1" if s and c.id in keep else "0" for s, c in zip(states, self.controls)
        )


@dataclass(frozen=True)
class InsuranceProduct:
    """``covered_fraction`` maps impact-category id to the share absorbed."""

    id: str
    covered_fraction: dict = field(default_factory=dict)
    price_table: dict = field(default_factory=dict)
    default_price: Optional[float] = None

    def __post_init__(self):
        for cat, f in self.covered_fraction.items():
            if not 0.0 <= f <= 1.0:
                raise ConfigurationError(f"insurance {self.id!r}: fraction for {cat!r} outside [0, 1]")
        for key, price in self.price_table.items():
            if price < 0:
                raise ConfigurationError(f"insurance {self.id!r}: negative price for {key!r}")

    def __hash__(self):
        return hash(self.id)

    def price(self, active_key):
        try:
            return float(self.price_table[active_key])
        except KeyError:
            if self.default_price is not None:
                return float(self.default_price)
            raise ConfigurationError(
                f"insurance {self.id!r} has no price for control subset {active_key!r}"
            ) from None


@dataclass(frozen=True)
class Portfolio:
    """Control states (0 absent, 1 planned, 2 already implemented) plus insurance."""

    states: tuple
    insurance: Optional[str] = None

    def __post_init__(self):
        states = tuple(int(s) for s in self.states)
        if any(s not in (0, 1, 2) for s in states):
            raise ConfigurationError(f"control states must be in {{0, 1, 2}}, got {states}")
        object.__setattr__(self, "states", states)

    @property
    def active(self):
        return tuple(s in (1, 2) for s in self.states)

    @property
    def control_key(self):
        return "".join(str(s) for s in self.states)

    @property
    def key(self):
        return self.control_key + (f"+{self.insurance}" if self.insurance else "")

    @classmethod
    def from_key(cls, key):
        states, _, ins = key.partition("+")
        if not states.isdigit() and states:
            raise ConfigurationError(f"bad portfolio key {key!r}")
        return cls(tuple(int(c) for c in states), ins or None)

    def __str__(self):
        return self.key


@dataclass(frozen=True)
class Constraints:
    total_budget: Optional[float] = None
    implementation_budget: Optional[float] = None
    maintenance_budget: Optional[float] = None
    required_insurance: frozenset = frozenset()
    enforced_controls: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "required_insurance", frozenset(self.required_insurance))
        object.__setattr__(self, "enforced_controls", frozenset(self.enforced_controls))
        for f in ("total_budget", "implementation_budget", "maintenance_budget"):
            v = getattr(self, f)
            if v is not None and v < 0:
                raise ConfigurationError(f"{f} must be >= 0")


@dataclass(frozen=True)
class PortfolioSpace:
    """The decision space: which controls are free, fixed, and which insurance is allowed."""

    catalog: ControlCatalog
    implemented: frozenset = frozenset()
    enforced: frozenset = frozenset()
    insurance_options: tuple = (None,)

    def __post_init__(self):
        object.__setattr__(self, "implemented", frozenset(self.implemented))
        object.__setattr__(self, "enforced", frozenset(self.enforced))
        object.__setattr__(self, "insurance_options", tuple(self.insurance_options))
        for cid in self.implemented | self.enforced:
            self.catalog.index(cid)
        if self.implemented & self.enforced:
            raise ConfigurationError("a control cannot be both implemented and enforced")

    @property
    def free(self):
        fixed = self.implemented | self.enforced
        return [c.id for c in self.catalog if c.id not in fixed]

    def fixed_state(self, control_id):
        if control_id in self.implemented:
            return 2
        if control_id in self.enforced:
            return 1
        return None

    @property
    def size(self):
        return 2 ** len(self.free) * len(self.insurance_options)

    def __iter__(self):
        """All portfolios, lexicographic on states then insurance id."""
        free = self.free
        for bits in itertools.product((0, 1), repeat=len(free)):
            chosen = dict(zip(free, bits))
            states = tuple(
                self.fixed_state(c.id) if c.id not in chosen else chosen[c.id]
                for c in self.catalog
            )
            for ins in sorted(self.insurance_options, key=lambda x: (x is not None, x or "")):
                yield Portfolio(states, ins)

    def contains(self, p: Portfolio):
        if len(p.states) != len(self.catalog) or p.insurance not in self.insurance_options:
            return False
        for c, s in zip(self.catalog, p.states):
            fixed = self.fixed_state(c.id)
            if fixed is not None and s != fixed:
                return False
            if fixed is None and s not in (0, 1):
                return False
        return True

    def neighbours(self, p: Portfolio):
        """Single free-control flips, exchanges (one free control on, another off) and insurance swaps.

        Exchanges let a search move along a budget frontier without first
        stepping to a worse portfolio.
        """
        out = []
        idx = [self.catalog.index(cid) for cid in self.free]
        for i in idx:
            states = list(p.states)
            states[i] = 1 - states[i]
            out.append(Portfolio(tuple(states), p.insurance))
        for i in idx:
            for j in idx:
                if p.states[i] == 1 and p.states[j] == 0:
                    states = list(p.states)
                    states[i], states[j] = 0, 1
                    out.append(Portfolio(tuple(states), p.insurance))
        for ins in self.insurance_options:
            if ins != p.insurance:
                out.append(Portfolio(p.states, ins))
        return out


@dataclass(frozen=True)
class PortfolioTable:
    """Values keyed by the active state of the controls relevant to them.

    Keys are catalog-length strings; positions of irrelevant controls are
    always ``0`` (``"010"`` means only the second control is active).  A table
    with ``default`` set answers every lookup that has no explicit entry.
    """

    relevant: tuple
    entries: dict
    default: Any = None

    def __post_init__(self):
        object.__setattr__(self, "relevant", tuple(self.relevant))

    def key_for(self, portfolio: Portfolio, catalog: ControlCatalog):
        return catalog.mask_key(portfolio.active, self.relevant)

    def lookup(self, portfolio: Portfolio, catalog: ControlCatalog, what="table"):
        key = self.key_for(portfolio, catalog)
        if key in self.entries:
            return self.entries[key]
        if self.default is not None:
            return self.default
        raise ConfigurationError(f"{what}: no entry for portfolio subset {key!r}")


class Feasibility(NamedTuple):
    ok: bool
    violations: list

    def __bool__(self):
        return self.ok


def _cost_parts(p: Portfolio, catalog: ControlCatalog):
    if len(p.states) != len(catalog):
        raise ConfigurationError(
            f"portfolio {p.key!r} has {len(p.states)} states for {len(catalog)} controls"
        )
    icost = sum(c.icost for c, s in zip(catalog, p.states) if s == 1)
    mcost = sum(c.mcost for c, s in zip(catalog, p.states) if s in (1, 2))
    return icost, mcost


def portfolio_cost(p: Portfolio, catalog: ControlCatalog, insurance=None) -> float:
    """Annual cost in euros: new-control implementation + maintenance + insurance price.

    Controls already implemented (state 2) only pay maintenance.  The
    insurance price is looked up by the active-control subset.
    """
    icost, mcost = _cost_parts(p, catalog)
    total = icost + mcost
    if p.insurance is not None:
        if insurance is None or p.insurance not in insurance:
            raise ConfigurationError(f"unknown insurance product {p.insurance!r}")
        total += insurance[p.insurance].price(catalog.mask_key(p.active))
    return float(total)


def is_feasible(p: Portfolio, constraints: Constraints, catalog: ControlCatalog, insurance=None):
    violations = []
    icost, mcost = _cost_parts(p, catalog)
    try:
        total = portfolio_cost(p, catalog, insurance)
    except ConfigurationError as exc:
        return Feasibility(False, [str(exc)])
    c = constraints
    if c.total_budget is not None and total > c.total_budget:
        violations.append(f"cost {total:g} exceeds budget {c.total_budget:g}")
    if c.implementation_budget is not None and icost > c.implementation_budget:
        violations.append(f"implementation cost {icost:g} exceeds {c.implementation_budget:g}")
    if c.maintenance_budget is not None and mcost > c.maintenance_budget:
        violations.append(f"maintenance cost {mcost:g} exceeds {c.maintenance_budget:g}")
    for cid in sorted(c.enforced_controls):
        if not p.active[catalog.index(cid)]:
            violations.append(f"enforced control {cid} is not active")
    if c.required_insurance and p.insurance not in c.required_insurance:
        allowed = ", ".join(sorted(c.required_insurance))
        violations.append(f"insurance {p.insurance!r} does not meet compliance ({allowed})")
    return Feasibility(not violations, violations)


def enumerate_feasible(
    space: PortfolioSpace,
    constraints: Constraints,
    insurance=None,
    cap: int = DEFAULT_ENUMERATION_CAP,
):
    """Every feasible portfolio of ``space`` exactly once, in lexicographic order."""
    if space.size > cap:
        raise ConfigurationError(
            f"decision space has {space.size} portfolios (cap {cap}); "
            "use the annealing optimizer instead of exhaustive enumeration"
        )
    return [p for p in space if is_feasible(p, constraints, space.catalog, insurance)]
