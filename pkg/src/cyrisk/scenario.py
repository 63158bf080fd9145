"""Scenario files: loading, validation, serialisation and the bundled ADS case.

The format is YAML with a ``version`` field.  ``load_scenario`` collects every
problem it finds (with a dotted path to the offending field) and raises a
single :class:`~cyrisk.errors.ScenarioError` listing all of them.  The layout
is documented in ``docs/scenario-format.md``; ``data/ads.yaml`` is a complete
example.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

import yaml

from .ara import SELF, AttackerAction, AttackerSpec, NotorietyObjective, SensitiveInfoObjective
from .attack import AttackType
from .errors import ConfigurationError, ScenarioError
from .impact import ImpactCategory, ImpactEntry
from .model import (
    Block,
    Constraints,
    Control,
    ControlCatalog,
    InsuranceProduct,
    Portfolio,
    PortfolioSpace,
    PortfolioTable,
    SystemGraph,
)
from .stochastic import Beta, Gamma, Poisson, Uniform, dist_from_dict
from .transit import EntranceModel, Pnp, TransitBudget

__all__ = [
    "FORMAT_VERSION",
    "Scenario",
    "SurrogateSpec",
    "load_scenario",
    "parse_scenario",
    "scenario_to_dict",
    "dump_scenario",
    "builtin_ads_scenario",
    "builtin_scenario",
]

FORMAT_VERSION = 1
DEFAULTS = {"M": 10000, "V": 10000, "rho": 1e-7, "level": 0.95, "seed": 12345}


@dataclass(frozen=True)
class SurrogateSpec:
    """Parameters of the closed-form loss surrogate (per-control alpha/beta live on the controls)."""

    s0: float
    t0: float
    a: float


@dataclass(frozen=True)
class Scenario:
    name: str
    graph: SystemGraph
    catalog: ControlCatalog
    insurance: dict
    categories: tuple
    attack_types: tuple
    attackers: tuple
    space: PortfolioSpace
    constraints: Constraints
    version: int = FORMAT_VERSION
    horizon: float = 1.0
    defaults: dict = field(default_factory=lambda: dict(DEFAULTS))
    description: str = ""
    weights: Optional[dict] = None
    surrogate: Optional[SurrogateSpec] = None

    def portfolio(self, key):
        """Parse ``"011+A"`` and check it belongs to the decision space."""
        p = Portfolio.from_key(key)
        if not self.space.contains(p):
            raise ConfigurationError(f"portfolio {key!r} is not in the decision space of {self.name!r}")
        return p

    def attacker(self, attacker_id):
        for a in self.attackers:
            if a.id == attacker_id:
                return a
        raise ConfigurationError(f"unknown attacker {attacker_id!r}")


# --------------------------------------------------------------------------- parsing


def _combo_label(combo):
    return "+".join(combo)


class _Parser:
    def __init__(self):
        self.errors = []

    def err(self, path, msg):
        self.errors.append(f"{path}: {msg}")

    def get(self, d, key, path, kind=None, required=True, default=None):
        if not isinstance(d, dict):
            self.err(path, "expected a mapping")
            return default
        if key not in d:
            if required:
                self.err(f"{path}.{key}" if path else key, "missing required field")
            return default
        v = d[key]
        if kind is not None and not isinstance(v, kind) or isinstance(v, bool) and kind in ((int, float), float):
            self.err(f"{path}.{key}" if path else key, f"expected {_kind_name(kind)}, got {type(v).__name__}")
            return default
        return v

    def dist(self, value, path, family=None):
        """``[a, b]`` for beta / gamma, a number for poisson, or a one-key mapping."""
        try:
            if isinstance(value, dict):
                return dist_from_dict(value)
            if family is Beta and _is_pair(value):
                return Beta(float(value[0]), float(value[1]))
            if family is Gamma and _is_pair(value):
                return Gamma(float(value[0]), float(value[1]))
            if family is Poisson and _is_number(value):
                return Poisson(float(value))
            if family is Uniform and _is_pair(value):
                return Uniform(float(value[0]), float(value[1]))
            raise ValueError(f"cannot read {value!r} as a {family.__name__.lower() if family else ''} distribution")
        except (ValueError, TypeError) as exc:
            self.err(path, str(exc))
            return None

    def number(self, value, path, positive=False, nonneg=False):
        if not _is_number(value):
            self.err(path, f"expected a number, got {value!r}")
            return None
        v = float(value)
        if positive and not v > 0:
            self.err(path, f"must be > 0, got {value!r}")
            return None
        if nonneg and v < 0:
            self.err(path, f"must be >= 0, got {value!r}")
            return None
        return v


def _kind_name(kind):
    if isinstance(kind, tuple):
        return " or ".join(k.__name__ for k in kind)
    return kind.__name__


def _is_number(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _is_pair(v):
    return isinstance(v, (list, tuple)) and len(v) == 2 and all(_is_number(x) for x in v)


def parse_scenario(data, source="<scenario>"):
    """Build a validated :class:`Scenario` from an already-parsed mapping."""
    P = _Parser()
    if not isinstance(data, dict):
        raise ScenarioError([f"{source}: top level must be a mapping"])
    version = data.get("version")
    if version != FORMAT_VERSION:
        P.err("version", f"unsupported format version {version!r} (expected {FORMAT_VERSION})")

    graph = _parse_graph(P, data)
    categories = _parse_categories(P, data)
    cat_ids = [c.id for c in categories]
    catalog = _parse_controls(P, data)
    insurance = _parse_insurance(P, data, catalog, cat_ids)
    space = _parse_space(P, data, catalog, insurance)
    constraints = _parse_constraints(P, data, catalog, insurance)
    ctx = _Context(P, graph, catalog, space, categories)

    attack_types = []
    seen_types = set()
    for i, at in enumerate(P.get(data, "attack_types", "", list, required=False, default=[])):
        a = _parse_untargeted(ctx, at, f"attack_types[{i}]")
        if a is not None:
            if a.id in seen_types:
                P.err(f"attack_types[{i}].id", f"duplicate attack type {a.id!r}")
            seen_types.add(a.id)
            attack_types.append(a)
    attackers = []
    for i, spec in enumerate(P.get(data, "attackers", "", list, required=False, default=[])):
        a = _parse_attacker(ctx, spec, f"attackers[{i}]", seen_types)
        if a is not None:
            attackers.append(a)
    if catalog is not None:
        for i, c in enumerate(catalog):
            for j in sorted(c.counters - seen_types):
                P.err(f"controls[{i}].counters", f"unknown attack type {j!r}")

    defaults = dict(DEFAULTS)
    for k, v in (P.get(data, "defaults", "", dict, required=False, default={}) or {}).items():
        if k not in DEFAULTS:
            P.err(f"defaults.{k}", "unknown default")
        elif not _is_number(v):
            P.err(f"defaults.{k}", f"expected a number, got {v!r}")
        else:
            defaults[k] = type(DEFAULTS[k])(v)
    if defaults["M"] < 1 or defaults["V"] < 1:
        P.err("defaults", "M and V must be >= 1")
    if not 0 < defaults["level"] < 1:
        P.err("defaults.level", "must be in (0, 1)")
    if not defaults["rho"] > 0:
        P.err("defaults.rho", "must be > 0")

    weights = data.get("weights")
    if weights is not None:
        if not isinstance(weights, dict):
            P.err("weights", "expected a mapping of category id to weight")
            weights = None
        else:
            for k, v in weights.items():
                if k not in cat_ids:
                    P.err(f"weights.{k}", "unknown impact category")
                P.number(v, f"weights.{k}", nonneg=True)

    surrogate = None
    if "surrogate" in data:
        s = P.get(data, "surrogate", "", dict)
        if s is not None:
            s0 = P.number(P.get(s, "s0", "surrogate"), "surrogate.s0", positive=True)
            t0 = P.number(P.get(s, "t0", "surrogate"), "surrogate.t0", positive=True)
            a = P.number(P.get(s, "a", "surrogate"), "surrogate.a", positive=True)
            if s0 is not None and s0 > 1:
                P.err("surrogate.s0", "must be in (0, 1]")
            if None not in (s0, t0, a):
                surrogate = SurrogateSpec(s0, t0, a)

    horizon = P.number(data.get("horizon_years", 1), "horizon_years", positive=True)
    if P.errors:
        raise ScenarioError(P.errors)
    return Scenario(
        name=str(data.get("name", Path(source).stem)),
        graph=graph,
        catalog=catalog,
        insurance=insurance,
        categories=tuple(categories),
        attack_types=tuple(attack_types),
        attackers=tuple(attackers),
        space=space,
        constraints=constraints,
        version=version,
        horizon=horizon,
        defaults=defaults,
        description=str(data.get("description", "")),
        weights=dict(weights) if weights else None,
        surrogate=surrogate,
    )


def _parse_graph(P, data):
    blocks = []
    for i, b in enumerate(P.get(data, "blocks", "", list, default=[])):
        path = f"blocks[{i}]"
        bid = P.get(b, "id", path, str)
        level = P.get(b, "level", path, int)
        if bid is None or level is None:
            continue
        try:
            blocks.append(Block(bid, str(b.get("name", "")), level, bool(b.get("entry", False)),
                                tuple(b.get("tags", ()))))
        except ConfigurationError as exc:
            P.err(path, str(exc))
    if not blocks:
        P.err("blocks", "at least one block is required")
    edges = []
    for i, e in enumerate(P.get(data, "edges", "", list, required=False, default=[])):
        if not (isinstance(e, (list, tuple)) and len(e) == 2 and all(isinstance(x, str) for x in e)):
            P.err(f"edges[{i}]", f"expected [from, to], got {e!r}")
            continue
        edges.append(tuple(e))
    try:
        return SystemGraph(tuple(blocks), tuple(edges))
    except ConfigurationError as exc:
        for problem in str(exc).split("; "):
            P.err("graph", problem)
        return None


def _parse_categories(P, data):
    out = []
    for i, c in enumerate(P.get(data, "impact_categories", "", list, default=[])):
        path = f"impact_categories[{i}]"
        cid = P.get(c, "id", path, str)
        if cid is None:
            continue
        try:
            out.append(ImpactCategory(cid, str(c.get("name", "")), c.get("scope", "global"),
                                      c.get("unit", "euros"), c.get("aggregation", "sum"),
                                      float(c.get("rate", 1.0))))
        except (ConfigurationError, TypeError, ValueError) as exc:
            P.err(path, str(exc))
    if len({c.id for c in out}) != len(out):
        P.err("impact_categories", "category ids must be unique")
    return out


def _parse_controls(P, data):
    controls = []
    for i, c in enumerate(P.get(data, "controls", "", list, required=False, default=[])):
        path = f"controls[{i}]"
        cid = P.get(c, "id", path, str)
        if cid is None:
            continue
        vals = {f: P.number(c.get(f, 0), f"{path}.{f}", nonneg=True) for f in ("icost", "mcost", "alpha", "beta")}
        # keep the control after a bad number (already reported) so key checks elsewhere stay meaningful
        vals = {f: 0.0 if v is None else v for f, v in vals.items()}
        controls.append(Control(cid, str(c.get("name", "")), counters=frozenset(c.get("counters", ())), **vals))
    try:
        return ControlCatalog(tuple(controls))
    except ConfigurationError as exc:
        P.err("controls", str(exc))
        return None


def _check_key(P, key, path, catalog, relevant=None):
    n = len(catalog)
    if not (isinstance(key, str) and len(key) == n and set(key) <= {"0", "1"}):
        P.err(path, f"portfolio key {key!r} must be a {n}-character string of 0/1 over ({', '.join(catalog.ids)})")
        return False
    if relevant is not None:
        for ch, cid in zip(key, catalog.ids):
            if ch == "1" and cid not in relevant:
                P.err(path, f"key {key!r} activates {cid}, which is not a relevant control here")
                return False
    return True


def _space_keys(space, catalog, relevant=None):
    if space is None:
        return []
    keys = []
    for p in space:
        k = catalog.mask_key(p.active, relevant)
        if k not in keys:
            keys.append(k)
    return keys


def _parse_insurance(P, data, catalog, cat_ids):
    out = {}
    for i, ins in enumerate(P.get(data, "insurance", "", list, required=False, default=[])):
        path = f"insurance[{i}]"
        iid = P.get(ins, "id", path, str)
        if iid is None:
            continue
        covers = P.get(ins, "covers", path, dict, required=False, default={}) or {}
        for k, v in covers.items():
            if k not in cat_ids:
                P.err(f"{path}.covers.{k}", "unknown impact category")
            v = P.number(v, f"{path}.covers.{k}")
            if v is not None and not 0 <= v <= 1:
                P.err(f"{path}.covers.{k}", f"covered fraction must be in [0, 1], got {v!r}")
        prices = P.get(ins, "prices", path, dict, required=False, default={}) or {}
        clean = {}
        for k, v in prices.items():
            if catalog is not None and _check_key(P, k, f"{path}.prices.{k}", catalog):
                v = P.number(v, f"{path}.prices.{k}", nonneg=True)
                if v is not None:
                    clean[k] = v
        default = ins.get("default_price")
        if default is not None:
            default = P.number(default, f"{path}.default_price", nonneg=True)
        if iid in out:
            P.err(f"{path}.id", f"duplicate insurance product {iid!r}")
        try:
            out[iid] = InsuranceProduct(iid, {k: float(v) for k, v in covers.items() if _is_number(v)},
                                        clean, default)
        except ConfigurationError as exc:
            P.err(path, str(exc))
    return out


def _parse_space(P, data, catalog, insurance):
    dec = P.get(data, "decision", "", dict, required=False, default={}) or {}
    if catalog is None:
        return None
    implemented = dec.get("implemented", []) or []
    enforced = dec.get("enforced", []) or []
    options = dec.get("insurance_options", [None]) or [None]
    ok = True
    for name, ids in (("implemented", implemented), ("enforced", enforced)):
        for cid in ids:
            if cid not in catalog.ids:
                P.err(f"decision.{name}", f"unknown control {cid!r}")
                ok = False
    for opt in options:
        if opt is not None and opt not in insurance:
            P.err("decision.insurance_options", f"unknown insurance product {opt!r}")
            ok = False
    if not ok:
        return None
    try:
        space = PortfolioSpace(catalog, frozenset(implemented), frozenset(enforced), tuple(options))
    except ConfigurationError as exc:
        P.err("decision", str(exc))
        return None
    for iid in sorted(o for o in options if o is not None):
        ins = insurance[iid]
        if ins.default_price is None:
            for key in _space_keys(space, catalog):
                if key not in ins.price_table:
                    i = list(insurance).index(iid)
                    P.err(f"insurance[{i}].prices", f"no price for control subset {key!r}")
    return space


def _parse_constraints(P, data, catalog, insurance):
    c = P.get(data, "constraints", "", dict, required=False, default={}) or {}
    vals = {}
    for src, dst in (("budget", "total_budget"), ("implementation_budget", "implementation_budget"),
                     ("maintenance_budget", "maintenance_budget")):
        if c.get(src) is not None:
            vals[dst] = P.number(c[src], f"constraints.{src}", nonneg=True)
    req = c.get("required_insurance", []) or []
    for iid in req:
        if iid not in insurance:
            P.err("constraints.required_insurance", f"unknown insurance product {iid!r}")
    enforced = c.get("enforced_controls", []) or []
    for cid in enforced:
        if catalog is not None and cid not in catalog.ids:
            P.err("constraints.enforced_controls", f"unknown control {cid!r}")
    try:
        return Constraints(required_insurance=frozenset(req), enforced_controls=frozenset(enforced), **vals)
    except (ConfigurationError, TypeError) as exc:
        P.err("constraints", str(exc))
        return None


@dataclass
class _Context:
    P: _Parser
    graph: Optional[SystemGraph]
    catalog: Optional[ControlCatalog]
    space: Optional[PortfolioSpace]
    categories: list


def _relevant(ctx, spec, path):
    rel = ctx.P.get(spec, "relevant_controls", path, list, required=False, default=None)
    if rel is None:
        return tuple(ctx.catalog.ids) if ctx.catalog is not None else ()
    for cid in rel:
        if ctx.catalog is not None and cid not in ctx.catalog.ids:
            ctx.P.err(f"{path}.relevant_controls", f"unknown control {cid!r}")
    return tuple(rel)


def _keyed(ctx, table, path, relevant, parse_value, what):
    """Parse ``{key: value}`` with key checks and completeness over the decision space."""
    P = ctx.P
    if not isinstance(table, dict):
        P.err(path, "expected a mapping of portfolio keys")
        return None
    entries = {}
    for key, value in table.items():
        key = str(key)
        if ctx.catalog is None or not _check_key(P, key, f"{path}.{key}", ctx.catalog, relevant):
            continue
        v = parse_value(value, f"{path}.{key}")
        if v is not None:
            entries[key] = v
    if ctx.catalog is not None:
        for key in _space_keys(ctx.space, ctx.catalog, relevant):
            if key not in table:
                P.err(path, f"no {what} entry for control subset {key!r}")
    return PortfolioTable(relevant, entries)


def _explicit_table(ctx, value, path, parse_value, what, default_relevant):
    """Either a bare mapping of keys, or ``{relevant_controls: [...], table: {...}}``; scalars are constant."""
    if isinstance(value, dict) and "table" in value:
        rel = _relevant(ctx, value, path)
        return _keyed(ctx, value["table"], f"{path}.table", rel, parse_value, what)
    if isinstance(value, dict):
        return _keyed(ctx, value, path, default_relevant, parse_value, what)
    return parse_value(value, path)


def _parse_pnp(ctx, value, path, combos):
    P, g = ctx.P, ctx.graph
    if not isinstance(value, dict):
        P.err(path, "expected a mapping of block ids and edges")
        return None
    needed = {b for c in combos for b in c}
    entry, edges = {}, {}
    for k, v in value.items():
        if "->" in str(k):
            src, _, dst = str(k).partition("->")
            if g is not None and (src, dst) not in g.edges:
                P.err(f"{path}.{k}", "edge not declared in the graph")
                continue
            d = P.dist(v, f"{path}.{k}", Beta)
            if d is not None:
                edges[(src, dst)] = d
        else:
            if g is not None and k not in g.ids:
                P.err(f"{path}.{k}", "unknown block")
                continue
            d = P.dist(v, f"{path}.{k}", Beta)
            if d is not None:
                entry[k] = d
    for b in sorted(needed - set(value)):
        P.err(path, f"no entry PNP for block {b!r}")
    if g is not None:
        for src, dst in g.edges:
            if f"{src}->{dst}" not in value:
                P.err(path, f"no PNP for edge {src}->{dst}")
    return Pnp(entry, edges)


def _parse_impacts(ctx, value, path):
    P = ctx.P
    if not isinstance(value, dict):
        P.err(path, "expected a mapping of impact categories")
        return None
    cats = {c.id: c for c in ctx.categories}
    out = ImpactEntry()
    for cid, spec in value.items():
        cpath = f"{path}.{cid}"
        if cid not in cats:
            P.err(cpath, "unknown impact category")
            continue
        if cats[cid].scope == "global":
            if isinstance(spec, dict) and len(spec) != 1 or isinstance(spec, dict) and \
                    ctx.graph is not None and set(spec) <= set(ctx.graph.ids):
                P.err(cpath, "global category takes one distribution, not per-block entries")
                continue
            d = P.dist(spec, cpath, Gamma)
            if d is not None:
                out[cid] = d
        else:
            if not isinstance(spec, dict) or (ctx.graph is not None and not set(spec) <= set(ctx.graph.ids)):
                P.err(cpath, "separable category needs a {block id: distribution} mapping")
                continue
            blocks = {}
            for b, d in spec.items():
                d = P.dist(d, f"{cpath}.{b}", Gamma)
                if d is not None:
                    blocks[b] = d
            if ctx.graph is not None:
                for b in ctx.graph.ids:
                    if b not in spec:
                        P.err(cpath, f"no distribution for block {b!r}")
            out[cid] = blocks
    return out


def _parse_combos(ctx, value, path):
    P = ctx.P
    if not isinstance(value, list) or not value:
        P.err(path, "expected a non-empty list of entry-block lists")
        return None
    combos = []
    for i, c in enumerate(value):
        if not isinstance(c, list) or not c or not all(isinstance(b, str) for b in c):
            P.err(f"{path}[{i}]", f"expected a list of block ids, got {c!r}")
            return None
        for b in c:
            if ctx.graph is not None:
                if b not in ctx.graph.ids:
                    P.err(f"{path}[{i}]", f"unknown block {b!r}")
                    return None
                if not ctx.graph.blocks[ctx.graph.index(b)].entry_capable:
                    P.err(f"{path}[{i}]", f"block {b!r} is not entry-capable")
                    return None
        combos.append(tuple(c))
    if len({frozenset(c) for c in combos}) != len(combos):
        P.err(path, "entry combos must be distinct")
        return None
    return tuple(combos)


def _parse_budget(ctx, spec, path):
    b = spec.get("transit_budget")
    if b is None:
        return None
    P = ctx.P
    if not isinstance(b, dict):
        P.err(f"{path}.transit_budget", "expected a mapping")
        return None
    mode = b.get("mode", "global")
    dist = P.dist(b["dist"], f"{path}.transit_budget.dist", Poisson) if "dist" in b else None
    edges = {}
    for k, v in (b.get("edges") or {}).items():
        src, _, dst = str(k).partition("->")
        d = P.dist(v, f"{path}.transit_budget.edges.{k}", Poisson)
        if d is not None:
            edges[(src, dst)] = d
    try:
        return TransitBudget(mode, dist, edges)
    except ConfigurationError as exc:
        P.err(f"{path}.transit_budget", str(exc))
        return None


def _parse_attack_tables(ctx, spec, path, combos):
    rel = _relevant(ctx, spec, path)
    pnp = _keyed(ctx, ctx.P.get(spec, "pnp", path, default={}), f"{path}.pnp", rel,
                 lambda v, p: _parse_pnp(ctx, v, p, combos), "PNP")
    impacts = _keyed(ctx, ctx.P.get(spec, "impacts", path, default={}), f"{path}.impacts", rel,
                     lambda v, p: _parse_impacts(ctx, v, p), "impact")
    return rel, pnp, impacts


def _parse_untargeted(ctx, spec, path):
    P = ctx.P
    aid = P.get(spec, "id", path, str)
    if aid is None:
        return None
    arrival = P.dist(P.get(spec, "arrival", path), f"{path}.arrival", Poisson)
    ent = P.get(spec, "entrance", path, dict, default={}) or {}
    combos = _parse_combos(ctx, ent.get("combos"), f"{path}.entrance.combos")
    entrance = None
    if combos is not None:
        if "generic" in ent:
            g = P.dist(ent["generic"], f"{path}.entrance.generic", Beta)
            if g is not None:
                try:
                    entrance = EntranceModel(combos, generic=g)
                except ConfigurationError as exc:
                    P.err(f"{path}.entrance", str(exc))
        else:
            w = P.dist(P.get(ent, "weights", f"{path}.entrance"), f"{path}.entrance.weights")
            if w is not None:
                if len(w) != len(combos):
                    P.err(f"{path}.entrance.weights",
                          f"{len(w)} weights for {len(combos)} declared combos "
                          f"({', '.join(_combo_label(c) for c in combos)})")
                else:
                    entrance = EntranceModel(combos, weights=w)
    _, pnp, impacts = _parse_attack_tables(ctx, spec, path, combos or ())
    budget = _parse_budget(ctx, spec, path)
    if None in (arrival, entrance, pnp, impacts):
        return None
    return AttackType(aid, pnp, impacts, arrival=arrival, entrance=entrance, budget=budget,
                      name=str(spec.get("name", "")))


def _combo_keyed(ctx, value, path, combos, family):
    """``{"P": [a, b], "P+L": [a, b]}`` -> tuple of distributions aligned with ``combos``."""
    P = ctx.P
    if not isinstance(value, dict):
        P.err(path, "expected a mapping keyed by entry combo (e.g. P+L)")
        return None
    labels = [_combo_label(c) for c in combos]
    for k in value:
        if k not in labels:
            P.err(f"{path}.{k}", f"combo {k!r} is not declared (declared: {', '.join(labels)})")
    out = []
    for lab in labels:
        if lab not in value:
            P.err(path, f"missing combo {lab!r}")
            out.append(None)
        else:
            out.append(P.dist(value[lab], f"{path}.{lab}", family))
    return None if None in out else tuple(out)


def _parse_objective(ctx, kind_spec, gain, path, relevant):
    P = ctx.P
    kind = kind_spec.get("kind") if isinstance(kind_spec, dict) else None
    if not isinstance(gain, dict):
        P.err(path, "expected a mapping")
        return None
    if kind == "notoriety":
        vsl = P.number(kind_spec.get("vsl"), "objective.vsl", positive=True)
        fin = P.dist(P.get(gain, "financial", path), f"{path}.financial", Gamma)
        fat = P.dist(P.get(gain, "fatalities", path), f"{path}.fatalities", Poisson)
        omega = None
        if "omega" in gain:
            omega = _explicit_table(ctx, gain["omega"], f"{path}.omega",
                                    lambda v, p: P.number(v, p, positive=True), "omega", relevant)
        if None in (vsl, fin, fat):
            return None
        return NotorietyObjective(fin, fat, vsl, omega)
    if kind == "sensitive_info":
        rv = P.dist(kind_spec.get("record_value"), "objective.record_value", Uniform)
        mr = _explicit_table(ctx, P.get(gain, "max_records", path), f"{path}.max_records",
                             lambda v, p: P.number(v, p, nonneg=True), "max_records", relevant)
        if rv is None or mr is None:
            return None
        return SensitiveInfoObjective(rv, mr)
    P.err(path, f"attacker objective kind must be notoriety or sensitive_info, got {kind!r}")
    return None


def _parse_attacker(ctx, spec, path, untargeted_ids):
    P = ctx.P
    aid = P.get(spec, "id", path, str)
    if aid is None:
        return None
    arrival = P.dist(P.get(spec, "arrival", path), f"{path}.arrival", Poisson)
    hprone = P.dist(P.get(spec, "risk_proneness", path), f"{path}.risk_proneness", Uniform)
    cdet = P.dist(P.get(spec, "detection_cost", path), f"{path}.detection_cost", Uniform)
    objective_spec = P.get(spec, "objective", path, dict, default={})
    actions, types = [], {}
    for i, at in enumerate(P.get(spec, "attack_types", path, list, default=[])):
        apath = f"{path}.attack_types[{i}]"
        tid = P.get(at, "id", apath, str)
        if tid is None:
            continue
        if tid in untargeted_ids or tid in types:
            P.err(f"{apath}.id", f"duplicate attack type {tid!r}")
        combos = _parse_combos(ctx, at.get("combos"), f"{apath}.combos")
        rel, pnp, impacts = _parse_attack_tables(ctx, at, apath, combos or ())
        budget = _parse_budget(ctx, at, apath)
        untargeted_ids.add(tid)
        if combos is None:
            continue
        det = _combo_keyed(ctx, P.get(at, "detection", apath), f"{apath}.detection", combos, Beta)
        success = _keyed(ctx, P.get(at, "success", apath, default={}), f"{apath}.success", rel,
                         lambda v, p: _combo_keyed(ctx, v, p, combos, Beta), "success")
        objective = _parse_objective(ctx, objective_spec, P.get(at, "gain", apath, default={}),
                                     f"{apath}.gain", rel)
        if None in (det, success, objective, pnp, impacts):
            continue
        types[tid] = AttackType(tid, pnp, impacts, combos=combos, budget=budget,
                                name=str(at.get("name", "")))
        for k, combo in enumerate(combos):
            table = PortfolioTable(rel, {key: v[k] for key, v in success.entries.items()})
            actions.append(AttackerAction(SELF, tid, det[k], table, objective, combo))
    for i, comp in enumerate(P.get(spec, "competitors", path, list, required=False, default=[])):
        cpath = f"{path}.competitors[{i}]"
        system = P.get(comp, "system", cpath, str)
        attack = P.get(comp, "attack", cpath, str)
        det = P.dist(P.get(comp, "detection", cpath), f"{cpath}.detection", Beta)
        succ = P.dist(P.get(comp, "success", cpath), f"{cpath}.success", Beta)
        objective = _parse_objective(ctx, objective_spec, P.get(comp, "gain", cpath, default={}),
                                     f"{cpath}.gain", ())
        if system == SELF:
            P.err(f"{cpath}.system", f"{SELF!r} is reserved for the defended system")
            continue
        if None in (system, attack, det, succ, objective):
            continue
        actions.append(AttackerAction(system, attack, det, succ, objective))
    if None in (arrival, hprone, cdet) or not actions:
        if not actions:
            P.err(path, "attacker has no actions")
        return None
    try:
        return AttackerSpec(aid, tuple(actions), arrival, hprone, cdet, types, str(spec.get("name", "")))
    except ConfigurationError as exc:
        P.err(path, str(exc))
        return None


def _yaml_error(exc, source):
    mark = getattr(exc, "problem_mark", None)
    where = f"{source}:{mark.line + 1}:{mark.column + 1}" if mark is not None else source
    problem = getattr(exc, "problem", None) or str(exc)
    return ScenarioError([f"{where}: YAML parse error: {problem}"])


def load_scenario(path):
    """Load and validate a scenario file; raises ScenarioError listing every problem."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(f"{path}: {exc.strerror or exc}") from exc
    return loads_scenario(text, str(path))


def loads_scenario(text, source="<string>"):
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise _yaml_error(exc, source) from None
    return parse_scenario(data, source)


def builtin_scenario(name):
    if name != "ads":
        raise ConfigurationError(f"unknown builtin scenario {name!r} (available: ads)")
    text = resources.files("cyrisk").joinpath("data", "ads.yaml").read_text(encoding="utf-8")
    return loads_scenario(text, "builtin:ads")


def builtin_ads_scenario():
    """The automated-driving-system case study with every table value embedded."""
    return builtin_scenario("ads")


# --------------------------------------------------------------------------- serialisation


def _dist_out(d, family=None):
    if family is not None and isinstance(d, family):
        if isinstance(d, Beta):
            return [d.a, d.b]
        if isinstance(d, Gamma):
            return [d.shape, d.scale]
        if isinstance(d, Poisson):
            return d.rate
    return d.to_dict()


def _table_out(table, value_out, default_relevant, catalog):
    body = {k: value_out(v) for k, v in table.entries.items()}
    if tuple(table.relevant) == tuple(default_relevant):
        return body
    return {"relevant_controls": list(table.relevant), "table": body}


def _attack_tables_out(atype, catalog):
    def pnp_out(p):
        out = {b: _dist_out(d, Beta) for b, d in p.entry.items()}
        out.update({f"{s}->{t}": _dist_out(d, Beta) for (s, t), d in p.edges.items()})
        return out

    def impact_out(entry):
        return {c: ({b: _dist_out(d, Gamma) for b, d in v.items()} if isinstance(v, dict) else _dist_out(v, Gamma))
                for c, v in entry.items()}

    out = {}
    if atype.name:
        out["name"] = atype.name
    out["relevant_controls"] = list(atype.pnp.relevant)
    return out, {k: pnp_out(v) for k, v in atype.pnp.entries.items()}, \
        {k: impact_out(v) for k, v in atype.impacts.entries.items()}


def _budget_out(b):
    out = {"mode": b.mode}
    if b.dist is not None:
        out["dist"] = _dist_out(b.dist)
    if b.edge_dists:
        out["edges"] = {f"{s}->{t}": _dist_out(d) for (s, t), d in b.edge_dists.items()}
    return out


def _gain_out(obj, relevant, catalog):
    if isinstance(obj, NotorietyObjective):
        out = {"financial": _dist_out(obj.financial, Gamma), "fatalities": _dist_out(obj.fatalities, Poisson)}
        if obj.omega is not None:
            out["omega"] = _table_out(obj.omega, lambda v: v, relevant, catalog)
        return out
    mr = obj.max_records
    return {"max_records": _table_out(mr, lambda v: v, relevant, catalog) if isinstance(mr, PortfolioTable) else mr}


def scenario_to_dict(s: Scenario):
    """The scenario in file layout (inverse of :func:`parse_scenario`)."""
    cat = s.catalog
    out = {"version": s.version, "name": s.name}
    if s.description:
        out["description"] = s.description
    out["horizon_years"] = s.horizon
    out["defaults"] = dict(s.defaults)
    out["blocks"] = []
    for b in s.graph.blocks:
        d = {"id": b.id}
        if b.name:
            d["name"] = b.name
        d.update(level=b.level, entry=b.entry_capable)
        if b.tags:
            d["tags"] = list(b.tags)
        out["blocks"].append(d)
    out["edges"] = [list(e) for e in s.graph.edges]
    out["impact_categories"] = []
    for c in s.categories:
        d = {"id": c.id}
        if c.name:
            d["name"] = c.name
        d.update(scope=c.scope, unit=c.unit, aggregation=c.aggregation)
        if c.unit == "hours" or c.rate != 1.0:
            d["rate"] = c.rate
        out["impact_categories"].append(d)
    if s.weights:
        out["weights"] = dict(s.weights)
    out["controls"] = []
    for c in cat:
        d = {"id": c.id}
        if c.name:
            d["name"] = c.name
        d.update(icost=c.icost, mcost=c.mcost)
        if c.alpha or c.beta:
            d.update(alpha=c.alpha, beta=c.beta)
        d["counters"] = [j for j in _all_type_ids(s) if j in c.counters]
        out["controls"].append(d)
    out["insurance"] = []
    for ins in s.insurance.values():
        d = {"id": ins.id, "covers": dict(ins.covered_fraction), "prices": dict(ins.price_table)}
        if ins.default_price is not None:
            d["default_price"] = ins.default_price
        out["insurance"].append(d)
    out["decision"] = {"implemented": sorted(s.space.implemented), "enforced": sorted(s.space.enforced),
                       "insurance_options": list(s.space.insurance_options)}
    con = {}
    c = s.constraints
    if c.total_budget is not None:
        con["budget"] = c.total_budget
    if c.implementation_budget is not None:
        con["implementation_budget"] = c.implementation_budget
    if c.maintenance_budget is not None:
        con["maintenance_budget"] = c.maintenance_budget
    if c.required_insurance:
        con["required_insurance"] = sorted(c.required_insurance)
    if c.enforced_controls:
        con["enforced_controls"] = sorted(c.enforced_controls)
    out["constraints"] = con
    if s.surrogate is not None:
        out["surrogate"] = {"s0": s.surrogate.s0, "t0": s.surrogate.t0, "a": s.surrogate.a}

    out["attack_types"] = []
    for a in s.attack_types:
        head, pnp, impacts = _attack_tables_out(a, cat)
        d = {"id": a.id, **head, "arrival": _dist_out(a.arrival, Poisson)}
        ent = {"combos": [list(x) for x in a.entrance.combos]}
        if a.entrance.weights is not None:
            ent["weights"] = _dist_out(a.entrance.weights)
        else:
            ent["generic"] = _dist_out(a.entrance.generic, Beta)
        d.update(entrance=ent, pnp=pnp, impacts=impacts)
        if a.budget is not None:
            d["transit_budget"] = _budget_out(a.budget)
        out["attack_types"].append(d)

    out["attackers"] = [_attacker_out(att, cat) for att in s.attackers]
    return out


def _all_type_ids(s):
    ids = [a.id for a in s.attack_types]
    for att in s.attackers:
        ids.extend(att.attack_types)
    return ids


def _attacker_out(att, cat):
    d = {"id": att.id}
    if att.name:
        d["name"] = att.name
    d.update(arrival=_dist_out(att.arrival, Poisson), risk_proneness=_dist_out(att.risk_proneness),
             detection_cost=_dist_out(att.detection_cost))
    first = att.actions[0].objective
    if isinstance(first, NotorietyObjective):
        d["objective"] = {"kind": "notoriety", "vsl": first.vsl}
    else:
        d["objective"] = {"kind": "sensitive_info", "record_value": _dist_out(first.record_value)}
    types = []
    for tid, at in att.attack_types.items():
        acts = [a for a in att.actions if a.system == SELF and a.attack == tid]
        head, pnp, impacts = _attack_tables_out(at, cat)
        rel = head["relevant_controls"]
        t = {"id": tid, **head}
        t["combos"] = [list(a.combo) for a in acts]
        t["detection"] = {_combo_label(a.combo): _dist_out(a.detection, Beta) for a in acts}
        keys = list(acts[0].success.entries)
        t["success"] = {k: {_combo_label(a.combo): _dist_out(a.success.entries[k], Beta) for a in acts}
                        for k in keys}
        t["gain"] = _gain_out(acts[0].objective, tuple(rel), cat)
        t.update(pnp=pnp, impacts=impacts)
        if at.budget is not None:
            t["transit_budget"] = _budget_out(at.budget)
        types.append(t)
    d["attack_types"] = types
    comps = []
    for a in att.actions:
        if a.system == SELF:
            continue
        comps.append({"system": a.system, "attack": a.attack, "detection": _dist_out(a.detection, Beta),
                      "success": _dist_out(a.success, Beta), "gain": _gain_out(a.objective, (), cat)})
    if comps:
        d["competitors"] = comps
    return d


def dump_scenario(s: Scenario, path=None):
    """YAML text of the scenario; also written to ``path`` when given."""
    text = yaml.safe_dump(scenario_to_dict(s), sort_keys=False, allow_unicode=True, width=120)
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text
