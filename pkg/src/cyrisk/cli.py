"""``cyrisk`` command line: assess, manage, targeting, sensitivity, reproduce.

Exit codes: 0 success, 1 runtime error (or failed reproduction criteria),
2 configuration / usage error.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import __version__
from .errors import ConfigurationError
from .export import FORMATS, ResultBundle, export_results, loss_curve, targeting_entry
from .model import is_feasible, portfolio_cost
from .risk.campaign import estimate_all_targeting, simulate_campaign
from .risk.decision import default_rho_grid, optimize, sensitivity_rho, utility_from_losses
from .risk.lossfit import fit_loss
from .risk.metrics import risk_metrics
from .scenario import builtin_scenario, load_scenario


def _common(p):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--scenario", metavar="PATH", help="scenario YAML file")
    src.add_argument("--builtin", choices=["ads"], help="bundled scenario")
    p.add_argument("--portfolio", metavar="KEY", help='portfolio key, e.g. "011+A"')
    p.add_argument("--M", type=int, help="Monte Carlo iterations (annual losses)")
    p.add_argument("--V", type=int, help="draws for attacker targeting estimates")
    p.add_argument("--rho", type=float, help="CARA risk-aversion coefficient")
    p.add_argument("--level", type=float, help="VaR / CVaR level")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--workers", type=int, default=1, help="worker processes")
    p.add_argument("--out", metavar="DIR", help="write result files here")
    p.add_argument("--format", choices=FORMATS, default="csv", help="output format")


def build_parser():
    parser = argparse.ArgumentParser(prog="cyrisk", description="Cyber risk assessment and management.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("assess", help="loss distribution and risk metrics for one portfolio")
    _common(p)
    p.add_argument("--components", type=int, default=1, help="gamma components for the loss fit (1-3)")

    p = sub.add_parser("manage", help="rank feasible portfolios by expected utility")
    _common(p)
    p.add_argument("--method", choices=["auto", "exhaustive", "annealing"], default="auto")
    p.add_argument("--evaluator", choices=["simulated", "surrogate"], default="simulated")
    p.add_argument("--steps", type=int, help="annealing proposals")

    p = sub.add_parser("targeting", help="attacker targeting probabilities and entry Dirichlet parameters")
    _common(p)
    p.add_argument("--attacker", help="only this attacker")

    p = sub.add_parser("sensitivity", help="rankings over a grid of risk-aversion values")
    _common(p)
    p.add_argument("--grid", type=float, nargs="+", help="rho values (default: 1e-7..1e-3, 4 per decade)")

    p = sub.add_parser("reproduce", help="full case-study run with a pass/fail table")
    _common(p)
    p.add_argument("--seeds", type=int, default=5, help="seeds for the ranking criteria")
    return parser


class _Cfg:
    def __init__(self, args, scenario):
        d = scenario.defaults
        self.args = args
        self.M = int(args.M if args.M is not None else d["M"])
        self.V = int(args.V if args.V is not None else d["V"])
        self.rho = float(args.rho if args.rho is not None else d["rho"])
        self.level = float(args.level if args.level is not None else d["level"])
        self.seed = int(args.seed if args.seed is not None else d["seed"])
        if self.M < 1 or self.V < 1:
            raise ConfigurationError("--M and --V must be >= 1")
        if not 0 < self.level < 1:
            raise ConfigurationError("--level must be in (0, 1)")
        if not self.rho > 0:
            raise ConfigurationError("--rho must be > 0")
        if args.workers < 1:
            raise ConfigurationError("--workers must be >= 1")

    def metadata(self, scenario, command):
        return {"command": command, "scenario": scenario.name, "scenario_version": scenario.version,
                "package_version": __version__, "seed": self.seed, "M": self.M, "V": self.V,
                "rho": self.rho, "level": self.level}


def _portfolio(args, scenario):
    if args.portfolio:
        return scenario.portfolio(args.portfolio)
    for p in scenario.space:
        if is_feasible(p, scenario.constraints, scenario.catalog, scenario.insurance):
            return p
    raise ConfigurationError("no feasible portfolio; pass --portfolio")


def _write(bundle, cfg, out):
    if cfg.args.out:
        for path in export_results(bundle, cfg.args.format, cfg.args.out):
            print(f"wrote {path}", file=out)


def cmd_assess(cfg, scenario, out):
    p = _portfolio(cfg.args, scenario)
    res = simulate_campaign(scenario, p, cfg.M, cfg.seed, V=cfg.V, workers=cfg.args.workers)
    model = fit_loss(res.sample, cfg.args.components) if cfg.M >= 100 else None
    rep = risk_metrics(res.sample, model, cfg.level, res.block_frequencies(scenario.graph), res.source_means())
    cost = portfolio_cost(p, scenario.catalog, scenario.insurance)
    pct = f"{100 * cfg.level:g}%"
    print(f"portfolio {p.key}  cost {cost:,.2f} EUR", file=out)
    print(f"zero-loss probability  {rep.zero_prob[0]:.4f}  (fit {rep.zero_prob[1]:.4f})", file=out)
    print(f"expected loss          {rep.expected_loss[0]:,.2f} +- {rep.expected_loss_se:,.2f} EUR", file=out)
    print(f"{pct} VaR             {rep.var[0]:,.2f} +- {rep.var_se:,.2f} EUR  (fit {rep.var[1]:,.2f})", file=out)
    print(f"{pct} CVaR            {rep.cvar[0]:,.2f} +- {rep.cvar_se:,.2f} EUR  (fit {rep.cvar[1]:,.2f})", file=out)
    if model is not None:
        comps = ", ".join(f"w={w:.3f} shape={a:.3f} scale={t:,.1f}" for w, a, t in model.components)
        print(f"positive part: {len(model.components)} gamma component(s): {comps}", file=out)
    print("loss by source: " + ", ".join(f"{k} {v:,.0f}" for k, v in rep.by_source.items()), file=out)
    print("block compromise frequency (per year): "
          + ", ".join(f"{k} {v:.4f}" for k, v in rep.block_frequencies.items()), file=out)
    bundle = ResultBundle(reports=[rep.as_dict()], loss_curves={p.key: loss_curve(res.losses, model)},
                          targeting=[targeting_entry(a, p.key, e) for a, e in res.targeting.items()],
                          metadata=cfg.metadata(scenario, "assess"))
    ev = utility_from_losses(p.key, res.losses, cost, cfg.rho)
    bundle.ranking = [ev.as_dict()]
    _write(bundle, cfg, out)
    return 0


def cmd_manage(cfg, scenario, out):
    a = cfg.args
    res = optimize(scenario, evaluator=a.evaluator, rho=cfg.rho, M=cfg.M, seed=cfg.seed, V=cfg.V,
                   method=a.method, n_steps=a.steps, workers=a.workers)
    n = res.n_feasible if res.n_feasible is not None else len(res.ranking)
    print(f"mode {res.mode}; {n} feasible portfolio(s) evaluated; rho {cfg.rho:g}", file=out)
    print(f"{'rank':>4}  {'portfolio':<10} {'expected loss':>15} {'cost':>10} {'expected utility':>18}", file=out)
    for i, e in enumerate(res.ranking, 1):
        print(f"{i:>4}  {e.portfolio:<10} {e.expected_loss:>15,.2f} {e.cost:>10,.2f} {e.expected_utility:>18.6g}",
              file=out)
    bundle = ResultBundle(ranking=[e.as_dict() for e in res.ranking], metadata=cfg.metadata(scenario, "manage"))
    bundle.metadata["mode"] = res.mode
    _write(bundle, cfg, out)
    return 0


def cmd_targeting(cfg, scenario, out):
    if not scenario.attackers:
        raise ConfigurationError(f"scenario {scenario.name!r} has no attackers")
    if cfg.args.attacker:
        scenario.attacker(cfg.args.attacker)
    ports = [_portfolio(cfg.args, scenario)] if cfg.args.portfolio else list(scenario.space)
    bundle = ResultBundle(metadata=cfg.metadata(scenario, "targeting"))
    seen = set()
    for p in ports:
        if p.control_key in seen:
            continue
        seen.add(p.control_key)
        for aid, est in estimate_all_targeting(scenario, p, cfg.V, cfg.seed).items():
            if cfg.args.attacker and aid != cfg.args.attacker:
                continue
            print(f"{aid} @ controls {p.control_key}", file=out)
            for (sys_, att), t in zip(est.targets, est.tau):
                print(f"  tau {sys_ + (':' + att if att else ''):<20} {t:.4f}", file=out)
            for att, g in est.gamma.items():
                combos = ", ".join("+".join(c) for c in est.combos[att])
                print(f"  gamma {att} ({combos}) = {np.array2string(g, separator=', ')}", file=out)
            bundle.targeting.append(targeting_entry(aid, p.control_key, est))
    _write(bundle, cfg, out)
    return 0


def cmd_sensitivity(cfg, scenario, out):
    grid = cfg.args.grid or default_rho_grid()
    res = sensitivity_rho(scenario, grid, M=cfg.M, seed=cfg.seed, V=cfg.V, workers=cfg.args.workers)
    for rho, keys in zip(res.grid, res.rankings):
        print(f"rho {rho:<10.3g} " + " > ".join(keys[:5]), file=out)
    print(f"top-1 invariant: {res.top1_invariant}; first ranking change: "
          f"{'none' if res.first_change is None else f'{res.first_change:.3g}'}", file=out)
    for rho, pos in res.swaps:
        print(f"  at rho {rho:.3g} ranks {pos} changed", file=out)
    bundle = ResultBundle(ranking=[{"rho": r, "rank": i, **e.as_dict()} for r, evs in zip(res.grid, res.evaluations)
                                   for i, e in enumerate(evs, 1)],
                          metadata=cfg.metadata(scenario, "sensitivity"))
    _write(bundle, cfg, out)
    return 0


def cmd_reproduce(cfg, scenario, out):
    from .reproduce import run_reproduction
    rep = run_reproduction(scenario, cfg.M, cfg.V, cfg.seed, cfg.args.workers, cfg.args.seeds,
                           log=lambda m: print(m, file=out))
    print("acceptance criteria:", file=out)
    for c in rep.criteria:
        print(c.line(), file=out)
    if rep.notes:
        print("interpretation notes (initial-configuration risk outside its band):", file=out)
        for n in rep.notes:
            print(f"  - {n}", file=out)
    rep.bundle.metadata.update(cfg.metadata(scenario, "reproduce"))
    _write(rep.bundle, cfg, out)
    failed = [c for c in rep.criteria if c.status == "fail"]
    if failed:
        print(f"{len(failed)} criterion/criteria failed: {', '.join(str(c.id) for c in failed)}", file=out)
        return 1
    return 0


COMMANDS = {"assess": cmd_assess, "manage": cmd_manage, "targeting": cmd_targeting,
            "sensitivity": cmd_sensitivity, "reproduce": cmd_reproduce}


def main(argv=None, out=None):
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        scenario = builtin_scenario(args.builtin) if args.builtin else load_scenario(args.scenario)
        cfg = _Cfg(args, scenario)
        print(f"scenario {scenario.name} (format version {scenario.version}); seed {cfg.seed}", file=out)
        return COMMANDS[args.command](cfg, scenario, out)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
