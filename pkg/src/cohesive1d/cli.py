"""Command-line front end: scenario dispatch and CSV/JSON emission.

Exit codes: 0 success, 2 configuration error, 3 solver non-convergence,
4 oracle gap above tolerance in ``verify``.
"""
from __future__ import annotations

import argparse
import logging
import math
import os
import sys
import warnings

import numpy as np

from . import __version__
from . import cohesive_law as cl
from .config import DEFAULTS, RunConfig, build_model, config_hash, load_config
from .errors import ConfigError, FullCrackError, NonConvergenceWarning
from .io import write_csv, write_json
from .model import FamilyA, FamilyB
from .table import default_s_grid, tabulate_law

log = logging.getLogger("cohesive1d")

EXIT_OK, EXIT_CONFIG, EXIT_NONCONV, EXIT_ORACLE = 0, 2, 3, 4
PRESETS = ("fig1", "fig2", "fig3", "fig4", "fig5", "fig6")


class _Ctx:
    def __init__(self, cfg: RunConfig | None, out: str, threads: int, seed: int):
        self.cfg = cfg
        self.out = out
        self.threads = threads
        self.seed = seed
        self.meta = {"config_hash": cfg.hash if cfg else config_hash(""), "seed": seed}

    def section(self, name):
        if self.cfg is not None:
            return self.cfg.sections[name]
        return dict(DEFAULTS.get(name, {}))

    def model(self):
        if self.cfg is None:
            return FamilyA(1.0)
        return build_model(self.cfg.model)

    def law(self, model, s_max=None, sprime=None):
        blk = self.section("law")
        s_max = max(float(blk["s_max"]), s_max or 0.0)
        sp = sorted(float(x) for x in (blk["sprime"] if sprime is None else sprime))
        return tabulate_law(model, default_s_grid(s_max, int(blk["n_s"])), sp, self.threads)

    def path(self, name):
        return os.path.join(self.out, name)

    def csv(self, name, cols, **extra):
        return write_csv(self.path(name), cols, {**self.meta, **extra})

    def json(self, name, payload):
        if self.section("output").get("json", True):
            write_json(self.path(name), payload, self.meta)


# --------------------------------------------------------------------------
# subcommands


def cmd_law(ctx: _Ctx) -> int:
    model = ctx.model()
    law = ctx.law(model)
    cols = {"s": law.s_grid, "g0": law.g0_table, "m": law.m_table}
    for j, sp in enumerate(law.sprime_grid):
        cols[f"g_sprime_{sp:g}"] = law.g_table[:, j]
    ctx.csv("law.csv", cols, model=model.describe())
    ctx.json("law.json", {"law": law.describe()})
    return EXIT_OK


def _profile_columns(model, s, s_prime, window):
    prof = cl.profile_alpha_beta(model, s, window_T=window, s_prime=s_prime)
    t, a, b = prof.alphabeta_samples
    return prof, {"t": t, "alpha": a, "beta": b}


def cmd_profiles(ctx: _Ctx) -> int:
    model = ctx.model()
    p = ctx.section("profiles")
    summary = []
    for k, s in enumerate(p["s"]):
        try:
            prof, cols = _profile_columns(model, float(s), float(p["s_prime"]), float(p["window"]))
        except FullCrackError:
            summary.append({"s": s, "full_crack": True})
            continue
        ctx.csv(f"profile_{k}.csv", cols, s=s, s_prime=p["s_prime"])
        tg, gam = prof.gamma_samples
        ctx.csv(f"gamma_{k}.csv", {"t": tg, "gamma": gam}, s=s, s_prime=p["s_prime"])
        summary.append({"s": s, "m": prof.m, "equipartition_residual": prof.equipartition_residual})
    ctx.json("profiles.json", {"profiles": summary})
    return EXIT_OK


def _series(entry):
    from .evolution import TimeTable

    if isinstance(entry, dict):
        return TimeTable(tuple(entry["times"]), tuple(entry["values"]))
    return TimeTable((0.0,), (float(entry),))


def cmd_evolve(ctx: _Ctx) -> int:
    from .evolution import LoadProgram, SeparableField, run

    if ctx.cfg is None:
        raise ConfigError(["evolve: needs --config with an [evolve] table"])
    p = ctx.section("evolve")
    kwargs = dict(
        T_final=float(p["T_final"]),
        tau=float(p["tau"]),
        b0=_series(p["b0"]),
        b1=_series(p["b1"]),
        penalty_weight=float(p["penalty_weight"]),
        s_bar=float(p["s_bar"]),
    )
    if "w" in p:
        kwargs["w"] = SeparableField(_series(p["w"]), tuple(p["w"]["shape"]))
    prog = LoadProgram(**kwargs)
    n = int(p["n_cells"])
    model = ctx.model()
    law = ctx.law(model, s_max=1.05 * prog.reach(n))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NonConvergenceWarning)
        trace = run(prog, law, n_cells=n, keep_every=int(p["keep_every"]))
    ctx.csv("trace.csv", {**trace.columns(), "converged": trace.converged})
    st = trace.states[-1]
    ctx.csv("memory.csv", {"x": np.linspace(0, 1, n + 1), "memory": st.memory})
    rows = {"t": [], "x": [], "u_minus": [], "u_plus": [], "jump": []}
    for t, u in zip(trace.t, trace.displacements):
        if u is None:
            continue
        rows["t"] += [t] * u.x.size
        rows["x"] += list(u.x)
        rows["u_minus"] += list(u.u_minus)
        rows["u_plus"] += list(u.u_plus)
        rows["jump"] += list(u.jumps)
    ctx.csv("displacements.csv", rows)
    ctx.json(
        "evolve.json",
        {
            "steps": int(trace.t.size),
            "max_balance_residual": float(np.max(np.abs(trace.residual))),
            "final_energy": float(trace.E_total[-1]),
            "delta_min": trace.delta_min,
            "irreversible": trace.irreversible(),
            "aborted": trace.aborted,
            "all_converged": bool(np.all(trace.converged)),
        },
    )
    ok = bool(np.all(trace.converged)) and not trace.aborted
    return EXIT_OK if ok else EXIT_NONCONV


def cmd_phasefield(ctx: _Ctx) -> int:
    from .phasefield import PhaseFieldScenario, blowup_extract, gamma_sweep

    p = ctx.section("phasefield")
    if ctx.cfg is None or "eps" not in p:
        raise ConfigError(["phasefield: needs --config with phasefield.eps"])
    model = ctx.model()
    sc = PhaseFieldScenario(
        b=tuple(float(x) for x in p["b"]),
        pins=tuple((float(a), float(b)) for a, b in p["pins"]),
        cells_per_eps=int(p["cells_per_eps"]),
        notch_centers=tuple(float(c) for c in p["notch_centers"]),
    )
    law = ctx.law(model, s_max=2.5 * max(abs(sc.b[0]), abs(sc.b[1]), 0.1))
    res = gamma_sweep(sc, p["eps"], model, law)
    rows = res.rows
    ctx.csv(
        "sweep.csv",
        {
            "eps": [r.eps for r in rows],
            "energy": [r.energy for r in rows],
            "gap": [r.gap for r in rows],
            "min_v": [r.min_v for r in rows],
            "x_min": [r.x_min for r in rows],
            "converged": [r.converged for r in rows],
        },
        limit_energy=res.limit_energy,
    )
    blow = []
    for k, r in enumerate(rows):
        st = res.states[r.eps]
        try:
            rep = blowup_extract(st, model, law, T_win=float(p["T_win"]))
        except Exception as exc:  # no well, or no profile for this opening
            blow.append({"eps": r.eps, "error": str(exc)})
            continue
        ctx.csv(f"blowup_{k}.csv", rep.columns(), eps=r.eps, s_estimate=rep.s_estimate)
        blow.append(
            {
                "eps": r.eps,
                "s_estimate": rep.s_estimate,
                "m_observed": rep.m_observed,
                "m_reference": rep.m_reference,
                "beta_error": rep.beta_error,
                "alpha_error": rep.alpha_error,
            }
        )
    ctx.json("phasefield.json", {"limit_energy": res.limit_energy, "orders": res.orders(), "blowup": blow})
    return EXIT_OK if all(r.converged for r in rows) else EXIT_NONCONV


def cmd_verify(ctx: _Ctx) -> int:
    from .evolution import CrackState, minimize_step
    from .oracle import OracleReport, evolution_step_exhaustive, g0_direct, g_direct, random_step_problem

    model = ctx.model()
    p = ctx.section("verify")
    tol, n_nodes = float(p["tolerance"]), int(p["n_nodes"])
    reports = []
    for s in p["s"]:
        s = float(s)
        reports.append(OracleReport(f"g0(s={s:g})", g0_direct(model, s, n_nodes, seed=ctx.seed), cl.g0(model, s).value, {"n_nodes": n_nodes}, tol))
    for s, sp in p["pairs"]:
        s, sp = float(s), float(sp)
        reports.append(
            OracleReport(f"g(s={s:g},s'={sp:g})", g_direct(model, s, sp, n_nodes, seed=ctx.seed), cl.g(model, s, sp).value, {"n_nodes": n_nodes}, tol)
        )
    n_sc = int(p["n_scenarios"])
    if n_sc > 0:
        law = ctx.law(model, s_max=4.0)
        rng = np.random.default_rng(ctx.seed)
        for k in range(n_sc):
            prob = random_step_problem(rng)
            state = CrackState(prob.n_cells, prob.memory)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", NonConvergenceWarning)
                u = minimize_step(state, prob.b, prob.w, law, penalty_weight=prob.penalty, reach=prob.reach)
            E_or, _ = evolution_step_exhaustive(prob, law)
            reports.append(OracleReport(f"step#{k}", E_or, u.energy, {"n_cells": prob.n_cells}, float(p["step_tolerance"])))
    rows = [r.row() for r in reports]
    ctx.csv("verify.csv", {k: [r[k] for r in rows] for k in rows[0]})
    failed = [r for r in reports if not r.passed]
    for r in reports:
        log.info("%-24s oracle=%.8g solver=%.8g gap=%.2e %s", r.problem, r.oracle_value, r.solver_value, r.gap, "ok" if r.passed else "FAIL")
    ctx.json("verify.json", {"n": len(reports), "failed": [r.problem for r in failed]})
    return EXIT_ORACLE if failed else EXIT_OK


# --------------------------------------------------------------------------
# figure presets

_FIG_B = (1.5, 2.8)  # ell = 1.5, ell1 = 0.2
_MS = (0.3, 0.5, 0.7)
_FIG_S = (0.5, 1.0, 1.5, 2.0)


def _g_curves(ctx, name, model, s_grid, ms):
    cols = {"s": s_grid, "g0": [cl.g0(model, s).value for s in s_grid]}
    for m in ms:
        sp = cl.s_of_m(model, m)
        cols[f"g_m{m:g}"] = [cl.g(model, s, sp).value for s in s_grid]
    ctx.csv(name, cols, model=model.describe())
    return cols


def preset_fig1(ctx):
    _g_curves(ctx, "fig1.csv", FamilyB(*_FIG_B), np.linspace(0.0, 4.0, 161), _MS)


def preset_fig2(ctx):
    s = np.linspace(0.0, 6.0, 241)
    a, b = FamilyA(1.0), FamilyB(*_FIG_B)
    ctx.csv("fig2.csv", {"s": s, "g0_a": [cl.g0(a, x).value for x in s], "g0_b": [cl.g0(b, x).value for x in s]})
    ctx.json("fig2.json", {"s_frac_a": cl.s_frac(a), "s_frac_b": "unbounded" if math.isinf(cl.s_frac(b)) else cl.s_frac(b)})


def preset_fig3(ctx):
    model = FamilyA(1.0)
    grid = np.linspace(0.0, 1.0, 401)
    beta_cols, gamma_cols = {"alpha": grid}, {"t": grid}
    for s in _FIG_S:
        prof = cl.profile_alpha_beta(model, s)
        _, a, b = prof.alphabeta_samples
        order = np.argsort(a)
        beta_cols[f"beta_s{s:g}"] = np.interp(grid, a[order], b[order])
        tg, gam = prof.gamma_samples
        gamma_cols[f"gamma_s{s:g}"] = np.interp(grid, tg, gam)
    ctx.csv("fig3_beta_of_alpha.csv", beta_cols)
    ctx.csv("fig3_gamma.csv", gamma_cols)


def _ab_on_grid(model, s, s_prime, T, n=1601):
    prof = cl.profile_alpha_beta(model, s, window_T=T, s_prime=s_prime)
    t, a, b = prof.alphabeta_samples
    grid = np.linspace(-T, T, n)
    return grid, np.interp(grid, t, a), np.interp(grid, t, b), prof


def preset_fig4(ctx):
    model = FamilyA(1.0)
    cols = {}
    for s in _FIG_S:
        grid, a, b, _ = _ab_on_grid(model, s, 0.0, 20.0)
        cols.setdefault("t", grid)
        cols[f"alpha_s{s:g}"], cols[f"beta_s{s:g}"] = a, b
    ctx.csv("fig4.csv", cols)


def _constrained_set(ctx, name, ms, T):
    model = FamilyB(*_FIG_B)
    s = 0.3
    cols, gcols, kinks = {}, {}, {}
    for m in ms:
        sp = cl.s_of_m(model, m)
        grid, a, b, prof = _ab_on_grid(model, s, sp, T)
        cols.setdefault("t", grid)
        cols[f"alpha_m{m:g}"], cols[f"beta_m{m:g}"] = a, b
        tg, gam = prof.gamma_samples
        gcols.setdefault("t", np.linspace(0, 1, 401))
        gcols[f"gamma_m{m:g}"] = np.interp(gcols["t"], tg, gam)
        kinks[f"m{m:g}"] = bool(prof.constrained)
    ctx.csv(f"{name}_alpha_beta.csv", cols, s=s)
    ctx.csv(f"{name}_gamma.csv", gcols, s=s)
    ctx.json(f"{name}.json", {"s": s, "constraint_active": kinks})


def preset_fig5(ctx):
    _g_curves(ctx, "fig5_g.csv", FamilyB(*_FIG_B), np.linspace(0.0, 4.0, 161), _MS)
    _constrained_set(ctx, "fig5", (0.1, 0.2, 0.5, 0.7), 20.0)


def preset_fig6(ctx):
    _constrained_set(ctx, "fig6", (0.7, 0.5, 0.2, 0.1), 60.0)


def cmd_preset(ctx: _Ctx, name: str) -> int:
    if name not in PRESETS:
        raise ConfigError([f"preset: unknown preset '{name}', choose from {', '.join(PRESETS)}"])
    globals()[f"preset_{name}"](ctx)
    return EXIT_OK


# --------------------------------------------------------------------------


def _common(suppress: bool) -> argparse.ArgumentParser:
    # subcommand copies must not overwrite flags given before the subcommand
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=d(None), help="TOML scenario file")
    common.add_argument("--out", default=d(None), help="output directory (default: output.dir or ./out)")
    common.add_argument("--threads", type=int, default=d(1), help="worker threads for tabulation")
    common.add_argument("--seed", type=int, default=d(None), help="seed for random starts and scenarios")
    common.add_argument("-v", "--verbose", action="store_true", default=d(False))
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common(suppress=True)
    parser = argparse.ArgumentParser(prog="cohesive1d", description="Cohesive laws from optimal damage profiles.", parents=[_common(suppress=False)])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("law", "tabulate g0, m and g(s, s')"),
        ("profiles", "optimal (alpha, beta) and gamma profiles"),
        ("evolve", "quasi-static evolution of a bar"),
        ("phasefield", "phase-field sweep in eps and blow-up profiles"),
        ("verify", "compare solvers with independent oracles"),
    ):
        sub.add_parser(name, help=help_, parents=[common])
    pp = sub.add_parser("preset", help="data behind a figure", parents=[common])
    pp.add_argument("name", choices=PRESETS)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config) if args.config else None
        out = args.out or (cfg.output["dir"] if cfg else "out")
        seed = args.seed if args.seed is not None else 20240611
        ctx = _Ctx(cfg, out, max(1, args.threads), seed)
        if args.command == "preset":
            return cmd_preset(ctx, args.name)
        return globals()[f"cmd_{args.command}"](ctx)
    except ConfigError as exc:
        for e in exc.errors:
            print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
