"""Command-line front door: ``thermosep <task> --config path [--out dir] [--workers k]``.

Exit codes: 0 success, 1 configuration error, 2 numerical failure (rows
carrying an error note also yield 2; all outputs are still written).
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from functools import lru_cache
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import fluctuation, quasifree
from .config import TASKS, ConfigError, ModelConfig, RunConfig, parse_config
from .hightemp import bound_vs_numeric
from .records import ScanRecord, emit_plotdata, plotdata_csv, to_csv, verdict_counts
from .separability import beta_threshold, certify, entanglement_order, enumerate_pairs, negativity, ppt_min_eig
from .spin import ModelSpec, build_hamiltonian, preset, terms_from_spec
from .thermal import RegionPair, Spectrum, restrict_to_pair

log = logging.getLogger("thermosep")


def build_model(mc: ModelConfig) -> ModelSpec:
    if mc.preset is not None:
        kw = dict(mc.params)
        if mc.preset not in ("meanfield_h1", "meanfield_h2"):
            kw["boundary"] = mc.boundary
        return preset(mc.preset, mc.n_sites, **kw)
    terms = terms_from_spec([t.model_dump() for t in mc.terms])
    return ModelSpec(mc.n_sites, terms, site_dim=mc.site_dim, boundary=mc.boundary, name=mc.name or "custom")


@lru_cache(maxsize=8)
def _spectrum(model_json: str) -> tuple[ModelSpec, Spectrum]:
    model = build_model(ModelConfig.model_validate_json(model_json))
    return model, Spectrum(build_hamiltonian(model))


def _region(r: Sequence[int]) -> str:
    return "-".join(str(int(s)) for s in r)


# ---------------------------------------------------------------------------
# work units: module-level so they pickle; each returns the rows of one grid point
# ---------------------------------------------------------------------------


def _gibbs_unit(args) -> list[ScanRecord]:
    model_json, beta, pairs, tol, task = args
    model, sp = _spectrum(model_json)
    rho = sp.gibbs(beta)
    periodic = model.boundary == "periodic"
    out = []
    for r1, r2 in pairs:
        p = RegionPair(r1, r2)
        red = restrict_to_pair(rho, p)
        lo, v = ppt_min_eig(red, tol)
        if not v.entangled:
            v = certify(red, tol)
        out.append(
            ScanRecord(
                task,
                {"model": model.name, "n_sites": model.n_sites, "beta": beta, "region1": _region(r1),
                 "region2": _region(r2), "distance": p.distance(model.n_sites, periodic)},
                {"min_pt_eig": lo, "negativity": negativity(red)},
                str(v.tag),
            )
        )
    return out


def _order_unit(args) -> list[ScanRecord]:
    model_json, beta, N_max, contiguous, max_pairs, tol = args
    model, sp = _spectrum(model_json)
    periodic = model.boundary == "periodic"
    rep = entanglement_order(sp.gibbs(beta), N_max, model.n_sites, periodic, contiguous, tol, max_pairs)
    return [
        ScanRecord(
            "order_classify",
            {"model": model.name, "n_sites": model.n_sites, "beta": beta, "level": r.level,
             "region1": _region(r.pair.region1), "region2": _region(r.pair.region2), "distance": r.distance},
            {"min_pt_eig": r.min_pt_eig, "negativity": r.negativity},
            str(r.verdict.tag),
        )
        for r in rep.records
    ]


def _hightemp_unit(args) -> tuple[list[ScanRecord], dict]:
    model_json, max_region, beta_hi, n_grid, tol, tol_beta = args
    model = build_model(ModelConfig.model_validate_json(model_json))
    rep = bound_vs_numeric(model, max_region=max_region, beta_hi=beta_hi, n_grid=n_grid, tol_beta=tol_beta, tol=tol)
    rows = []
    for label, b in rep.pair_thresholds.items():
        r1, r2 = label.split("|")
        ok = b is None or b >= rep.beta_star_analytic
        rows.append(
            ScanRecord(
                "hightemp_report",
                {"model": model.name, "n_sites": model.n_sites, "region1": r1, "region2": r2},
                {"beta_star_numeric": b, "beta_star_analytic": rep.beta_star_analytic, "consistent": ok},
                "bound_holds" if ok else "bound_violated",
            )
        )
    return rows, rep.to_dict()


def _quasifree_V(q) -> np.ndarray:
    if q.V is not None:
        return np.asarray(q.V, dtype=float)
    return quasifree.hopping_chain(q.n_modes, q.hopping, q.onsite, q.periodic).V


def _quasifree_unit(args) -> list[ScanRecord]:
    qjson, beta, tol = args
    from .config import QuasifreeConfig

    q = QuasifreeConfig.model_validate_json(qjson)
    V = _quasifree_V(q)
    out = []
    for r1, r2 in q.regions:
        rec = ScanRecord(
            "quasifree_scan",
            {"statistics": q.statistics, "n_modes": V.shape[0], "beta": beta,
             "region1": _region(r1), "region2": _region(r2)},
        )
        try:
            if q.statistics == "fermi":
                v = quasifree.fermion_pt_test(quasifree.fermi_symbol(V, beta), (r1, r2), tol)
            else:
                v = quasifree.boson_pt_test(quasifree.bose_symbol(V, beta, q.mu), (r1, r2), tol)
            rec.values["min_block_eig"] = v.criterion_value
            rec.verdict = str(v.tag)
        except (ValueError, np.linalg.LinAlgError) as exc:
            rec.error = f"{type(exc).__name__}: {exc}"
        out.append(rec)
    return out


def _continuum_unit(args) -> tuple[list[ScanRecord], dict]:
    family, betas, variant, control, tol, ptol = args
    f, g = quasifree.mode_pair(family)
    runs = [(variant, True)] + ([("unscaled_partner", False)] if control else [])
    rows, summary = [], {}
    for label, scale_partner in runs:
        v = "exact" if label == "unscaled_partner" else label
        rep = quasifree.scaling_invariance_check(
            f, g, betas, variant=v, scale_partner=scale_partner, tol=tol, ppt_tol=ptol
        )
        summary[label] = {"passed": rep.passed, "max_deviation": rep.max_deviation}
        for b in betas:
            A = rep.kernels[b]
            rows.append(
                ScanRecord(
                    "continuum_scaling",
                    {"family": family, "beta": b, "variant": label},
                    {"a11": float(A[0, 0].real), "a12_re": float(A[0, 1].real), "a12_im": float(A[0, 1].imag),
                     "a22": float(A[1, 1].real), "max_deviation": rep.deviations[b],
                     "min_block_eig": quasifree.mode_block_min_eig(A)},
                    str(rep.verdicts[b]),
                )
            )
    return rows, summary


def _fluct_unit(args) -> list[ScanRecord]:
    c, lam, a, b, raw = args
    return [fluctuation.sweep_point(c, lam, a, b, raw)]


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------


def _pmap(fn: Callable, units: list, workers: int) -> list:
    """Ordered map; results come back in grid order whatever the completion order."""
    if workers <= 1 or len(units) <= 1:
        return [fn(u) for u in units]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, units, chunksize=max(1, len(units) // (4 * workers))))


def _flatten(chunks) -> list[ScanRecord]:
    out = []
    for ch in chunks:
        out.extend(ch)
    for i, r in enumerate(out):
        r.key = {"index": i, **r.key}
    return out


def _first_npt(records: list[ScanRecord], keyf) -> dict:
    first: dict = {}
    for r in records:
        k = keyf(r)
        first.setdefault(k, None)
        if r.verdict == "NPT_entangled" and first[k] is None:
            first[k] = r.key["beta"]
    return first


def execute(cfg: RunConfig, workers: int = 1) -> tuple[list[ScanRecord], dict, list[dict]]:
    """Run one task; returns rows, the JSON summary and long-format plot data."""
    sec = cfg.section
    tol, tol_beta = cfg.tolerances.ppt, cfg.tolerances.beta
    summary: dict = {"task": cfg.task}
    task = cfg.task

    if task in ("gibbs_scan", "order_classify"):
        model = build_model(sec.model)
        mjson = sec.model.model_dump_json()
        periodic = model.boundary == "periodic"
        if task == "gibbs_scan":
            if sec.pairs is not None:
                pairs = [(tuple(a), tuple(b)) for a, b in sec.pairs]
                for a, b in pairs:
                    RegionPair(a, b).check_range(model.n_sites)
            else:
                pairs = [(p.region1, p.region2) for p in
                         enumerate_pairs(model.n_sites, sec.max_region, periodic, sec.contiguous)]
            units = [(mjson, b, pairs, tol, task) for b in sec.beta]
            records = _flatten(_pmap(_gibbs_unit, units, workers))
            summary["first_npt_beta_on_grid"] = _first_npt(records, lambda r: f"{r.key['region1']}|{r.key['region2']}")
            if model.n_sites <= 10:
                thr = {}
                sp = _spectrum(mjson)[1]
                for a, b in pairs:
                    p = RegionPair(a, b)
                    try:
                        thr[p.label()] = beta_threshold(sp, p, 0.0, max(sec.beta), tol_beta=tol_beta, tol=tol)
                    except ValueError as exc:
                        thr[p.label()] = f"error: {exc}"
                summary["thresholds"] = thr
        else:
            units = [(mjson, b, sec.N_max, sec.contiguous, sec.max_pairs, tol) for b in sec.beta]
            records = _flatten(_pmap(_order_unit, units, workers))
            per_beta = {}
            for b in sec.beta:
                rows = [r for r in records if r.key["beta"] == b]
                hit = next((r for r in rows if r.verdict == "NPT_entangled"), None)
                per_beta[repr(b)] = {
                    "first_entangled_N": hit.key["level"] if hit else None,
                    "witness_pair": f"{hit.key['region1']}|{hit.key['region2']}" if hit else None,
                    "max_checked_N": sec.N_max,
                }
            summary["order"] = per_beta
        plot = emit_plotdata(records, "beta", "min_pt_eig", ("region1", "region2"))

    elif task == "hightemp_report":
        units = [(m.model_dump_json(), sec.max_region, sec.beta_hi, sec.n_grid, tol, tol_beta) for m in sec.models]
        results = _pmap(_hightemp_unit, units, workers)
        records = _flatten([r for r, _ in results])
        summary["bound_reports"] = [d for _, d in results]
        summary["all_consistent"] = all(d["consistent"] for _, d in results)
        plot = [
            {"x": x, "y": y, "series": d["model"]}
            for _, d in results for x, y in d["l_bound_curve"]
        ]

    elif task == "quasifree_scan":
        qjson = sec.model_dump_json()
        units = [(qjson, b, tol) for b in sec.beta]
        records = _flatten(_pmap(_quasifree_unit, units, workers))
        if sec.statistics == "fermi":
            V = _quasifree_V(sec)
            thr = {}
            for r1, r2 in sec.regions:
                _, first = quasifree.quasifree_beta_scan(V, (r1, r2), sorted(sec.beta), tol, sec.bisect_tol)
                thr[f"{_region(r1)}|{_region(r2)}"] = first
            summary["first_npt_beta"] = thr
        plot = emit_plotdata(records, "beta", "min_block_eig", ("region1", "region2"))

    elif task == "continuum_scaling":
        variant = "literal" if cfg.raw_paper_forms else sec.variant
        units = [(f, list(sec.beta), variant, sec.negative_control, sec.tol, tol) for f in sec.families]
        results = _pmap(_continuum_unit, units, workers)
        records = _flatten([r for r, _ in results])
        summary["families"] = {f: s for f, (_, s) in zip(sec.families, results)}
        plot = emit_plotdata(records, "beta", "max_deviation", ("family", "variant"))

    elif task == "fluctuation_sweep":
        units = [(c, l, a, b, cfg.raw_paper_forms) for c in sec.c for l in sec.lam for a in sec.alpha for b in sec.beta]
        records = _flatten(_pmap(_fluct_unit, units, workers))
        summary["raw_paper_forms"] = cfg.raw_paper_forms
        summary["ineq23_violations"] = sum(1 for r in records if r.values.get("ineq23_holds") is False)
        plot = []
        for r in records:
            v = r.values
            if "ineq23_lhs" in v:
                plot.append({"x": r.key["alpha"], "y": v["ineq23_lhs"] - v["ineq23_rhs"],
                             "series": f"c={r.key['c']:g},lambda={r.key['lambda']:g},beta={r.key['beta']:g}"})
    else:  # pragma: no cover - guarded by the schema
        raise ConfigError(f"unknown task {task!r}")

    summary["n_rows"] = len(records)
    summary["verdict_counts"] = verdict_counts(records)
    summary["error_rows"] = sum(1 for r in records if r.error)
    return records, summary, plot


def _json_safe(x):
    if isinstance(x, float):
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        if math.isnan(x):
            return "nan"
        return x
    if isinstance(x, dict):
        return {str(k): _json_safe(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_json_safe(v) for v in x]
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return _json_safe(x.item())
    return x


def write_outputs(out: Path, task: str, records, summary, plot) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{task}.csv").write_text(to_csv(records, task))
    (out / f"{task}_summary.json").write_text(json.dumps(_json_safe(summary), indent=2, sort_keys=True) + "\n")
    (out / f"{task}_plotdata.csv").write_text(plotdata_csv(plot))


def resolve_workers(cli_value: int | None, cfg: RunConfig) -> int:
    if cli_value is not None:
        return cli_value
    if cfg.workers is not None:
        return cfg.workers
    env = os.environ.get("THERMOSEP_WORKERS")
    if env:
        try:
            w = int(env)
        except ValueError:
            raise ConfigError(f"THERMOSEP_WORKERS must be an integer, got {env!r}") from None
        if w < 1:
            raise ConfigError("THERMOSEP_WORKERS must be >= 1")
        return w
    return 1


def run(cfg: RunConfig, out: Path, workers: int = 1) -> int:
    try:
        records, summary, plot = execute(cfg, workers)
    except ConfigError:
        raise
    except (ArithmeticError, ValueError, np.linalg.LinAlgError, RuntimeError) as exc:
        log.error("numerical failure: %s", exc)
        return 2
    write_outputs(out, cfg.task, records, summary, plot)
    return 2 if summary["error_rows"] else 0


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="thermosep", description="Thermal separability sweeps.")
    p.add_argument("task", choices=TASKS)
    p.add_argument("--config", required=True, type=Path)
    p.add_argument("--out", type=Path, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--raw-paper-forms", action="store_true",
                   help="use the literal printed equation variants instead of the corrected ones")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        text = args.config.read_text()
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    try:
        cfg = parse_config(text)
        if cfg.task != args.task:
            raise ConfigError(f"config task {cfg.task!r} does not match command {args.task!r}")
        if args.raw_paper_forms:
            cfg = cfg.model_copy(update={"raw_paper_forms": True})
        if args.workers is not None and args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        workers = resolve_workers(args.workers, cfg)
        out = args.out or Path(cfg.out or "results")
        if cfg.task in ("gibbs_scan", "order_classify"):
            build_model(cfg.section.model)
        elif cfg.task == "hightemp_report":
            for m in cfg.section.models:
                build_model(m)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, TypeError, IndexError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    try:
        code = run(cfg, out, workers)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    if code == 0:
        log.info("wrote %s outputs to %s", cfg.task, out)
    elif code == 2:
        print("numerical failure: see error rows or log", file=sys.stderr)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
