"""Command-line driver.

Subcommands::

    metastab validate <config>          check a configuration, exit 0/1
    metastab run <config>               execute the scan, write artifacts
    metastab table <report.json> --time T
                                        emit the spectrum/bound CSV at a
                                        snapshotted sample time

`run` writes, inside the configured output directory:

* ``report_<regime>_N1<k>.json``  per-run error reports,
* ``runs.csv``                    one aggregate row per run,
* ``MANIFEST.json``               config/report hashes, code version, seed.

Exit codes: 0 all checks held, 1 validation error, 2 numerical failure
or a failed run-level inequality, 3 budget abort (partial results kept).
Worker count comes from METASTAB_THREADS when set, else the config.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import hashlib
import json
import math
import os
import sys
import traceback

import numpy as np

from . import __version__
from .bridge import ENERGY_POWER, ErrorReport, fit_gamma, run_comparison
from .config import ConfigError, parse_config, serialize_config, validate_config
from .lattice import BlowupError

__all__ = ["main"]


def _load_config(path):
    with open(path) as fh:
        text = fh.read()
    cfg = parse_config(text)
    validate_config(cfg)
    return cfg


def _sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        h.update(fh.read())
    return h.hexdigest()


def _run_one(cfg, N1):
    params = cfg.lattice_params(N1)
    budget = cfg.runtime_cap_s if cfg.runtime_cap_s > 0.0 else None
    return run_comparison(
        cfg.regime_spec(),
        params,
        C0=cfg.C0,
        T0=cfg.T0,
        samples=cfg.samples,
        pde_shape=(cfg.pde_n1, cfg.pde_n2),
        dt_lattice=cfg.dt_lattice or None,
        dt_pde=cfg.dt_pde or None,
        scheme=cfg.scheme,
        snapshot_times=cfg.snapshot_times,
        k0=tuple(cfg.k0),
        phase=cfg.phase,
        budget_s=budget,
    )


def _worker_count(cfg):
    env = os.environ.get("METASTAB_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ConfigError(f"METASTAB_THREADS must be an integer, got {env!r}")
        if n < 1:
            raise ConfigError("METASTAB_THREADS must be positive")
        return n
    return cfg.workers


def _checks(cfg, reports, gamma_fit):
    """Run-level inequalities; returns (lines, all_passed)."""
    lines = []
    ok = True

    def note(passed, text):
        nonlocal ok
        ok = ok and passed
        lines.append(f"[{'PASS' if passed else 'FAIL'}] {text}")

    for r in reports:
        tag = f"{r.regime} N1={r.N1}"
        good_rho = math.isfinite(r.rho_fit) and r.rho_fit > 0.0
        note(good_rho, f"{tag}: localization rate rho' = {r.rho_fit:.4g} > 0")
        good_res = math.isfinite(r.rho_resid) and r.rho_resid < 0.10
        note(good_res, f"{tag}: localization fit residual {r.rho_resid:.3g} < 0.10")
        tails = [x for x in r.tail_fraction if math.isfinite(x)]
        worst = max(tails) if tails else float("nan")
        note(bool(tails) and worst < 0.05,
             f"{tag}: tail fraction beyond 2|log mu|/{cfg.rho:g} "
             f"max {worst:.3g} < 0.05")
    if len(reports) >= 2:
        mus = [r.mu for r in reports]
        errs = [r.sup_error[-1] if r.sup_error else float("nan") for r in reports]
        order = np.argsort(mus)[::-1]  # decreasing mu
        mono = all(
            errs[order[i + 1]] <= errs[order[i]] * (1.0 + 1e-12)
            for i in range(len(order) - 1)
        )
        note(mono, "final-time sup error nonincreasing as mu decreases")
        target = reports[0].gamma_target
        note(
            math.isfinite(gamma_fit) and gamma_fit >= target - 0.15,
            f"fitted gamma {gamma_fit:.4g} >= target {target:g} - 0.15",
        )
    return lines, ok


def _cmd_run(args):
    try:
        cfg = _load_config(args.config)
        workers = _worker_count(cfg)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(f"invalid config:\n{exc}", file=sys.stderr)
        return 1

    os.makedirs(cfg.output_dir, exist_ok=True)
    runs = list(cfg.N1_list)
    reports = [None] * len(runs)
    failures = []

    if workers > 1 and len(runs) > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            futs = {pool.submit(_run_one, cfg, n1): i for i, n1 in enumerate(runs)}
            for fut in concurrent.futures.as_completed(futs):
                i = futs[fut]
                try:
                    reports[i] = fut.result()
                except (BlowupError, ArithmeticError, ValueError) as exc:
                    failures.append((runs[i], exc, traceback.format_exc()))
    else:
        for i, n1 in enumerate(runs):
            try:
                reports[i] = _run_one(cfg, n1)
            except (BlowupError, ArithmeticError, ValueError) as exc:
                failures.append((n1, exc, traceback.format_exc()))

    for n1, exc, tb in failures:
        path = os.path.join(cfg.output_dir, f"report_{cfg.regime}_N1{n1}.error.json")
        with open(path, "w") as fh:
            json.dump({"N1": n1, "error": str(exc), "traceback": tb}, fh, indent=1)
        print(f"[FAIL] {cfg.regime} N1={n1}: {exc}", file=sys.stderr)

    done = [r for r in reports if r is not None]
    complete = [r for r in done if not r.aborted]
    gamma_fit = fit_gamma([r.mu for r in complete], [r.max_sup_error for r in complete]) \
        if len(complete) >= 2 else float("nan")
    for r in done:
        r.gamma_fit = gamma_fit

    report_paths = {}
    for r in done:
        name = f"report_{r.regime}_N1{r.N1}.json"
        path = os.path.join(cfg.output_dir, name)
        r.save(path)
        report_paths[name] = path

    csv_path = os.path.join(cfg.output_dir, "runs.csv")
    with open(csv_path, "w") as fh:
        fh.write("mu,sigma,gamma_fit,rho_fit,max_sup_error,runtime_s\n")
        for r in done:
            fh.write(
                f"{r.mu:.17g},{r.sigma:.17g},{r.gamma_fit:.17g},"
                f"{r.rho_fit:.17g},{r.max_sup_error:.17g},{r.runtime_s:.17g}\n"
            )

    manifest = {
        "code_version": __version__,
        "config_sha256": hashlib.sha256(serialize_config(cfg).encode()).hexdigest(),
        "seed": cfg.seed,
        "regime": cfg.regime,
        "reports": {name: _sha256_file(path) for name, path in sorted(report_paths.items())},
    }
    with open(os.path.join(cfg.output_dir, "MANIFEST.json"), "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")

    lines, ok = _checks(cfg, done, gamma_fit)
    for line in lines:
        print(line)
    print(f"wrote {len(report_paths)} report(s) to {cfg.output_dir}")

    if failures:
        return 2
    if any(r.aborted for r in done):
        print("[FAIL] run aborted on wall-clock budget; partial report kept",
              file=sys.stderr)
        return 3
    return 0 if ok else 2


def _cmd_validate(args):
    try:
        _load_config(args.config)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(f"invalid config:\n{exc}", file=sys.stderr)
        return 1
    print("OK")
    return 0


def _cmd_table(args):
    try:
        report = ErrorReport.load(args.report)
    except (OSError, KeyError, ValueError) as exc:
        print(f"error: cannot load report: {exc}", file=sys.stderr)
        return 1
    try:
        snap = report.snapshot_at(args.time)
    except KeyError:
        avail = ", ".join(f"{s.t:g}" for s in report.spectra)
        print(
            f"error: t = {args.time:g} not snapshotted (available: {avail})",
            file=sys.stderr,
        )
        return 1
    p = ENERGY_POWER[report.regime]
    gamma = report.gamma_fit if math.isfinite(report.gamma_fit) else report.gamma_target
    mu = report.mu
    K1 = np.asarray(snap.kappa1) * (report.N1 + 0.5)
    K2 = np.asarray(snap.kappa2) * (report.N2 + 0.5)
    r = np.abs(K1) + np.abs(K2)
    if math.isfinite(report.rho_fit) and report.rho_fit > 0.0:
        bound = report.rho_c1 * mu**p * np.exp(-report.rho_fit * r) \
            + report.rho_c2 * mu ** (p + gamma)
    else:
        bound = np.full_like(r, float("nan"))
    out = sys.stdout
    out.write("kappa1,kappa2,E_kappa,bound_value\n")
    for i in range(len(r)):
        out.write(
            f"{snap.kappa1[i]:.17g},{snap.kappa2[i]:.17g},"
            f"{snap.E[i]:.17g},{bound[i]:.17g}\n"
        )
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="metastab",
        description="Lattice metastability experiments: run scans, validate "
        "configs, tabulate mode-energy spectra.",
    )
    sub = parser.add_subparsers(dest="cmd", required=True)

    p_run = sub.add_parser("run", help="execute a configured scan")
    p_run.add_argument("config", help="path to a key=value config file")
    p_run.set_defaults(func=_cmd_run)

    p_val = sub.add_parser("validate", help="check a config file")
    p_val.add_argument("config")
    p_val.set_defaults(func=_cmd_validate)

    p_tab = sub.add_parser("table", help="emit spectrum table at a snapshot time")
    p_tab.add_argument("report", help="path to a report JSON")
    p_tab.add_argument("--time", type=float, default=0.0)
    p_tab.set_defaults(func=_cmd_table)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BrokenPipeError:
        # downstream pager/head closed the pipe; not an error
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return 0


if __name__ == "__main__":
    sys.exit(main())
