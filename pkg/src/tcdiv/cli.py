"""Command-line front end producing figure datasets and bound tables.

Each run is fully described by one flat JSON document (``--config``); any
key left out takes its default. Command-line flags override the matching
config keys.

Exit status: 0 success, 1 a ``validate`` property failed, 2 invalid
configuration, 3 numerical failure.
"""

import argparse
import csv
import io
import json
import math
import os
import sys
import time

import numpy as np

from . import capacity_bounds as cb
from . import covariance as cov
from . import montecarlo as mc
from . import pilot_systems as ps
from .exceptions import TcdivError, ValidationError
from .grouping import SystemParams
from .validation import run_invariants

__all__ = ["COMMANDS", "ConfigError", "load_config", "run", "main"]

THREADS_ENV = "TCDIV_THREADS"

_INT, _FLOAT, _INTS, _FLOATS, _STR = "int", "float", "ints", "floats", "str"

_COMMON = {
    "command": (_STR, None),
    "seed": (_INT, 0),
    "output_path": (_STR, None),
    "format": (_STR, "csv"),
    "threads": (_INT, None),
}

_MC = {
    "trials": (_INT, 1000),
    "convergence_tol": (_FLOAT, 1e-6),
    "max_iterations": (_INT, 500),
}

COMMANDS = {
    "figure1": {"tc_list": (_INTS, [32, 100]), "g_list": (_INTS, [1, 4, 8]),
                "minmk_max": (_INT, 200)},
    "figure3": {"M": (_INT, 200), "K": (_INT, 40), "Tc": (_INT, 64),
                "G": (_INT, 10), "P": (_FLOAT, 30.0)},
    "figure4": dict(_MC, snr_grid_db=(_FLOATS, [-20, -10, 0, 10, 15, 20, 30]),
                    m=(_INT, 8), k_values=(_INTS, [4, 32]),
                    delta_min_deg=(_FLOAT, 5.0), delta_max_deg=(_FLOAT, 10.0)),
    "figure5": {"mu": (_FLOAT, 2.0), "G": (_INT, 10), "P": (_FLOAT, 30.0),
                "tc_list": (_INTS, [32, 128])},
    "figure6": {"alpha": (_FLOAT, 10.0), "Tc": (_INT, 40), "N1": (_INT, 12),
                "N2": (_INT, 4), "N_LLN": (_FLOAT, 600.0),
                "k_max": (_INT, 300)},
    "figure7": dict(_MC, trials=(_INT, 200), m_values=(_INTS, [4]),
                    k_grid=(_INTS, [64, 256, 1024, 2048]),
                    delta_min_deg=(_FLOAT, 2.0), delta_max_deg=(_FLOAT, 5.0),
                    snr_db=(_FLOAT, 10.0), preselect_factor=(_INT, 4)),
    "bounds": {"M": (_INT, 8), "K": (_INT, 8), "G": (_INT, 4),
               "P": (_FLOAT, 1e4), "spectrum": (_FLOATS, None)},
    "covariance": {"theta_deg": (_FLOAT, 0.0), "delta_deg": (_FLOAT, 10.0),
                   "spacing": (_FLOAT, 0.5), "antennas": (_INT, 64),
                   "truncation": (_FLOAT, 1e-8)},
    "validate": {},
}


class ConfigError(ValueError):
    """Raised for malformed or unknown configuration fields."""


def _coerce(key, kind, value):
    def bad():
        return ConfigError(f"field {key!r}: expected {kind}, got {value!r}")

    if kind == _STR:
        if not isinstance(value, str):
            raise bad()
        return value
    if kind == _INT:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise bad()
        if isinstance(value, float) and not value.is_integer():
            raise bad()
        return int(value)
    if kind == _FLOAT:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise bad()
        if not math.isfinite(value):
            raise bad()
        return float(value)
    if not isinstance(value, list) or not value:
        raise bad()
    inner = _INT if kind == _INTS else _FLOAT
    return [_coerce(key, inner, v) for v in value]


def load_config(doc, command=None):
    """Validate a flat config mapping and fill in defaults.

    Returns a new dict holding every field of the selected command.
    """
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    cmd = command or doc.get("command")
    if cmd is None:
        raise ConfigError("field 'command': missing")
    if cmd not in COMMANDS:
        raise ConfigError(f"field 'command': unknown command {cmd!r}")
    if doc.get("command") not in (None, cmd):
        raise ConfigError(f"field 'command': config says {doc['command']!r}, "
                          f"command line says {cmd!r}")
    schema = dict(_COMMON, **COMMANDS[cmd])
    unknown = sorted(set(doc) - set(schema))
    if unknown:
        raise ConfigError(f"unknown field(s) for {cmd}: {', '.join(unknown)}")
    out = {}
    for key, (kind, default) in schema.items():
        if key in doc and doc[key] is not None:
            out[key] = _coerce(key, kind, doc[key])
        else:
            out[key] = default
    out["command"] = cmd
    if out["format"] not in ("csv", "json"):
        raise ConfigError("field 'format': must be 'csv' or 'json'")
    if not 0 <= out["seed"] < 2**64:
        raise ConfigError("field 'seed': must be a 64-bit unsigned integer")
    if out["threads"] is not None and out["threads"] < 1:
        raise ConfigError("field 'threads': must be >= 1")
    return out


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".12g")
    return str(v)


def render(rows, columns, fmt, meta=None):
    """Serialize rows deterministically as CSV or JSON text."""
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row[c]) for c in columns])
        return buf.getvalue()
    clean = [{c: (float(_fmt(row[c])) if isinstance(row[c], (float, np.floating))
                  else row[c]) for c in columns} for row in rows]
    return json.dumps({"columns": list(columns), "rows": clean,
                       "meta": meta or {}}, sort_keys=True, indent=1) + "\n"


def _mc_config(cfg, threads, **extra):
    return mc.MonteCarloConfig(trials=cfg["trials"], seed=cfg["seed"],
                               convergence_tol=cfg["convergence_tol"],
                               max_iterations=cfg["max_iterations"],
                               threads=threads, **extra)


def _prepare(cfg, threads):
    """Build the work closure; parameter errors surface here (exit 2)."""
    cmd = cfg["command"]
    if cmd == "figure1":
        grid = range(1, cfg["minmk_max"] + 1)
        if cfg["minmk_max"] < 1:
            raise ValidationError("minmk_max must be >= 1")
        return lambda: (ps.figure1_dataset(cfg["tc_list"], cfg["g_list"], grid),
                        ("min_mk", "tc", "g", "prelog"), {})
    if cmd == "figure3":
        SystemParams(M=cfg["M"], K=cfg["K"], G=1, Tc=cfg["Tc"], P=cfg["P"])

        def work():
            rows, res = ps.figure3_dataset(cfg["M"], cfg["K"], cfg["Tc"],
                                           cfg["G"], cfg["P"])
            return rows, ("q", "f_q", "is_optimal"), dict(
                m_star=res.m_star, m_p2_star=res.m_p2_star,
                degenerate=res.degenerate)
        return work
    if cmd == "figure4":
        mcc = _mc_config(cfg, threads, snr_grid_db=cfg["snr_grid_db"])
        dr = (cfg["delta_min_deg"], cfg["delta_max_deg"])
        if not 0 < dr[0] <= dr[1] <= 90:
            raise ValidationError("need 0 < delta_min_deg <= delta_max_deg <= 90")

        def work():
            rows, flags = mc.figure4_dataset(mcc, M=cfg["m"],
                                             k_values=cfg["k_values"],
                                             delta_range_deg=dr)
            return rows, mc.FIGURE4_COLUMNS, dict(nonconverged=flags)
        return work
    if cmd == "figure5":
        return lambda: (ps.figure5_dataset(cfg["mu"], cfg["G"], cfg["P"],
                                           cfg["tc_list"]),
                        ("min_mk", "tc", "system", "rate_bits"), {})
    if cmd == "figure6":
        tdd = ps.TddConfig(cfg["alpha"], cfg["Tc"], cfg["N1"], cfg["N2"],
                           cfg["N_LLN"])

        def work():
            table = ps.tdd_limits(range(1, cfg["k_max"] + 1), tdd)
            return list(table.rows), ("k", "regime", "dof"), dict(
                breakpoints=table.breakpoints, ordered=table.ordered)
        return work
    if cmd == "figure7":
        mcc = _mc_config(cfg, threads)
        dr = (cfg["delta_min_deg"], cfg["delta_max_deg"])
        if not 0 < dr[0] <= dr[1] <= 90:
            raise ValidationError("need 0 < delta_min_deg <= delta_max_deg <= 90")

        def work():
            rows, flags = mc.figure7_dataset(
                mcc, m_values=cfg["m_values"], k_grid=cfg["k_grid"],
                delta_range_deg=dr, snr_db=cfg["snr_db"],
                preselect_factor=cfg["preselect_factor"])
            return rows, mc.FIGURE7_COLUMNS, dict(nonconverged=flags)
        return work
    if cmd == "bounds":
        params = SystemParams(M=cfg["M"], K=cfg["K"], G=cfg["G"], P=cfg["P"])
        spec = cfg["spectrum"]
        if spec is None:
            spec = [float(params.G)] * params.r
        spectra = [np.asarray(spec, dtype=float)] * params.G
        return lambda: (_bounds_rows(params, spectra),
                        ("quantity", "value_bits", "bracket_lo", "bracket_hi",
                         "regime"), {})
    if cmd == "covariance":
        geom = cov.OneRingGeometry.from_degrees(
            cfg["theta_deg"], cfg["delta_deg"], cfg["spacing"], cfg["antennas"])

        def work():
            es = cov.eigen_decompose(cov.one_ring_correlation(geom),
                                     truncation=cfg["truncation"])
            rows = [dict(index=i + 1, eigenvalue=float(v))
                    for i, v in enumerate(es.eigenvalues)]
            meta = dict(effective_rank=es.effective_rank)
            if geom.spacing <= 0.5:
                meta["support_measure"] = cov.support_measure(geom)
                meta["szego_logdet_rate"] = cov.szego_logdet_rate(geom)
            return rows, ("index", "eigenvalue"), meta
        return work
    if cmd == "validate":
        def work():
            res = run_invariants(cfg["seed"])
            rows = [dict(property=n, passed=int(ok), detail=d) for n, ok, d in res]
            return rows, ("property", "passed", "detail"), {}
        return work
    raise ConfigError(f"unknown command {cmd!r}")


def _bounds_rows(params, spectra):
    rows = []

    def add(name, res):
        rows.append(dict(quantity=name, value_bits=res.value_bits,
                         bracket_lo=res.bracket.lo, bracket_hi=res.bracket.hi,
                         regime=res.regime))

    add("highsnr_sum_capacity", cb.highsnr_sum_capacity(params, spectra))
    if params.M >= params.K:
        add("iid_baseline", cb.iid_baseline(params.M, params.K, params.P))
    if params.r == params.Kp:
        gap = cb.rate_gap_equal_eigen(params.M, params.G)
        rows.append(dict(quantity="rate_gap_equal_eigen", value_bits=gap,
                         bracket_lo=0.0, bracket_hi=0.0, regime="r_ge_Kp"))
    lam_min = float(min(np.min(s) for s in spectra))
    add("large_system_ratio", cb.large_system_ratio(params.mu, params.P,
                                                    lam_min, params.G))
    return rows


def _threads_default(flag):
    if flag is not None:
        return flag
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be a positive integer")
        if n < 1:
            raise ConfigError(f"{THREADS_ENV} must be a positive integer")
        return n
    return 1


def run(cfg, out=None, err=None):
    """Execute a validated config; returns the process exit status."""
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    try:
        threads = _threads_default(cfg.get("threads"))
        work = _prepare(cfg, threads)
    except (ConfigError, ValidationError) as exc:
        print(f"invalid config: {exc}", file=err)
        return 2
    except TcdivError as exc:
        print(f"invalid config: {exc}", file=err)
        return 2
    t0 = time.perf_counter()
    try:
        rows, columns, meta = work()
    except TcdivError as exc:
        print(f"numerical failure in {cfg['command']}: {exc}", file=err)
        return 3
    except (FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure in {cfg['command']}: {exc}", file=err)
        return 3
    text = render(rows, columns, cfg["format"], meta)
    path = cfg["output_path"] or f"{cfg['command']}.{cfg['format']}"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    elapsed = time.perf_counter() - t0
    extra = "".join(f", {k}={v}" for k, v in meta.items()
                    if k in ("nonconverged", "m_star", "m_p2_star", "ordered",
                             "effective_rank"))
    print(f"{cfg['command']}: {len(rows)} rows -> {path} "
          f"({elapsed:.2f} s{extra})", file=out)
    if cfg["command"] == "validate":
        failed = 0
        for r in rows:
            status = "PASS" if r["passed"] else "FAIL"
            print(f"  {status} {r['property']}: {r['detail']}", file=out)
            failed += not r["passed"]
        return 1 if failed else 0
    return 0


def build_parser():
    p = argparse.ArgumentParser(
        prog="tcdiv",
        description="Capacity bounds and figure datasets for MIMO broadcast "
                    "channels with transmit correlation diversity.")
    p.add_argument("command", nargs="?", choices=sorted(COMMANDS),
                   help="what to compute (may instead be given in the config)")
    p.add_argument("--config", help="flat JSON config file")
    p.add_argument("--out", help="output file (default <command>.<format>)")
    p.add_argument("--seed", type=int, help="64-bit unsigned seed")
    p.add_argument("--threads", type=int,
                   help=f"worker cap (default ${THREADS_ENV} or 1)")
    p.add_argument("--format", choices=("csv", "json"))
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    doc = {}
    try:
        if args.config:
            try:
                with open(args.config, encoding="utf-8") as fh:
                    doc = json.load(fh)
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read config: {exc}")
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        for key, val in (("output_path", args.out), ("seed", args.seed),
                         ("threads", args.threads), ("format", args.format)):
            if val is not None:
                doc[key] = val
        cfg = load_config(doc, args.command)
    except ConfigError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
