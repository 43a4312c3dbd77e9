"""Command line front end: JSON config, command dispatch, CSV output and a
content-addressed cache of results."""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import os
import sys
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .asymptotics import (
    RegionR,
    decomposition_check,
    fresnel_suite,
    random_radial_suite,
    stationary_phase_main,
    sublevel_measure,
    vdc_ratio,
)
from .errors import (
    BrklError,
    CacheIoError,
    InsufficientSamples,
    NonPositiveAlpha,
    ParseError,
    PoorFit,
    ValidationError,
)
from .kernel import KernelPoint, kernel_K
from .lpscan import (
    SamplerConfig,
    ShellEstimate,
    convergence_verdict,
    exponent_fit,
    scan,
    theory_slope,
)
from .phase import h_inf_batch
from .variety import EXPONENT_COLUMNS, Variety, exponent_report, validate_variety

log = logging.getLogger("brkl")

COMMANDS = ("exponents", "eval-kernel", "scan", "fit", "check-asymptotics", "check-vdc", "check-h", "sublevel")
SCAN_COLUMNS = ["m", "p", "mass", "stderr", "samples", "slope", "theory_slope", "verdict"]


@dataclass(frozen=True)
class ScanConfig:
    p: tuple[float, ...] = (0.9, 1.3)
    m_min: int = 8
    m_max: int = 14
    samples: int = 100_000
    mode: str = "uniform"
    band: float = 0.15


@dataclass(frozen=True)
class ChecksConfig:
    x_min: float = 100.0
    x_max: float = 10_000.0
    points: int = 9
    vdc_lambdas: int = 31
    vdc_random: int = 100
    h_samples: int = 10_000
    h_decades: tuple[int, ...] = (1, 2, 3)
    sublevel_p: float = 1.0
    sublevel_l: tuple[int, int] = (0, 6)
    sublevel_m: tuple[int, int] = (2, 8)
    sublevel_samples: int = 20_000


@dataclass(frozen=True)
class RunConfig:
    variety: Variety
    alpha: float
    delta1: float = 0.05
    E: float = 1000.0
    seed: int = 0
    threads: object = 1
    cache_dir: str | None = None
    scan: ScanConfig = field(default_factory=ScanConfig)
    points: tuple[dict, ...] = ()
    checks: ChecksConfig = field(default_factory=ChecksConfig)

    def canonical(self, command: str, extra: dict | None = None) -> str:
        """Sorted-key JSON of everything that determines the output."""
        data = {
            "command": command,
            "variety": self.variety.to_dict(),
            "alpha": self.alpha,
            "delta1": self.delta1,
            "E": self.E,
            "seed": self.seed,
            "scan": asdict(self.scan),
            "points": list(self.points),
            "checks": asdict(self.checks),
            "version": __version__,
        }
        if extra:
            data["extra"] = extra
        return json.dumps(data, sort_keys=True, separators=(",", ":"), default=_jsonable)


def _jsonable(obj):
    if isinstance(obj, tuple):
        return list(obj)
    if isinstance(obj, (np.integer, np.floating)):
        return obj.item()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


# ---------------------------------------------------------------------------
# config parsing


def _num(block: dict, key: str, kind, where: str):
    try:
        return kind(block[key])
    except (TypeError, ValueError):
        raise ParseError(f"field '{where}{key}': expected {kind.__name__}, got {block[key]!r}") from None


def _sub(raw: dict, cls, name: str):
    block = raw.get(name, {})
    if not isinstance(block, dict):
        raise ParseError(f"field '{name}': expected an object")
    defaults = cls()
    kw = {}
    for key, value in block.items():
        if not hasattr(defaults, key):
            raise ParseError(f"field '{name}.{key}': unknown key")
        default = getattr(defaults, key)
        if isinstance(default, tuple):
            if not isinstance(value, (list, tuple)):
                raise ParseError(f"field '{name}.{key}': expected a list")
            elem = type(default[0]) if default else float
            kw[key] = tuple(_num({key: v}, key, elem, f"{name}.") for v in value)
        else:
            kw[key] = _num(block, key, type(default), f"{name}.")
    return replace(defaults, **kw)


def parse_config(path: str | os.PathLike | None = None, overrides: dict | None = None,
                 text: str | None = None) -> RunConfig:
    """Read a JSON config and apply flag overrides (flags win)."""
    raw: dict = {}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ParseError(f"cannot read config {path}: {exc}") from None
    if text is not None:
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
        if not isinstance(raw, dict):
            raise ParseError("line 1: top level must be an object")
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}

    vraw = dict(raw.get("variety", {}))
    for key in ("n", "L", "L1", "d", "delta"):
        if key in overrides:
            vraw[key] = overrides.pop(key)
    if not vraw:
        raise ParseError("field 'variety': missing")
    variety = validate_variety(vraw)

    alpha = overrides.pop("alpha", raw.get("alpha"))
    if alpha is None:
        raise ParseError("field 'alpha': missing")
    alpha = _num({"alpha": alpha}, "alpha", float, "")
    if not alpha > 0:
        raise NonPositiveAlpha(f"alpha must be > 0, got {alpha}")

    scan_cfg = _sub(raw, ScanConfig, "scan")
    for key in ("p", "m_min", "m_max", "samples", "mode"):
        if key in overrides:
            value = overrides.pop(key)
            scan_cfg = replace(scan_cfg, **{key: tuple(value) if key == "p" else value})
    if scan_cfg.mode not in ("uniform", "region"):
        raise ParseError(f"field 'scan.mode': expected 'uniform' or 'region', got {scan_cfg.mode!r}")
    checks = _sub(raw, ChecksConfig, "checks")

    points = raw.get("points", [])
    if "point" in overrides:
        points = [overrides.pop("point")]
    if not isinstance(points, list):
        raise ParseError("field 'points': expected a list")

    cfg = RunConfig(
        variety=variety,
        alpha=alpha,
        delta1=float(overrides.pop("delta1", raw.get("delta1", 0.05))),
        E=float(overrides.pop("E", raw.get("E", 1000.0))),
        seed=int(overrides.pop("seed", raw.get("seed", 0))),
        threads=_check_threads(overrides.pop("threads", raw.get("threads", 1))),
        cache_dir=overrides.pop("cache_dir", raw.get("cache_dir", os.environ.get("BRKL_CACHE_DIR"))),
        scan=scan_cfg,
        points=tuple(_point(p, variety) for p in points),
        checks=checks,
    )
    unknown = set(raw) - {"variety", "alpha", "delta1", "E", "seed", "threads", "cache_dir", "scan",
                          "points", "checks"}
    if unknown:
        raise ParseError(f"field '{sorted(unknown)[0]}': unknown key")
    return cfg


def _check_threads(value):
    if value == "auto" or (isinstance(value, int) and not isinstance(value, bool) and value >= 1):
        return value
    raise ParseError(f"field 'threads': expected a positive integer or 'auto', got {value!r}")


def _point(raw, v: Variety) -> dict:
    if not isinstance(raw, dict):
        raise ParseError("field 'points': each point must be an object with x, y, z")
    pt = {k: [float(t) for t in raw.get(k, [])] for k in ("x", "y", "z")}
    try:
        KernelPoint(tuple(pt["x"]), tuple(pt["y"]), tuple(pt["z"])).check(v)
    except ValueError as exc:
        raise ParseError(f"field 'points': {exc}") from None
    return pt


# ---------------------------------------------------------------------------
# CSV


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def to_csv(columns, rows) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(row.get(c)) for c in columns])
    return buf.getvalue().encode()


# ---------------------------------------------------------------------------
# commands; each returns (columns, rows, exit_code)


def cmd_exponents(cfg: RunConfig, args):
    rep = exponent_report(cfg.variety, cfg.alpha)
    return EXPONENT_COLUMNS, [rep.csv_row()], 0


def cmd_eval_kernel(cfg: RunConfig, args):
    v = cfg.variety
    if not cfg.points:
        raise ValidationError("eval-kernel needs at least one point (config 'points' or --x/--y/--z)")
    ycols = [f"y{j + 1}" for j in range(v.L1)]
    cols = ["r_x", *ycols, "r_z", "Re_k", "Im_k", "A_alpha", "Re_K", "Im_K", "err_est"]
    rows = []
    for pt in cfg.points:
        kp = KernelPoint(tuple(pt["x"]), tuple(pt["y"]), tuple(pt["z"]))
        val = kernel_K(v, cfg.alpha, kp)
        row = {"r_x": kp.r_x, "r_z": float(np.linalg.norm(pt["z"])) if pt["z"] else 0.0,
               "Re_k": val.k.real, "Im_k": val.k.imag, "A_alpha": val.a_alpha,
               "Re_K": val.K.real, "Im_K": val.K.imag, "err_est": val.err_est}
        row.update(zip(ycols, kp.y))
        rows.append(row)
    return cols, rows, 0


def _fit_rows(cfg: RunConfig, by_p: dict[float, list[ShellEstimate]]):
    rows, code = [], 0
    for p, ests in by_p.items():
        th = theory_slope(cfg.variety, cfg.alpha, p)
        try:
            fit = exponent_fit(ests, cfg.variety, cfg.alpha)
            verdict = convergence_verdict(fit, cfg.variety, cfg.alpha, cfg.scan.band).label
            slope = fit.slope
        except (PoorFit, InsufficientSamples) as exc:
            log.warning("fit at p=%s failed: %s", p, exc)
            verdict, slope = "Inconclusive", None
        if verdict == "Inconclusive":
            code = 2
        rows.append({"m": "fit", "p": p, "slope": slope, "theory_slope": th, "verdict": verdict})
    return rows, code


def cmd_scan(cfg: RunConfig, args):
    sc = cfg.scan
    sampler = SamplerConfig(sc.mode, delta1=cfg.delta1, E=cfg.E, samples=sc.samples)
    by_p = scan(cfg.variety, cfg.alpha, sc.p, (sc.m_min, sc.m_max), sampler, cfg.seed, cfg.threads)
    rows = [{"m": e.m, "p": e.p, "mass": e.mass, "stderr": e.stderr, "samples": e.samples}
            for p in by_p for e in by_p[p]]
    fit_rows, code = _fit_rows(cfg, by_p)
    return SCAN_COLUMNS, rows + fit_rows, code


def read_scan_csv(path) -> dict[float, list[ShellEstimate]]:
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            by_p: dict[float, list[ShellEstimate]] = {}
            for i, row in enumerate(reader, start=2):
                if row.get("m") == "fit":
                    continue
                try:
                    est = ShellEstimate(int(row["m"]), float(row["p"]), float(row["mass"]),
                                        float(row["stderr"]), int(row["samples"]))
                except (KeyError, TypeError, ValueError) as exc:
                    raise ParseError(f"{path}, line {i}: {exc}") from None
                by_p.setdefault(est.p, []).append(est)
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from None
    return by_p


def cmd_fit(cfg: RunConfig, args):
    if not args.input:
        raise ValidationError("fit needs --input <scan csv>")
    rows, code = _fit_rows(cfg, read_scan_csv(args.input))
    return SCAN_COLUMNS, rows, code


def cmd_check_asymptotics(cfg: RunConfig, args):
    v, ch = cfg.variety, cfg.checks
    region = RegionR(cfg.delta1, cfg.E)
    cols = ["x_norm", "y1", "lambda", "abs_k", "abs_M", "ratio", "M_scaled", "E1_scaled", "E2_scaled",
            "E3_scaled", "sum_diff", "err_est"]
    rows = []
    for x in np.geomspace(ch.x_min, ch.x_max, ch.points):
        y = region.ray_point(v, float(x))
        dec, ref, ref_err = decomposition_check(v, float(x), y, max_evals=200_000_000)
        st = stationary_phase_main(v, float(x), y)
        sc = dec.scaled(v.n)
        rows.append({"x_norm": float(x), "y1": y[0], "lambda": st.lam, "abs_k": abs(ref),
                     "abs_M": abs(st.value), "ratio": abs(ref) / abs(st.value),
                     "M_scaled": sc["M"], "E1_scaled": sc["E1"], "E2_scaled": sc["E2"],
                     "E3_scaled": sc["E3"], "sum_diff": abs(dec.total - ref),
                     "err_est": dec.err_est + ref_err})
    return cols, rows, 0


def cmd_check_vdc(cfg: RunConfig, args):
    ch = cfg.checks
    cases = [("fresnel", c) for c in fresnel_suite(np.geomspace(10, 1e4, ch.vdc_lambdas), cfg.variety.delta)]
    cases += [("random", c) for c in random_radial_suite(ch.vdc_random, cfg.seed)]
    rows = []
    for i, (family, case) in enumerate(cases):
        ratio, kappa = vdc_ratio(case)
        rows.append({"case": i, "family": family, "kappa": kappa, "ratio": ratio})
    return ["case", "family", "kappa", "ratio"], rows, 0


def h_ratio_decade(v: Variety, decade: int, samples: int, seed: int) -> np.ndarray:
    """H / |y|^{1/d_max} at random (x, y) with |y| log-uniform in one decade, |x| <= |y|."""
    rng = np.random.default_rng([seed, decade])
    ny = 10.0 ** rng.uniform(decade, decade + 1, samples)
    g = rng.standard_normal((samples, v.L1))
    y = ny[:, None] * g / np.linalg.norm(g, axis=1, keepdims=True)
    lin = ny * rng.random(samples) * np.where(rng.random(samples) < 0.5, -1.0, 1.0)
    H, _ = h_inf_batch(lin, y, v.d, (-v.delta, v.delta))
    return H / ny ** (1.0 / v.d_max)


def cmd_check_h(cfg: RunConfig, args):
    ch = cfg.checks
    rows = []
    for dec in ch.h_decades:
        r = h_ratio_decade(cfg.variety, dec, ch.h_samples, cfg.seed)
        rows.append({"decade": dec, "samples": ch.h_samples, "min_ratio": float(r.min()),
                     "median_ratio": float(np.median(r))})
    return ["decade", "samples", "min_ratio", "median_ratio"], rows, 0


def cmd_sublevel(cfg: RunConfig, args):
    ch = cfg.checks
    cols = ["l", "m", "p", "J", "stderr", "bound_trivial", "bound_sublevel", "ratio_trivial",
            "ratio_sublevel", "status"]
    rows = []
    for m in range(ch.sublevel_m[0], ch.sublevel_m[1] + 1):
        for l in range(ch.sublevel_l[0], ch.sublevel_l[1] + 1):
            try:
                r = sublevel_measure(cfg.variety, l, m, ch.sublevel_p, ch.sublevel_samples, cfg.seed)
            except InsufficientSamples:
                rows.append({"l": l, "m": m, "p": ch.sublevel_p, "status": "insufficient"})
                continue
            rows.append({"l": l, "m": m, "p": ch.sublevel_p, "J": r.value, "stderr": r.stderr,
                         "bound_trivial": r.bound_trivial, "bound_sublevel": r.bound_sublevel,
                         "ratio_trivial": r.ratio_trivial, "ratio_sublevel": r.ratio_sublevel,
                         "status": "ok"})
    return cols, rows, 0


HANDLERS = {
    "exponents": cmd_exponents,
    "eval-kernel": cmd_eval_kernel,
    "scan": cmd_scan,
    "fit": cmd_fit,
    "check-asymptotics": cmd_check_asymptotics,
    "check-vdc": cmd_check_vdc,
    "check-h": cmd_check_h,
    "sublevel": cmd_sublevel,
}


# ---------------------------------------------------------------------------
# cache


class ResultCache:
    """Files <key>.csv and <key>.json under ``root``; the key is the sha256 of
    the canonical config (which includes the package version)."""

    def __init__(self, root):
        self.root = Path(root)

    @staticmethod
    def key(canonical: str) -> str:
        return hashlib.sha256(canonical.encode()).hexdigest()

    def lookup(self, canonical: str):
        key = self.key(canonical)
        csv_path, meta_path = self.root / f"{key}.csv", self.root / f"{key}.json"
        if not meta_path.exists():
            return None
        try:
            meta = json.loads(meta_path.read_text())
            payload = csv_path.read_bytes()
        except (OSError, json.JSONDecodeError) as exc:
            raise CacheIoError(f"unreadable cache entry {key}: {exc}") from None
        if meta.get("config") != canonical:
            raise CacheIoError(f"cache entry {key} does not match the requested config")
        if meta.get("payload_sha256") != hashlib.sha256(payload).hexdigest():
            raise CacheIoError(f"cache entry {key} is corrupted")
        return payload, int(meta.get("exit_code", 0))

    def store(self, canonical: str, payload: bytes, exit_code: int, runtime: float, seed: int) -> None:
        key = self.key(canonical)
        try:
            self.root.mkdir(parents=True, exist_ok=True)
            tmp = self.root / f"{key}.csv.tmp"
            tmp.write_bytes(payload)
            os.replace(tmp, self.root / f"{key}.csv")
            meta = {"config": canonical, "timestamp": time.time(), "runtime": runtime, "seed": seed,
                    "exit_code": exit_code, "payload_sha256": hashlib.sha256(payload).hexdigest()}
            tmp = self.root / f"{key}.json.tmp"
            tmp.write_text(json.dumps(meta, sort_keys=True))
            os.replace(tmp, self.root / f"{key}.json")
        except OSError as exc:
            raise CacheIoError(f"cannot write cache entry {key}: {exc}") from None


def run(command: str, cfg: RunConfig, args=None, use_cache: bool = True) -> tuple[bytes, int]:
    """Execute one command and return (CSV bytes, exit code)."""
    if command not in HANDLERS:
        raise ValidationError(f"unknown command {command!r}")
    args = args or argparse.Namespace(input=None)
    extra = None
    if command == "fit" and getattr(args, "input", None):
        try:
            extra = {"input_sha256": hashlib.sha256(Path(args.input).read_bytes()).hexdigest()}
        except OSError as exc:
            raise ParseError(f"cannot read {args.input}: {exc}") from None
    canonical = cfg.canonical(command, extra)
    cache = ResultCache(cfg.cache_dir) if (use_cache and cfg.cache_dir) else None
    if cache is not None:
        try:
            hit = cache.lookup(canonical)
        except CacheIoError as exc:
            log.warning("%s; recomputing", exc)
            hit = None
        if hit is not None:
            log.info("cache hit %s", cache.key(canonical))
            return hit
    t0 = time.perf_counter()
    cols, rows, code = HANDLERS[command](cfg, args)
    payload = to_csv(cols, rows)
    if cache is not None:
        try:
            cache.store(canonical, payload, code, time.perf_counter() - t0, cfg.seed)
        except CacheIoError as exc:
            log.warning("%s", exc)
    return payload, code


# ---------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.replace(";", ",").split(",") if t.strip()]


def _ints(text: str) -> list[int]:
    return [int(t) for t in text.replace(";", ",").split(",") if t.strip()]


def _threads(text: str):
    return "auto" if text == "auto" else int(text)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="brkl", description="Bochner-Riesz kernel experiments for radial monomial varieties.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="JSON config file")
    ap.add_argument("--out", help="write CSV here instead of stdout")
    ap.add_argument("--n", type=int)
    ap.add_argument("--L", type=int)
    ap.add_argument("--L1", type=int)
    ap.add_argument("--d", type=_ints, help="comma separated exponents, e.g. 2,4")
    ap.add_argument("--delta", type=float)
    ap.add_argument("--alpha", type=float)
    ap.add_argument("--p", type=_floats, help="comma separated exponents for scan")
    ap.add_argument("--m-min", dest="m_min", type=int)
    ap.add_argument("--m-max", dest="m_max", type=int)
    ap.add_argument("--samples", type=int)
    ap.add_argument("--mode", choices=("uniform", "region"))
    ap.add_argument("--delta1", type=float)
    ap.add_argument("--E", type=float)
    ap.add_argument("--seed", type=int)
    ap.add_argument("--threads", type=_threads, help="worker threads or 'auto'")
    ap.add_argument("--x", type=_floats)
    ap.add_argument("--y", type=_floats)
    ap.add_argument("--z", type=_floats)
    ap.add_argument("--input", help="scan CSV for the fit command")
    ap.add_argument("--cache-dir", dest="cache_dir")
    ap.add_argument("--no-cache", action="store_true")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = {k: getattr(args, k) for k in ("n", "L", "L1", "d", "delta", "alpha", "p", "m_min", "m_max",
                                                 "samples", "mode", "delta1", "E", "seed", "threads",
                                                 "cache_dir")}
    if args.x is not None or args.y is not None or args.z is not None:
        overrides["point"] = {"x": args.x or [], "y": args.y or [], "z": args.z or []}
    try:
        cfg = parse_config(args.config, overrides)
        payload, code = run(args.command, cfg, args, use_cache=not args.no_cache)
    except BrklError as exc:
        print(f"brkl: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    if args.out:
        Path(args.out).write_bytes(payload)
    else:
        sys.stdout.buffer.write(payload)
        sys.stdout.flush()
    return code


if __name__ == "__main__":
    sys.exit(main())
