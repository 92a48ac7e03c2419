"""Command-line front end.

Every command reads one JSON config (``--config``); scalar fields can be
overridden with ``--set key=value``. Tables are written as CSV, reports as
JSON, to ``--out`` or standard output.

Exit codes: 0 ok, 1 verification failure, 2 config error, 3 capacity error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Sequence

from .constructions import default_q_tilde, direct_construct, length_threshold
from .core import CapacityError, InvalidInputError, VlirError
from .mappings import avg_distance_by_mixture, evaluate
from .quantities import (format_value, max_cross_entropy, min_restricted_entropy,
                         spectral_sup_quantile)
from .sources import SourceModel, block_distribution, block_spectrum

EXIT_OK, EXIT_FAILED, EXIT_CONFIG, EXIT_CAPACITY = 0, 1, 2, 3

G_LOWER_MODES = ("exact", "greedy", "auto")

DEFAULT_VERIFY = {
    "closed_form": {"n_dists": 200},
    "sampler": {"n_dists": 20, "trials": 2000},
    "restricted": {"n_dists": 50},
    "converse": {"supports": [1, 2, 3], "dists_per_support": 2, "random_maps": 2000},
    "packing": {"n_instances": 100},
}


class ConfigError(InvalidInputError):
    pass


@dataclass
class RunConfig:
    source: SourceModel
    eps: float = 0.0
    tau: list = field(default_factory=lambda: [0.0])
    n: list = field(default_factory=lambda: [1])
    gamma: float = 0.25
    R: float = 0.0
    g_lower_mode: str = "auto"
    seed: int = 0
    verify: dict = field(default_factory=dict)
    map_out: Optional[str] = None

    @classmethod
    def from_json(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        known = {"source", "eps", "tau", "n", "gamma", "R", "g_lower_mode", "seed",
                 "verify", "map_out"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        if "source" not in data:
            # verify can run without a source
            data = {**data, "source": {"kind": "iid", "symbols": {"0": 0.5, "1": 0.5}}}
        tau = data.get("tau", [0.0])
        n = data.get("n", [1])
        cfg = cls(
            source=SourceModel.from_json(data["source"]),
            eps=float(data.get("eps", 0.0)),
            tau=[float(t) for t in (tau if isinstance(tau, list) else [tau])],
            n=[int(k) for k in (n if isinstance(n, list) else [n])],
            gamma=float(data.get("gamma", 0.25)),
            R=float(data.get("R", 0.0)),
            g_lower_mode=str(data.get("g_lower_mode", "auto")),
            seed=int(data.get("seed", 0)),
            verify=dict(data.get("verify", {})),
            map_out=data.get("map_out"),
        )
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if not 0 <= self.eps < 1:
            raise ConfigError(f"eps must lie in [0, 1), got {self.eps!r}")
        for t in self.tau:
            if t < 0 or self.eps + t >= 1:
                raise ConfigError(f"need tau >= 0 and eps + tau < 1, got tau={t!r}")
        if not self.n or any(k < 1 for k in self.n):
            raise ConfigError("n must be a nonempty list of positive integers")
        if not self.tau:
            raise ConfigError("tau must be a nonempty list")
        if self.g_lower_mode not in G_LOWER_MODES:
            raise ConfigError(f"g_lower_mode must be one of {G_LOWER_MODES}")

    def grid(self) -> list[tuple[int, float]]:
        return [(n, t) for n in self.n for t in self.tau]


def _apply_overrides(data: dict, pairs: Sequence[str]) -> dict:
    data = dict(data)
    for pair in pairs:
        key, sep, raw = pair.partition("=")
        if not sep:
            raise ConfigError(f"--set expects key=value, got {pair!r}")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        if isinstance(value, (dict,)):
            raise ConfigError(f"--set only overrides scalar or list fields, got {key!r}")
        data[key] = value
    return data


def load_config(path: Optional[str], overrides: Sequence[str] = (),
                seed: Optional[int] = None) -> RunConfig:
    data: dict = {}
    if path:
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
    data = _apply_overrides(data, overrides)
    if seed is not None:
        data["seed"] = seed
    try:
        return RunConfig.from_json(data)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, InvalidInputError):
            raise
        raise ConfigError(f"malformed config: {exc}") from None


def _csv(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(x) for x in row])
    return buf.getvalue()


def _cell(x: Any) -> str:
    if isinstance(x, float):
        v = format_value(x)
        return v if isinstance(v, str) else repr(v)
    return str(x)


def _parallel_map(fn: Callable, items: list, jobs: int) -> list:
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# grid commands


def _g_lower(spec, delta: float, mode: str) -> float:
    if mode == "auto":
        try:
            return min_restricted_entropy(spec, delta, "exact").value
        except CapacityError:
            return min_restricted_entropy(spec, delta, "greedy").value
    return min_restricted_entropy(spec, delta, mode).value


def _quantity_row(args) -> list:
    src_json, n, tau, eps, mode = args
    spec = block_spectrum(SourceModel.from_json(src_json), n)
    delta = eps + tau
    return [n, tau,
            max_cross_entropy(spec, delta).value / n,
            _g_lower(spec, delta, mode) / n,
            spectral_sup_quantile(spec, delta, n)]


def cmd_quantities(cfg: RunConfig, jobs: int = 1) -> str:
    """Table of the per-symbol quantities at deficiency ``eps + tau`` over the grid."""
    items = [(cfg.source.to_json(), n, t, cfg.eps, cfg.g_lower_mode) for n, t in cfg.grid()]
    rows = _parallel_map(_quantity_row, items, jobs)
    return _csv(["n", "tau", "g_upper_per_n", "g_lower_per_n", "h_quantile"], rows)


def _second_order_row(args) -> list:
    src_json, n, tau, eps, R = args
    g = max_cross_entropy(block_spectrum(SourceModel.from_json(src_json), n), eps + tau).value
    return [n, tau, (g - n * R) / math.sqrt(n)]


def cmd_second_order(cfg: RunConfig, jobs: int = 1) -> str:
    """Table of ``(G(X^n) - nR) / sqrt(n)`` over the grid."""
    if cfg.R < 0:
        raise ConfigError(f"R must be nonnegative, got {cfg.R!r}")
    items = [(cfg.source.to_json(), n, t, cfg.eps, cfg.R) for n, t in cfg.grid()]
    return _csv(["n", "tau", "value"], _parallel_map(_second_order_row, items, jobs))


def _duality_row(args) -> list:
    src_json, n, tau, eps, mode = args
    spec = block_spectrum(SourceModel.from_json(src_json), n)
    delta = eps + tau
    return [n, tau, _g_lower(spec, delta, mode) / n, max_cross_entropy(spec, delta).value / n]


def cmd_duality(cfg: RunConfig, jobs: int = 1) -> str:
    """Restricted-entropy infimum next to the cross-entropy supremum over the grid."""
    items = [(cfg.source.to_json(), n, t, cfg.eps, cfg.g_lower_mode) for n, t in cfg.grid()]
    return _csv(["n", "tau", "g_lower_per_n", "g_upper_per_n"],
                _parallel_map(_duality_row, items, jobs))


# ---------------------------------------------------------------------------
# construct


def construct_report(cfg: RunConfig, n: int, tau: float) -> tuple[dict, dict]:
    threshold = length_threshold(cfg.gamma) if 0 < cfg.gamma < 0.5 else math.inf
    if n < threshold - 1e-12:
        raise ConfigError(
            f"n={n} is too small for gamma={cfg.gamma!r}; the minimal n is "
            f"{math.ceil(threshold - 1e-12) if math.isfinite(threshold) else 'undefined'}")
    dist = block_distribution(cfg.source, n)
    q = default_q_tilde(dist, cfg.eps + tau)
    phi, guar = direct_construct(dist, q, cfg.gamma, n, tau=tau)
    mm = evaluate(phi, dist)
    report = {
        "n": n, "tau": tau, "eps": cfg.eps, "gamma": cfg.gamma,
        "measured_d_bar": mm.d_bar,
        "mixture_route_d_bar": avg_distance_by_mixture(phi, dist),
        "distance_bound": guar.distance_bound,
        "measured_mean_length": mm.mean_length,
        "length_bound": guar.length_bound,
        "holds": [mm.d_bar <= guar.distance_bound, mm.mean_length >= guar.length_bound],
        "guarantees": guar.to_json(),
    }
    return report, phi.to_json()


def cmd_construct(cfg: RunConfig) -> tuple[str, bool]:
    reports, maps = [], {}
    for n, t in cfg.grid():
        rep, m = construct_report(cfg, n, t)
        reports.append(rep)
        maps[f"n={n},tau={t!r}"] = m
    if cfg.map_out:
        with open(cfg.map_out, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(maps, fh, sort_keys=True)
            fh.write("\n")
    ok = all(all(r["holds"]) for r in reports)
    return _json({"reports": reports, "holds": ok}), ok


# ---------------------------------------------------------------------------
# verify


def cmd_verify(cfg: RunConfig, closed_form: Optional[Callable] = None) -> tuple[str, bool]:
    """Run the oracle suites; ``closed_form`` replaces the cross-entropy closed form."""
    from . import oracles

    opts = {k: dict(v) for k, v in DEFAULT_VERIFY.items()}
    for k, v in cfg.verify.items():
        if k not in opts:
            raise ConfigError(f"unknown verify suite {k!r}")
        opts[k].update(v)
    seed = cfg.seed
    reports = [
        oracles.suite_closed_form(seed=seed, closed_form=closed_form, **opts["closed_form"]),
        oracles.suite_sampler(seed=seed + 1, **opts["sampler"]),
        oracles.suite_restricted(seed=seed + 2, **opts["restricted"]),
        oracles.suite_converse(seed=seed + 3, **opts["converse"]),
        oracles.suite_packing(seed=seed + 4, **opts["packing"]),
    ]
    ok = all(r.agreed for r in reports)
    return _json({"seed": seed, "agreed": ok, "reports": [r.to_json() for r in reports]}), ok


def _corrupted_closed_form(dist, delta):
    v = max_cross_entropy(dist, delta).value
    return v if math.isinf(v) else v + 1e-6


def _json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, default=_json_default) + "\n"


def _json_default(x):
    if hasattr(x, "item"):
        return x.item()
    if hasattr(x, "tolist"):
        return x.tolist()
    raise TypeError(f"not serialisable: {type(x).__name__}")


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vlir", description="Variable-length intrinsic randomness toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "quantities": "per-symbol quantity grid (CSV)",
        "construct": "build maps and check their guarantees (JSON)",
        "verify": "run the oracle suites (JSON); nonzero exit on failure",
        "second-order": "second-order terms of the cross-entropy sup (CSV)",
        "duality": "restricted-entropy inf next to cross-entropy sup (CSV)",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", metavar="PATH", help="JSON run config")
        p.add_argument("--out", metavar="PATH", help="output file (default: stdout)")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--jobs", type=int, default=1, help="worker processes for grid points")
        p.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="KEY=VALUE", help="override a config field (JSON value)")
        if name == "verify":
            p.add_argument("--corrupt-closed-form", action="store_true", help=argparse.SUPPRESS)
    return parser


def _write(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.overrides, args.seed)
        jobs = max(1, args.jobs)
        ok = True
        if args.command == "quantities":
            text = cmd_quantities(cfg, jobs)
        elif args.command == "second-order":
            text = cmd_second_order(cfg, jobs)
        elif args.command == "duality":
            text = cmd_duality(cfg, jobs)
        elif args.command == "construct":
            text, ok = cmd_construct(cfg)
        else:
            cf = _corrupted_closed_form if args.corrupt_closed_form else None
            text, ok = cmd_verify(cfg, cf)
        _write(text, args.out)
    except CapacityError as exc:
        print(f"vlir: capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except InvalidInputError as exc:
        print(f"vlir: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except VlirError as exc:
        print(f"vlir: error: {exc}", file=sys.stderr)
        return EXIT_FAILED
    return EXIT_OK if ok else EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
