"""Batch front end: subcommands, config resolution, CSV and figure output.

Configuration values resolve in three layers: built-in defaults, then a
JSON config file (``--config``), then explicit command-line flags.  The
environment variable ``LOSSYGBS_SEED``, when set, overrides the seed from
all layers (useful for CI sweeps).  Each command writes a CSV with a header
row, a ``<out>.meta.json`` sidecar echoing the fully resolved configuration
including the derived expansion scale epsilon, and unless ``--no-plot`` is
given, a PNG figure rendered from the same rows.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .bench import fit_slopes, run_bench
from .estimator import cosine_similarity, estimate_distribution
from .model import ModelParams, derive_params
from .oracle import enumerate_patterns, exact_probability
from .traces import OutputPattern
from .unitary import UnitaryMatrix, haar_random, load_unitary, save_unitary

SEED_ENV_VAR = "LOSSYGBS_SEED"
EPSILON_WARN = 0.25


class ConfigError(Exception):
    """A configuration field is missing, malformed or contradictory."""


@dataclass
class RunConfig:
    alpha: float | None = None
    loss_s2: float | None = None
    unitary: str | None = None
    n: int | None = None
    haar_seed: int | None = None
    patterns: list[tuple[int, ...]] | None = None
    all_photons: int | None = None
    order: int = 4
    samples: int = 4096
    seed: int = 0
    workers: int = field(default_factory=lambda: os.cpu_count() or 1)
    out: str | None = None
    plot: bool = True
    schedule: list[int] | None = None
    n_list: list[int] | None = None
    m_list: list[int] | None = None
    reps: int = 5
    batch: int = 128


_CONFIG_KEYS = set(RunConfig.__dataclass_fields__)


def _load_config_file(path: str) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"config: {path} must hold a JSON object")
    flat = dict(doc)
    # Nested source objects mirror the flag spelling of the same fields.
    unitary = flat.pop("unitary", None)
    if isinstance(unitary, dict):
        if "path" in unitary:
            flat["unitary"] = unitary["path"]
        else:
            flat.update({k: unitary[k] for k in ("n", "haar_seed") if k in unitary})
    elif unitary is not None:
        flat["unitary"] = unitary
    patterns = flat.pop("patterns", None)
    if isinstance(patterns, dict):
        if "list" in patterns:
            flat["patterns"] = patterns["list"]
        if "total_photons" in patterns:
            flat["all_photons"] = patterns["total_photons"]
    elif patterns is not None:
        flat["patterns"] = patterns
    unknown = set(flat) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"config: unknown fields {sorted(unknown)}")
    return flat


def _resolve(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    if getattr(args, "config", None):
        for key, value in _load_config_file(args.config).items():
            setattr(cfg, key, value)
    for key in _CONFIG_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            setattr(cfg, key, value)
    if getattr(args, "no_plot", False):
        cfg.plot = False
    env_seed = os.environ.get(SEED_ENV_VAR)
    if env_seed is not None:
        try:
            cfg.seed = int(env_seed)
        except ValueError as exc:
            raise ConfigError(f"{SEED_ENV_VAR} must be an integer, got {env_seed!r}") from exc
    if cfg.patterns is not None:
        cfg.patterns = [tuple(int(c) for c in p) for p in cfg.patterns]
    return cfg


def _require(cfg: RunConfig, *names: str) -> None:
    missing = [n for n in names if getattr(cfg, n) is None]
    if missing:
        raise ConfigError(f"missing required field(s): {', '.join(missing)}")


def _params(cfg: RunConfig) -> ModelParams:
    _require(cfg, "alpha", "loss_s2")
    try:
        params = derive_params(cfg.alpha, cfg.loss_s2)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    print(f"epsilon = {params.epsilon:.6f}", file=sys.stderr)
    if params.epsilon > EPSILON_WARN:
        print(
            f"warning: epsilon = {params.epsilon:.3f} > {EPSILON_WARN}; "
            "the correction series converges slowly at this squeezing/loss",
            file=sys.stderr,
        )
    return params


def _unitary(cfg: RunConfig) -> UnitaryMatrix:
    has_file = cfg.unitary is not None
    has_haar = cfg.n is not None or cfg.haar_seed is not None
    if has_file and has_haar:
        raise ConfigError(
            "fields 'unitary' and 'n'/'haar_seed' are mutually exclusive; give one source"
        )
    if has_file:
        try:
            return load_unitary(cfg.unitary)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"unitary: {exc}") from exc
    if cfg.n is None or cfg.haar_seed is None:
        raise ConfigError("unitary source: give 'unitary' or both 'n' and 'haar_seed'")
    return haar_random(cfg.n, cfg.haar_seed)


def _patterns(cfg: RunConfig, n: int) -> list[OutputPattern]:
    if cfg.patterns is not None and cfg.all_photons is not None:
        raise ConfigError(
            "fields 'patterns' and 'all_photons' are mutually exclusive; give one source"
        )
    if cfg.patterns is not None:
        out = []
        for counts in cfg.patterns:
            if len(counts) != n:
                raise ConfigError(
                    f"patterns: {counts} has {len(counts)} modes, unitary has {n}"
                )
            out.append(OutputPattern(counts))
        return out
    if cfg.all_photons is not None:
        return enumerate_patterns(n, cfg.all_photons)
    raise ConfigError("pattern source: give 'patterns' or 'all_photons'")


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _pattern_label(pattern: OutputPattern) -> str:
    return ";".join(str(c) for c in pattern.counts)


def _write_csv(path: str, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _write_meta(out: str, command: str, cfg: RunConfig, params: ModelParams | None, extra: dict | None = None) -> None:
    doc: dict = {"command": command, "version": __version__}
    doc["config"] = {
        key: getattr(cfg, key)
        for key in sorted(_CONFIG_KEYS)
        if getattr(cfg, key) is not None
    }
    if params is not None:
        doc["derived"] = {
            "epsilon": params.epsilon,
            "var_chi": params.var_chi,
            "var_xi0": params.var_xi0,
            "h": params.h,
            "prefactor_per_mode": params.prefactor_per_mode,
            "norm_per_mode": params.norm_per_mode,
        }
    if extra:
        doc.update(extra)
    Path(f"{out}.meta.json").write_text(json.dumps(doc, indent=2) + "\n")


def _plot_path(out: str) -> str:
    return str(Path(out).with_suffix(".png"))


def cmd_estimate(args: argparse.Namespace) -> int:
    cfg = _resolve(args)
    _require(cfg, "out")
    params = _params(cfg)
    u = _unitary(cfg)
    patterns = _patterns(cfg, u.n)
    estimates = estimate_distribution(
        u, params, patterns, cfg.order, cfg.samples, cfg.seed, workers=cfg.workers
    )
    rows = [
        [
            _pattern_label(p),
            e.mean,
            e.stderr,
            e.stddev,
            int(e.negative),
            e.order,
            e.samples,
            cfg.seed,
        ]
        for p, e in zip(patterns, estimates)
    ]
    _write_csv(cfg.out, ["pattern", "mean", "stderr", "stddev", "negative_flag", "order", "samples", "seed"], rows)
    _write_meta(cfg.out, "estimate", cfg, params)
    if cfg.plot:
        from .plots import plot_estimates

        plot_estimates(
            [(_pattern_label(p), e.mean, e.stderr) for p, e in zip(patterns, estimates)],
            _plot_path(cfg.out),
        )
    return 0


def cmd_oracle(args: argparse.Namespace) -> int:
    cfg = _resolve(args)
    _require(cfg, "out")
    params = _params(cfg)
    u = _unitary(cfg)
    patterns = _patterns(cfg, u.n)
    rows = [[_pattern_label(p), exact_probability(u, params, p)] for p in patterns]
    _write_csv(cfg.out, ["pattern", "probability"], rows)
    _write_meta(cfg.out, "oracle", cfg, params)
    if cfg.plot:
        from .plots import plot_estimates

        plot_estimates([(r[0], r[1], 0.0) for r in rows], _plot_path(cfg.out))
    return 0


def cmd_compare(args: argparse.Namespace) -> int:
    cfg = _resolve(args)
    _require(cfg, "out")
    params = _params(cfg)
    u = _unitary(cfg)
    patterns = _patterns(cfg, u.n)
    estimates = estimate_distribution(
        u, params, patterns, cfg.order, cfg.samples, cfg.seed, workers=cfg.workers
    )
    exact = [exact_probability(u, params, p) for p in patterns]
    similarity = cosine_similarity([e.mean for e in estimates], exact)
    rows = [
        [_pattern_label(p), e.mean, x, abs(e.mean - x)]
        for p, e, x in zip(patterns, estimates, exact)
    ]
    rows.append(["cosine_similarity", similarity, "", ""])
    _write_csv(cfg.out, ["pattern", "estimate", "oracle", "abs_error"], rows)
    _write_meta(cfg.out, "compare", cfg, params, {"cosine_similarity": similarity})
    if cfg.plot:
        from .plots import plot_compare

        plot_compare(
            [
                (_pattern_label(p), e.mean, e.stderr, x)
                for p, e, x in zip(patterns, estimates, exact)
            ],
            similarity,
            _plot_path(cfg.out),
        )
    return 0


def cmd_convergence(args: argparse.Namespace) -> int:
    cfg = _resolve(args)
    _require(cfg, "out", "schedule")
    if cfg.n_list is None:
        raise ConfigError("missing required field(s): n_list")
    if cfg.haar_seed is None:
        raise ConfigError("convergence generates one unitary per n; give 'haar_seed'")
    if any(k < 2 for k in cfg.schedule):
        raise ConfigError("schedule entries must be >= 2 samples")
    params = _params(cfg)
    photons = cfg.all_photons if cfg.all_photons is not None else 2
    rows = []
    for n in cfg.n_list:
        u = haar_random(n, cfg.haar_seed)
        patterns = enumerate_patterns(n, photons)
        for k in cfg.schedule:
            first = estimate_distribution(
                u, params, patterns, cfg.order, k, cfg.seed, workers=cfg.workers
            )
            second = estimate_distribution(
                u, params, patterns, cfg.order, k + 10, cfg.seed, workers=cfg.workers
            )
            rows.append(
                [n, k, cosine_similarity([e.mean for e in first], [e.mean for e in second])]
            )
    _write_csv(cfg.out, ["n", "samples", "similarity"], rows)
    _write_meta(cfg.out, "convergence", cfg, params)
    if cfg.plot:
        from .plots import plot_convergence

        plot_convergence(rows, _plot_path(cfg.out))
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    cfg = _resolve(args)
    _require(cfg, "out")
    if cfg.n_list is None or cfg.m_list is None:
        raise ConfigError("missing required field(s): n_list, m_list")
    params = _params(cfg)
    bench_rows = run_bench(
        cfg.n_list, cfg.m_list, params,
        order=cfg.order, reps=cfg.reps, batch=cfg.batch, seed=cfg.seed,
    )
    slopes = fit_slopes(bench_rows)
    rows = [[r.n, r.photons, r.precompute_ms, r.per_sample_us] for r in bench_rows]
    _write_csv(cfg.out, ["n", "photons", "precompute_ms", "per_sample_us"], rows)
    _write_meta(cfg.out, "bench", cfg, params, {"loglog_slopes": slopes})
    for name, slope in sorted(slopes.items()):
        print(f"slope {name}: {slope:.3f}")
    if cfg.plot:
        from .plots import plot_bench

        plot_bench(bench_rows, _plot_path(cfg.out))
    return 0


def cmd_gen_unitary(args: argparse.Namespace) -> int:
    cfg = _resolve(args)
    _require(cfg, "out", "n")
    seed = cfg.haar_seed if cfg.haar_seed is not None else cfg.seed
    u = haar_random(cfg.n, seed)
    save_unitary(u, cfg.out)
    _write_meta(cfg.out, "gen-unitary", cfg, None, {"haar_seed_used": seed})
    return 0


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="JSON config file; flags override its fields")
    sub.add_argument("--alpha", type=float, help="squeezing amplitude in [0, 1)")
    sub.add_argument("--loss-s2", dest="loss_s2", type=float, help="loss level s^2 in [0, 1]")
    sub.add_argument("--order", type=int, choices=(0, 2, 4), help="correction order (default 4)")
    sub.add_argument("--samples", type=int, help="Monte Carlo samples per pattern (default 4096)")
    sub.add_argument("--seed", type=int, help="master RNG seed (default 0)")
    sub.add_argument("--workers", type=int, help="evaluation threads (default: cpu count)")
    sub.add_argument("--out", help="output CSV path")
    sub.add_argument("--no-plot", action="store_true", help="skip the PNG figure")
    sub.add_argument("--unitary", help="path to a saved unitary file")
    sub.add_argument("--n", type=int, help="mode count for a generated unitary")
    sub.add_argument("--haar-seed", dest="haar_seed", type=int, help="seed for the generated unitary")
    sub.add_argument(
        "--patterns",
        type=_parse_patterns,
        help="explicit patterns, e.g. '2,0,0;1,1,0'",
    )
    sub.add_argument(
        "--all-photons",
        dest="all_photons",
        type=int,
        help="use every pattern with this photon total",
    )


def _parse_patterns(text: str) -> list[tuple[int, ...]]:
    try:
        return [tuple(int(c) for c in part.split(",")) for part in text.split(";") if part]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad pattern list {text!r}: {exc}") from exc


def _parse_int_list(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad integer list {text!r}: {exc}") from exc


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lossygbs",
        description="Approximate lossy Gaussian boson sampling probabilities",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    p = commands.add_parser("estimate", help="Monte Carlo estimates for a pattern set")
    _add_common(p)
    p.set_defaults(func=cmd_estimate)

    p = commands.add_parser("oracle", help="exact probabilities (at most 6 photons)")
    _add_common(p)
    p.set_defaults(func=cmd_oracle)

    p = commands.add_parser("compare", help="estimates against the exact oracle")
    _add_common(p)
    p.set_defaults(func=cmd_compare)

    p = commands.add_parser("convergence", help="self-similarity of running estimates")
    _add_common(p)
    p.add_argument("--schedule", type=_parse_int_list, help="sample counts, e.g. '10,20,40'")
    p.add_argument("--n-list", dest="n_list", type=_parse_int_list, help="mode counts, e.g. '3,5'")
    p.set_defaults(func=cmd_convergence)

    p = commands.add_parser("bench", help="precompute and per-sample timings")
    _add_common(p)
    p.add_argument("--n-list", dest="n_list", type=_parse_int_list, help="mode counts, e.g. '5,10,20,40'")
    p.add_argument("--m-list", dest="m_list", type=_parse_int_list, help="photon totals, e.g. '2,4'")
    p.add_argument("--reps", type=int, help="timing repetitions (default 5)")
    p.add_argument("--batch", type=int, help="samples per timing batch (default 128)")
    p.set_defaults(func=cmd_bench)

    p = commands.add_parser("gen-unitary", help="generate and save a Haar-random unitary")
    _add_common(p)
    p.set_defaults(func=cmd_gen_unitary)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
