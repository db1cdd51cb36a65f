"""Command-line entry point: ``compnull simulate`` and ``compnull mle``."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np
import yaml

from .model import DistributionSpec, LabeledSample, MixtureModel, NullFamily, Prior, sample_mixture, table1_preset
from .prior_mle import em_fit_prior, extended_mle
from .pvalues import METHODS, PAIR_MARGINS, ConstraintVariant
from .simharness import SimConfig, SimReport, run_simulation

log = logging.getLogger("compnull")

_TOP_KEYS = {"preset", "model", "n", "reps", "alpha", "seed", "methods", "threads", "variant"}
_MODEL_KEYS = {"a", "region", "nulls", "nu", "alt"}
_VARIANT_KEYS = {"sum_lower", "pair_margin", "gamma_beta", "small_rank_exponent"}


class ConfigError(ValueError):
    """Invalid configuration; the message starts with the offending key path."""

    def __init__(self, path: str, msg: str):
        super().__init__(f"{path}: {msg}")
        self.path = path


def _check_keys(d, allowed, path):
    if not isinstance(d, dict):
        raise ConfigError(path or "<root>", "expected a mapping")
    unknown = sorted(set(d) - allowed)
    if unknown:
        raise ConfigError(f"{path}.{unknown[0]}" if path else unknown[0], "unknown key")


def _num(d, key, path, kind=float, default=None):
    if key not in d:
        if default is None:
            raise ConfigError(f"{path}.{key}" if path else key, "missing required key")
        return default
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or (kind is int and not float(v).is_integer()):
        raise ConfigError(f"{path}.{key}" if path else key, f"expected {kind.__name__}, got {v!r}")
    return kind(v)


def _dist(d, path) -> DistributionSpec:
    if not isinstance(d, dict) or "kind" not in d:
        raise ConfigError(path, "expected a mapping with a 'kind' key")
    kind = d["kind"]
    try:
        if kind == "normal":
            _check_keys(d, {"kind", "mu", "sigma"}, path)
            return DistributionSpec.normal(_num(d, "mu", path), _num(d, "sigma", path, default=1.0))
        if kind == "noncentral_t":
            _check_keys(d, {"kind", "df", "delta"}, path)
            return DistributionSpec.noncentral_t(_num(d, "df", path), _num(d, "delta", path, default=0.0))
    except ValueError as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(path, str(e)) from None
    raise ConfigError(f"{path}.kind", f"unknown distribution kind {kind!r}")


def _model(d, path="model") -> MixtureModel:
    _check_keys(d, _MODEL_KEYS, path)
    nulls = d.get("nulls")
    if not isinstance(nulls, list) or not nulls:
        raise ConfigError(f"{path}.nulls", "expected a nonempty list")
    comps = tuple(_dist(c, f"{path}.nulls[{k}]") for k, c in enumerate(nulls))
    region = d.get("region", "lower")
    nu = d.get("nu")
    if not isinstance(nu, list) or len(nu) != len(comps):
        raise ConfigError(f"{path}.nu", f"expected a list of {len(comps)} weights")
    try:
        family = NullFamily(comps, region)
    except ValueError as e:
        raise ConfigError(f"{path}.region", str(e)) from None
    try:
        prior = Prior(np.array(nu, dtype=float))
    except (ValueError, TypeError) as e:
        raise ConfigError(f"{path}.nu", str(e)) from None
    if "alt" not in d:
        raise ConfigError(f"{path}.alt", "missing required key")
    alt = _dist(d["alt"], f"{path}.alt")
    try:
        return MixtureModel(family, prior, _num(d, "a", path), alt)
    except ValueError as e:
        raise ConfigError(f"{path}.a", str(e)) from None


def _variant(d, base: ConstraintVariant) -> ConstraintVariant:
    _check_keys(d, _VARIANT_KEYS, "variant")
    fields = {
        "sum_lower": _num(d, "sum_lower", "variant", default=base.sum_lower),
        "pair_margin": d.get("pair_margin", base.pair_margin),
        "gamma_beta": _num(d, "gamma_beta", "variant", default=base.gamma_beta),
        "small_rank_exponent": _num(d, "small_rank_exponent", "variant", default=base.small_rank_exponent),
    }
    try:
        return ConstraintVariant(**fields)
    except ValueError as e:
        raise ConfigError("variant", str(e)) from None


def _methods(v, path="methods") -> tuple[str, ...]:
    if isinstance(v, str):
        v = [m for m in v.split(",") if m]
    if not isinstance(v, (list, tuple)):
        raise ConfigError(path, "expected a list of method names")
    bad = [m for m in v if m not in METHODS]
    if bad:
        raise ConfigError(path, f"unknown method {bad[0]!r}; choose from {', '.join(METHODS)}")
    return tuple(v)


def parse_config(path: str | Path | None = None, preset: int | None = None, overrides: dict | None = None) -> SimConfig:
    """Build a validated SimConfig from a YAML file and/or a preset id plus overrides.

    Override keys: n, reps, alpha, seed, methods, threads, and the variant
    fields sum_lower, pair_margin, gamma_beta, small_rank_exponent.
    """
    raw: dict = {}
    if path is not None:
        try:
            raw = yaml.safe_load(Path(path).read_text()) or {}
        except OSError as e:
            raise ConfigError(str(path), f"cannot read config: {e.strerror}") from None
        except yaml.YAMLError as e:
            raise ConfigError(str(path), f"invalid YAML: {e}") from None
    _check_keys(raw, _TOP_KEYS, "")
    if preset is not None:
        raw = {**raw, "preset": preset}
        raw.pop("model", None)
    if "preset" in raw and "model" in raw:
        raise ConfigError("model", "give either 'preset' or 'model', not both")
    if "preset" in raw:
        pid = raw["preset"]
        try:
            model = table1_preset(int(pid))
        except (ValueError, TypeError):
            raise ConfigError("preset", f"unknown preset {pid!r}; expected 1..5") from None
    elif "model" in raw:
        model = _model(raw["model"])
    else:
        raise ConfigError("model", "either 'preset' or 'model' is required")

    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    variant_raw = dict(raw.get("variant") or {})
    for key in _VARIANT_KEYS:
        if key in overrides:
            variant_raw[key] = overrides.pop(key)
    raw.update(overrides)

    variant = _variant(variant_raw, ConstraintVariant())
    defaults = SimConfig(model=model)
    try:
        return SimConfig(
            model=model,
            n=_num(raw, "n", "", int, defaults.n),
            reps=_num(raw, "reps", "", int, defaults.reps),
            alpha=_num(raw, "alpha", "", float, defaults.alpha),
            seed=_num(raw, "seed", "", int, defaults.seed),
            methods=_methods(raw["methods"]) if "methods" in raw else defaults.methods,
            threads=_num(raw, "threads", "", int, defaults.threads),
            variant=variant,
        )
    except ConfigError:
        raise
    except ValueError as e:
        raise ConfigError("<root>", str(e)) from None


def _fmt(v) -> str:
    return "" if v is None else f"{v:.6g}"


def write_outputs(report: SimReport, out_dir: str | Path) -> list[Path]:
    """Write metrics.csv, curves.csv and coeffs.csv; rows ordered by method name then index."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise OSError(f"cannot create output directory {out}: {e.strerror}") from None
    methods = sorted(report.metrics)
    paths = [out / "metrics.csv", out / "curves.csv", out / "coeffs.csv"]
    try:
        with open(paths[0], "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["method", "power", "fdr", "pfdr", "sd_tpp"])
            for m in methods:
                mt = report.metrics[m]
                w.writerow([m, _fmt(mt.power), _fmt(mt.fdr), _fmt(mt.pfdr), _fmt(mt.sd_tpp)])
        with open(paths[1], "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["method", "i_over_n", "scaled_p"])
            for m in sorted(report.curves):
                xs, ys = report.curves[m]
                for a, b in zip(xs, ys):
                    w.writerow([m, _fmt(a), _fmt(b)])
        with open(paths[2], "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["method", "i_over_n", "k", "c_avg"])
            for m in sorted(report.coeff_curves):
                xs, cs = report.coeff_curves[m]
                for a, row in zip(xs, cs):
                    for k, c in enumerate(row, start=1):
                        w.writerow([m, _fmt(a), k, _fmt(c)])
    except OSError as e:
        raise OSError(f"cannot write {e.filename}: {e.strerror}") from None
    return paths


def _read_sample_file(path: str, region: str) -> LabeledSample:
    try:
        values = [float(line) for line in Path(path).read_text().split() if line.strip()]
    except OSError as e:
        raise ConfigError(path, f"cannot read sample file: {e.strerror}") from None
    except ValueError as e:
        raise ConfigError(path, f"not a number: {e}") from None
    if not values:
        raise ConfigError(path, "sample file is empty")
    return LabeledSample.from_values(values, region)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="compnull", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run the repeated FDR/power simulation")
    src = sim.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset", type=int, choices=range(1, 6))
    src.add_argument("--config", type=str)
    sim.add_argument("--n", type=int)
    sim.add_argument("--reps", type=int)
    sim.add_argument("--alpha", type=float)
    sim.add_argument("--seed", type=int)
    sim.add_argument("--methods", type=str, help="comma-separated subset of seq,glb,max,mix")
    sim.add_argument("--sum-lower", type=float, dest="sum_lower")
    sim.add_argument("--pair-margin", choices=PAIR_MARGINS, dest="pair_margin")
    sim.add_argument("--threads", type=int)
    sim.add_argument("--out", type=str, default="out")

    mle = sub.add_parser("mle", help="fit null prior weights by maximum likelihood")
    msrc = mle.add_mutually_exclusive_group(required=True)
    msrc.add_argument("--preset", type=int, choices=range(1, 6))
    msrc.add_argument("--config", type=str)
    mle.add_argument("--sample", type=str, help="file with one observation per line")
    mle.add_argument("--n", type=int, default=20000)
    mle.add_argument("--seed", type=int, default=1)
    mle.add_argument("--a", type=float, help="false-null fraction for simulated data")
    mle.add_argument("--extended", action="store_true", help="allow negative weights")
    mle.add_argument("--max-iter", type=int, default=10000, dest="max_iter")
    mle.add_argument("--tol", type=float, default=1e-9)
    return ap


def _cmd_simulate(args) -> int:
    overrides = {
        "n": args.n,
        "reps": args.reps,
        "alpha": args.alpha,
        "seed": args.seed,
        "methods": _methods(args.methods, "--methods") if args.methods is not None else None,
        "threads": args.threads,
        "sum_lower": args.sum_lower,
        "pair_margin": args.pair_margin,
    }
    config = parse_config(args.config, args.preset, overrides)
    report = run_simulation(config, progress=True)
    for p in write_outputs(report, args.out):
        print(p)
    return 0


def _cmd_mle(args) -> int:
    config = parse_config(args.config, args.preset)
    model = config.model
    if args.sample:
        sample = _read_sample_file(args.sample, model.family.region)
    else:
        if args.a is not None:
            model = MixtureModel(model.family, model.prior, args.a, model.alt)
        sample = sample_mixture(model, args.n, args.seed)
    fit = extended_mle if args.extended else em_fit_prior
    res = fit(sample, model.family, args.max_iter, args.tol)
    print("nu_hat: " + " ".join(f"{v:.6g}" for v in res.nu_hat))
    print(f"log_likelihood: {res.log_likelihood:.10g}")
    print(f"iterations: {res.iterations}")
    print(f"converged: {str(res.converged).lower()}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if args.command == "simulate":
            return _cmd_simulate(args)
        return _cmd_mle(args)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
