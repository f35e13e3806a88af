"""Command-line entry point.

Every command reads a JSON config (validated against the published schemas),
derives all randomness from --seed, and writes machine-readable output whose
header carries the config hash and tool version. Exit codes: 0 success,
2 config validation failure, 3 numerical tolerance failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import logging
import os
import sys

import jsonschema
import numpy as np

from . import __version__
from .activations import ActivationSpec, activation
from .cnn import forward, random_params
from .errors import ConfigError, FitError, HarmonicaError
from .image import (PatchConfig, extract_patches, grid_locations, load_image,
                    sample_uniform_batch)
from .kernel import KernelSpec, TruncationConfig, build_kernel, eval_kernel
from .krr import (Schedule, SourceTarget, closed_form_top_eigs, cnn_target,
                  learning_curve, nystrom_eigs)
from .schema import SCHEMAS
from .spectrum import (SpectralExpansion, enumerate_spectrum, fit_decay,
                       lambda_table)

log = logging.getLogger("harmonica")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_TOLERANCE = 3


def _setup_logging() -> None:
    level = os.environ.get("HARMONICA_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def load_config(path: str, command: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: "
            f"{exc.msg}") from exc
    validator = jsonschema.Draft202012Validator(SCHEMAS[command])
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        where = "$" + "".join(f".{p}" if isinstance(p, str) else f"[{p}]"
                              for p in e.absolute_path)
        raise ConfigError(f"{path}: {where}: {e.message}")
    return cfg


def config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def write_csv(path: str, command: str, cfg: dict, seed: int,
              columns: list, rows: list) -> None:
    lines = [f"# harmonica {__version__}",
             f"# command: {command}",
             f"# config_sha256: {config_hash(cfg)}",
             f"# seed: {seed}",
             "# columns: " + ",".join(columns)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_json(path: str, command: str, cfg: dict, seed: int,
               payload: dict) -> None:
    doc = {"harmonica": __version__, "command": command,
           "config_sha256": config_hash(cfg), "seed": seed}
    doc.update(payload)
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _activation_from(doc: dict) -> ActivationSpec:
    return activation(doc["activation"], coeffs=doc.get("coeffs"),
                      ratio=doc.get("ratio"))


def kernel_from_config(doc: dict) -> KernelSpec:
    trunc = TruncationConfig.from_dict(doc.get("truncation", {}))
    acts = [_activation_from(a) for a in doc["layers"]]
    return build_kernel(acts, int(doc["n"]), int(doc["d"]), trunc)


def _table_for(spec: KernelSpec, k_max: int):
    a_needed = spec.q_cap
    if a_needed > spec.trunc.a_max:
        raise ConfigError(
            f"outer degree {a_needed} exceeds configured A_max={spec.trunc.a_max}")
    return lambda_table(spec.f1, spec.d, k_max, a_needed,
                        s_tol=spec.trunc.s_tol)


def cmd_spectrum(cfg: dict, out: str, seed: int, args) -> int:
    spec = kernel_from_config(cfg["kernel"])
    k_max = args.kmax or cfg.get("k_max", spec.trunc.k_max)
    table = _table_for(spec, k_max)
    entries = enumerate_spectrum(spec, table, k_max)
    rows = [(rank + 1, e.mu, e.multiplicity,
             ";".join(str(k) for k in e.profile))
            for rank, e in enumerate(entries)]
    write_csv(out, "spectrum", cfg, seed,
              ["rank", "mu", "multiplicity", "profile"], rows)
    summary = {
        "kappa": table.kappa,
        "entries": int(sum(e.multiplicity for e in entries)),
        "distinct_profiles": len(entries),
        "max_interaction_order": max(
            (sum(1 for k in e.profile if k) for e in entries), default=0),
        "d_star": spec.d_star,
    }
    try:
        lo, hi = cfg.get("fit_rank_range", (1, 10 ** 9))
        fit = fit_decay(entries, m_min=lo, m_max=min(
            hi, sum(e.multiplicity for e in entries)))
        summary.update({"p": fit["exponent_p"], "gamma": fit["gamma"],
                        "goodness": fit["goodness"],
                        "counting_slope": _finite_or_none(fit["counting_slope"])})
    except FitError as exc:
        log.info("decay fit skipped: %s", exc)
        summary.update({"p": None, "gamma": None, "goodness": None,
                        "counting_slope": None})
    write_json(_json_path(out), "spectrum", cfg, seed, summary)
    return EXIT_OK


def _finite_or_none(v: float):
    return float(v) if np.isfinite(v) else None


def _json_path(out: str) -> str:
    root, ext = os.path.splitext(out)
    return root + ".json" if ext != ".json" else root + "_summary.json"


def cmd_reconstruct(cfg: dict, out: str, seed: int, args) -> int:
    spec = kernel_from_config(cfg["kernel"])
    k_max = args.kmax or cfg.get("k_max", spec.trunc.k_max)
    tol = args.tolerance or cfg.get("tolerance", 1e-5)
    pairs = int(cfg.get("pairs", 100))
    table = _table_for(spec, k_max)
    expansion = SpectralExpansion(spec, table, k_max)
    xs = sample_uniform_batch(pairs, spec.n, spec.d, (seed, 0))
    ys = sample_uniform_batch(pairs, spec.n, spec.d, (seed, 1))
    scale = spec.diag_value()
    rows = []
    worst = 0.0
    for i, (x, y) in enumerate(zip(xs, ys)):
        direct = eval_kernel(spec, x, y)
        spectral = expansion.reconstruct(x, y)
        err = abs(direct - spectral)
        worst = max(worst, err / scale)
        rows.append((i, direct, spectral, err))
    write_csv(out, "reconstruct", cfg, seed,
              ["pair_id", "direct", "spectral", "abs_err"], rows)
    if worst > tol:
        log.error("max relative reconstruction error %.3e > %.1e", worst, tol)
        return EXIT_TOLERANCE
    return EXIT_OK


def _network_from(cfg_net: dict, n: int, d: int, seed) -> tuple:
    acts = [_activation_from(a) for a in cfg_net["activations"]]
    params = random_params(
        n, d, cfg_net["filters"], cfg_net.get("patch_sizes", ()), seed=seed,
        boundary=cfg_net.get("boundary", "circular"),
        pooling=cfg_net.get("pooling", "identity"))
    scale = cfg_net.get("weight_scale")
    if scale is not None:
        params = dataclasses.replace(params, w_out=params.w_out * float(scale))
    if len(acts) != params.num_layers:
        raise ConfigError("network activations must match filter count")
    return params, acts


def _target_from(cfg: dict, spec: KernelSpec, seed):
    doc = cfg["target"]
    kind = doc["type"]
    if kind == "zero":
        return lambda x: 0.0
    if kind == "network":
        params, acts = _network_from(doc["network"], spec.n, spec.d, (seed, 7))
        return cnn_target(params, acts)
    profiles = [(tuple(p["degrees"]), p.get("coeff", 1.0))
                for p in doc.get("profiles", [{"degrees": [1], "coeff": 1.0}])]
    k_hi = max((max(p) for p, _ in profiles), default=1)
    table = _table_for(spec, max(k_hi, 1))
    anchor = sample_uniform_batch(1, spec.n, spec.d, (seed, 99))[0]
    return SourceTarget(spec, table, anchor, profiles,
                        beta=doc.get("beta", 1.0))


def cmd_learning_curve(cfg: dict, out: str, seed: int, args) -> int:
    spec = kernel_from_config(cfg["kernel"])
    sched = Schedule(beta=float(cfg["schedule"]["beta"]),
                     mu_exp=float(cfg["schedule"].get("mu_exp", 0.0)))
    target = _target_from(cfg, spec, seed)
    table_rows = learning_curve(
        spec, target, sched, cfg["sizes"], int(cfg.get("test_size", 2000)),
        seed, threads=args.threads)
    rows = [(r["ell"], r["lambda"], r["train_mse"], r["test_mse"], seed)
            for r in table_rows]
    write_csv(out, "learning-curve", cfg, seed,
              ["ell", "lambda", "train_mse", "test_mse", "seed"], rows)
    return EXIT_OK


def cmd_gram_eig(cfg: dict, out: str, seed: int, args) -> int:
    spec = kernel_from_config(cfg["kernel"])
    k_max = args.kmax or cfg.get("k_max", spec.trunc.k_max)
    ell = int(cfg.get("ell", 2000))
    top_k = int(cfg.get("top_k", 10))
    table = _table_for(spec, k_max)
    entries = enumerate_spectrum(spec, table, k_max)
    closed = closed_form_top_eigs(spec, table, entries, top_k)
    if closed.size < top_k:
        raise ConfigError(f"spectrum has only {closed.size} positive "
                          f"eigenvalues below k_max={k_max}; top_k too large")
    nys = nystrom_eigs(spec, ell, top_k, seed)
    rows = [(i + 1, nys[i], closed[i], abs(nys[i] - closed[i]) / closed[i])
            for i in range(top_k)]
    write_csv(out, "gram-eig", cfg, seed,
              ["rank", "nystrom", "closed_form", "rel_err"], rows)
    return EXIT_OK


def cmd_cnn_label(cfg: dict, out: str, seed: int, args) -> int:
    if "images" in cfg:
        doc = cfg["images"]
        r = int(doc["r"])
        xs = []
        for path in doc["paths"]:
            img = load_image(path)
            locs = doc.get("locations")
            if locs is None:
                locs = grid_locations(img.h, img.w, r, doc.get("stride"))
            pc = PatchConfig(r=r, locations=tuple(tuple(v) for v in locs))
            xs.append(extract_patches(img, pc))
        n, d = xs[0].n, xs[0].d
        if any(x.n != n or x.d != d for x in xs):
            raise ConfigError("images yield inconsistent patch layouts")
    else:
        if "n" not in cfg or "d" not in cfg:
            raise ConfigError("synthetic sampling needs n and d")
        n, d = int(cfg["n"]), int(cfg["d"])
        xs = sample_uniform_batch(int(cfg.get("count", 100)), n, d, (seed, 3))
    params, acts = _network_from(cfg["network"], n, d, (seed, 7))
    lines = [json.dumps({"harmonica": __version__, "command": "cnn-label",
                         "config_sha256": config_hash(cfg), "seed": seed},
                        sort_keys=True)]
    for x in xs:
        label = forward(params, acts, x)
        lines.append(json.dumps(
            {"patches": [[float(f"{v:.17g}") for v in row] for row in x.patches],
             "label": float(f"{label:.17g}")}, sort_keys=True))
    with open(out, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return EXIT_OK


COMMANDS = {
    "spectrum": cmd_spectrum,
    "reconstruct": cmd_reconstruct,
    "learning-curve": cmd_learning_curve,
    "gram-eig": cmd_gram_eig,
    "cnn-label": cmd_cnn_label,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="harmonica",
        description="Multi-layer spherical kernels: spectra, reconstruction, "
                    "and regularized least-squares experiments.")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", required=True, help="JSON run configuration")
    ap.add_argument("--out", required=True, help="output file path")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--kmax", type=int, default=None,
                    help="override the spectral degree cutoff")
    ap.add_argument("--tolerance", type=float, default=None,
                    help="failure threshold for reconstruct")
    return ap


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.command)
        return COMMANDS[args.command](cfg, args.out, args.seed, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except HarmonicaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TOLERANCE


if __name__ == "__main__":
    sys.exit(main())
