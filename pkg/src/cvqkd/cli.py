"""Command line front end.

Five subcommands cover the end-to-end workflow:

* simulate: build the modeled two-mode state from a run configuration and
  print the covariance matrix plus the full key-rate report as JSON
* scan: sweep one parameter over a grid and print one CSV row per point
* sample: generate a synthetic homodyne dataset CSV for the modeled state
* reconstruct: estimate a covariance matrix from a dataset CSV
* analyze: key-rate report for a dataset CSV or a covariance JSON file

Configuration is a JSON file with the sections and field names of
DEFAULT_CONFIG; every omitted field keeps its default, the fitted
operating-point values, so `cvqkd simulate` with no arguments reproduces
the headline numbers. Command line flags override file values.

Exit codes: 0 success, 1 usage/configuration/parse error, 2 for a valid
run whose nominal key rate is not positive.
"""

from __future__ import annotations

import argparse
import copy
import json
import math
import sys

import numpy as np

from .errors import ConfigError, CvqkdError
from .gaussian import (
    covariance_from_json,
    covariance_to_json,
    epr_product,
    variance_to_db,
)
from .keyrate import secret_key_rate
from .noise import (
    ChannelParams,
    SourceParams,
    SqueezingSpec,
    detection_noise,
    loss_channel,
    make_epr_state,
    pump_to_variances,
)
from .tomography import (
    CANONICAL_SETTINGS,
    load_dataset,
    reconstruct,
    sample_homodyne,
    save_dataset,
)

DEFAULT_CONFIG = {
    "source": {
        "mode": "measured",
        "var_sqz_db": -11.1,
        "var_asqz_db": None,
        "eta": 0.941,
        "p_mw": None,
        "p_th_mw": 268.0,
        "k": 0.136,
    },
    "channel": {
        "epsilon": 0.059,
        "nu_a": 0.068,
        "nu_b": 0.068,
        "delta_a": 0.0148,
        "delta_b": 0.0148,
        "sigma_a": 0.0,
        "sigma_b": 0.0,
    },
    "analysis": {
        "n_samples": 1000000,
        "seed": 0,
        "worst_case": False,
    },
}

SCAN_COLUMNS = (
    "input_sqz_db",
    "nu",
    "delta",
    "sigma",
    "mi",
    "chi_a",
    "chi_b",
    "k_nominal",
    "k_worst_case",
    "n",
)

#: config fields that may hold JSON null
_NULLABLE = {("source", "var_sqz_db"), ("source", "var_asqz_db"), ("source", "p_mw")}


class _Parser(argparse.ArgumentParser):
    """argparse parser whose usage errors exit with code 1, not 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON run configuration")
    common.add_argument("--seed", type=int, metavar="U64", help="override analysis.seed")
    common.add_argument("--out", metavar="PATH", help="write output here instead of stdout")
    common.add_argument("--n", type=int, metavar="COUNT", help="override analysis.n_samples")
    common.add_argument(
        "--worst-case",
        action="store_true",
        help="also compute the finite-statistics worst-case key rate",
    )
    parser = _Parser(prog="cvqkd", description="Gaussian entangled-state key-rate toolkit")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("simulate", parents=[common], help="covariance matrix and key-rate report")

    scan = sub.add_parser("scan", parents=[common], help="parameter sweep as CSV")
    scan.add_argument("--sweep", required=True, choices=("sqz_db", "nu_b", "sigma"))
    scan.add_argument("--from", dest="sweep_start", type=float, required=True, metavar="F")
    scan.add_argument("--to", dest="sweep_stop", type=float, required=True, metavar="F")
    scan.add_argument("--steps", type=int, required=True, metavar="K")

    sub.add_parser("sample", parents=[common], help="synthetic homodyne dataset CSV")

    rec = sub.add_parser("reconstruct", parents=[common], help="covariance matrix from a dataset")
    rec.add_argument("dataset", help="homodyne dataset CSV")

    ana = sub.add_parser("analyze", parents=[common], help="key-rate report for a dataset or matrix")
    ana.add_argument("input", help="dataset CSV or covariance JSON")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        _apply_flag_overrides(cfg, args)
        handler = _DISPATCH[args.command]
        return handler(args, cfg)
    except (CvqkdError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def load_config(path=None) -> dict:
    """DEFAULT_CONFIG with the JSON file at path merged over it, validated."""
    cfg = copy.deepcopy(DEFAULT_CONFIG)
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                doc = json.load(fh)
        except ValueError as exc:
            raise ConfigError(f"config {path}: invalid JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigError(f"config {path}: top level must be a JSON object")
        for section, values in doc.items():
            if section not in cfg:
                raise ConfigError(f"unknown config section {section!r}")
            if not isinstance(values, dict):
                raise ConfigError(f"config section {section!r} must be an object")
            for key, value in values.items():
                if key not in cfg[section]:
                    raise ConfigError(f"unknown config field {section}.{key}")
                cfg[section][key] = value
    _validate_config(cfg)
    return cfg


def _validate_config(cfg: dict) -> None:
    src = cfg["source"]
    if src["mode"] not in ("measured", "pump"):
        raise ConfigError(f"source.mode must be 'measured' or 'pump', got {src['mode']!r}")
    for section in ("source", "channel"):
        for key, value in cfg[section].items():
            if key == "mode":
                continue
            if value is None:
                if (section, key) in _NULLABLE:
                    continue
                raise ConfigError(f"config field {section}.{key} must be a number, got null")
            _require_number(section, key, value)
    if src["mode"] == "measured" and src["var_sqz_db"] is None:
        raise ConfigError("source.mode 'measured' needs source.var_sqz_db")
    if src["mode"] == "pump" and src["p_mw"] is None:
        raise ConfigError("source.mode 'pump' needs source.p_mw")
    ana = cfg["analysis"]
    _require_number("analysis", "n_samples", ana["n_samples"])
    _require_number("analysis", "seed", ana["seed"])
    if not float(ana["n_samples"]).is_integer() or ana["n_samples"] < 1:
        raise ConfigError(f"analysis.n_samples must be a positive integer, got {ana['n_samples']}")
    ana["n_samples"] = int(ana["n_samples"])
    if not float(ana["seed"]).is_integer() or ana["seed"] < 0:
        raise ConfigError(f"analysis.seed must be a non-negative integer, got {ana['seed']}")
    ana["seed"] = int(ana["seed"])
    if not isinstance(ana["worst_case"], bool):
        raise ConfigError(f"analysis.worst_case must be a boolean, got {ana['worst_case']!r}")


def _require_number(section: str, key: str, value) -> None:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"config field {section}.{key} must be a number, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(f"config field {section}.{key} must be finite, got {value!r}")


def _apply_flag_overrides(cfg: dict, args) -> None:
    if getattr(args, "seed", None) is not None:
        if args.seed < 0:
            raise ConfigError(f"--seed must be non-negative, got {args.seed}")
        cfg["analysis"]["seed"] = args.seed
    if getattr(args, "n", None) is not None:
        if args.n < 1:
            raise ConfigError(f"--n must be a positive integer, got {args.n}")
        cfg["analysis"]["n_samples"] = args.n
    if getattr(args, "worst_case", False):
        cfg["analysis"]["worst_case"] = True


def _resolve_source(cfg: dict) -> tuple:
    """(make_epr_state spec, detected input squeezing in dB) for the config."""
    src = cfg["source"]
    if src["mode"] == "pump":
        params = SourceParams(eta=src["eta"], p_mw=src["p_mw"], p_th_mw=src["p_th_mw"], k=src["k"])
        return params, variance_to_db(pump_to_variances(params)[0])
    spec = SqueezingSpec(var_sqz_db=src["var_sqz_db"], var_asqz_db=src["var_asqz_db"])
    return spec, src["var_sqz_db"]


def _build_states(cfg: dict, extra_loss_b: float = 0.0) -> tuple:
    """Optical (pre-detection) and detected states for the config.

    The detection-noise step is held out of make_epr_state so the
    conditional-variance product can be evaluated on the optical state; the
    detected state adds it back and is what the key rate is computed on.
    extra_loss_b composes additional loss into arm B before detection.
    """
    ch = cfg["channel"]
    channel = ChannelParams(
        epsilon=ch["epsilon"],
        loss_a=ch["nu_a"],
        loss_b=ch["nu_b"],
        det_noise_a=0.0,
        det_noise_b=0.0,
        phase_sigma_a=ch["sigma_a"],
        phase_sigma_b=ch["sigma_b"],
    )
    spec, input_db = _resolve_source(cfg)
    optical = make_epr_state(spec, channel)
    if extra_loss_b != 0.0:
        optical = loss_channel(optical, [0.0, extra_loss_b])
    if ch["delta_a"] != 0.0 or ch["delta_b"] != 0.0:
        detected = detection_noise(optical, [ch["delta_a"], ch["delta_b"]])
    else:
        detected = optical
    return optical, detected, input_db


def cmd_simulate(args, cfg: dict) -> int:
    optical, detected, _ = _build_states(cfg)
    n = cfg["analysis"]["n_samples"] if cfg["analysis"]["worst_case"] else None
    report = secret_key_rate(detected, n_samples=n)
    direct_ab, opt_ab = epr_product(optical, "a_given_b")
    direct_ba, opt_ba = epr_product(optical, "b_given_a")
    doc_report = report.as_dict()
    doc_report["epr_direct"] = min(direct_ab, direct_ba)
    doc_report["epr_optimized"] = min(opt_ab, opt_ba)
    doc = {"covariance": covariance_to_json(detected), "report": doc_report}
    _emit(json.dumps(doc, indent=2) + "\n", args.out)
    return 2 if report.k_nominal <= 0.0 else 0


def cmd_scan(args, cfg: dict) -> int:
    if args.steps < 2:
        raise ConfigError(f"--steps must be at least 2, got {args.steps}")
    grid = np.linspace(args.sweep_start, args.sweep_stop, args.steps)
    lines = [",".join(SCAN_COLUMNS)]
    for value in grid:
        lines.append(_scan_row(cfg, args.sweep, float(value)))
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def _scan_row(cfg: dict, sweep: str, value: float) -> str:
    point = copy.deepcopy(cfg)
    extra_loss_b = 0.0
    if sweep == "sqz_db":
        point["source"]["mode"] = "measured"
        point["source"]["var_sqz_db"] = -abs(value)
        point["source"]["var_asqz_db"] = None
    elif sweep == "nu_b":
        extra_loss_b = value
    elif sweep == "sigma":
        point["channel"]["sigma_a"] = value
        point["channel"]["sigma_b"] = value
    _, detected, input_db = _build_states(point, extra_loss_b=extra_loss_b)
    ana = point["analysis"]
    report = secret_key_rate(detected, n_samples=ana["n_samples"] if ana["worst_case"] else None)
    ch = point["channel"]
    total_nu_b = 1.0 - (1.0 - ch["nu_b"]) * (1.0 - extra_loss_b)
    cells = [
        _fmt(input_db),
        _fmt(total_nu_b),
        _fmt(ch["delta_b"]),
        _fmt(ch["sigma_b"]),
        _fmt(report.mi),
        _fmt(report.holevo_a),
        _fmt(report.holevo_b),
        _fmt(report.k_nominal),
        _fmt(report.k_worst_case) if report.k_worst_case is not None else "",
        str(ana["n_samples"]),
    ]
    return ",".join(cells)


def cmd_sample(args, cfg: dict) -> int:
    _, detected, _ = _build_states(cfg)
    ds = sample_homodyne(
        detected,
        CANONICAL_SETTINGS,
        n_per_setting=cfg["analysis"]["n_samples"],
        seed=cfg["analysis"]["seed"],
    )
    if args.out is None:
        save_dataset(ds, sys.stdout)
    else:
        save_dataset(ds, args.out)
    return 0


def cmd_reconstruct(args, cfg: dict) -> int:
    result = reconstruct(load_dataset(args.dataset))
    doc = {
        "covariance": covariance_to_json(result.gamma_hat),
        "std_errors": [[float(v) for v in row] for row in result.std_errors],
        "n_min": result.n_min,
        "cross_check": None,
    }
    if result.cross_check_measured is not None:
        doc["cross_check"] = {
            "measured": result.cross_check_measured,
            "predicted": result.cross_check_predicted,
            "std_error": result.cross_check_std_error,
            "within_5_std_errors": result.cross_check_ok,
        }
    _emit(json.dumps(doc, indent=2) + "\n", args.out)
    return 0


def cmd_analyze(args, cfg: dict) -> int:
    with open(args.input, "r", encoding="utf-8") as fh:
        head = fh.read(64)
    n_default = cfg["analysis"]["n_samples"]
    if head.lstrip()[:1] == "{":
        with open(args.input, "r", encoding="utf-8") as fh:
            try:
                doc = json.load(fh)
            except ValueError as exc:
                raise ConfigError(f"{args.input}: invalid covariance JSON: {exc}") from exc
        g = covariance_from_json(doc)
    else:
        result = reconstruct(load_dataset(args.input))
        g = result.gamma_hat
        n_default = result.n_min
    n = args.n if args.n is not None else n_default
    report = secret_key_rate(g, n_samples=n if cfg["analysis"]["worst_case"] else None)
    _emit(json.dumps(report.as_dict(), indent=2) + "\n", args.out)
    return 2 if report.k_nominal <= 0.0 else 0


def _fmt(value: float) -> str:
    return f"{value:.12g}"


def _emit(text: str, out_path) -> None:
    if out_path is None:
        sys.stdout.write(text)
    else:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)


_DISPATCH = {
    "simulate": cmd_simulate,
    "scan": cmd_scan,
    "sample": cmd_sample,
    "reconstruct": cmd_reconstruct,
    "analyze": cmd_analyze,
}
