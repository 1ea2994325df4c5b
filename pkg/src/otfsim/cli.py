"""Command-line front end.

Subcommands::

    simulate      run a BER/FER sweep from a config, write a results CSV
    gtable        build the decoder lookup table used by the SE predictor
    se-predict    run the state-evolution BER prediction for a channel
    channel-dump  sample (or re-emit) a channel realization as JSON
    trace         per-iteration convergence trace for one seeded frame

Every subcommand reads a flat JSON config; repeated ``--set key=value``
flags override single keys.  Exit codes: 0 success, 1 config error
(message names the offending field/path), 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .channel import (
    RectSvdChannel,
    SpectralChannel,
    channel_from_json,
    channel_to_json,
    sample_channel,
)
from .grid import OtfsGrid
from .harness import (
    DETECTOR_TRACE_HEADER,
    TURBO_TRACE_HEADER,
    ExperimentConfig,
    run_detector_trace,
    run_sweep,
    run_turbo_trace,
    write_trace_csv,
)
from .modem import constellation
from .coding import ConvCode
from .state_evolution import build_g_table, load_gtable, save_gtable, se_predict


class ConfigError(ValueError):
    pass


def _load_config(path: str, overrides: list[str]) -> dict:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}")
    if not isinstance(doc, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    for item in overrides or []:
        key, sep, raw = item.partition("=")
        if not sep:
            raise ConfigError(f"--set needs key=value, got {item!r}")
        try:
            doc[key] = json.loads(raw)
        except json.JSONDecodeError:
            doc[key] = raw
    return doc


def _check_keys(doc: dict, allowed: set[str], context: str) -> None:
    unknown = set(doc) - allowed - {"schema"}
    if unknown:
        raise ConfigError(f"unknown {context} config key {sorted(unknown)[0]!r}")


def _cmd_simulate(args) -> int:
    doc = _load_config(args.config, args.set)
    try:
        cfg = ExperimentConfig.from_dict(doc)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc))
    run_sweep(cfg, args.output)
    print(f"wrote {args.output}")
    return 0


def _cmd_gtable(args) -> int:
    doc = _load_config(args.config, args.set)
    _check_keys(doc, {"constellation", "tau_min", "tau_max", "tau_points",
                      "trials", "seed", "n_symbols"}, "gtable")
    c = constellation(doc.get("constellation", "qpsk"))
    tau_grid = np.geomspace(float(doc.get("tau_min", 1e-3)),
                            float(doc.get("tau_max", 10.0)),
                            int(doc.get("tau_points", 25)))
    table = build_g_table(ConvCode(), c, tau_grid,
                          trials=int(doc.get("trials", 40)),
                          seed=int(doc.get("seed", 0)),
                          n_symbols=int(doc.get("n_symbols", 1024)))
    save_gtable(table, args.output)
    print(f"wrote {args.output}")
    return 0


def _cmd_se_predict(args) -> int:
    doc = _load_config(args.config, args.set)
    _check_keys(doc, {"gtable", "channel", "waveform", "snr_db", "iters",
                      "trunc_doppler"}, "se-predict")
    for key in ("gtable", "channel"):
        if key not in doc:
            raise ConfigError(f"se-predict config is missing the {key!r} field")
    table = load_gtable(doc["gtable"])
    with open(doc["channel"]) as fh:
        ch = channel_from_json(json.load(fh))
    waveform = doc.get("waveform", "biorthogonal")
    if waveform == "biorthogonal":
        lam = SpectralChannel.from_channel(ch, doc.get("trunc_doppler")).lam
    elif waveform == "rectangular":
        lam = RectSvdChannel.from_channel(ch).lam
    else:
        raise ConfigError(f"unknown waveform {waveform!r}")
    snrs = doc.get("snr_db", [10.0])
    if np.isscalar(snrs):
        snrs = [snrs]
    iters = int(doc.get("iters", 15))
    with open(args.output, "w") as fh:
        fh.write("# schema=1\n")
        fh.write(f"# config={json.dumps(doc, sort_keys=True)}\n")
        fh.write("snr_db,iter,tau,ber_pred,v_x\n")
        for snr in snrs:
            pred = se_predict(lam, 10 ** (float(snr) / 10), table, iters)
            for i in range(iters):
                fh.write(f"{float(snr)!r},{i + 1},{pred.tau[i]!r},"
                         f"{pred.ber[i]!r},{pred.v_x[i]!r}\n")
    print(f"wrote {args.output}")
    return 0


def _cmd_channel_dump(args) -> int:
    doc = _load_config(args.config, args.set)
    if "channel" in doc:
        _check_keys(doc, {"channel"}, "channel-dump")
        with open(doc["channel"]) as fh:
            ch = channel_from_json(json.load(fh))
    else:
        _check_keys(doc, {"M", "N", "subcarrier_spacing_hz", "carrier_freq_hz",
                          "num_paths", "pdp_alpha", "k_max", "l_max",
                          "fractional", "seed"}, "channel-dump")
        grid = OtfsGrid(int(doc.get("M", 64)), int(doc.get("N", 16)),
                        float(doc.get("subcarrier_spacing_hz", 2e3)),
                        float(doc.get("carrier_freq_hz", 3e9)))
        ch = sample_channel(grid, int(doc.get("num_paths", 10)),
                            float(doc.get("pdp_alpha", 0.0)),
                            int(doc.get("k_max", 6)), int(doc.get("l_max", 14)),
                            bool(doc.get("fractional", True)),
                            rng=int(doc.get("seed", 0)))
    with open(args.output, "w") as fh:
        json.dump(channel_to_json(ch), fh, indent=2)
        fh.write("\n")
    print(f"wrote {args.output}")
    return 0


def _cmd_trace(args) -> int:
    doc = _load_config(args.config, args.set)
    trial = int(doc.pop("trial", 0))
    try:
        cfg = ExperimentConfig.from_dict(doc)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc))
    snr = cfg.snr_grid_db[0]
    if cfg.coded:
        rows = run_turbo_trace(cfg, snr, trial)
        write_trace_csv(rows, TURBO_TRACE_HEADER, args.output, cfg)
    else:
        rows = run_detector_trace(cfg, snr, trial)
        write_trace_csv(rows, DETECTOR_TRACE_HEADER, args.output, cfg)
    print(f"wrote {args.output}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="otfsim", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)
    specs = {
        "simulate": (_cmd_simulate, "results.csv"),
        "gtable": (_cmd_gtable, "gtable.csv"),
        "se-predict": (_cmd_se_predict, "se_predict.csv"),
        "channel-dump": (_cmd_channel_dump, "channel.json"),
        "trace": (_cmd_trace, "trace.csv"),
    }
    for name, (func, default_out) in specs.items():
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="path to a flat JSON config")
        p.add_argument("--output", default=default_out, help="output file path")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override one config key (repeatable)")
        p.set_defaults(func=func)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failures map to a distinct exit code
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
