"""Command line entry point: ``slipsync ber | detect | scurve``.

Exit status is 0 on success, 2 on a configuration error and 3 when
``--strict`` is set and any trial failed to converge.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from .cycleslip import detect_burst, pair_averaged_errors, resolve_rate, spectrum
from .exceptions import ConfigError
from .harness import Pipeline, SweepSpec, TrialConfig, ber_sweep, receiver_front_end, write_csv
from .ted import default_offsets, s_curve
from .validation import check_seed, parse_grid
from .waveform import resample_two_sps, srrc_pulse

EXIT_OK, EXIT_CONFIG, EXIT_NONCONVERGED = 0, 2, 3


def _json_float(x):
    return None if isinstance(x, float) and not math.isfinite(x) else x


def _emit(text, out):
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", newline="") as fh:
            fh.write(text)


def _add_channel_args(p, snr_default):
    p.add_argument("--mod", default="bpsk", choices=["bpsk", "qpsk"])
    p.add_argument("--eps", default="0.1", help="rate offset: value, list or start:step:stop")
    p.add_argument("--burst", default="300", help="burst length N: value, list or range")
    p.add_argument("--snr-db", default=snr_default, help="Eb/N0 in dB: value, list or range")
    p.add_argument("--tau", type=float, default=0.2, help="channel delay in symbol periods")
    p.add_argument("--dft-len", type=int, default=5000)
    p.add_argument("--seed", default="0")


def build_parser():
    parser = argparse.ArgumentParser(prog="slipsync", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ber", help="Monte-Carlo BER sweep to CSV")
    _add_channel_args(p, "0:2:10")
    p.add_argument("--pipeline", default="corrected",
                   choices=["corrected", "uncorrected", "burst-by-burst", "burst_by_burst", "genie"])
    p.add_argument("--segment", type=int, default=None, help="burst-by-burst segment length")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--out", default="-", help="CSV path ('-' for stdout)")
    p.add_argument("--json", default=None, help="also write the rows as JSON here")
    p.add_argument("--strict", action="store_true", help="exit 3 if any trial fails to converge")

    p = sub.add_parser("detect", help="slip detection on one burst, SlipReport JSON")
    _add_channel_args(p, "10")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--correct", action="store_true", help="also run rate correction")
    p.add_argument("--spectrum-out", default=None,
                   help="CSV of |U(l)| before (and after, with --correct) correction")

    p = sub.add_parser("scurve", help="Gardner S-curve to CSV")
    p.add_argument("--rolloff", type=float, default=0.5)
    p.add_argument("--points", type=int, default=25)
    p.add_argument("--symbols", type=int, default=5000)
    p.add_argument("--mod", default="bpsk", choices=["bpsk", "qpsk"])
    p.add_argument("--seed", default="0")
    p.add_argument("--out", default="-")
    return parser


def _cmd_ber(args):
    base = TrialConfig(
        modulation=args.mod,
        tau_over_T=args.tau,
        L=args.dft_len,
        pipeline=Pipeline.parse(args.pipeline).value,
        segment_len=args.segment,
    )
    spec = SweepSpec(
        base=base,
        ebn0_db=parse_grid(args.snr_db),
        eps=parse_grid(args.eps),
        N=parse_grid(args.burst, int),
        trials=args.trials,
        base_seed=check_seed(args.seed),
        n_jobs=max(1, args.jobs),
    )
    rows = ber_sweep(spec)
    write_csv(rows, args.out)
    if args.json:
        payload = {"schema_version": 1, "rows": [
            {k: _json_float(v) for k, v in vars(r).items()} for r in rows]}
        with open(args.json, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
    if args.strict and any(r.nonconverged for r in rows):
        bad = sum(r.nonconverged for r in rows)
        print(f"slipsync: {bad} trial(s) did not converge", file=sys.stderr)
        return EXIT_NONCONVERGED
    return EXIT_OK


def _single(text, name, kind=float):
    values = parse_grid(text, kind)
    if len(values) != 1:
        raise ConfigError(f"--{name} takes a single value for this command")
    return values[0]


def _cmd_detect(args):
    cfg = TrialConfig(
        modulation=args.mod,
        N=_single(args.burst, "burst", int),
        ebn0_db=_single(args.snr_db, "snr-db"),
        eps=_single(args.eps, "eps"),
        tau_over_T=args.tau,
        L=args.dft_len,
        seed=check_seed(args.seed),
        threshold=args.threshold,
    ).validate()
    _, stream = receiver_front_end(cfg)

    def resample(rate):
        return resample_two_sps(stream, 1.0 / rate, cfg.tau_over_T, cfg.N)

    rate0 = 1.0 + cfg.eps
    u0 = pair_averaged_errors(resample(rate0))
    report = detect_burst(resample(rate0), cfg.L, cfg.threshold,
                          dc_probe_shifts=cfg.dc_probe_shifts)
    print(json.dumps({"stage": "initial", **report.to_dict()}, sort_keys=True))
    columns = {"before": np.abs(spectrum(u0, cfg.L))}
    if args.correct:
        corrected = resolve_rate(resample, pair_averaged_errors, rate0, cfg.L,
                                 cfg.threshold, cfg.max_rounds, cfg.dc_probe_shifts)
        print(json.dumps({"stage": "corrected", **corrected.to_dict()}, sort_keys=True))
        columns["after"] = np.abs(spectrum(pair_averaged_errors(resample(corrected.rate)), cfg.L))
    if args.spectrum_out:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["bin", *columns])
        for b in range(cfg.L // 2 + 1):
            writer.writerow([b, *(f"{col[b]:.10g}" for col in columns.values())])
        _emit(buf.getvalue(), args.spectrum_out)
    return EXIT_OK


def _cmd_scurve(args):
    if args.points < 2:
        raise ConfigError("--points must be >= 2")
    pulse = srrc_pulse(args.rolloff)
    offsets = default_offsets(args.points)
    curve = s_curve(pulse, args.mod, offsets, args.symbols, check_seed(args.seed))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["offset", "mean_u"])
    for d, m in curve:
        writer.writerow([f"{d:.10g}", f"{m:.10g}"])
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


COMMANDS = {"ber": _cmd_ber, "detect": _cmd_detect, "scurve": _cmd_scurve}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors already; keep --help at 0
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"slipsync: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
