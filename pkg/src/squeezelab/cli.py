"""``squeezelab`` command line.

Human-facing units are dB (variances relative to vacuum), MHz/GHz/kHz for
frequencies and mm for lengths; everything is converted to linear values and
SI units before calling the library.

Exit status: 0 success, 2 invalid input or configuration, 3 numerical
convergence failure, 4 file could not be written or read.
"""
from __future__ import annotations

import argparse
import datetime
import json
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__, fock, gaussian, homodyne, io, presets, spectrum
from ._accel import BACKEND
from .errors import ConvergenceError, ValidationError

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_CONVERGENCE = 3
EXIT_IO = 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


# ----------------------------------------------------------------- helpers


def _pair(text: str) -> tuple[float, float]:
    try:
        a, b = (float(x) for x in str(text).split(","))
    except ValueError:
        raise ValidationError(f"expected 'SQUEEZE_DB,ANTISQUEEZE_DB', got {text!r}") from None
    return a, b


def _state(value, field_name="state") -> gaussian.GaussianState:
    if isinstance(value, (list, tuple)):
        a, b = (float(x) for x in value)
    else:
        a, b = _pair(value)
    try:
        return gaussian.GaussianState.from_db(a, b)
    except ValidationError as exc:
        raise ValidationError(f"{field_name}: {exc}") from None


def _merge(args, defaults: dict) -> dict:
    """Flags > config file > defaults."""
    cfg = {}
    if getattr(args, "config", None):
        try:
            cfg = io.read_json(args.config)
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(cfg, dict):
            raise ValidationError("config file must hold a JSON object")
        unknown = set(cfg) - set(defaults)
        if unknown:
            raise ValidationError(f"unknown config field(s): {', '.join(sorted(unknown))}")
    out = dict(defaults)
    out.update(cfg)
    for key in defaults:
        v = getattr(args, key, None)
        if v is not None:
            out[key] = v
    return out


def _comments(args, extra=()):
    lines = list(extra)
    if getattr(args, "provenance", False):
        stamp = datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")
        lines.append(f"generated {stamp} by squeezelab {__version__} ({BACKEND} backend)")
    return lines


def _emit(text: str, out: str | None, suffix: str = ""):
    if out:
        Path(str(out) + suffix).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _report(args, fmt: str, record: dict, out: str | None, suffix: str):
    """Key/value report as JSON or two-column CSV."""
    if fmt == "json":
        body = dict(record)
        if getattr(args, "provenance", False):
            body["provenance"] = _comments(args)[-1]
        _emit(io.dumps_json(body), out, suffix + ".json" if out else "")
        return
    if out:
        io.write_csv(str(out) + suffix + ".csv", ["key", "value"], record.items(), _comments(args))
    else:
        for line in _comments(args):
            sys.stdout.write(f"# {line}\n")
        sys.stdout.write("key,value\n")
        for k, v in record.items():
            sys.stdout.write(f"{k},{io.fmt(v)}\n")


def _db(v):
    return 10.0 * math.log10(v)


# ----------------------------------------------------------------- analyze


def cmd_analyze(args) -> int:
    opts = _merge(args, {"pairs": None, "format": "csv", "out": None})
    pairs = opts["pairs"]
    if not pairs:
        pairs = [list(p) for p in presets.MEASURED_PAIRS_DB]
    states = [_state(p, f"pairs[{i}]") for i, p in enumerate(pairs)]
    fit = gaussian.infer_loss(states)
    rows = []
    for i, (s, pure, res) in enumerate(zip(states, fit.pure_states, fit.residuals)):
        v1_db, v2_db = s.db()
        p1_db, p2_db = pure.db()
        rows.append({
            "index": i, "v1_db": v1_db, "v2_db": v2_db,
            "eta_gamma": fit.loss.eta_gamma, "vacuum_fraction": fit.loss.vacuum_fraction,
            "pure_v1_db": p1_db, "pure_v2_db": p2_db, "log_product_residual": res,
            "purity": gaussian.purity(s), "mean_photon_number": gaussian.mean_photon_number(s),
        })
    if opts["format"] == "json":
        _emit(io.dumps_json({"eta_gamma": fit.loss.eta_gamma,
                             "vacuum_fraction": fit.loss.vacuum_fraction, "states": rows}),
              opts["out"])
    else:
        header = list(rows[0])
        if opts["out"]:
            io.write_csv(opts["out"], header, [r.values() for r in rows], _comments(args))
        else:
            for line in _comments(args):
                sys.stdout.write(f"# {line}\n")
            sys.stdout.write(",".join(header) + "\n")
            for r in rows:
                sys.stdout.write(",".join(io.fmt(v) for v in r.values()) + "\n")
    return EXIT_OK


# -------------------------------------------------------------------- fock


def cmd_fock(args) -> int:
    opts = _merge(args, {"state": None, "truncation": 10, "work_truncation": 170,
                         "normalize": False, "format": "csv", "out": None,
                         "verify_oracle": False})
    if opts["state"] is None:
        raise ValidationError("state: required (e.g. --state=-11.5,16.0)")
    state = _state(opts["state"])
    ntr, nwork = int(opts["truncation"]), int(opts["work_truncation"])
    if nwork < ntr:
        raise ValidationError("work_truncation must be >= truncation")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        full = fock.density_matrix(state, nwork, normalize=bool(opts["normalize"]))
    dm = full.truncate(ntr)
    pd = fock.photon_distribution(dm)
    meta = {
        "state_db": list(state.db()), "truncation": ntr, "work_truncation": nwork,
        "normalized": bool(opts["normalize"]), "trace_deficit": full.trace_deficit,
    }
    status = EXIT_OK
    if opts["verify_oracle"]:
        oracle = fock.oracle_density_matrix(state, ntr)
        ref = oracle.entries
        if opts["normalize"]:
            ref = ref / full.trace
        dev = float(np.abs(ref - dm.entries).max())
        meta.update(oracle_max_deviation=dev, oracle_workspace=oracle.workspace,
                    oracle_agrees=dev < 1e-4)
        if dev >= 1e-4:
            status = EXIT_CONVERGENCE
    nz = [(m, n, dm.entries[m, n]) for m in range(dm.dim) for n in range(dm.dim)
          if dm.entries[m, n] != 0.0]
    if opts["format"] == "json":
        body = dict(meta, density_matrix=dm.entries, photon_distribution=pd.probabilities)
        if getattr(args, "provenance", False):
            body["provenance"] = _comments(args)[-1]
        _emit(io.dumps_json(body), opts["out"], ".json" if opts["out"] else "")
    else:
        comments = _comments(args, [f"{k}={io.fmt(v) if not isinstance(v, list) else v}"
                                    for k, v in meta.items()])
        if not opts["out"]:
            raise ValidationError("out: CSV output needs --out PREFIX")
        io.write_csv(f"{opts['out']}_rho.csv", ["row", "col", "value"], nz, comments)
        io.write_csv(f"{opts['out']}_pn.csv", ["n", "probability"],
                     enumerate(pd.probabilities), comments)
    if opts["verify_oracle"]:
        sys.stderr.write(f"oracle max deviation {meta['oracle_max_deviation']:.3g}\n")
    return status


# ------------------------------------------------------------------ wigner


def cmd_wigner(args) -> int:
    opts = _merge(args, {"state": None, "points": 257, "n_sigma": 8.0,
                         "convention": "quarter", "out": None})
    if opts["state"] is None:
        raise ValidationError("state: required (e.g. --state=-11.5,16.0)")
    if not opts["out"]:
        raise ValidationError("out: needs --out PREFIX")
    state = _state(opts["state"])
    conv = gaussian.Convention.parse(opts["convention"])
    if not (float(opts["n_sigma"]) > 0):
        raise ValidationError("n_sigma must be positive")
    grid = gaussian.GridSpec.covering(state, float(opts["n_sigma"]), int(opts["points"]), conv)
    w = gaussian.wigner_eval(state, grid, conv)
    total = w.total()
    mv1, mv2 = w.marginal_variances()
    s = state.to(conv)
    comments = _comments(args, [
        f"state_db={list(state.db())}", f"convention={conv.name}",
        f"normalization={io.fmt(total)}",
        f"marginal_variance_x1={io.fmt(mv1)} expected={io.fmt(s.v1)}",
        f"marginal_variance_x2={io.fmt(mv2)} expected={io.fmt(s.v2)}",
    ])
    x1, x2 = np.meshgrid(w.x1, w.x2, indexing="ij")
    io.write_csv(f"{opts['out']}.csv", ["x1", "x2", "w"],
                 zip(x1.ravel(), x2.ravel(), w.values.ravel()), comments)
    p1, p2 = w.marginals()
    vac = conv.value
    vac1 = np.exp(-0.5 * w.x1**2 / vac) / math.sqrt(2 * math.pi * vac)
    vac2 = np.exp(-0.5 * w.x2**2 / vac) / math.sqrt(2 * math.pi * vac)
    rows = [("x1", x, p, v) for x, p, v in zip(w.x1, p1, vac1)]
    rows += [("x2", x, p, v) for x, p, v in zip(w.x2, p2, vac2)]
    io.write_csv(f"{opts['out']}_marginals.csv", ["axis", "x", "density", "vacuum_density"],
                 rows, comments)
    return EXIT_OK


# ---------------------------------------------------------------- spectrum

_MODEL_DEFAULTS = {"pump_ratio": None, "eta_gamma": None, "kappa": None,
                   "transmittance": None, "round_trip_loss": None, "length_mm": None}


def _model(opts) -> spectrum.SpectrumModel:
    base = presets.spectrum_model()
    p = opts["pump_ratio"] if opts["pump_ratio"] is not None else base.pump_ratio
    eg = opts["eta_gamma"] if opts["eta_gamma"] is not None else base.eta_gamma
    cav = (opts["transmittance"], opts["round_trip_loss"], opts["length_mm"])
    if opts["kappa"] is not None:
        return spectrum.SpectrumModel(float(p), float(eg), float(opts["kappa"]))
    if any(c is not None for c in cav):
        if not all(c is not None for c in cav):
            raise ValidationError("transmittance, round_trip_loss and length_mm go together")
        return spectrum.SpectrumModel.from_cavity(float(p), float(eg), float(cav[0]),
                                                  float(cav[1]), float(cav[2]) * 1e-3)
    if p == base.pump_ratio and eg == base.eta_gamma:
        return base
    return spectrum.SpectrumModel(float(p), float(eg), base.kappa)


def _model_record(m: spectrum.SpectrumModel) -> dict:
    return {"pump_ratio": m.pump_ratio, "eta_gamma": m.eta_gamma, "kappa": m.kappa}


def cmd_spectrum(args) -> int:
    action = args.action
    common = dict(_MODEL_DEFAULTS, format="csv", out=None)
    if action == "eval":
        opts = _merge(args, dict(common, f_min_mhz=5.0, f_max_mhz=100.0, points=96))
        m = _model(opts)
        if not (0 <= opts["f_min_mhz"] < opts["f_max_mhz"]) or int(opts["points"]) < 2:
            raise ValidationError("need 0 <= f_min_mhz < f_max_mhz and points >= 2")
        f = np.linspace(opts["f_min_mhz"], opts["f_max_mhz"], int(opts["points"])) * 1e6
        v1, v2 = spectrum.model_variances(m, f)
        rows = list(zip(f, 10 * np.log10(v1), 10 * np.log10(v2)))
        comments = _comments(args, [f"{k}={io.fmt(v)}" for k, v in _model_record(m).items()])
        if opts["format"] == "json":
            _emit(io.dumps_json(dict(_model_record(m), f_hz=f, v1_db=10 * np.log10(v1),
                                     v2_db=10 * np.log10(v2))), opts["out"])
        elif opts["out"]:
            io.write_csv(opts["out"], ["f_hz", "v1_db", "v2_db"], rows, comments)
        else:
            for line in comments:
                sys.stdout.write(f"# {line}\n")
            sys.stdout.write("f_hz,v1_db,v2_db\n")
            for r in rows:
                sys.stdout.write(",".join(io.fmt(v) for v in r) + "\n")
        return EXIT_OK

    if action == "bandwidth":
        opts = _merge(args, common)
        m = _model(opts)
        bw = spectrum.squeezing_bandwidth(m)
        rec = dict(_model_record(m), bandwidth_hz=bw, bandwidth_mhz=bw / 1e6,
                   v1_at_zero_db=_db(spectrum.model_variances(m, 0.0)[0]),
                   half_point_db=_db(spectrum.half_point_variance(m)))
        _report(args, opts["format"], rec, opts["out"], "")
        return EXIT_OK

    if action == "fit":
        opts = _merge(args, dict(common, data=None, which="joint"))
        if not opts["data"]:
            raise ValidationError("data: required CSV with columns f_hz,v1_db,v2_db")
        try:
            cols = io.read_columns(opts["data"], ["f_hz", "v1_db", "v2_db"])
        except (KeyError, ValueError) as exc:
            raise ValidationError(str(exc)) from None
        data = spectrum.SpectrumData.from_db(cols["f_hz"], cols["v1_db"], cols["v2_db"])
        res = spectrum.fit_spectrum(data, _model(opts), opts["which"])
        rec = dict(_model_record(res.model), residual=res.residual,
                   initial_residual=res.initial_residual, improved=res.improved,
                   converged=res.converged, condition_number=res.condition_number,
                   ill_conditioned=res.ill_conditioned,
                   bandwidth_hz=spectrum.squeezing_bandwidth(res.model)
                   if res.model.pump_ratio > 0 else float("nan"))
        for k, v in res.parameter_errors.items():
            rec[f"{k}_stderr"] = v
        _report(args, opts["format"], rec, opts["out"], "")
        if res.ill_conditioned:
            sys.stderr.write(f"warning: {res.message}\n")
        if not res.improved and not res.converged:
            sys.stderr.write(f"fit failed: {res.message}\n")
            return EXIT_CONVERGENCE
        return EXIT_OK

    if action == "rate":
        opts = _merge(args, dict(common, half_fsr_ghz=5.5, bin_khz=100.0, truncation=170))
        m = _model(opts)
        r = spectrum.spectral_photon_rate(m, float(opts["half_fsr_ghz"]) * 1e9,
                                          float(opts["bin_khz"]) * 1e3, int(opts["truncation"]))
        rec = dict(_model_record(m), rate_per_s=r.rate, power_w=r.power,
                   conditional_mean=r.conditional_mean, bins=r.bins,
                   max_trace_deficit=r.max_trace_deficit)
        if opts["format"] == "json":
            body = dict(rec, weighted_distribution=r.weighted_distribution.probabilities)
            _emit(io.dumps_json(body), opts["out"], ".json" if opts["out"] else "")
        else:
            _report(args, "csv", rec, opts["out"], "")
            if opts["out"]:
                io.write_csv(f"{opts['out']}_pn.csv", ["n", "probability"],
                             enumerate(r.weighted_distribution.probabilities), _comments(args))
        return EXIT_OK
    raise ValidationError(f"unknown spectrum action {action!r}")  # pragma: no cover


# ---------------------------------------------------------------- simulate


def cmd_simulate(args) -> int:
    opts = _merge(args, {"state_db": None, "phase_schedule": None, "dark_noise_db": None,
                         "seed": 0, "vacuum_samples": None, "sweep": None, "out": None,
                         "format": "csv"})
    if opts["state_db"] is None or opts["phase_schedule"] is None:
        raise ValidationError("config needs state_db and phase_schedule")
    if not opts["out"]:
        raise ValidationError("out: needs --out PREFIX")
    state = _state(opts["state_db"], "state_db")
    try:
        schedule = [(float(t), int(c)) for t, c in opts["phase_schedule"]]
    except (TypeError, ValueError):
        raise ValidationError("phase_schedule must be a list of [theta, count]") from None
    cfg = homodyne.HomodyneConfig(state, schedule, opts["dark_noise_db"], int(opts["seed"]),
                                  opts["vacuum_samples"])
    trace = homodyne.simulate(cfg)
    comments = _comments(args, [f"rng={trace.rng}", f"seed={trace.seed_used}",
                                f"state_db={list(state.db())}",
                                f"dark_noise_db={opts['dark_noise_db']}"])

    def trace_rows():
        for i, (theta, samples) in enumerate(trace.segments):
            for x in samples:
                yield i, theta, x
        for x in trace.vacuum_reference:
            yield -1, float("nan"), x

    io.write_csv(f"{opts['out']}_trace.csv", ["segment_index", "theta_radians", "sample_value"],
                 trace_rows(), comments)

    estimates = []
    for i, (theta, samples) in enumerate(trace.segments):
        est = homodyne.estimate_variance(samples, trace.vacuum_reference, opts["dark_noise_db"])
        expected = float(homodyne.quadrature_variance(state, theta))
        estimates.append({"segment_index": i, "theta_radians": theta, "variance": est.value,
                          "stderr": est.stderr, "variance_db": est.db,
                          "stderr_db": est.db_stderr, "expected_variance": expected})
    summary = {"seed": trace.seed_used, "rng": trace.rng, "segments": estimates}

    sweep = opts["sweep"]
    if sweep:
        try:
            pts = homodyne.sweep_trace(state, float(sweep["rotation_rate"]),
                                       int(sweep["total_samples"]), int(sweep["window"]),
                                       seed=int(opts["seed"]), dark_noise_db=opts["dark_noise_db"],
                                       theta0=float(sweep.get("theta0", 0.0)))
        except KeyError as exc:
            raise ValidationError(f"sweep config missing {exc}") from None
        io.write_csv(f"{opts['out']}_sweep.csv",
                     ["theta_radians", "variance", "stderr", "variance_db"],
                     [(t, e.value, e.stderr, e.db) for t, e in pts], comments)
        lo = min(pts, key=lambda x: x[1].value)
        hi = max(pts, key=lambda x: x[1].value)
        summary["sweep"] = {"windows": len(pts),
                            "min_theta_radians": lo[0], "min_db": lo[1].db,
                            "min_stderr_db": lo[1].db_stderr,
                            "max_theta_radians": hi[0], "max_db": hi[1].db,
                            "max_stderr_db": hi[1].db_stderr}

    if opts["format"] == "json":
        io.write_json(f"{opts['out']}_estimates.json", summary)
    else:
        io.write_csv(f"{opts['out']}_estimates.csv", list(estimates[0]),
                     [e.values() for e in estimates], comments)
        if sweep:
            io.write_csv(f"{opts['out']}_sweep_summary.csv", ["key", "value"],
                         summary["sweep"].items(), comments)
    return EXIT_OK


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="squeezelab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"squeezelab {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, out_help="output path or prefix"):
        sp.add_argument("--config", help="JSON file with option values; flags override it")
        sp.add_argument("--out", default=None, help=out_help)
        sp.add_argument("--provenance", action="store_true",
                        help="add a timestamp/version comment to outputs")

    a = sub.add_parser("analyze", help="infer the loss shared by measured dB pairs")
    common(a, "output file (stdout when omitted)")
    a.add_argument("--pair", dest="pairs", action="append", type=_pair, default=None,
                   help="SQUEEZE_DB,ANTISQUEEZE_DB; repeatable (use --pair=-11.5,16)")
    a.add_argument("--format", choices=["csv", "json"], default=None)
    a.set_defaults(func=cmd_analyze)

    f = sub.add_parser("fock", help="photon-number-basis density matrix and P(n)")
    common(f, "output prefix")
    f.add_argument("--state", help="SQUEEZE_DB,ANTISQUEEZE_DB (use --state=-11.5,16)")
    f.add_argument("--truncation", type=int, default=None, help="largest photon number written")
    f.add_argument("--work-truncation", type=int, default=None,
                   help="largest photon number computed (default 170)")
    f.add_argument("--normalize", action="store_true", default=None,
                   help="divide by the trace at the working truncation")
    f.add_argument("--verify-oracle", action="store_true", default=None,
                   help="compare with the squeezed-thermal brute-force construction")
    f.add_argument("--format", choices=["csv", "json"], default=None)
    f.set_defaults(func=cmd_fock)

    w = sub.add_parser("wigner", help="Wigner function grid and its projections")
    common(w, "output prefix")
    w.add_argument("--state")
    w.add_argument("--points", type=int, default=None)
    w.add_argument("--n-sigma", type=float, default=None, help="half-width in std devs")
    w.add_argument("--convention", choices=["quarter", "half", "unity"], default=None)
    w.set_defaults(func=cmd_wigner)

    s = sub.add_parser("spectrum", help="OPO squeezing spectrum tools")
    ssub = s.add_subparsers(dest="action", required=True, parser_class=_Parser)
    for name, hlp in [("eval", "model curves in dB"), ("fit", "fit a measured spectrum"),
                      ("bandwidth", "HWHM squeezing bandwidth"),
                      ("rate", "down-converted photon rate")]:
        sp = ssub.add_parser(name, help=hlp)
        common(sp)
        sp.add_argument("--pump-ratio", type=float, default=None)
        sp.add_argument("--eta-gamma", type=float, default=None)
        sp.add_argument("--kappa", type=float, default=None, help="cavity decay rate [rad/s]")
        sp.add_argument("--transmittance", type=float, default=None)
        sp.add_argument("--round-trip-loss", type=float, default=None)
        sp.add_argument("--length-mm", type=float, default=None,
                        help="cavity round-trip length [mm]")
        sp.add_argument("--format", choices=["csv", "json"], default=None)
        sp.set_defaults(func=cmd_spectrum)
        if name == "eval":
            sp.add_argument("--f-min-mhz", type=float, default=None)
            sp.add_argument("--f-max-mhz", type=float, default=None)
            sp.add_argument("--points", type=int, default=None)
        elif name == "fit":
            sp.add_argument("--data", help="CSV with columns f_hz,v1_db,v2_db")
            sp.add_argument("--which", choices=["joint", "v1", "v2"], default=None)
        elif name == "rate":
            sp.add_argument("--half-fsr-ghz", type=float, default=None)
            sp.add_argument("--bin-khz", type=float, default=None)
            sp.add_argument("--truncation", type=int, default=None)

    m = sub.add_parser("simulate", help="synthetic homodyne traces from a JSON config")
    common(m, "output prefix")
    m.add_argument("--seed", type=int, default=None)
    m.add_argument("--format", choices=["csv", "json"], default=None)
    m.set_defaults(func=cmd_simulate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_VALIDATION
    except ConvergenceError as exc:
        sys.stderr.write(f"convergence failure: {exc}\n")
        return EXIT_CONVERGENCE
    except OSError as exc:
        sys.stderr.write(f"i/o error: {exc}\n")
        return EXIT_IO


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
