"""Experiment runner: JSON configs, synthetic data, solve and sweep pipelines, artifacts.

A config is one JSON object. Only ``prior`` and ``operator`` are required;
every other key has a default (see ``DEFAULTS``). Nested sections are
validated key by key and errors name the dotted path of the offending key.
"""
import copy
import csv
import hashlib
import io
import itertools
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field, replace
from pathlib import Path

import numpy as np

from flair_lab.forward_ops import Blur, Downsample, Identity, Mask, ToyDecoder, observe, write_pgm
from flair_lab.oracle_metrics import analytic_posterior, evaluate, wasserstein1_1d
from flair_lab.solver import HDCConfig, SolverConfig, SolverError, flair_solve, trace_to_csv
from flair_lab.velocity_fields import (
    AnalyticField,
    CalibrationError,
    GaussianMixture,
    NetworkField,
    TrainingError,
    calibrate,
    train_cfm,
)


class ConfigError(ValueError):
    """Invalid or unparseable experiment config."""


DEFAULTS = {
    "name": "experiment",
    "field": {"kind": "analytic"},
    "sigma_nu": 0.01,
    "solver": {
        "nfe": 50,
        "t_stop": 0.2,
        "alpha_rule": "one_minus_t",
        "reg_weighting": "calibrated",
        "reg_step_size": 1.0,
        "dta_enabled": True,
        "hdc": {"enabled": True, "step_size": None, "max_iters": 2000,
                "stop_threshold": 1e-4, "divergence_patience": 10},
    },
    "calibration": {"n_samples": 16, "seed": 0, "cutoff": 0.2, "weight_mode": "reciprocal"},
    "ensemble_size": 32,
    "seeds": None,
    "truth": {"source": "prior", "seed": 0, "per_seed": False, "pattern": None},
    "observation_seed": 0,
    "decoder": None,
    "output_dir": "out",
}

PRIOR_KEYS = {
    "mixture": {"kind", "weights", "means", "variances"},
    "image_modes": {"kind", "shape", "patterns", "weights", "variance", "amplitude", "block", "bump_width"},
}
FIELD_KEYS = {
    "analytic": {"kind"},
    "network": {"kind", "hidden", "train_steps", "step_size", "batch", "seed", "path"},
}
OPERATOR_KEYS = {
    "identity": {"kind", "shape"},
    "mask": {"kind", "shape", "keep", "keep_every"},
    "blur": {"kind", "shape", "kernel", "kernel_size"},
    "downsample": {"kind", "shape", "factor"},
}
DECODER_KEYS = {"latent_dim", "hidden", "seed"}
NETWORK_DEFAULTS = {"hidden": 64, "train_steps": 2000, "step_size": 1e-2, "batch": 64, "seed": 0, "path": None}
PATTERNS = ("checkerboard", "bump", "stripes")
VARIANTS = [dict(zip(("hdc", "dta", "crw"), flags)) for flags in itertools.product((1, 0), repeat=3)]
RESULTS_HEADER = ["run", "variant", "hdc", "dta", "crw", "seed", "mse", "psnr_db",
                  "data_residual", "posterior_w1", "status"]


@dataclass(frozen=True)
class ExperimentConfig:
    data: dict
    source: str = "<dict>"

    def __getitem__(self, key):
        return self.data[key]

    @property
    def seeds(self):
        if self.data["seeds"] is not None:
            return list(self.data["seeds"])
        return list(range(self.data["ensemble_size"]))

    def canonical_json(self):
        return json.dumps(self.data, sort_keys=True, separators=(",", ":"))

    def digest(self):
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()

    def with_overrides(self, seeds=None, output_dir=None):
        data = copy.deepcopy(self.data)
        if seeds is not None:
            data["seeds"] = list(seeds)
        if output_dir is not None:
            data["output_dir"] = str(output_dir)
        return ExperimentConfig(data, self.source)


def _check_keys(section, allowed, where):
    if not isinstance(section, dict):
        raise ConfigError(f"{where}: expected an object")
    unknown = sorted(set(section) - set(allowed))
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(unknown)}; accepted keys: {', '.join(sorted(allowed))}")


def _merge(defaults, given, where):
    _check_keys(given, defaults, where)
    out = copy.deepcopy(defaults)
    for k, v in given.items():
        if isinstance(defaults[k], dict) and isinstance(v, dict):
            out[k] = _merge(defaults[k], v, f"{where}.{k}")
        else:
            out[k] = v
    return out


def _require(cond, key, msg):
    if not cond:
        raise ConfigError(f"{key}: {msg}")


def _number(value, key, lo=None, hi=None, integer=False, lo_open=False):
    ok = isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)
    if integer:
        ok = ok and float(value).is_integer()
    _require(ok, key, f"expected {'an integer' if integer else 'a number'}, got {value!r}")
    if lo is not None:
        _require(value > lo if lo_open else value >= lo, key, f"must be {'>' if lo_open else '>='} {lo}, got {value!r}")
    if hi is not None:
        _require(value <= hi, key, f"must be <= {hi}, got {value!r}")
    return int(value) if integer else float(value)


def validate_config(raw, source="<dict>"):
    """Fill defaults into a parsed JSON object and check every value."""
    if not isinstance(raw, dict):
        raise ConfigError("config: top level must be a JSON object")
    for key in ("prior", "operator"):
        _require(key in raw, key, "missing required key")
    allowed = set(DEFAULTS) | {"prior", "operator"}
    _check_keys(raw, allowed, "config")
    data = {k: copy.deepcopy(v) for k, v in DEFAULTS.items()}
    for k, v in raw.items():
        if k in ("solver", "calibration", "truth"):
            data[k] = _merge(DEFAULTS[k], v, k)
        else:
            data[k] = copy.deepcopy(v)

    prior = data["prior"]
    _require(isinstance(prior, dict) and prior.get("kind") in PRIOR_KEYS, "prior.kind",
             f"expected one of {', '.join(PRIOR_KEYS)}")
    _check_keys(prior, PRIOR_KEYS[prior["kind"]], "prior")
    if prior["kind"] == "mixture":
        for k in ("weights", "means", "variances"):
            _require(k in prior, f"prior.{k}", "missing required key")
        try:
            GaussianMixture(prior["weights"], prior["means"], prior["variances"])
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"prior: {exc}") from None
    else:
        prior.setdefault("shape", [16, 16])
        prior.setdefault("patterns", ["checkerboard", "bump"])
        prior.setdefault("weights", [1.0 / len(prior["patterns"])] * len(prior["patterns"]))
        prior.setdefault("variance", 0.1)
        prior.setdefault("amplitude", 1.0)
        prior.setdefault("block", 4)
        prior.setdefault("bump_width", 3.0)
        _require(isinstance(prior["shape"], list) and len(prior["shape"]) == 2, "prior.shape", "expected [height, width]")
        for i, s in enumerate(prior["shape"]):
            _number(s, f"prior.shape[{i}]", lo=1, integer=True)
        for p in prior["patterns"]:
            _require(p in PATTERNS, "prior.patterns", f"unknown pattern {p!r}; accepted: {', '.join(PATTERNS)}")
        _require(len(prior["weights"]) == len(prior["patterns"]), "prior.weights", "needs one weight per pattern")
        _number(prior["variance"], "prior.variance", lo=0, lo_open=True)
        _number(prior["amplitude"], "prior.amplitude")
        _number(prior["block"], "prior.block", lo=1, integer=True)
        _number(prior["bump_width"], "prior.bump_width", lo=0, lo_open=True)

    fld = data["field"]
    _require(isinstance(fld, dict) and fld.get("kind") in FIELD_KEYS, "field.kind",
             f"expected one of {', '.join(FIELD_KEYS)}")
    _check_keys(fld, FIELD_KEYS[fld["kind"]], "field")
    if fld["kind"] == "network":
        data["field"] = fld = {**NETWORK_DEFAULTS, **fld}
        _number(fld["hidden"], "field.hidden", lo=1, integer=True)
        _number(fld["train_steps"], "field.train_steps", lo=1, integer=True)
        _number(fld["step_size"], "field.step_size", lo=0, lo_open=True)
        _number(fld["batch"], "field.batch", lo=1, integer=True)
        _number(fld["seed"], "field.seed", integer=True)

    op = data["operator"]
    _require(isinstance(op, dict) and op.get("kind") in OPERATOR_KEYS, "operator.kind",
             f"expected one of {', '.join(OPERATOR_KEYS)}")
    _check_keys(op, OPERATOR_KEYS[op["kind"]], "operator")
    if op["kind"] == "mask":
        _require(("keep" in op) != ("keep_every" in op), "operator.keep", "give exactly one of keep, keep_every")
        if "keep_every" in op:
            _number(op["keep_every"], "operator.keep_every", lo=1, integer=True)
    if op["kind"] == "downsample":
        _number(op.get("factor"), "operator.factor", lo=1, integer=True)
    if op["kind"] == "blur" and "kernel" in op:
        _require(len(op["kernel"]) % 2 == 1, "operator.kernel", "length must be odd")
    if op["kind"] == "blur" and "kernel" not in op:
        size = _number(op.setdefault("kernel_size", 5), "operator.kernel_size", lo=1, integer=True)
        _require(size % 2 == 1, "operator.kernel_size", "must be odd")

    _number(data["sigma_nu"], "sigma_nu", lo=0)
    _number(data["ensemble_size"], "ensemble_size", lo=1, integer=True)
    _number(data["observation_seed"], "observation_seed", integer=True)
    if data["seeds"] is not None:
        _require(isinstance(data["seeds"], list) and data["seeds"], "seeds", "expected a nonempty list")
        for i, s in enumerate(data["seeds"]):
            _number(s, f"seeds[{i}]", integer=True)
    _require(isinstance(data["output_dir"], str), "output_dir", "expected a string")

    s = data["solver"]
    _number(s["nfe"], "solver.nfe", lo=1, integer=True)
    _number(s["t_stop"], "solver.t_stop", lo=0)
    _require(s["t_stop"] < 1, "solver.t_stop", "must be < 1")
    if s["alpha_rule"] != "one_minus_t":
        _number(s["alpha_rule"], "solver.alpha_rule", lo=0, hi=1)
    _require(s["reg_weighting"] in ("calibrated", "rsd", "flow_ratio"), "solver.reg_weighting",
             "expected calibrated, rsd or flow_ratio")
    _number(s["reg_step_size"], "solver.reg_step_size", lo=0, lo_open=True)
    _require(isinstance(s["dta_enabled"], bool), "solver.dta_enabled", "expected true or false")
    h = s["hdc"]
    _require(isinstance(h["enabled"], bool), "solver.hdc.enabled", "expected true or false")
    if h["step_size"] is not None:
        _number(h["step_size"], "solver.hdc.step_size", lo=0, lo_open=True)
    _number(h["max_iters"], "solver.hdc.max_iters", lo=0, integer=True)
    _number(h["stop_threshold"], "solver.hdc.stop_threshold", lo=0)
    _number(h["divergence_patience"], "solver.hdc.divergence_patience", lo=1, integer=True)

    c = data["calibration"]
    _number(c["n_samples"], "calibration.n_samples", lo=1, integer=True)
    _number(c["seed"], "calibration.seed", integer=True)
    _number(c["cutoff"], "calibration.cutoff", lo=0, hi=1)
    _require(c["weight_mode"] in ("reciprocal", "shifted"), "calibration.weight_mode", "expected reciprocal or shifted")

    tr = data["truth"]
    _require(tr["source"] in ("prior", "pattern"), "truth.source", "expected prior or pattern")
    _number(tr["seed"], "truth.seed", integer=True)
    _require(isinstance(tr["per_seed"], bool), "truth.per_seed", "expected true or false")
    if tr["source"] == "pattern":
        _require(prior["kind"] == "image_modes", "truth.source", "pattern truth needs an image_modes prior")
        _require(tr["pattern"] in PATTERNS, "truth.pattern", f"expected one of {', '.join(PATTERNS)}")

    if data["decoder"] is not None:
        dec = data["decoder"]
        _check_keys(dec, DECODER_KEYS, "decoder")
        dec.setdefault("hidden", 32)
        dec.setdefault("seed", 0)
        _number(dec.get("latent_dim"), "decoder.latent_dim", lo=1, integer=True)
        _require("shape" in op, "operator.shape", "required when a decoder is configured")
        _require(prior["kind"] == "mixture", "decoder", "a decoder needs a latent mixture prior")

    cfg = ExperimentConfig(data, source)
    try:
        _dimensions(cfg)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None
    return cfg


def load_config(path):
    """Parse and validate a JSON config file; parse errors report line and column."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return validate_config(raw, str(path))


# dataset synthesis

def pattern_image(name, shape, amplitude=1.0, block=4, bump_width=3.0):
    h, w = shape
    yy, xx = np.mgrid[0:h, 0:w]
    if name == "checkerboard":
        img = np.where(((yy // block) + (xx // block)) % 2 == 0, 1.0, -1.0)
    elif name == "bump":
        r2 = (yy - (h - 1) / 2) ** 2 + (xx - (w - 1) / 2) ** 2
        img = 2.0 * np.exp(-r2 / (2.0 * bump_width**2)) - 0.6
    elif name == "stripes":
        img = np.where((xx // block) % 2 == 0, 1.0, -1.0)
    else:
        raise ValueError(f"unknown pattern {name!r}")
    return amplitude * img.ravel()


def build_prior(cfg):
    p = cfg["prior"]
    if p["kind"] == "mixture":
        return GaussianMixture(p["weights"], p["means"], p["variances"])
    means = [pattern_image(n, p["shape"], p["amplitude"], p["block"], p["bump_width"]) for n in p["patterns"]]
    return GaussianMixture(p["weights"], means, [p["variance"]] * len(means))


def signal_shape(cfg):
    op = cfg["operator"]
    if "shape" in op:
        s = op["shape"]
        return tuple(s) if isinstance(s, list) else (int(s),)
    p = cfg["prior"]
    if p["kind"] == "image_modes":
        return tuple(p["shape"])
    return (len(p["means"][0]),)


def build_operator(cfg):
    op = cfg["operator"]
    shape = signal_shape(cfg)
    n = int(np.prod(shape))
    if op["kind"] == "identity":
        return Identity(shape)
    if op["kind"] == "mask":
        keep = op["keep"] if "keep" in op else range(0, n, op["keep_every"])
        return Mask(shape, keep)
    if op["kind"] == "downsample":
        return Downsample(shape, op["factor"])
    kernel = op["kernel"] if "kernel" in op else Blur.binomial_kernel(op["kernel_size"])
    return Blur(shape, kernel)


def build_decoder(cfg):
    dec = cfg["decoder"]
    if dec is None:
        return None
    n = int(np.prod(signal_shape(cfg)))
    return ToyDecoder.random(dec["latent_dim"], n, hidden=dec["hidden"], seed=dec["seed"])


def _dimensions(cfg):
    prior, op, dec = build_prior(cfg), build_operator(cfg), build_decoder(cfg)
    expected = dec.latent_dim if dec is not None else op.n
    if prior.dim != expected:
        raise ValueError(f"prior: dimension {prior.dim} does not match the signal/latent dimension {expected}")


def build_field(cfg, prior):
    opts = cfg["field"]
    if opts["kind"] == "analytic":
        return AnalyticField(prior)
    if opts["path"]:
        net = NetworkField.from_json(Path(opts["path"]).read_text())
        if net.dim != prior.dim:
            raise ConfigError(f"field.path: stored field has dimension {net.dim}, prior has {prior.dim}")
        return net
    init = NetworkField.init(prior.dim, opts["hidden"], seed=opts["seed"])
    return train_cfm(init, prior.sample, steps=opts["train_steps"], step_size=opts["step_size"],
                     batch=opts["batch"], seed=opts["seed"] + 1)


def solver_config(cfg, calibration=None):
    s = cfg["solver"]
    h = s["hdc"]
    hdc = HDCConfig(enabled=h["enabled"], step_size=h["step_size"], max_iters=h["max_iters"],
                    stop_threshold=h["stop_threshold"], divergence_patience=h["divergence_patience"])
    return SolverConfig(nfe=s["nfe"], t_stop=s["t_stop"], alpha_rule=s["alpha_rule"],
                        reg_weighting=s["reg_weighting"], reg_step_size=s["reg_step_size"],
                        calibration=calibration, hdc=hdc, dta_enabled=s["dta_enabled"])


# running

@dataclass
class RunRecord:
    config_hash: str
    mode: str
    rows: list = dc_field(default_factory=list)
    traces: dict = dc_field(default_factory=dict)
    calibration: object = None
    field: object = None
    images: dict = dc_field(default_factory=dict)
    shape: tuple = ()
    wall_clock: float = 0.0

    @property
    def failures(self):
        return [r for r in self.rows if r["status"] != "ok"]


def variant_name(flags):
    return "_".join(f"{k}{'on' if flags[k] else 'off'}" for k in ("hdc", "dta", "crw"))


def _prepare(cfg, need_calibration):
    prior = build_prior(cfg)
    field = build_field(cfg, prior)
    table = None
    if need_calibration:
        c = cfg["calibration"]
        samples = prior.sample(np.random.default_rng(c["seed"]), c["n_samples"])
        table = calibrate(field, samples, seed=c["seed"], cutoff=c["cutoff"], weight_mode=c["weight_mode"])
    return prior, field, table


def _truth(cfg, prior, decoder, seed):
    tr = cfg["truth"]
    if tr["source"] == "pattern":
        p = cfg["prior"]
        return pattern_image(tr["pattern"], p["shape"], p["amplitude"], p["block"], p["bump_width"]), None
    offset = seed if tr["per_seed"] else 0
    latent = prior.sample(np.random.default_rng(tr["seed"] + offset), 1)[0]
    if decoder is None:
        return latent, None
    return decoder.decode(latent), latent


def run_calibration(cfg):
    t0 = time.perf_counter()
    _, field, table = _prepare(cfg, True)
    return RunRecord(cfg.digest(), "calibrate", calibration=table, field=field,
                     wall_clock=time.perf_counter() - t0)


def run_experiment(cfg, mode="solve"):
    """Run every seed of the configured solver (``solve``) or of all 2^3 ablation variants (``sweep``).

    Failing runs become rows with a ``failed: ...`` status; the remaining
    runs are unaffected. Returns a ``RunRecord``; nothing is written here.
    """
    if mode not in ("solve", "sweep"):
        raise ValueError(f"unknown mode {mode!r}")
    t0 = time.perf_counter()
    base_weighting = cfg["solver"]["reg_weighting"]
    prior, field, table = _prepare(cfg, base_weighting == "calibrated")
    op, decoder = build_operator(cfg), build_decoder(cfg)
    base = solver_config(cfg, table)
    shape = signal_shape(cfg)
    per_seed = cfg["truth"]["per_seed"] and cfg["truth"]["source"] == "prior"

    truths, observations = {}, {}
    for seed in (cfg.seeds if per_seed else [None]):
        x_true, _ = _truth(cfg, prior, decoder, seed or 0)
        obs_seed = cfg["observation_seed"] + (seed if per_seed else 0)
        truths[seed], observations[seed] = x_true, observe(op, x_true, cfg["sigma_nu"], seed=obs_seed)

    variants = VARIANTS if mode == "sweep" else [{"hdc": 1, "dta": 1, "crw": 1}]
    jobs = [(flags, seed) for flags in variants for seed in cfg.seeds]

    def run(job):
        flags, seed = job
        key = seed if per_seed else None
        solver_cfg = replace(base.ablate(hdc=bool(flags["hdc"]), dta=bool(flags["dta"]), crw=bool(flags["crw"])),
                             seed=seed)
        try:
            res = flair_solve(field, observations[key], solver_cfg, decoder=decoder)
        except (SolverError, FloatingPointError, ValueError) as exc:
            return job, None, f"failed: {type(exc).__name__}: {exc}".replace("\n", " ")
        return job, res, "ok"

    workers = max(1, int(os.environ.get("FLAIR_LAB_THREADS", "1")))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(run, jobs))
    else:
        outcomes = [run(j) for j in jobs]

    record = RunRecord(cfg.digest(), mode, calibration=table, field=field, shape=shape)
    for seed, x in truths.items():
        suffix = "" if seed is None else f"_s{seed}"
        record.images[f"truth{suffix}"] = x
        record.images[f"observation{suffix}"] = op.adjoint(observations[seed].y)

    oracle = None
    if not per_seed and decoder is None:
        oracle = analytic_posterior(prior, op, max(cfg["sigma_nu"], 1e-12), observations[None].y)

    for flags in variants:
        vname = variant_name(flags)
        done = [(seed, res) for (f, seed), res, _ in outcomes if f is flags and res is not None]
        w1 = math.nan
        if len(done) >= 2:
            samples = np.stack([r.estimate for _, r in done])
            if not per_seed:
                record.images[f"variance_{vname}"] = samples.var(axis=0, ddof=1)
            if oracle is not None:
                ref = oracle.sample(np.random.default_rng(0), 2000)
                w1 = float(np.mean([wasserstein1_1d(samples[:, j], ref[:, j]) for j in range(samples.shape[1])]))
        for (f, seed), res, status in outcomes:
            if f is not flags:
                continue
            tag = f"{vname}_s{seed}"
            row = {"run": tag, "variant": vname, **flags, "seed": seed, "mse": math.nan, "psnr_db": math.nan,
                   "data_residual": math.nan, "posterior_w1": w1, "status": status}
            if res is not None:
                key = seed if per_seed else None
                rep = evaluate(res.estimate, truths[key], observations[key],
                               peak=float(np.ptp(truths[key])) or 1.0)
                row.update(mse=rep.mse, psnr_db=rep.psnr_db, data_residual=rep.data_residual)
                record.traces[tag] = res.trace
                record.images[f"recon_{tag}"] = res.estimate
            record.rows.append(row)
    record.wall_clock = time.perf_counter() - t0
    return record


# artifacts

def _fmt(v):
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def results_to_csv(rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RESULTS_HEADER)
    for r in rows:
        writer.writerow([_fmt(r[k]) for k in RESULTS_HEADER])
    return buf.getvalue()


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def emit_artifacts(record, outdir):
    """Write CSVs, PGM images (2D signals only) and ``manifest.json``; return the manifest dict."""
    outdir = Path(outdir)
    try:
        outdir.mkdir(parents=True, exist_ok=True)
        probe = outdir / ".write_probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise OSError(f"output directory {outdir} is not writable: {exc.strerror}") from None
    written = []
    if record.calibration is not None:
        p = outdir / "calibration.csv"
        p.write_text(record.calibration.to_csv())
        written.append(p)
    if isinstance(record.field, NetworkField):
        p = outdir / "field.json"
        p.write_text(record.field.to_json())
        written.append(p)
    if record.mode != "calibrate":
        p = outdir / "results.csv"
        p.write_text(results_to_csv(record.rows))
        written.append(p)
        for tag in sorted(record.traces):
            p = outdir / f"trace_{tag}.csv"
            p.write_text(trace_to_csv(record.traces[tag]))
            written.append(p)
    if len(record.shape) == 2:
        for name in sorted(record.images):
            written.extend(write_pgm(outdir / f"{name}.pgm", np.reshape(record.images[name], record.shape)))
    manifest = {
        "config_hash": record.config_hash,
        "mode": record.mode,
        "runs": len(record.rows),
        "failed_runs": len(record.failures),
        "wall_clock_seconds": record.wall_clock,
        "files": [{"path": p.name, "bytes": p.stat().st_size, "sha256": _sha256(p)} for p in written],
    }
    (outdir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


RUNTIME_ERRORS = (SolverError, CalibrationError, TrainingError, FloatingPointError, OSError)
