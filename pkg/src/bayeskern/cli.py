"""Batch command-line front end.

Usage::

    bayeskern COMMAND --config run.toml --data train.csv [--out result.csv]
              [--seed N] [--jitter J]

Every output is CSV preceded by ``#`` metadata lines (tool version, command,
SHA-256 digest of config and data, seed, jitter). Output depends only on
the inputs and the seed, so reruns are byte-identical.
"""
import argparse
import csv
import hashlib
import io
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, evidence, gp, kalman, qgp, rvm, smoothers
from .data import Dataset, as_inputs
from .errors import BayesKernError, ConfigError, DomainError, EmptyDataset, ParseError
from .kernels import BasisSet, KernelSpec
from .numerics import make_rng

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

COMMANDS = ("fit", "predict", "smooth", "sample", "learn", "relevance", "kalman", "compare")
MODEL_KINDS = ("rvm", "qgp", "gp", "smoother", "kalman")


def ingest_csv(path):
    """Read a dataset: header of input column names followed by ``y``."""
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise ParseError(f"{path}: line 1: missing header")
    header = [h.strip() for h in lines[0].split(",")]
    if len(header) < 2 or header[-1] != "y":
        raise ParseError(f"{path}: line 1: header must list input columns then 'y', got {header}")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            # a trailing newline at EOF is fine; interior blank lines are not
            if all(not rest.strip() for rest in lines[lineno - 1:]):
                break
            raise ParseError(f"{path}: line {lineno}: blank line")
        cells = [c.strip() for c in line.split(",")]
        if len(cells) != len(header):
            raise ParseError(f"{path}: line {lineno}: expected {len(header)} cells, got {len(cells)}")
        row = []
        for col, cell in zip(header, cells):
            try:
                val = float(cell)
            except ValueError:
                raise ParseError(f"{path}: line {lineno}, column {col!r}: not a number: {cell!r}") from None
            if not math.isfinite(val):
                raise ParseError(f"{path}: line {lineno}, column {col!r}: non-finite value {cell!r}")
            row.append(val)
        rows.append(row)
    if not rows:
        raise EmptyDataset(f"{path}: no data rows")
    arr = np.array(rows)
    return Dataset(arr[:, :-1], arr[:, -1], tuple(header[:-1]))


@dataclass
class TableOutput:
    columns: dict                     # name -> sequence (numbers or labels)
    metadata: dict = field(default_factory=dict)
    sidecars: dict = field(default_factory=dict)   # suffix -> 2-D array

    def __post_init__(self):
        lengths = {len(v) for v in self.columns.values()}
        if len(lengths) > 1:
            raise ValueError(f"ragged table: column lengths {sorted(lengths)}")

    @property
    def n_rows(self):
        return len(next(iter(self.columns.values()))) if self.columns else 0


def _fmt(v):
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def render_table(table):
    buf = io.StringIO()
    for k, v in table.metadata.items():
        buf.write(f"# {k}: {v}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.columns)
    cols = list(table.columns.values())
    for i in range(table.n_rows):
        w.writerow([_fmt(c[i]) for c in cols])
    return buf.getvalue()


def render_matrix(m, metadata):
    buf = io.StringIO()
    for k, v in metadata.items():
        buf.write(f"# {k}: {v}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"c{j + 1}" for j in range(m.shape[1])])
    for row in m:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


@dataclass
class RunConfig:
    command: str
    raw: dict
    dataset: Dataset
    seed: int = 0
    jitter: float = 0.0

    def section(self, name):
        val = self.raw.get(name, {})
        if not isinstance(val, dict):
            raise ConfigError(f"[{name}] must be a table")
        return val

    @property
    def model(self):
        return self.section("model")

    @property
    def kind(self):
        kind = self.model.get("kind", "gp")
        if kind not in MODEL_KINDS:
            raise ConfigError(f"model.kind must be one of {MODEL_KINDS}, got {kind!r}")
        return kind

    @property
    def noise_var(self):
        return float(self.model.get("noise_var", 0.0))

    def kernel(self):
        k = {"family": "squared-exp-general", **self.section("kernel")}
        try:
            return KernelSpec.from_dict(k)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"[kernel]: {exc}") from exc

    def points(self, section):
        """Query inputs from ``points`` (list) or ``grid`` ({start, stop, num}); default: training inputs."""
        sec = self.section(section)
        if "points" in sec:
            return as_inputs(np.asarray(sec["points"], dtype=float), self.dataset.dim)
        if "grid" in sec:
            g = sec["grid"]
            try:
                return as_inputs(np.linspace(g["start"], g["stop"], int(g["num"])), self.dataset.dim)
            except KeyError as exc:
                raise ConfigError(f"[{section}].grid needs start, stop and num; missing {exc}") from None
        return self.dataset.X


def digest(data):
    return hashlib.sha256(data).hexdigest()


def build_model(cfg, kind=None):
    kind = kind or cfg.kind
    spec = cfg.kernel()
    ds = cfg.dataset
    if kind == "gp":
        return gp.GpModel(ds, spec, cfg.noise_var, cfg.jitter)
    if kind == "qgp":
        return qgp.QgpModel(ds, spec, cfg.noise_var, cfg.jitter)
    if kind == "rvm":
        basis = BasisSet(ds.X, spec)
        prior_var = float(cfg.model.get("prior_var", 1.0))
        return rvm.RvmModel(ds, basis, prior_var * np.eye(ds.n), cfg.noise_var, jitter=cfg.jitter)
    raise ConfigError(f"command needs a regression model (rvm, qgp, gp), got {kind!r}")


_PREDICT = {"gp": gp.predict, "qgp": qgp.predict, "rvm": rvm.predict}
_SMOOTH = {"gp": gp.smooth, "qgp": qgp.smooth, "rvm": rvm.smooth}


def _input_columns(cfg, X):
    return {name: X[:, j] for j, name in enumerate(cfg.dataset.input_names)}


def cmd_fit(cfg):
    model = build_model(cfg)
    terms = evidence.nll_decomposition(model)
    cols = {
        "n": [cfg.dataset.n],
        "log_marginal": [evidence.log_marginal(model)],
        "fit_term": [terms.fit],
        "complexity_term": [terms.complexity],
        "constant": [terms.constant],
    }
    return TableOutput(cols)


def _smoother_predict(cfg, X):
    sec = cfg.section("smoother")
    method = sec.get("method", "nadaraya-watson")
    params = {k: v for k, v in sec.items() if k != "method"}
    if "k" in params:
        params["k"] = int(params["k"])
    ds = cfg.dataset
    mean = np.array([smoothers.predict(method, x, ds.X, ds.y, **params) for x in X])
    return mean, np.full(mean.size, math.nan)


def cmd_predict(cfg):
    X = cfg.points("predict")
    if cfg.kind == "smoother":
        mean, var = _smoother_predict(cfg, X)
    else:
        mean, var = _PREDICT[cfg.kind](build_model(cfg), X)
    return TableOutput({**_input_columns(cfg, X), "mean": mean, "variance": var})


def cmd_smooth(cfg):
    state = _SMOOTH[cfg.kind](build_model(cfg))
    cols = {"index": np.arange(1, cfg.dataset.n + 1), "mean": state.mean, "variance": state.variance}
    return TableOutput(cols, sidecars={"cov": state.cov})


def cmd_sample(cfg):
    sec = cfg.section("sample")
    X = cfg.points("sample")
    count = int(sec.get("count", 10))
    target = sec.get("target", "posterior")
    if target not in ("prior", "posterior"):
        raise ConfigError("sample.target must be 'prior' or 'posterior'")
    model = build_model(cfg)
    rng = make_rng(cfg.seed)
    meta = {}
    if cfg.kind == "gp":
        fn = gp.sample_prior if target == "prior" else gp.sample_posterior
        draws = fn(model, X, rng, count, info=meta)
    elif cfg.kind == "rvm":
        fn = rvm.sample_prior if target == "prior" else rvm.sample_posterior
        draws = fn(model, X, rng, count, path=sec.get("path", "weights"))
    else:
        raise ConfigError("sampling is available for gp and rvm models")
    cols = _input_columns(cfg, X)
    cols.update({f"draw_{s + 1}": draws[s] for s in range(count)})
    out = TableOutput(cols)
    out.metadata.update({"target": target, "count": count})
    if meta:
        out.metadata["clipped_eigenvalue"] = repr(meta["clipped_eigenvalue"])
    return out


def cmd_learn(cfg):
    sec = cfg.section("learn")
    kind = cfg.kind
    free = sec.get("free", ["lengthscale", "noise_var"])
    hyper = evidence.HyperModel(kind, cfg.dataset, cfg.kernel(), free, cfg.noise_var,
                                float(cfg.model.get("prior_var", 1.0)), cfg.jitter)
    bounds = {k: tuple(v) for k, v in sec.get("bounds", {}).items()}
    res = evidence.optimize_type2(hyper, bounds=bounds, max_iter=int(sec.get("max_iter", 200)),
                                  restarts=int(sec.get("restarts", 2)), seed=cfg.seed)
    cols = {"iteration": [t[0] for t in res.trace]}
    for j, name in enumerate(res.names):
        cols[name] = [t[1][j] for t in res.trace]
    cols["nll"] = [t[2] for t in res.trace]
    return TableOutput(cols)


def cmd_relevance(cfg):
    if cfg.kind != "rvm":
        raise ConfigError("relevance learning needs model.kind = 'rvm'")
    sec = cfg.section("relevance")
    model = build_model(cfg)
    alpha, kept, _, history = rvm.learn_relevance(
        model, int(sec.get("max_iter", 50)), float(sec.get("prune_threshold", rvm.DEFAULT_PRUNE)))
    mask = np.zeros(alpha.size, dtype=int)
    mask[kept] = 1
    cols = {"index": np.arange(1, alpha.size + 1), **_input_columns(cfg, cfg.dataset.X),
            "alpha": alpha, "kept": mask}
    out = TableOutput(cols)
    out.metadata["final_log_evidence"] = repr(history[-1])
    return out


def _kalman_model(cfg):
    sec = cfg.section("kalman")
    try:
        model = kalman.StateSpaceAR1(float(sec["gamma"]), float(sec["process_var"]),
                                     float(sec.get("obs_var", cfg.noise_var)))
    except KeyError as exc:
        raise ConfigError(f"[kalman] needs {exc}") from None
    ds = cfg.dataset
    if ds.dim != 1 or not np.array_equal(ds.X[:, 0], np.arange(1, ds.n + 1)):
        raise DomainError("kalman data must be indexed t = 1..N in order")
    return model


def cmd_kalman(cfg):
    model = _kalman_model(cfg)
    init = cfg.section("kalman").get("init")
    track = kalman.forward_filter(model, cfg.dataset.y, init)
    sm = kalman.backward_smooth(model, track)
    return TableOutput({
        "t": np.arange(1, len(track) + 1),
        "mu_pred": track.mean_pred, "var_pred": track.var_pred,
        "mu_filt": track.mean_filt, "var_filt": track.var_filt,
        "mu_smooth": sm.mean, "var_smooth": sm.var,
    })


def _method_curve(cfg, method, X):
    if method == "kalman":
        model = _kalman_model(cfg)
        sm = kalman.backward_smooth(model, kalman.forward_filter(model, cfg.dataset.y))
        if not np.array_equal(X, cfg.dataset.X):
            raise ConfigError("kalman comparisons are made at the training times")
        return sm.mean, sm.var
    if method == "smoother":
        return _smoother_predict(cfg, X)
    if method in _PREDICT:
        if method == "gp" and "kalman" in cfg.section("compare").get("methods", ()):
            sec = cfg.section("kalman")
            spec = KernelSpec("ar1-discrete", {"ar_coef": sec["gamma"], "process_var": sec["process_var"]})
            model = gp.GpModel(cfg.dataset, spec, float(sec.get("obs_var", cfg.noise_var)), cfg.jitter)
            return gp.predict(model, X)
        return _PREDICT[method](build_model(cfg, method), X)
    raise ConfigError(f"unknown comparison method {method!r}")


def cmd_compare(cfg):
    methods = cfg.section("compare").get("methods", ["gp", "qgp"])
    if len(methods) != 2:
        raise ConfigError("compare.methods must name exactly two methods")
    a, b = methods
    X = cfg.points("compare")
    ma, va = _method_curve(cfg, a, X)
    mb, vb = _method_curve(cfg, b, X)
    cols = {"row": [str(i + 1) for i in range(X.shape[0])], **_input_columns(cfg, X),
            f"mean_{a}": ma, f"mean_{b}": mb, "mean_delta": ma - mb,
            f"variance_{a}": va, f"variance_{b}": vb, "variance_delta": va - vb}
    for k, v in cols.items():
        if k == "row":
            v.append("max_abs")
        else:
            cols[k] = list(v) + [float(np.max(np.abs(v)))]
    return TableOutput(cols)


HANDLERS = {
    "fit": cmd_fit, "predict": cmd_predict, "smooth": cmd_smooth, "sample": cmd_sample,
    "learn": cmd_learn, "relevance": cmd_relevance, "kalman": cmd_kalman, "compare": cmd_compare,
}


def run_command(cfg):
    table = HANDLERS[cfg.command](cfg)
    table.metadata = {
        "tool": f"bayeskern {__version__}",
        "command": cfg.command,
        **table.metadata,
        "seed": cfg.seed,
        "jitter": repr(cfg.jitter),
    }
    return table


def load_config(command, config_path, data_path, seed=None, jitter=None):
    raw_bytes = Path(config_path).read_bytes() if config_path else b""
    try:
        raw = tomllib.loads(raw_bytes.decode("utf-8")) if raw_bytes else {}
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError(f"{config_path}: {exc}") from exc
    data_path = data_path or raw.get("data")
    if not data_path:
        raise ConfigError("no dataset given (use --data or a top-level 'data' key)")
    if config_path and not Path(data_path).is_absolute() and not Path(data_path).exists():
        data_path = Path(config_path).parent / data_path
    dataset = ingest_csv(data_path)
    seed = int(raw.get("seed", 0)) if seed is None else seed
    jitter = float(raw.get("jitter", 0.0)) if jitter is None else jitter
    if seed < 0 or jitter < 0:
        raise ConfigError("seed and jitter must be nonnegative")
    cfg = RunConfig(command, raw, dataset, seed, jitter)
    cfg.raw_digest = digest(raw_bytes)
    cfg.data_digest = digest(Path(data_path).read_bytes())
    return cfg


def build_parser():
    p = argparse.ArgumentParser(prog="bayeskern", description="Bayesian kernel regression toolkit")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="TOML run configuration")
    p.add_argument("--data", help="CSV dataset: input columns then y")
    p.add_argument("--out", help="output CSV path (default: stdout)")
    p.add_argument("--seed", type=int, help="random seed (overrides the config)")
    p.add_argument("--jitter", type=float, help="one-time diagonal jitter (overrides the config)")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.command, args.config, args.data, args.seed, args.jitter)
        table = run_command(cfg)
        table.metadata["config_sha256"] = cfg.raw_digest
        table.metadata["data_sha256"] = cfg.data_digest
        text = render_table(table)
        if args.out:
            out = Path(args.out)
            out.write_text(text, encoding="utf-8")
            for suffix, m in table.sidecars.items():
                side = out.with_name(f"{out.stem}.{suffix}.csv")
                side.write_text(render_matrix(m, table.metadata), encoding="utf-8")
        else:
            sys.stdout.write(text)
    except BayesKernError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return 2
    except (OSError, KeyError, TypeError, ValueError) as exc:
        code = "IO_ERROR" if isinstance(exc, OSError) else "INVALID_ARGUMENT"
        print(f"error [{code}]: {exc}", file=sys.stderr)
        return 3 if isinstance(exc, OSError) else 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
