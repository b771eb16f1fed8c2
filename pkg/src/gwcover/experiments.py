"""Declarative experiments: config parsing, seeded trial dispatch, persistence, reports.

A config is a JSON object.  Every trial i draws from its own stream seeded by
``trial_seed(master_seed, i)``, so results do not depend on the number of
workers or on the order in which trials run.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
import json
import math
import os

import numpy as np

from . import __version__, dgff, pglocal, stats, walk
from .errors import IncompleteExperiment, ValidationError
from .tree import (
    OffspringSpec,
    gen_stats,
    read_tree,
    regularity_report,
    sample_tree,
    sigma_sq,
    write_tree,
)

EXPERIMENTS = (
    "cover",
    "excursion",
    "localtime-field",
    "uncovered-count",
    "ray-knight",
    "dgff-max",
    "regularity",
)

_TRIAL_TAG = 0
_TREE_TAG = 1

TREE_FILE = "tree.txt"
MANIFEST = "manifest.json"
REPORT = "report.txt"


@dataclass
class ExperimentConfig:
    experiment: str
    offspring: list
    lam: float
    n: int
    trials: int = 1
    mu_grid: list = None
    master_seed: int = 0
    workers: int = 1
    output_dir: str = "out"
    t: float = 10.0
    probes: list = None
    engine: str = "exact"
    fresh_tree: bool = False
    write_fields: bool = False
    c: float = None
    eps: float = 0.5
    max_attempts: int = 10_000
    source_text: str = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValidationError(f"experiment must be one of {', '.join(EXPERIMENTS)}; got {self.experiment!r}")
        self.spec = OffspringSpec(tuple(self.offspring))
        if not (isinstance(self.lam, (int, float)) and self.lam > 1):
            raise ValidationError(f"lambda must be a number > 1, got {self.lam!r}")
        self.lam = float(self.lam)
        _need_int("n", self.n, 0)
        _need_int("trials", self.trials, 1)
        _need_int("workers", self.workers, 1)
        _need_int("master_seed", self.master_seed, 0)
        if self.master_seed >= 2**64:
            raise ValidationError("master_seed must fit in 64 bits")
        _need_int("max_attempts", self.max_attempts, 1)
        if not (isinstance(self.t, (int, float)) and self.t > 0):
            raise ValidationError(f"t must be > 0, got {self.t!r}")
        if self.engine not in ("exact", "walk"):
            raise ValidationError(f"engine must be 'exact' or 'walk', got {self.engine!r}")
        if self.mu_grid is not None:
            if not isinstance(self.mu_grid, list) or not self.mu_grid:
                raise ValidationError("mu_grid must be a nonempty list of numbers")
            self.mu_grid = [float(m) for m in self.mu_grid]
        if self.probes is not None and not all(isinstance(p, int) and p >= 0 for p in self.probes):
            raise ValidationError("probes must be a list of node ids")
        if self.c is not None and self.c <= 3 / math.log(self.lam):
            raise ValidationError(f"c must exceed 3/log(lambda) = {3 / math.log(self.lam):.6g}")

    @property
    def mus(self):
        return self.mu_grid if self.mu_grid is not None else [0.0]

    def as_dict(self):
        d = asdict(self)
        d.pop("source_text")
        d["lambda"] = d.pop("lam")
        return d


def _need_int(name, v, lo):
    if isinstance(v, bool) or not isinstance(v, int) or v < lo:
        raise ValidationError(f"{name} must be an integer >= {lo}, got {v!r}")


def parse_config(text, **overrides):
    """Parse JSON config text; ``overrides`` (e.g. from CLI flags) win when not None."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ValidationError("config must be a JSON object")
    if "lambda" in raw:
        raw["lam"] = raw.pop("lambda")
    known = set(ExperimentConfig.__dataclass_fields__) - {"source_text"}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ValidationError(f"unknown config fields: {', '.join(unknown)}")
    missing = [k for k in ("experiment", "offspring", "lam", "n") if k not in raw]
    if missing:
        raise ValidationError(f"missing config fields: {', '.join('lambda' if k == 'lam' else k for k in missing)}")
    raw.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**raw, source_text=text)


def load_config(path, **overrides):
    with open(path) as fh:
        return parse_config(fh.read(), **overrides)


def trial_seed(master_seed, trial_id, tag=_TRIAL_TAG):
    """64-bit seed for one trial, derived from (master_seed, trial_id) only."""
    ss = np.random.SeedSequence(master_seed, spawn_key=(tag, trial_id))
    return int(ss.generate_state(1, np.uint64)[0])


def stream(seed):
    return np.random.Generator(np.random.PCG64(seed))


def experiment_tree(cfg, trial_id=None):
    key = (_TREE_TAG,) if trial_id is None else (_TREE_TAG, trial_id)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(cfg.master_seed, spawn_key=key)))
    return sample_tree(cfg.spec, cfg.n, rng, max_attempts=cfg.max_attempts)


def default_probes(tree):
    """First vertex of every generation."""
    return [int(tree.gen_start[k]) for k in range(tree.n + 1)]


def fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if x is None:
        return "NA"
    if isinstance(x, str):
        return x
    return format(float(x), ".17g")


# -- trial functions: run in workers, return {filename: [row, ...]} -------------

_CTX = {}


def _init_worker(ctx):
    _CTX.clear()
    _CTX.update(ctx)


def _trial(i):
    cfg = _CTX["cfg"]
    seed = trial_seed(cfg.master_seed, i)
    rng = stream(seed)
    tree = experiment_tree(cfg, i) if cfg.fresh_tree else _CTX["tree"]
    lam = cfg.lam
    kind = cfg.experiment
    if kind == "cover":
        st = gen_stats(tree, lam, cfg.spec.m)
        r = walk.run_to_cover(tree, lam, rng)
        x = stats.canonical_statistic(r.t_cover_real, st)
        depth = int(tree.depth[r.last_vertex])
        return {"trials.csv": [(i, seed, tree.n, lam, r.t_cover_real, r.steps, r.t_cover_excursion, depth, x)]}
    if kind in ("excursion", "localtime-field"):
        probes = _CTX["probes"]
        if kind == "excursion":
            f, tau = walk.run_excursion_budget(tree, lam, cfg.t, rng)
            head = (i, seed, tree.n, lam, cfg.t, tau)
        else:
            f = pglocal.sample_field_exact(tree, lam, cfg.t, rng)
            leaves = f.values[tree.generation(tree.n)]
            head = (i, seed, tree.n, lam, cfg.t, int(np.count_nonzero(leaves == 0.0)))
        out = {
            "trials.csv": [head],
            "probes.csv": [(i, p, int(tree.depth[p]), f.values[p]) for p in probes],
        }
        if cfg.write_fields:
            out[f"fields/trial_{i:06d}.csv"] = [(k, v) for k, v in enumerate(f.values)]
        return out
    if kind == "uncovered-count":
        budgets = [pglocal.budget_for(tree, lam, mu) for mu in cfg.mus]
        order = np.argsort(budgets, kind="stable")
        fields = pglocal.coupled_fields(tree, lam, [budgets[j] for j in order], rng)
        out = {}
        for j, fld in zip(order, fields):
            rep = pglocal.landscape_diagnostics(fld, tree, lam, cfg.c)
            mu = cfg.mus[j]
            out[_mu_file(mu)] = [(i, mu, rep.count, rep.distinct_ancestors, rep.early_uncovered, rep.max_ancestor_deviation)]
        return out
    if kind == "ray-knight":
        probes = _CTX["probes"]
        pairs = dgff.ray_knight_pair_samples(tree, lam, cfg.t, probes, 1, rng, engine=cfg.engine)
        return {"ray_knight.csv": [(i, seed, p, int(tree.depth[p]), pairs[p][0][0], pairs[p][1][0]) for p in probes]}
    if kind == "dgff-max":
        mx = float(dgff.dgff_leaf_max(tree, lam, rng, 1)[0])
        rows = []
        for mu in cfg.mus:
            thr = dgff.max_threshold(tree, lam, mu)
            rows.append((i, mu, mx, thr, mx > thr))
        return {"dgff_max.csv": rows}
    raise AssertionError(kind)


def _mu_file(mu):
    return f"uncovered_mu={fmt(mu)}.csv"


HEADERS = {
    "cover": {"trials.csv": "trial_id,seed,n,lambda,T_cov,steps,t_cov_excursion,last_vertex_depth,normalized_x"},
    "excursion": {"trials.csv": "trial_id,seed,n,lambda,t,tau", "probes.csv": "trial_id,node,depth,L"},
    "localtime-field": {"trials.csv": "trial_id,seed,n,lambda,t,uncovered_leaves", "probes.csv": "trial_id,node,depth,L"},
    "ray-knight": {"ray_knight.csv": "trial_id,seed,node,depth,side_a,side_b"},
    "dgff-max": {"dgff_max.csv": "trial_id,mu,max_eta,threshold,exceeded"},
    "regularity": {"regularity.csv": "check,value,bound,passed"},
}
_UNCOVERED_HEADER = "trial_id,mu,count,distinct_ancestors,early_uncovered,max_ancestor_dev"
_FIELD_HEADER = "id,L"


def _headers(cfg):
    if cfg.experiment == "uncovered-count":
        return {_mu_file(mu): _UNCOVERED_HEADER for mu in cfg.mus}
    return dict(HEADERS[cfg.experiment])


def _atomic_write(path, text):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    tmp = path + ".partial"
    with open(tmp, "w", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _csv(header, rows):
    lines = [header]
    lines.extend(",".join(fmt(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def dispatch(cfg, ctx, trial_ids):
    """Run trials, in-process or on a pool; results come back ordered by trial id."""
    if cfg.workers == 1:
        _init_worker(ctx)
        return [_trial(i) for i in trial_ids]
    chunk = max(1, len(trial_ids) // (cfg.workers * 8))
    with ProcessPoolExecutor(max_workers=cfg.workers, initializer=_init_worker, initargs=(ctx,)) as pool:
        return list(pool.map(_trial, trial_ids, chunksize=chunk))


def run_experiment(cfg):
    """Run ``cfg`` and persist raw CSVs, the tree, a manifest and the report.

    Returns the output directory.
    """
    out = cfg.output_dir
    try:
        os.makedirs(out, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    tree = experiment_tree(cfg)
    write_tree_atomic(tree, os.path.join(out, TREE_FILE), cfg.lam, cfg.master_seed)
    files = {}
    if cfg.experiment == "regularity":
        c = cfg.c if cfg.c is not None else pglocal.default_c(cfg.lam)
        rep = regularity_report(tree, cfg.spec.m, cfg.lam, c, cfg.eps)
        files["regularity.csv"] = _csv(HEADERS["regularity"]["regularity.csv"], rep.rows())
    else:
        ctx = {"cfg": cfg, "tree": tree}
        if cfg.experiment in ("excursion", "localtime-field", "ray-knight"):
            probes = cfg.probes if cfg.probes is not None else default_probes(tree)
            bad = [p for p in probes if p >= tree.size]
            if bad:
                raise ValidationError(f"probe ids {bad} are not in the tree ({tree.size} nodes)")
            ctx["probes"] = probes
        results = dispatch(cfg, ctx, list(range(cfg.trials)))
        headers = _headers(cfg)
        rows = {name: [] for name in headers}
        for res in results:
            for name, rs in res.items():
                rows.setdefault(name, []).extend(rs)
        for name, rs in rows.items():
            files[name] = _csv(headers.get(name, _FIELD_HEADER), rs)
    for name, text in files.items():
        _atomic_write(os.path.join(out, name), text)
    manifest = {
        "code_version": __version__,
        "backend": walk.BACKEND,
        "experiment": cfg.experiment,
        "config": cfg.as_dict(),
        "config_text": cfg.source_text,
        "files": sorted(files),
        "tree_file": TREE_FILE,
        "tree_rejections": tree.rejections,
        "fresh_tree": cfg.fresh_tree,
    }
    _atomic_write(os.path.join(out, MANIFEST), json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    report(out)
    return out


def write_tree_atomic(tree, path, lam, seed):
    tmp = path + ".partial"
    write_tree(tree, tmp, lam, seed)
    os.replace(tmp, path)


# -- reports ---------------------------------------------------------------------


def _read_csv(path):
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        rows = [line.rstrip("\n").split(",") for line in fh if line.strip()]
    return {h: [r[j] for r in rows] for j, h in enumerate(header)}


def _floats(col):
    return np.array([math.nan if v == "NA" else float(v) for v in col])


def load_manifest(out):
    path = os.path.join(out, MANIFEST)
    if not os.path.exists(path):
        raise IncompleteExperiment(out, [MANIFEST])
    with open(path) as fh:
        manifest = json.load(fh)
    missing = [f for f in manifest["files"] + [manifest["tree_file"]] if not os.path.exists(os.path.join(out, f))]
    if missing:
        raise IncompleteExperiment(out, missing)
    return manifest


def report(out):
    """Recompute summary statistics from raw files; writes and returns ``report.txt`` text."""
    manifest = load_manifest(out)
    cfg = manifest["config"]
    tree, _ = read_tree(os.path.join(out, manifest["tree_file"]))
    lam = cfg["lambda"]
    m = OffspringSpec(tuple(cfg["offspring"])).m
    lines = [
        f"experiment: {manifest['experiment']}",
        f"code_version: {manifest['code_version']}",
        f"lambda: {fmt(lam)}",
        f"m: {fmt(m)}",
        f"n: {tree.n}",
        f"Z_n: {int(tree.z[-1])}",
        f"regime: {stats.regime(lam, m)}",
        f"tree_rejections: {manifest['tree_rejections']}",
        f"fresh_tree: {str(manifest['fresh_tree']).lower()}",
    ]
    kind = manifest["experiment"]
    lines += _SECTIONS[kind](out, manifest, tree, lam, m)
    text = "\n".join(lines) + "\n"
    _atomic_write(os.path.join(out, REPORT), text)
    return text


def _kv(key, value):
    if isinstance(value, float) or isinstance(value, np.floating):
        value = f"{float(value):.6g}"
    return f"{key}: {value}"


def _report_cover(out, manifest, tree, lam, m):
    d = _read_csv(os.path.join(out, "trials.csv"))
    T = _floats(d["T_cov"])
    x = _floats(d["normalized_x"])
    steps = _floats(d["steps"])
    st = gen_stats(tree, lam, m)
    D, p = stats.ks_statistic(x, stats.gumbel_cdf)
    mean, se = stats.mean_se(x)
    lines = [
        _kv("sample_size", x.size),
        _kv("s_n", st.s_n),
        _kv("sigma_n_sq", float(st.sigma_sq[-1])),
        _kv("w_hat", st.w_hat),
        _kv("ks_D_gumbel", D),
        _kv("ks_p_gumbel", p),
        _kv("mean_x", mean),
        _kv("mean_x_se", se),
        _kv("gumbel_mean", stats.EULER_GAMMA),
        _kv("mean_steps_over_T", float(np.mean(steps / T))),
    ]
    if not manifest["fresh_tree"]:
        xr = np.array([stats.regime_statistic(t, st) for t in T])
        Dr, pr = stats.ks_statistic(xr, stats.gumbel_cdf)
        mr, ser = stats.mean_se(xr)
        lines += [_kv("ks_D_gumbel_regime_form", Dr), _kv("ks_p_gumbel_regime_form", pr),
                  _kv("mean_x_regime_form", mr), _kv("mean_x_regime_form_se", ser)]
        if lam > m:
            lines.append(_kv("series_tail_order", (m / lam) ** tree.n))
    return lines


def _probe_lines(probes, lam, t):
    lines = []
    node = probes["node"]
    vals = _floats(probes["L"])
    depth = np.array([int(v) for v in probes["depth"]])
    ids = np.array([int(v) for v in node])
    for p in sorted(set(ids.tolist())):
        sel = vals[ids == p]
        k = int(depth[ids == p][0])
        s2 = sigma_sq(lam, k)
        mean, se = stats.mean_se(sel)
        var, vse = stats.var_se(sel)
        zero = float(np.mean(sel == 0.0))
        lines += [
            f"probe {p} depth {k}:",
            "  " + _kv("mean_L", mean) + f" (se {se:.3g}, expected {t:.6g})",
            "  " + _kv("var_L", var) + f" (se {vse:.3g}, expected {2 * t * s2:.6g})",
            "  " + _kv("zero_fraction", zero) + f" (expected {math.exp(-t / s2):.6g})",
        ]
    return lines


def _report_excursion(out, manifest, tree, lam, m):
    d = _read_csv(os.path.join(out, "trials.csv"))
    t = float(d["t"][0])
    st = gen_stats(tree, lam, m)
    tau = _floats(d["tau"])
    mean, se = stats.mean_se(tau)
    lines = [_kv("sample_size", tau.size), _kv("t", t), _kv("s_n", st.s_n),
             _kv("mean_tau", mean), _kv("mean_tau_se", se), _kv("expected_tau", 2 * t * st.s_n)]
    return lines + _probe_lines(_read_csv(os.path.join(out, "probes.csv")), lam, t)


def _report_field(out, manifest, tree, lam, m):
    d = _read_csv(os.path.join(out, "trials.csv"))
    t = float(d["t"][0])
    unc = _floats(d["uncovered_leaves"])
    mean, se = stats.mean_se(unc)
    lines = [_kv("sample_size", unc.size), _kv("t", t), _kv("mean_uncovered_leaves", mean),
             _kv("mean_uncovered_leaves_se", se), _kv("expected_uncovered_leaves", pglocal.expected_uncovered(tree, lam, t))]
    return lines + _probe_lines(_read_csv(os.path.join(out, "probes.csv")), lam, t)


def _report_uncovered(out, manifest, tree, lam, m):
    lines = []
    for name in manifest["files"]:
        d = _read_csv(os.path.join(out, name))
        mu = float(d["mu"][0])
        counts = np.array([int(v) for v in d["count"]])
        rate = math.exp(-mu)
        mean, se = stats.mean_se(counts)
        distinct = [v == "1" for v in d["distinct_ancestors"] if v != "NA"]
        early = np.array([int(v) for v in d["early_uncovered"]])
        lines += [
            f"mu {fmt(mu)}:",
            "  " + _kv("sample_size", counts.size),
            "  " + _kv("budget", pglocal.budget_for(tree, lam, mu)),
            "  " + _kv("mean_count", mean) + f" (se {se:.3g}, poisson rate {rate:.6g})",
            "  " + _kv("tv_poisson", stats.tv_distance(counts, rate)),
            "  " + _kv("distinct_ancestor_frequency", float(np.mean(distinct)) if distinct else "NA")
            + f" (over {len(distinct)} trials with >= 2 uncovered leaves)",
            "  " + _kv("early_covered_frequency", float(np.mean(early == 0))),
            "  " + _kv("max_ancestor_dev_mean", float(np.mean(_floats(d["max_ancestor_dev"])))),
        ]
    return lines


def _report_ray_knight(out, manifest, tree, lam, m):
    d = _read_csv(os.path.join(out, "ray_knight.csv"))
    t = manifest["config"]["t"]
    ids = np.array([int(v) for v in d["node"]])
    a, b = _floats(d["side_a"]), _floats(d["side_b"])
    lines = [_kv("t", t), _kv("engine", manifest["config"]["engine"])]
    for p in sorted(set(ids.tolist())):
        sel = ids == p
        k = int(tree.depth[p])
        D, pv = stats.ks_two_sample(a[sel], b[sel])
        lines += [
            f"probe {p} depth {k}:",
            "  " + _kv("ks_D", D),
            "  " + _kv("ks_p", pv),
            "  " + _kv("mean_side_a", float(a[sel].mean())),
            "  " + _kv("mean_side_b", float(b[sel].mean())),
            "  " + _kv("expected_mean", t + sigma_sq(lam, k) / 2),
        ]
    return lines


def _report_dgff_max(out, manifest, tree, lam, m):
    d = _read_csv(os.path.join(out, "dgff_max.csv"))
    mus = _floats(d["mu"])
    mx = _floats(d["max_eta"])
    z_n = int(tree.z[-1])
    lines = []
    for mu in sorted(set(mus.tolist())):
        sel = mx[mus == mu]
        thr = dgff.max_threshold(tree, lam, mu)
        p = float(np.mean(sel <= thr))
        lines += [
            f"mu {fmt(mu)}:",
            "  " + _kv("sample_size", sel.size),
            "  " + _kv("p_max_below_threshold", p) + f" (se {stats.proportion_se(p, sel.size):.3g})",
            "  " + _kv("limit", dgff.max_limit(mu)),
        ]
        if math.log(z_n) + mu > 0:
            ex = float(np.mean(sel > dgff.union_threshold(tree, lam, mu)))
            lines += ["  " + _kv("union_exceedance", ex), "  " + _kv("union_bound", dgff.gaussian_max_bound(z_n, mu))]
    return lines


def _report_regularity(out, manifest, tree, lam, m):
    d = _read_csv(os.path.join(out, "regularity.csv"))
    return [f"{c}: value {float(v):.6g} bound {float(b):.6g} passed {'yes' if p == '1' else 'no'}"
            for c, v, b, p in zip(d["check"], d["value"], d["bound"], d["passed"])]


_SECTIONS = {
    "cover": _report_cover,
    "excursion": _report_excursion,
    "localtime-field": _report_field,
    "uncovered-count": _report_uncovered,
    "ray-knight": _report_ray_knight,
    "dgff-max": _report_dgff_max,
    "regularity": _report_regularity,
}
