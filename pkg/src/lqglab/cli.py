"""Command-line driver.

Subcommands: sample | metric | ball | confluence | probe | render.

Configuration lives in flags or a flat key=value file (--config); file
entries are injected before the explicit flags, so flags win. Unknown keys
are rejected. Every run computes a 12-hex-digit hash of its experiment
parameters (output directory, --threads, and --config path are excluded:
they cannot change results) and embeds it in every output file: JSON
trailers of binary grids, a leading comment in CSVs and PNM images, and
the run sidecar.

Exit codes: 0 success, 2 precondition/configuration error, 3 runtime
numeric error. stderr carries the error name verbatim, as "Name: detail".
"""

import argparse
import hashlib
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import gridio, render
from .ball import filled_ball, partition_arcs_by_harmonic_measure, tau_r, trace_boundary
from .errors import InsufficientSamples, InvalidSpec, LatticeError
from .field import FieldSpec, sample_gff
from .geodesic import (
    coalescence_radius,
    confluence_count,
    leftmost_family,
    prefix_consistency_violations,
    winding_spread,
)
from .metric import LfppParams, build_metric, default_params, distance_field
from .probe import (
    GoodAnnulusParams,
    crossing_functional,
    fkg_check,
    good_annulus_probability,
    inversion_check,
    scaling_sandwich,
)
from .stats import MonteCarloResult

HASH_EXCLUDED = ("config", "out", "threads")


def _seed_list(ns):
    """Seeds for this run: --seeds a..b is the half-open range [a, b)."""
    if getattr(ns, "seeds", None):
        text = ns.seeds
        try:
            a, b = text.split("..")
            seeds = list(range(int(a), int(b)))
        except ValueError:
            raise InvalidSpec(f"--seeds wants a..b, got {text!r}") from None
        if not seeds:
            raise InsufficientSamples(f"empty seed range {text!r}")
        return seeds
    return [getattr(ns, "seed", 0) or 0]


def _parse_vertex(text, what="vertex"):
    try:
        x, y = (int(p) for p in text.split(","))
    except ValueError:
        raise InvalidSpec(f"{what} wants x,y integers, got {text!r}") from None
    return x, y


def _parse_singularity(text):
    try:
        x, y, alpha = text.split(",")
        return ((int(x), int(y)), float(alpha))
    except ValueError:
        raise InvalidSpec(
            f"--singularity wants x,y,alpha, got {text!r}") from None


def params_from(ns):
    if getattr(ns, "xi", None) is not None:
        return LfppParams.from_xi(ns.xi)
    if getattr(ns, "gamma", None) is not None:
        return LfppParams.from_gamma(ns.gamma, getattr(ns, "dgamma", None))
    return default_params()


def field_spec_from(ns, seed):
    return FieldSpec(
        n=ns.n,
        seed=seed,
        spacing=getattr(ns, "spacing", None),
        spectral_exponent=getattr(ns, "exponent", None) or 2.0,
        singularities=tuple(
            _parse_singularity(s) for s in (getattr(ns, "singularity", None) or ())
        ),
    )


# -- configuration plumbing --------------------------------------------------

def read_config(path):
    """Parse a flat key=value file; '#' lines and blanks are skipped."""
    out = {}
    try:
        with open(path) as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise InvalidSpec(
                        f"{path}:{lineno}: expected key=value, got {line!r}")
                k, v = line.split("=", 1)
                out[k.strip()] = v.strip()
    except OSError as e:
        raise InvalidSpec(f"cannot read config {path}: {e}") from None
    return out


def effective_config(ns, keys):
    """The hashable parameter record: every set flag except excluded ones."""
    out = {}
    for dest in sorted(keys):
        if dest in HASH_EXCLUDED:
            continue
        v = getattr(ns, dest, None)
        if v is None or v is False:
            continue
        if v is True:
            v = "true"
        elif isinstance(v, (list, tuple)):
            v = ";".join(str(x) for x in v)
        out[dest] = str(v)
    return out


def config_hash(cfg):
    text = "\n".join(f"{k}={v}" for k, v in sorted(cfg.items()))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:12]


def write_config(path, cfg):
    with open(path, "w") as fh:
        fh.write(f"# config {config_hash(cfg)}\n")
        for k, v in sorted(cfg.items()):
            fh.write(f"{k}={v}\n")


class _Command:
    """Subparser wrapper recording dest -> flag for config-file injection."""

    def __init__(self, parser):
        self.parser = parser
        self.flags = {}
        self.booleans = set()

    def arg(self, *names, **kw):
        action = self.parser.add_argument(*names, **kw)
        if names[0].startswith("--"):
            self.flags[action.dest] = names[0]
            if kw.get("action") == "store_true":
                self.booleans.add(action.dest)
        return action

    def tokens(self, cfg):
        """Convert config-file entries to argv tokens, rejecting unknowns."""
        tokens = []
        for k, v in cfg.items():
            if k not in self.flags:
                raise InvalidSpec(f"unknown config key {k!r}")
            if k in self.booleans:
                if v.lower() in ("true", "1", "yes"):
                    tokens.append(self.flags[k])
                elif v.lower() not in ("false", "0", "no"):
                    raise InvalidSpec(f"config key {k!r} wants true/false")
            else:
                tokens.extend((self.flags[k], v))
        return tokens


def _shared(cmd, n_default=256):
    cmd.arg("--n", type=int, default=n_default, help="grid side")
    cmd.arg("--seed", type=int, default=0)
    cmd.arg("--seeds", help="half-open seed range a..b")
    cmd.arg("--gamma", type=float)
    cmd.arg("--xi", type=float)
    cmd.arg("--dgamma", type=float)
    cmd.arg("--spacing", type=float)
    cmd.arg("--out", default=".", help="output directory")
    cmd.arg("--threads", type=int, default=1)
    cmd.arg("--config", help="key=value config file")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="lqglab",
        description="Lattice laboratory for exponentiated-field metrics.")
    subs = parser.add_subparsers(dest="command", required=True)
    commands = {}

    c = _Command(subs.add_parser("sample", help="draw fields to SFGrid files"))
    _shared(c)
    c.arg("--exponent", type=float, help="spectral exponent (default 2)")
    c.arg("--singularity", action="append",
          help="x,y,alpha log singularity; repeatable")
    c.parser.set_defaults(func=cmd_sample)
    commands["sample"] = c

    c = _Command(subs.add_parser("metric", help="distance field to DFGrid"))
    _shared(c)
    c.arg("--field", help="SFGrid input (otherwise sample from --seed)")
    c.arg("--source", help="x,y source vertex (default grid center)")
    c.parser.set_defaults(func=cmd_metric)
    commands["metric"] = c

    c = _Command(subs.add_parser("ball", help="filled metric ball to RMask"))
    _shared(c)
    c.arg("--field", help="SFGrid input (otherwise sample from --seed)")
    c.arg("--source", help="x,y center vertex (default grid center)")
    c.arg("--radius-frac", type=float, default=0.1,
          help="euclidean radius as a fraction of n*spacing")
    c.arg("--radius-t", type=float,
          help="metric radius directly (overrides --radius-frac)")
    c.arg("--arcs", type=int, default=0,
          help="partition the boundary into this many harmonic-measure arcs")
    c.parser.set_defaults(func=cmd_ball)
    commands["ball"] = c

    c = _Command(subs.add_parser(
        "confluence", help="geodesic coalescence sweep, optional render"))
    _shared(c)
    c.arg("--radius-frac", type=float, default=0.1,
          help="inner euclidean radius as a fraction of n*spacing")
    c.arg("--s-count", type=int,
          help="outer radii per seed (default 8; 1 in target-grid mode)")
    c.arg("--target-grid", type=int,
          help="also draw geodesics to every grid-multiple vertex in the ball")
    c.arg("--render", action="store_true", help="write a PPM composite")
    c.arg("--figure", action="store_true", help="write a summary PNG")
    c.parser.set_defaults(func=cmd_confluence)
    commands["confluence"] = c

    c = _Command(subs.add_parser("probe", help="statistical probes + ledger"))
    c.arg("kind", choices=("fkg", "scaling", "annulus", "inversion"))
    _shared(c)
    c.arg("--radii", default="32,64,128",
          help="scaling: radii in lattice units, comma separated")
    c.arg("--c", type=float, default=0.05, help="annulus: crossing constant")
    c.arg("--delta", type=float, default=0.25, help="annulus: square size")
    c.arg("--big-a", type=float, default=10.0,
          help="annulus: harmonic deviation bound")
    c.arg("--r-frac", type=float, default=0.125,
          help="annulus: radius as a fraction of n*spacing")
    c.arg("--exponent", type=float,
          help="inversion: spectral exponent override")
    c.arg("--figure", action="store_true", help="write a summary PNG")
    c.parser.set_defaults(func=cmd_probe)
    commands["probe"] = c

    c = _Command(subs.add_parser("render", help="grid file to PGM image"))
    c.arg("input", help="SFGrid/DFGrid/RMask file")
    c.arg("--out", default=".", help="output directory")
    c.arg("--config", help="key=value config file")
    c.parser.set_defaults(func=cmd_render)
    commands["render"] = c

    return parser, commands


def _prepare(argv):
    parser, commands = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and argv[0] in commands and "--config" in argv:
        i = argv.index("--config")
        if i + 1 >= len(argv):
            raise InvalidSpec("--config needs a path")
        cfg = read_config(argv[i + 1])
        injected = commands[argv[0]].tokens(cfg)
        argv = argv[:1] + injected + argv[1:]
    ns = parser.parse_args(argv)
    keys = set(commands[ns.command].flags) if ns.command in commands else set()
    for extra in ("kind", "input"):
        if hasattr(ns, extra):
            keys.add(extra)
    cfg = effective_config(ns, keys)
    return ns, cfg


def _outdir(ns):
    os.makedirs(ns.out, exist_ok=True)
    return ns.out


# -- sample ------------------------------------------------------------------

def _sample_one(task):
    ns_dict, seed, chash = task
    ns = argparse.Namespace(**ns_dict)
    f = sample_gff(field_spec_from(ns, seed))
    name = f"field_{seed:05d}.sfgrid"
    path = os.path.join(ns.out, name)
    gridio.write_field(path, f, extra_meta={"config": chash})
    side = {
        "config": chash, "command": "sample", "seed": seed,
        "n": f.n, "spacing": f.spacing, "file": name,
        "normalization": f.normalization,
    }
    with open(os.path.join(ns.out, f"field_{seed:05d}.json"), "w") as fh:
        json.dump(side, fh, sort_keys=True, indent=1)
    return path


def _map_seeds(ns, worker, tasks):
    if ns.threads > 1:
        with ProcessPoolExecutor(max_workers=ns.threads) as ex:
            return list(ex.map(worker, tasks))
    return [worker(t) for t in tasks]


def cmd_sample(ns, cfg):
    out = _outdir(ns)
    chash = config_hash(cfg)
    tasks = [(vars(ns), s, chash) for s in _seed_list(ns)]
    for path in _map_seeds(ns, _sample_one, tasks):
        print(f"wrote {path}")
    write_config(os.path.join(out, "sample.config"), cfg)
    return 0


# -- metric ------------------------------------------------------------------

def _load_or_sample(ns, seed):
    if getattr(ns, "field", None):
        return gridio.read_field(ns.field)
    return sample_gff(field_spec_from(ns, seed))


def _source_vertex(ns, f):
    if getattr(ns, "source", None):
        v = _parse_vertex(ns.source, "--source")
        if not (0 <= v[0] < f.n and 0 <= v[1] < f.n):
            raise InvalidSpec(f"source {v} outside the {f.n}x{f.n} grid")
        return v
    return (f.n // 2, f.n // 2)


def cmd_metric(ns, cfg):
    out = _outdir(ns)
    chash = config_hash(cfg)
    params = params_from(ns)
    for seed in _seed_list(ns):
        f = _load_or_sample(ns, seed)
        df = distance_field(build_metric(f, params), _source_vertex(ns, f))
        path = os.path.join(out, f"dist_{seed:05d}.dfgrid")
        gridio.write_distance_field(
            path, df, extra_meta={"config": chash, "xi": params.xi})
        print(f"wrote {path}")
        if getattr(ns, "field", None):
            break  # explicit input file: one run, seeds do not apply
    write_config(os.path.join(out, "metric.config"), cfg)
    return 0


# -- ball --------------------------------------------------------------------

def cmd_ball(ns, cfg):
    out = _outdir(ns)
    chash = config_hash(cfg)
    params = params_from(ns)
    for seed in _seed_list(ns):
        f = _load_or_sample(ns, seed)
        df = distance_field(build_metric(f, params), _source_vertex(ns, f))
        if getattr(ns, "radius_t", None) is not None:
            t = ns.radius_t
        else:
            t = tau_r(df, ns.radius_frac * f.n * f.spacing)
        ball = filled_ball(df, t)
        cyc = trace_boundary(ball)
        if ns.arcs > 0:
            partition_arcs_by_harmonic_measure(cyc, ball, ns.arcs)
        bpath = os.path.join(out, f"ball_{seed:05d}.rmask")
        gridio.write_mask(bpath, ball,
                          extra_meta={"config": chash, "t": t})
        gridio.write_boundary_csv(
            os.path.join(out, f"boundary_{seed:05d}.csv"), cyc,
            config_hash=chash)
        print(f"wrote {bpath} (t={t:.6g}, boundary {len(cyc)})")
        if getattr(ns, "field", None):
            break
    write_config(os.path.join(out, "ball.config"), cfg)
    return 0


# -- confluence ----------------------------------------------------------------

def _check_family(df, paths):
    """Non-crossing and length consistency for a drawn geodesic family."""
    bad = prefix_consistency_violations(paths)
    if bad:
        raise AssertionError(f"prefix consistency violated at {bad[:3]}")
    for p in paths:
        d = df.dist_at(p.target)
        if not math.isclose(p.length, d, rel_tol=1e-12, abs_tol=0.0):
            raise AssertionError(
                f"path length {p.length!r} != dist {d!r} at {p.target}")


def _confluence_one(task):
    ns_dict, seed, chash = task
    ns = argparse.Namespace(**ns_dict)
    f = sample_gff(field_spec_from(ns, seed))
    df = distance_field(build_metric(f, params_from(ns)), (f.n // 2, f.n // 2))
    r_t = ns.radius_frac * f.n * f.spacing
    t = tau_r(df, r_t)
    r_s = min(2.0 * r_t, 0.4 * f.n * f.spacing)
    s_max = tau_r(df, r_s)
    if not s_max > t:
        raise InvalidSpec(
            f"no sweep room: tau({r_s:.4g}) = tau({r_t:.4g}) = {t:.6g}")
    k = ns.s_count if ns.s_count else (1 if ns.target_grid else 8)
    rows = []
    for j in range(1, k + 1):
        s = t + (s_max - t) * j / k
        res = confluence_count(df, t, s, keep_paths=True)
        _check_family(df, res.paths)
        rows.append({
            "t": t, "s": s, "n_hit_points": res.n_hit_points,
            "coalescence_radius": coalescence_radius(df, res.paths, s),
            "winding_spread": winding_spread(df, res.paths, t),
            "seed": seed,
        })
    ball = filled_ball(df, t)
    footer = (f"seed {seed}: t={t:.6g} boundary {len(trace_boundary(ball))} "
              f"hits {rows[-1]['n_hit_points']}")
    if ns.target_grid:
        g = ns.target_grid
        ys, xs = np.nonzero(ball.bits)
        targets = [(int(x), int(y)) for x, y in zip(xs, ys)
                   if x % g == 0 and y % g == 0]
        if not targets:
            raise InvalidSpec(f"target grid {g} misses the ball entirely")
        fam = leftmost_family(df, targets)
        _check_family(df, fam)
        gridio.write_polylines_csv(
            os.path.join(ns.out, f"geodesics_{seed:05d}.csv"), fam,
            config_hash=chash)
    else:
        fam = None
    if ns.render:
        paths = fam
        if paths is None:
            res = confluence_count(df, t, s_max, keep_paths=True)
            paths = res.paths
        img = render.confluence_image(f, ball, paths)
        render.write_ppm(os.path.join(ns.out, f"confluence_{seed:05d}.ppm"),
                         img, comment=f"config {chash}")
    return rows, footer


def cmd_confluence(ns, cfg):
    out = _outdir(ns)
    chash = config_hash(cfg)
    tasks = [(vars(ns), s, chash) for s in _seed_list(ns)]
    csv_path = os.path.join(out, "confluence.csv")
    rows = []
    try:
        for seed_rows, footer in _map_seeds(ns, _confluence_one, tasks):
            rows.extend(seed_rows)
            print(footer)
    except LatticeError as e:
        # partial results are worth keeping; the error still aborts the run
        gridio.write_confluence_csv(csv_path, rows, config_hash=chash,
                                    partial=type(e).__name__)
        raise
    gridio.write_confluence_csv(csv_path, rows, config_hash=chash)
    if ns.figure:
        render.confluence_figure(rows, os.path.join(out, "confluence.png"))
    write_config(os.path.join(out, "confluence.config"), cfg)
    print(f"wrote {csv_path} ({len(rows)} rows)")
    return 0


# -- probe ---------------------------------------------------------------------

def _disjoint_crossings(n):
    """Two disjoint axis-aligned squares, lower-left and upper-right."""
    side = n // 4
    a = crossing_functional(n // 8, n // 8, side)
    b = crossing_functional(n // 8 + n // 2, n // 8 + n // 2, side)
    return a, b


def cmd_probe(ns, cfg):
    out = _outdir(ns)
    seeds = _seed_list(ns)
    params = params_from(ns)
    spec = FieldSpec(n=ns.n, spacing=ns.spacing,
                     spectral_exponent=getattr(ns, "exponent", None) or 2.0)
    if ns.kind == "fkg":
        phi, psi = _disjoint_crossings(ns.n)
        result = fkg_check(phi, psi, spec, params=params, seeds=seeds)
        desc = f"n={ns.n} xi={params.xi:.6g} disjoint crossings"
    elif ns.kind == "scaling":
        try:
            radii = tuple(
                float(r) * spec.resolved_spacing()
                for r in ns.radii.split(","))
        except ValueError:
            raise InvalidSpec(f"--radii wants comma floats, got {ns.radii!r}")
        report = scaling_sandwich(spec, radii, params=params, seeds=seeds)
        # the sandwich bound is deterministic given the constants; ledger it
        # with zero SE and keep the fitted exponent in the description
        result = MonteCarloResult(report.lambda_, 0.0, len(seeds),
                                  tuple(seeds))
        desc = (f"n={ns.n} radii={ns.radii} "
                f"slope={report.fitted_exponent:.6g}")
    elif ns.kind == "annulus":
        gparams = GoodAnnulusParams(c=ns.c, delta=ns.delta, A=ns.big_a)
        r = ns.r_frac * ns.n * spec.resolved_spacing()
        result = good_annulus_probability(spec, r, gparams, seeds,
                                          params=params)
        desc = f"n={ns.n} r={r:.6g} c={ns.c} delta={ns.delta} A={ns.big_a}"
    else:
        result = inversion_check(spec, seeds)
        desc = f"n={ns.n} spacing={spec.resolved_spacing():.6g}"
    ledger = os.path.join(out, "ledger.csv")
    gridio.append_probe_ledger(ledger, ns.kind, desc, result)
    if ns.figure:
        render.probe_figure(result, ns.kind,
                            os.path.join(out, f"probe_{ns.kind}.png"))
    write_config(os.path.join(out, f"probe_{ns.kind}.config"), cfg)
    print(f"{ns.kind}: estimate={result.estimate:.6g} "
          f"se={result.std_error:.6g} n={result.n_samples}")
    print(f"appended {ledger}")
    return 0


# -- render --------------------------------------------------------------------

def cmd_render(ns, cfg):
    out = _outdir(ns)
    chash = config_hash(cfg)
    with open(ns.input, "rb") as fh:
        magic = fh.read(16)
    stem = os.path.splitext(os.path.basename(ns.input))[0]
    path = os.path.join(out, f"{stem}.pgm")
    if magic == gridio.MAGIC_FIELD:
        img = render.field_image(gridio.read_field(ns.input))
    elif magic == gridio.MAGIC_MASK:
        mask = gridio.read_mask(ns.input)
        img = np.where(mask.bits, 255, 0).astype(np.uint8)
    elif magic == gridio.MAGIC_DIST:
        df = gridio.read_distance_field(ns.input)
        d = df.dist
        finite = np.isfinite(d)
        img = np.zeros(d.shape, dtype=np.uint8)
        if finite.any():
            lo, hi = float(d[finite].min()), float(d[finite].max())
            span = hi - lo if hi > lo else 1.0
            img[finite] = np.rint(
                1 + (d[finite] - lo) * (254.0 / span)).astype(np.uint8)
    else:
        raise InvalidSpec(f"unrecognized grid file magic {magic[:12]!r}")
    render.write_pgm(path, img, comment=f"config {chash}")
    print(f"wrote {path}")
    return 0


# -- entry ---------------------------------------------------------------------

def main(argv=None):
    try:
        ns, cfg = _prepare(argv)
        return ns.func(ns, cfg)
    except LatticeError as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
