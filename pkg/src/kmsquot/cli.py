"""Command-line entry point: seed | verify | complex | report."""
from __future__ import annotations

import argparse
import hashlib
import logging
import re
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Optional

from . import __version__
from .complex import (
    DEFAULT_CAP,
    DEFAULT_TOL,
    TYPES,
    bfs_closure,
    coset_complex,
    hdx_report,
    local_link,
    skeleton_spectrum,
    subgroup_generators,
    vertex_link,
    write_triangles,
    write_vertices,
)
from .errors import CapExceeded, ConfigError, FormatError, KmsError
from .fields import FieldDescriptor
from .seeds import GeneratorTriple, build_seed, seed_from_text, seed_to_text, validate_parameters, verify_conditions
from .verify import group_order, run_verification

log = logging.getLogger("kmsquot")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
MODES = {"verify": ("envelope", "full-enum"), "complex": ("links", "full")}


@dataclass
class RunConfig:
    p: int = 5
    r: int = 1
    k: int = 7
    variant: str = "sl"
    mode: Optional[str] = None
    cap: int = DEFAULT_CAP
    max_len: int = 12
    tol: float = DEFAULT_TOL
    rng_seed: int = 0
    trials: int = 50
    out: str = "kmsquot-out"
    seed_file: Optional[str] = None

    @property
    def tag(self) -> str:
        return f"p{self.p}r{self.r}k{self.k}-{self.variant}"

    def describe(self) -> list[str]:
        return [f"{f.name} {getattr(self, f.name)}" for f in fields(self)
                if f.name not in ("out", "seed_file")]


_CASTS = {"p": int, "r": int, "k": int, "cap": int, "max_len": int, "rng_seed": int,
          "trials": int, "tol": float}


def read_config_file(path: str) -> dict:
    """key=value lines; '#' starts a comment; dashes in keys are read as underscores."""
    out = {}
    known = {f.name for f in fields(RunConfig)}
    for n, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{n}: expected key=value", "config syntax")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in known:
            raise ConfigError(f"{path}:{n}: unknown key {key!r}", "config syntax")
        try:
            out[key] = _CASTS.get(key, str)(val)
        except ValueError as exc:
            raise ConfigError(f"{path}:{n}: bad value for {key}: {val!r}", "config syntax") from exc
    return out


def build_config(args: argparse.Namespace) -> RunConfig:
    vals = asdict(RunConfig())
    if args.config:
        vals.update(read_config_file(args.config))
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            vals[f.name] = v
    cfg = RunConfig(**vals)
    allowed = MODES.get(args.command)
    if allowed:
        if cfg.mode is None:
            cfg.mode = allowed[0]
        if cfg.mode not in allowed:
            raise ConfigError(f"mode {cfg.mode!r} not valid for {args.command}; choose from {allowed}",
                              "mode")
    return cfg


# ---- output helpers -------------------------------------------------------------

def _next_version(directory: Path, stem: str, suffix: str) -> Path:
    pat = re.compile(re.escape(stem) + r"\.v(\d+)" + re.escape(suffix) + "$")
    used = [int(m.group(1)) for p in directory.glob(f"{stem}.v*{suffix}") if (m := pat.match(p.name))]
    return directory / f"{stem}.v{max(used, default=0) + 1}{suffix}"


def write_versioned(directory: Path, stem: str, suffix: str, text: str) -> Path:
    """Append-only: never overwrite, always a fresh version number."""
    directory.mkdir(parents=True, exist_ok=True)
    path = _next_version(directory, stem, suffix)
    with open(path, "x") as fh:
        fh.write(text)
    return path


def write_manifest(out: Path) -> Path:
    lines = [f"# kmsquot manifest (package {__version__})", "sha256\tbytes\tpath"]
    for path in sorted(p for p in out.rglob("*") if p.is_file() and p.name != "manifest.tsv"):
        h = hashlib.sha256()
        with open(path, "rb") as fh:
            for block in iter(lambda: fh.read(1 << 20), b""):
                h.update(block)
        lines.append(f"{h.hexdigest()}\t{path.stat().st_size}\t{path.relative_to(out).as_posix()}")
    target = out / "manifest.tsv"
    target.write_text("\n".join(lines) + "\n")
    return target


def _header(cfg: RunConfig, kind: str) -> str:
    return "\n".join([f"# kmsquot {kind} report v1"] + [f"# {line}" for line in cfg.describe()]) + "\n"


def load_or_build_seed(cfg: RunConfig):
    if cfg.seed_file:
        text = Path(cfg.seed_file).read_text()
        seed = seed_from_text(text)
        cfg.p, cfg.r, cfg.k, cfg.variant = seed.desc.p, seed.desc.r, seed.desc.k, seed.variant
        return seed
    validate_parameters(cfg.p, cfg.r, cfg.k, cfg.variant)
    return build_seed(FieldDescriptor.create(cfg.p, cfg.r, cfg.k), cfg.variant)


# ---- commands -------------------------------------------------------------------

def cmd_seed(cfg: RunConfig) -> int:
    seed = load_or_build_seed(cfg)
    out = Path(cfg.out)
    seed_path = write_versioned(out / "seeds", cfg.tag, ".seed", seed_to_text(seed))
    rep = verify_conditions(seed)
    rpath = write_versioned(out / "reports", f"{cfg.tag}.conditions", ".txt",
                            _header(cfg, "conditions") + rep.to_text())
    write_manifest(out)
    print(f"seed: {seed_path}")
    print(f"conditions: {rpath} ({'all pass' if rep.ok else 'failures: ' + ', '.join(rep.failed())})")
    return EXIT_OK if rep.ok else EXIT_FAIL


def cmd_verify(cfg: RunConfig) -> int:
    seed = load_or_build_seed(cfg)
    rep = run_verification(seed, rng_seed=cfg.rng_seed, mode=cfg.mode, cap=cfg.cap,
                           max_len=cfg.max_len, n_random=cfg.trials)
    out = Path(cfg.out) / "reports"
    text, witnesses = rep.render("witnesses")
    path = write_versioned(out, f"{cfg.tag}.verify", ".txt", _header(cfg, "verification") + text)
    for rel, content in witnesses.items():
        # content-addressed, so identical witnesses are written once and never change
        target = out / rel
        target.parent.mkdir(parents=True, exist_ok=True)
        if not target.exists():
            target.write_text(content)
    write_manifest(Path(cfg.out))
    print(f"report: {path}")
    print(f"failures: {len(rep.failures())}  errata: {len(rep.errata())}")
    for rid in rep.failures():
        print(f"  FAIL {rid}")
    return EXIT_OK if rep.ok else EXIT_FAIL


def cmd_complex(cfg: RunConfig) -> int:
    seed = load_or_build_seed(cfg)
    if cfg.mode == "full" and cfg.k != 1:
        raise ConfigError(f"full complex construction is out of scope for k = {cfg.k}; "
                          "use --mode links", "k = 1 for full mode")
    gen = GeneratorTriple(seed)
    q = seed.F.q
    out = Path(cfg.out) / "complex"
    out.mkdir(parents=True, exist_ok=True)
    run_dir = _next_version(out, f"{cfg.tag}.{cfg.mode}", "")
    run_dir.mkdir()
    lines = []
    if cfg.mode == "full":
        target = group_order(seed.variant, gen.n, q)
        if target > cfg.cap:
            raise CapExceeded(f"target group order {target} exceeds cap {cfg.cap}")
        G = bfs_closure(list(gen.primes()), cfg.cap)
        lines.append(f"group_order {G.size} target {target} match {G.size == target}")
        if seed.variant == "sp":
            lines.append(f"all_symplectic {G.all_symplectic(gen.omega())}")
        cx = coset_complex(G, {t: subgroup_generators(gen, t) for t in TYPES})
        for t in TYPES:
            lines.append(f"vertices type={t} count={cx.vertex_count(t)} subgroup_order={cx.subgroup_orders[t]}")
        lines.append(f"triangles {cx.triangles.shape[0]} triple_intersection {cx.triple_order}")
        write_vertices(cx, run_dir / "vertices.tsv")
        write_triangles(cx, run_dir / "triangles.tsv")
        links = [vertex_link(cx, cx.offsets[t]) for t in TYPES]
        for link, t in zip(links, TYPES):
            link.center = t
        skel = skeleton_spectrum(cx.skeleton(), cx.n_vertices, cfg.tol, cfg.rng_seed)
    else:
        links = [local_link(gen, t, cfg.cap) for t in TYPES]
        skel = None
    for link in links:
        with open(run_dir / f"link-{link.center}.tsv", "w") as fh:
            fh.write("left\tright\n")
            fh.writelines(f"{u}\t{v}\n" for u, v in link.edges.tolist())
    rep = hdx_report(links, q, cfg.tol, cfg.rng_seed, skel)
    (run_dir / "spectra.csv").write_text(rep.spectra_csv())
    text = _header(cfg, "complex") + "\n".join(lines + [""]) + rep.to_text()
    (run_dir / "hdx.txt").write_text(text)
    write_manifest(Path(cfg.out))
    print(f"complex: {run_dir}")
    print(rep.to_text(), end="")
    if rep.vacuous:
        print(f"note: bound {rep.bound:.6f} >= 1 is vacuous at q = {q}")
    return EXIT_OK if rep.ok else EXIT_FAIL


_STATUS = re.compile(r"^# summary .*failures=(\d+)|^overall (\w+)", re.M)


def cmd_report(cfg: RunConfig) -> int:
    """Summarize the latest version of every report under --out."""
    out = Path(cfg.out)
    if not out.is_dir():
        raise ConfigError(f"no output directory {out}", "out")
    latest = {}
    for path in sorted(out.rglob("*.txt")):
        m = re.match(r"(.*)\.v(\d+)(\.txt)?$", path.name) or re.match(r"(.*)\.v(\d+)$", path.parent.name)
        if not m or "witnesses" in path.parent.name:
            continue
        key = (path.parent.name if path.name == "hdx.txt" else path.name).rsplit(".v", 1)[0]
        ver = int(m.group(2))
        if key not in latest or ver > latest[key][0]:
            latest[key] = (ver, path)
    rows = ["name\tversion\tstatus\tpath"]
    bad = 0
    for key in sorted(latest):
        ver, path = latest[key]
        text = path.read_text()
        status = "unknown"
        for m in _STATUS.finditer(text):
            if m.group(1) is not None:
                status = "pass" if m.group(1) == "0" else f"fail({m.group(1)})"
            elif m.group(2) is not None:
                status = m.group(2)
        if key.endswith("conditions"):
            rows_ = [ln.split("\t") for ln in text.splitlines() if ln and not ln.startswith("#")]
            status = "fail" if any(r[1] != "aux" and r[2] == "fail" for r in rows_ if len(r) > 2) else "pass"
        bad += status.startswith("fail")
        rows.append(f"{key}\tv{ver}\t{status}\t{path.relative_to(out).as_posix()}")
    text = "\n".join(rows) + "\n"
    print(text, end="")
    write_versioned(out / "reports", "summary", ".txt", text)
    write_manifest(out)
    return EXIT_FAIL if bad else EXIT_OK


COMMANDS = {"seed": cmd_seed, "verify": cmd_verify, "complex": cmd_complex, "report": cmd_report}


def make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value file; flags override it")
    common.add_argument("--p", type=int)
    common.add_argument("--r", type=int)
    common.add_argument("--k", type=int)
    common.add_argument("--variant", choices=("sl", "sp"))
    common.add_argument("--mode", help="verify: envelope|full-enum; complex: links|full")
    common.add_argument("--cap", type=int, help="enumeration cap")
    common.add_argument("--max-len", dest="max_len", type=int, help="envelope word budget")
    common.add_argument("--tol", type=float, help="spectral tolerance")
    common.add_argument("--rng-seed", dest="rng_seed", type=int)
    common.add_argument("--trials", type=int, help="random substitutions per identity")
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed-file", dest="seed_file", help="use a saved seed instead of building one")
    common.add_argument("-v", "--verbose", action="store_true")
    parser = argparse.ArgumentParser(prog="kmsquot", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=fn.__doc__ or name)
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = build_config(args)
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        hyp = f" [{exc.hypothesis}]" if getattr(exc, "hypothesis", None) else ""
        print(f"kmsquot: rejected{hyp}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FormatError as exc:
        print(f"kmsquot: parse error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CapExceeded as exc:
        print(f"kmsquot: cap exceeded: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (KmsError, OSError) as exc:
        print(f"kmsquot: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
