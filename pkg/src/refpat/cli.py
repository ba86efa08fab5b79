"""Command-line driver: ``refpat validate-pattern | refine | db-list``.

Exit codes are 0 on success, 1 for bad input (unreadable or invalid
files, missing directories) and 2 when refinement hits an
incompatibility.
"""
from __future__ import annotations

import argparse
import logging
import sys
from collections import Counter
from pathlib import Path

from .errors import ConflictError, IncompatiblePatternError, RefPatError
from .io import export_vtk, read_mesh, write_mesh
from .pattern import compute_permutations, parse_pattern
from .patterndb import PatternDatabase, default_pattern_dir
from .reftools import close_hanging, hanging_nodes, refine_directional, refine_uniform
from .topology import ALL_TYPES, dimension, side_dimension

EXIT_OK, EXIT_INPUT, EXIT_INCOMPATIBLE = 0, 1, 2
_DIM_NAMES = {1: "edges", 2: "faces"}


class InputError(Exception):
    """Bad command-line input; maps to exit code 1."""


def _load_db(patterns) -> PatternDatabase:
    path = Path(patterns) if patterns else default_pattern_dir()
    if not path.is_dir():
        raise InputError(f"pattern directory {str(path)!r} does not exist")
    db = PatternDatabase.with_uniform()
    db.load_directory(path)
    for f, msg in db.load_errors:
        print(f"warning: skipped {f}: {msg}", file=sys.stderr)
    return db


def _read_text(path) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from None


# validate-pattern ------------------------------------------------------------


def pattern_report(p) -> list[str]:
    """Human-readable summary of an initialized pattern."""
    ftype = p.father_type
    split = Counter(side_dimension(ftype, s) for s in p.side_patterns)
    parts = [f"{split[d]} {_DIM_NAMES[d]} split" for d in sorted(_DIM_NAMES)
             if d < dimension(ftype)]
    sons = Counter(t.label for t, _ in p.sons)
    lines = [f"father={ftype.label} sons={p.n_sons} side-patterns: "
             + (", ".join(parts) if parts else "none"),
             f"name={p.name} id={p.id} nodes={p.n_nodes} son types: "
             + ", ".join(f"{n} {t}" for t, n in sorted(sons.items()))]
    for s, part in sorted(p.side_partitions.items()):
        if part.nodes:
            lines.append(f"  side {s} (dim {side_dimension(ftype, s)}): "
                         f"nodes {list(part.nodes)}, {len(part.pairs)} son sides")
    distinct = len({id(q) for q in p.permutations})
    lines.append(f"permutations: {len(p.permutations)} ({distinct} distinct)")
    return lines


def cmd_validate(args) -> int:
    p = parse_pattern(_read_text(args.file), source=args.file)
    p.initialize()
    compute_permutations(p)
    print("\n".join(pattern_report(p)))
    return EXIT_OK


# refine ----------------------------------------------------------------------


def level_row(mesh, level: int) -> str:
    leaves = mesh.leaves()
    counts = Counter(mesh.elements[e].type.label for e in leaves)
    used = {k for e in leaves for k in mesh.elements[e].node_indices}
    by_type = " ".join(f"{t}={counts[t]}" for t in sorted(counts))
    return f"{level:5d} {len(leaves):8d} {len(used):8d}  {by_type}"


def _touching(mesh, material: int | None) -> list[int]:
    """Leaves to refine in uniform mode: all of them, or those touching ``material``."""
    leaves = mesh.leaves()
    if material is None:
        return leaves
    top = max(dimension(mesh.elements[e].type) for e in leaves)
    marked = {k for e in leaves if mesh.elements[e].material_id == material
              for k in mesh.elements[e].node_indices}
    return [e for e in leaves
            if mesh.elements[e].material_id != material
            and dimension(mesh.elements[e].type) == top
            and marked.intersection(mesh.elements[e].node_indices)]


def refine_levels(mesh, db, mode: str, levels: int, target: int | None, out=print):
    """Run ``levels`` passes and report one table row per level."""
    out("level   leaves    nodes  leaves by type")
    out(level_row(mesh, 0))
    skipped: list[int] = []
    for level in range(1, levels + 1):
        if mode == "directional":
            refine_directional(mesh, mesh.leaves(), target, db, report=skipped)
        else:
            refine_uniform(mesh, _touching(mesh, target), db)
            if target is not None:
                close_hanging(mesh, db)
        out(level_row(mesh, level))
    return skipped


def cmd_refine(args) -> int:
    if args.levels < 0:
        raise InputError("--levels must be non-negative")
    if args.mode == "directional" and args.target_mat is None:
        raise InputError("--mode directional needs --target-mat")
    db = _load_db(args.patterns)
    mesh = read_mesh(_read_text(args.mesh), source=args.mesh)
    skipped = refine_levels(mesh, db, args.mode, args.levels, args.target_mat)
    if skipped:
        print(f"warning: {len(skipped)} element(s) had marked edges but no matching "
              f"pattern: {sorted(set(skipped))}", file=sys.stderr)
    hanging = hanging_nodes(mesh)
    print(f"hanging nodes: {len(hanging)}")
    if args.out:
        Path(args.out).write_text(write_mesh(mesh, leaf_only=True))
    if args.vtk:
        Path(args.vtk).write_text(export_vtk(mesh, leaf_only=not args.all_levels))
    return EXIT_OK


# db-list ---------------------------------------------------------------------


def cmd_db_list(args) -> int:
    db = _load_db(args.patterns)
    aliases: dict[int, list[str]] = {}
    for name, p in db.by_name.items():
        if name != p.name:
            aliases.setdefault(id(p), []).append(name)
    for t in ALL_TYPES:
        pats = sorted(db.patterns_for_type(t), key=lambda q: q.id)
        if not pats:
            continue
        print(f"{t.label} ({len(pats)})")
        for p in pats:
            extra = aliases.get(id(p))
            alias = f"  (also {', '.join(sorted(extra))})" if extra else ""
            print(f"  {p.id:6d}  {p.name}  sons={p.n_sons}{alias}")
    return EXIT_OK


# entry point -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="refpat", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate-pattern", help="parse and initialize a pattern file")
    v.add_argument("file")
    v.set_defaults(func=cmd_validate)

    r = sub.add_parser("refine", help="refine a mesh file")
    r.add_argument("mesh")
    r.add_argument("--mode", choices=("uniform", "directional"), default="directional")
    r.add_argument("--target-mat", type=int, default=None,
                   help="material id of the target entities")
    r.add_argument("--levels", type=int, default=1)
    r.add_argument("--patterns", default=None,
                   help="pattern directory (default: $REFPAT_PATTERN_DIR or bundled)")
    r.add_argument("--out", default=None, help="refined mesh (leaf elements)")
    r.add_argument("--vtk", default=None, help="legacy VTK export")
    r.add_argument("--all-levels", action="store_true",
                   help="export ancestors to VTK as well as leaves")
    r.set_defaults(func=cmd_refine)

    d = sub.add_parser("db-list", help="list the patterns of a database")
    d.add_argument("--patterns", default=None)
    d.set_defaults(func=cmd_db_list)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (IncompatiblePatternError, ConflictError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INCOMPATIBLE
    except (InputError, RefPatError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
