"""Command-line front end: ``triobs tile-check|talpha|observe|heatmap``.

Exit codes: 0 all checks pass, 1 a verification failed, 2 usage error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .geometry import (
    ALPHA_MAX,
    SQRT3,
    base_rectangle,
    build_half_equilateral_tiling,
    edge_identity_gaps,
    exadm_tiling,
    half_equilateral_triangle,
    printed_identity_gap,
    pullback_union,
    rect_strip_region,
    strip_region,
    verify_region_equality,
    verify_tiling,
)
from .observability import EquivalenceChecker, check_inequality, strip_constants
from .spectral import (
    check_admissibility,
    default_tiling,
    folded_basis,
    folded_eigenfunction,
    random_sine_combination,
)
from .wave import random_state

log = logging.getLogger(__name__)

SCHEMA = 1
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(ValueError):
    pass


# ----------------------------------------------------------------------------
# serialization
# ----------------------------------------------------------------------------

def _plain(x):
    """Recursively convert numpy scalars, tuples and non-finite floats for JSON."""
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


def dumps(report: dict) -> str:
    return json.dumps(_plain(report), indent=2, ensure_ascii=False) + "\n"


def _write_text(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    with open(out, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _envelope(command: str, cfg: dict, flags: dict, results: dict, passed: bool) -> dict:
    return {
        "schema": SCHEMA,
        "version": __version__,
        "command": command,
        "config": cfg,
        "discrepancy_flags": flags,
        "passed": passed,
        "results": results,
    }


def discrepancy_flags(alpha: float) -> dict:
    """Known inconsistencies in the printed formulas, evaluated where cheap."""
    sc = strip_constants(alpha)
    return {
        "T_alpha_printed_formula_inconsistent": sc.printed_time_inconsistent,
        "c_alpha_at_printed_T_alpha": sc.c_alpha(sc.T_alpha_paper),
        "observation_constant_uses_sin_squared": True,
        "tile_transforms_built_geometrically": True,
        "printed_edge_identity_K3_K5_on_x02_fails": printed_identity_gap(default_tiling()) > 1e-6,
        "raw_mode_indices_vanish_or_coincide": True,
        "prolongation_energy_scales_as_N_cubed": True,
        "pullback_pieces_overlap": True,
    }


# ----------------------------------------------------------------------------
# argument parsing
# ----------------------------------------------------------------------------

def _alpha(text: str) -> float:
    try:
        a = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not (0.0 < a <= ALPHA_MAX + 1e-15):
        raise argparse.ArgumentTypeError(f"alpha must lie in (0, {ALPHA_MAX:.10f}], got {a}")
    return min(a, ALPHA_MAX)


def _alpha_list(text: str) -> list[float]:
    return [_alpha(t) for t in text.split(",") if t.strip()]


def _positive_int(text: str) -> int:
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {n}")
    return n


def _positive_float(text: str) -> float:
    x = float(text)
    if not (x > 0.0 and math.isfinite(x)):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return x


def _seed(text: str) -> int:
    n = int(text)
    if not 0 <= n < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return n


def _mode(text: str) -> tuple[int, int]:
    try:
        k1, k2 = (int(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("mode must look like K1,K2")
    if k1 < 1 or k2 < 1:
        raise argparse.ArgumentTypeError("mode indices must be >= 1")
    return k1, k2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="triobs", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"triobs {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    tc = sub.add_parser("tile-check", help="verify the tiling, edge identities, admissibility and strip regions")
    tc.add_argument("--alpha", type=_alpha, default=0.125)
    tc.add_argument("--seed", type=_seed, default=0)
    tc.add_argument("--samples", type=_positive_int, default=1_000_000, help="Monte-Carlo points for the cover")
    tc.add_argument("--negative-example", action="store_true",
                    help="include the per-sign traces of the two-tile non-admissible tiling")
    tc.add_argument("--out")
    tc.add_argument("--format", choices=["json"], default="json")

    ta = sub.add_parser("talpha", help="table of strip constants")
    ta.add_argument("--alpha", type=_alpha_list, default=None, help="comma-separated list")
    ta.add_argument("--T", type=_positive_float, default=None,
                    help="horizon for c_alpha (default 1.05 * T_alpha_derived per row)")
    ta.add_argument("--kmax", type=int, default=64, help="initial frequency search bound (>= 16)")
    ta.add_argument("--out")
    ta.add_argument("--format", choices=["csv", "json"], default="csv")
    ta.add_argument("--no-figure", action="store_true")

    ob = sub.add_parser("observe", help="check the strip observability inequality on a random ensemble")
    ob.add_argument("--alpha", type=_alpha, default=0.125)
    ob.add_argument("--T", type=_positive_float, default=None, help="horizon (overrides --T-factor)")
    ob.add_argument("--T-factor", type=_positive_float, default=1.05, help="horizon as a multiple of T_alpha_derived")
    ob.add_argument("--kmax", type=_positive_int, default=8, help="largest mode index of the ensemble")
    ob.add_argument("--order", type=_positive_int, default=20, help="spatial quadrature order")
    ob.add_argument("--seed", type=_seed, default=0)
    ob.add_argument("--ensemble", type=int, default=50)
    ob.add_argument("--out")
    ob.add_argument("--format", choices=["json"], default="json")
    ob.add_argument("--no-figure", action="store_true")

    hm = sub.add_parser("heatmap", help="raster of an eigenfunction or of the strip mask")
    hm.add_argument("--mode", type=_mode, default=(1, 3))
    hm.add_argument("--mask", action="store_true", help="draw the strip region for --alpha instead")
    hm.add_argument("--alpha", type=_alpha, default=0.125)
    hm.add_argument("--resolution", type=int, default=512)
    hm.add_argument("--out", default="heatmap.pgm")
    hm.add_argument("--format", choices=["pgm", "png"], default="pgm")
    return p


# ----------------------------------------------------------------------------
# commands
# ----------------------------------------------------------------------------

def _exadm_trial(p):
    """Mode (1,1) plus mode (2,1) on (0,1/√3)×(0,1): even and odd under the half turn."""
    p = np.atleast_2d(p)
    s, y = SQRT3 * p[:, 0], np.pi * p[:, 1]
    return (np.sin(np.pi * s) + np.sin(2.0 * np.pi * s)) * np.sin(y)


def cmd_tile_check(args) -> tuple[dict, int]:
    cfg = {"alpha": args.alpha, "seed": args.seed, "samples": args.samples,
           "negative_example": args.negative_example}
    tiling = build_half_equilateral_tiling()
    rng = np.random.default_rng(np.random.SeedSequence(args.seed))

    cover = verify_tiling(tiling, base_rectangle(), args.samples, seed=args.seed)
    gaps = edge_identity_gaps(tiling)
    printed_gap = printed_identity_gap(tiling)

    trials = [random_sine_combination(rng) for _ in range(20)]
    adm = check_admissibility(tiling, trials)
    neg = check_admissibility(exadm_tiling(), [_exadm_trial], signs="all")

    eq = verify_region_equality(strip_region(args.alpha),
                                _pullback_of_rect_strip(tiling, args.alpha),
                                100_000, 1e-9, seed=args.seed)

    checks = {
        "cover": cover.passed,
        "edge_identities": max(gaps.values()) < 1e-12,
        "printed_edge_identity_fails": printed_gap > 1e-6,
        "admissibility": adm.admissible_for(tiling.delta),
        "negative_example_not_admissible": neg.min_over_signs > 0.1,
        "strip_region_equality": eq.passed,
    }
    results = {
        "checks": checks,
        "cover_fraction": cover.once,
        "cover": {"n_samples": cover.n_samples, "n_used": cover.n_used, "uncovered": cover.uncovered,
                  "overlap": cover.overlap, "area_defect": cover.area_defect},
        "edge_identity_max_gap": max(gaps.values()),
        "printed_edge_identity_gap": printed_gap,
        "admissibility_max_trace": adm.maxima[tuple(tiling.delta)],
        "negative_example_min_trace": neg.min_over_signs,
        "strip_region_equality": {"n_used": eq.n_used, "disagreements": eq.disagreements},
    }
    if args.negative_example:
        results["negative_example"] = {
            "tiles": 2,
            "traces": {",".join(str(d) for d in k): v for k, v in neg.maxima.items()},
            "fails_for_all_signs": all(v > 0.1 for v in neg.maxima.values()),
        }
        results["edge_identity_gaps"] = gaps
    passed = all(checks.values())
    return _envelope("tile-check", cfg, discrepancy_flags(args.alpha), results, passed), \
        EXIT_OK if passed else EXIT_FAIL


def _pullback_of_rect_strip(tiling, alpha):
    return pullback_union(tiling, rect_strip_region(alpha))


TALPHA_COLUMNS = ["alpha", "r_alpha", "t_alpha", "argmin_k", "m_alpha",
                  "T_alpha_derived", "T_alpha_paper", "T", "c_alpha"]


def default_alpha_grid() -> list[float]:
    return [round(0.025 * i, 3) for i in range(1, 9)] + [ALPHA_MAX]


def talpha_rows(alphas, T=None, k_max=64) -> list[dict]:
    rows = []
    for a in alphas:
        sc = strip_constants(a, k_max)
        horizon = T if T is not None else 1.05 * sc.T_alpha_derived
        rows.append({
            "alpha": sc.alpha, "r_alpha": sc.r_alpha, "t_alpha": sc.t_alpha,
            "argmin_k": sc.argmin_k, "m_alpha": sc.m_alpha,
            "T_alpha_derived": sc.T_alpha_derived, "T_alpha_paper": sc.T_alpha_paper,
            "T": horizon, "c_alpha": sc.c_alpha(horizon),
        })
    return rows


def talpha_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(TALPHA_COLUMNS)
    for r in rows:
        w.writerow(["" if r[c] is None else repr(r[c]) if isinstance(r[c], float) else r[c]
                    for c in TALPHA_COLUMNS])
    return buf.getvalue()


def cmd_talpha(args) -> tuple[str, int]:
    if args.kmax < 16:
        raise UsageError("--kmax must be >= 16 for talpha")
    alphas = args.alpha or default_alpha_grid()
    rows = talpha_rows(alphas, args.T, args.kmax)
    if args.format == "csv":
        text = talpha_csv(rows)
    else:
        cfg = {"alpha": alphas, "T": args.T, "kmax": args.kmax}
        text = dumps(_envelope("talpha", cfg, discrepancy_flags(0.125), {"rows": rows}, True))
    if args.out and not args.no_figure:
        from .plotting import plot_talpha
        plot_talpha(rows, Path(args.out).with_suffix(".png"))
    return text, EXIT_OK


def ensemble(seed: int, n: int, kmax: int) -> list:
    children = np.random.SeedSequence(seed).spawn(n)
    return [random_state(np.random.default_rng(c), kmax) for c in children]


def cmd_observe(args) -> tuple[dict, int]:
    if args.ensemble < 1:
        raise UsageError("--ensemble must be >= 1")
    if folded_basis(args.kmax).size == 0:
        raise UsageError(f"no nonzero modes with index <= {args.kmax}")
    sc = strip_constants(args.alpha)
    T = args.T if args.T is not None else args.T_factor * sc.T_alpha_derived
    c = sc.c_alpha(T)
    cfg = {"alpha": args.alpha, "T": T, "T_factor": None if args.T is not None else args.T_factor,
           "kmax": args.kmax, "order": args.order, "seed": args.seed, "ensemble": args.ensemble}

    states = ensemble(args.seed, args.ensemble, args.kmax)
    rep = check_inequality(states, strip_region(args.alpha), T, (c, None), "lower", space_order=args.order)

    checker = EquivalenceChecker(default_tiling(), rect_strip_region(args.alpha), T,
                                 folded_basis(args.kmax).modes, space_order=args.order)
    eqs = [checker.check(s) for s in states]
    stated = {k: max(e.stated_identities()[k] for e in eqs) for k in eqs[0].stated_identities()}
    derived = {k: max(e.derived_identities()[k] for e in eqs) for k in eqs[0].derived_identities()}
    agree = [e.verdicts(c) for e in eqs]

    constant_valid = c > 0.0
    passed = constant_valid and bool(rep.lower_pass)
    results = {
        "constants": sc.as_dict(T),
        "constant_invalid": not constant_valid,
        "inequality": rep.as_dict(),
        "min_ratio_observed_to_energy": min(o / sum(e) for o, e in zip(rep.observed, rep.energies)),
        "equivalence": {
            "max_stated_identity_defects": stated,
            "max_derived_identity_defects": derived,
            "verdicts_agree": all(a == b for a, b in agree),
            "observed_ratio_range": [min(e.observed_ratio for e in eqs), max(e.observed_ratio for e in eqs)],
            "energy_ratio": eqs[0].energy_ratio,
        },
    }
    if args.out and not args.no_figure:
        from .plotting import plot_margins
        out = Path(args.out)
        plot_margins([sum(e) for e in rep.energies], rep.observed, c, out.with_name(out.stem + "_margins.png"))
    return _envelope("observe", cfg, discrepancy_flags(args.alpha), results, passed), \
        EXIT_OK if passed else EXIT_FAIL


VANISH_TOL = 1e-10   # e_k values are O(1); below this the mode is identically zero on T


def pixel_centers(resolution: int) -> tuple[np.ndarray, np.ndarray]:
    """Pixel centres over the bounding box of T, top row at the largest x₂."""
    lo, hi = half_equilateral_triangle().bbox
    xs = lo[0] + (np.arange(resolution) + 0.5) * (hi[0] - lo[0]) / resolution
    ys = hi[1] - (np.arange(resolution) + 0.5) * (hi[1] - lo[1]) / resolution
    X, Y = np.meshgrid(xs, ys)
    return np.column_stack([X.ravel(), Y.ravel()]), np.array([len(ys), len(xs)])


def heatmap_image(resolution: int, mode=(1, 3), mask_alpha: float | None = None) -> np.ndarray:
    """8-bit raster of e_k (affinely rescaled over cl(T)) or of the strip mask."""
    if resolution < 16:
        raise UsageError("resolution must be >= 16")
    pts, shape = pixel_centers(resolution)
    inside = half_equilateral_triangle().contains(pts)
    img = np.zeros(len(pts), dtype=np.uint8)
    if mask_alpha is not None:
        img[strip_region(mask_alpha).contains(pts)] = 255
        return img.reshape(shape)
    v = folded_eigenfunction(default_tiling(), mode, pts[inside])
    if v.size and abs(v.min()) > abs(v.max()):
        v = -v
    # the closure of T includes the boundary, where e_k vanishes
    lo, hi = min(float(v.min(initial=0.0)), 0.0), max(float(v.max(initial=0.0)), 0.0)
    if hi - lo > VANISH_TOL:
        img[inside] = np.rint(255.0 * (v - lo) / (hi - lo)).astype(np.uint8)
    else:
        log.warning("mode %s vanishes on T; image is blank", mode)
    return img.reshape(shape)


def write_pgm(img: np.ndarray, path) -> None:
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(np.ascontiguousarray(img, dtype=np.uint8).tobytes())


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    parts = data.split(maxsplit=4)
    if parts[0] != b"P5":
        raise ValueError("not a binary PGM")
    w, h, maxval = int(parts[1]), int(parts[2]), int(parts[3])
    if maxval != 255:
        raise ValueError("only 8-bit PGM is supported")
    return np.frombuffer(parts[4][: w * h], dtype=np.uint8).reshape(h, w)


def cmd_heatmap(args) -> tuple[None, int]:
    img = heatmap_image(args.resolution, args.mode, args.alpha if args.mask else None)
    if args.format == "pgm":
        write_pgm(img, args.out)
    else:
        from .plotting import save_png
        save_png(img, args.out)
    return None, EXIT_OK


COMMANDS = {"tile-check": cmd_tile_check, "talpha": cmd_talpha, "observe": cmd_observe, "heatmap": cmd_heatmap}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"triobs: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:   # --help / --version
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        payload, code = COMMANDS[args.command](args)
        if isinstance(payload, dict):
            _write_text(dumps(payload), args.out)
        elif isinstance(payload, str):
            _write_text(payload, args.out)
    except UsageError as exc:
        print(f"triobs: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"triobs: cannot write output: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return code


if __name__ == "__main__":
    sys.exit(main())
