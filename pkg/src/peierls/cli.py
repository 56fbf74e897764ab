"""Command-line front end: bands, section, grushin, effective, direct,
compare, scan.

One JSON configuration file per run; deterministic CSV bodies (17
significant digits, comma delimiter, LF endings) with run metadata in a
sidecar JSON.  Exit codes: 0 success, 2 configuration error, 3 numeric
error.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import bloch, direct, effective, grushin, section, spectra, symbols
from .lattice import Lattice, bz_grid, dual_shell
from .magnetic import MagneticField


class ConfigError(ValueError):
    pass


def _fmt(x) -> str:
    if isinstance(x, complex):
        return f"{x.real:.17g}+{x.imag:.17g}j"
    return f"{float(x):.17g}"


def _write_csv(path: Path, header: list, rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) if not isinstance(v, (str, int)) else str(v)
                              for v in row))
    path.write_text("\n".join(lines) + "\n")


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------- config


def load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc


def build_lattice(cfg: dict) -> Lattice:
    lc = cfg.get("lattice")
    if not lc:
        raise ConfigError("missing 'lattice' section")
    basis = np.asarray(lc["basis"], dtype=float)
    return Lattice(basis=basis)


def build_field(cfg: dict):
    fc = cfg.get("field")
    if fc is None:
        return None
    matrix = fc.get("matrix")
    if matrix is not None:
        m = np.asarray(matrix, dtype=float)
        if not np.allclose(m, -m.T, atol=1e-12):
            raise ConfigError(
                "hypothesis H.1 violated: magnetic field matrix must be "
                "antisymmetric (B12 = -B21)"
            )
        b12 = float(m[0, 1])
    else:
        b12 = float(fc.get("b12", 0.0))
    if not np.isfinite(b12):
        raise ConfigError("hypothesis H.2 violated: field must be finite")
    return MagneticField(
        b12=b12,
        epsilon=float(fc.get("epsilon", 1.0)),
        kind=fc.get("kind", "constant"),
    )


def build_symbol(cfg: dict, lattice: Lattice) -> symbols.PeriodicSymbol:
    sc = cfg.get("symbol")
    if not sc:
        raise ConfigError("missing 'symbol' section")
    kind_name = sc.get("kind", "nonrelativistic")
    if kind_name == "nonrelativistic":
        kind = symbols.Nonrelativistic()
    elif kind_name == "relativistic":
        kind = symbols.Relativistic()
    else:
        raise ConfigError(f"unknown symbol kind {kind_name!r}")
    pc = sc.get("potential", {"name": "zero"})
    name = pc.get("name", "zero")
    factory = symbols.POTENTIAL_CATALOG.get(name)
    if factory is None:
        raise ConfigError(f"unknown potential {name!r}")
    try:
        if name == "zero":
            pot = factory(lattice)
        else:
            pot = factory(lattice, float(pc.get("amplitude", 1.0)))
    except ValueError as exc:
        raise ConfigError(
            f"hypothesis H.3 violated: potential not admissible ({exc})"
        ) from exc
    sym = symbols.PeriodicSymbol(kind=kind, potential=pot)
    ok, _ = symbols.symbol_ellipticity_check(sym, radius=4.0, samples=8)
    if not ok:
        raise ConfigError(
            "hypothesis H.4 violated: symbol fails the ellipticity sample check"
        )
    return sym


def _numerics(cfg: dict) -> dict:
    num = dict(cfg.get("numerics", {}))
    num.setdefault("cutoff", 6.0)
    num.setdefault("resolution", 64)
    num.setdefault("n_bands", 4)
    num.setdefault("radius", 8)
    num.setdefault("gap_tol", 1e-6)
    num.setdefault("merge_tol", 1e-3)
    num.setdefault("band_index", 0)
    return num


def _parse_flux(text) -> Fraction:
    try:
        return Fraction(str(text))
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"flux must be a rational p/q: {text!r}") from exc


def _window(cfg: dict, num: dict, sym, lattice) -> tuple:
    win = cfg.get("window")
    if win is not None:
        return float(win[0]), float(win[1])
    # default: a margin around the selected band
    grid = bz_grid(lattice, num["resolution"])
    shell = dual_shell(lattice, num["cutoff"])
    bands = bloch.compute_bands(sym, grid, shell, num["n_bands"])
    iv = bloch.band_intervals(bands, num["gap_tol"]).intervals
    k = num["band_index"]
    pad = 0.1 * (iv[k, 1] - iv[k, 0] + 1e-6)
    return float(iv[k, 0] - pad), float(iv[k, 1] + pad)


def _require_simple_band(bands, num) -> None:
    iv = bloch.band_intervals(bands, num["gap_tol"])
    if not iv.simple_flags[num["band_index"]]:
        raise ConfigError(
            "hypothesis H.7 violated: requested band is not certified simple"
        )


# -------------------------------------------------------------- commands


def cmd_bands(cfg, num, out: Path) -> dict:
    lattice = build_lattice(cfg)
    sym = build_symbol(cfg, lattice)
    grid = bz_grid(lattice, num["resolution"])
    shell = dual_shell(lattice, num["cutoff"])
    bands = bloch.compute_bands(sym, grid, shell, num["n_bands"])
    rows = []
    for i, frac in enumerate(grid.coords()):
        for j in range(bands.n_bands):
            rows.append(list(frac) + [j, bands.bands[i, j]])
    dim = lattice.dim
    header = [f"frac{ax + 1}" for ax in range(dim)] + ["band", "value"]
    _write_csv(out / "bands.csv", header, rows)
    iv = bloch.band_intervals(bands, num["gap_tol"])
    _write_json(out / "intervals.json", {
        "intervals": iv.intervals.tolist(),
        "simple": iv.simple_flags.tolist(),
        "gap_tol": num["gap_tol"],
    })
    return {"rows": len(rows)}


def cmd_section(cfg, num, out: Path) -> dict:
    lattice = build_lattice(cfg)
    sym = build_symbol(cfg, lattice)
    grid = bz_grid(lattice, num["resolution"])
    shell = dual_shell(lattice, num["cutoff"])
    bands = bloch.compute_bands(sym, grid, shell, num["n_bands"],
                                keep_vectors=True)
    _require_simple_band(bands, num)
    sec = section.transport_section(bands, num["band_index"])
    rows = []
    for i, frac in enumerate(grid.coords()):
        v = sec.vectors[i]
        H = bloch.assemble_fiber_matrix(sym, grid.points()[i], shell).entries
        lam = bands.bands[i, num["band_index"]]
        resid = float(np.linalg.norm(H @ v - lam * v))
        rows.append(list(frac) + [np.linalg.norm(v), resid,
                                  v[0].real, v[0].imag])
    dim = lattice.dim
    header = [f"frac{ax + 1}" for ax in range(dim)] + [
        "norm", "residual", "c0_re", "c0_im"]
    _write_csv(out / "section.csv", header, rows)
    _write_json(out / "kappa.json", {"phase_log": sec.phase_log})
    return {"rows": len(rows)}


def cmd_grushin(cfg, num, out: Path) -> dict:
    lattice = build_lattice(cfg)
    sym = build_symbol(cfg, lattice)
    grid = bz_grid(lattice, num["resolution"])
    shell = dual_shell(lattice, num["cutoff"])
    bands = bloch.compute_bands(sym, grid, shell, num["n_bands"],
                                keep_vectors=True)
    _require_simple_band(bands, num)
    sec = section.transport_section(bands, num["band_index"])
    family = grushin.trial_from_section(sec)
    k = num["band_index"]
    rng = np.random.default_rng(cfg.get("seed", 0))
    n_samples = int(cfg.get("samples", 20))
    pts = grid.points()
    worst_resid = 0.0
    worst_dev = 0.0
    for _ in range(n_samples):
        i = int(rng.integers(0, pts.shape[0]))
        lam = float(rng.uniform(bands.bands[:, k].min() - 0.5,
                                bands.bands[:, k].max() + 0.5))
        fm = bloch.assemble_fiber_matrix(sym, pts[i], shell)
        gm = grushin.assemble_grushin(fm, lam, family, i)
        inv = grushin.invert_grushin(gm)
        worst_resid = max(worst_resid, inv.residual)
        dev = abs(inv.e_minus_plus[0, 0] - (lam - bands.bands[i, k]))
        worst_dev = max(worst_dev, dev)
    report = {"max_residual": worst_resid,
              "max_effective_deviation": worst_dev,
              "samples": n_samples}
    _write_json(out / "grushin.json", report)
    return report


def _band_hoppings(cfg, num):
    lattice = build_lattice(cfg)
    sym = build_symbol(cfg, lattice)
    grid = bz_grid(lattice, num["resolution"])
    shell = dual_shell(lattice, num["cutoff"])
    bands = bloch.compute_bands(sym, grid, shell, num["n_bands"])
    _require_simple_band(bands, num)
    k = num["band_index"]
    hops = effective.fourier_hoppings(
        bands.bands[:, k], grid, num["radius"], source_tag=f"band{k}"
    )
    return lattice, sym, bands, hops


def cmd_effective(cfg, num, out: Path) -> dict:
    lattice, sym, bands, hops = _band_hoppings(cfg, num)
    flux = _parse_flux(cfg.get("flux", "0"))
    mode = cfg.get("mode", "bloch")
    window = _window(cfg, num, sym, lattice)
    merge_tol = num["merge_tol"]
    if mode == "box":
        op = effective.assemble_effective(
            hops, "box", flux, box_size=int(cfg.get("box_size", 16)))
    elif mode == "bloch":
        op = effective.assemble_effective(hops, "magnetic_bloch", flux)
    else:
        raise ConfigError(f"unknown effective mode {mode!r}")
    spec_set = effective.effective_spectrum(
        op, window, merge_tol, k_resolution=int(cfg.get("k_resolution", 32)))
    lam_grid = np.linspace(window[0], window[1],
                           int(cfg.get("lambda_points", 400)))
    margins = effective.lambda_scan(
        hops, flux, lam_grid, k_resolution=int(cfg.get("k_resolution", 32)))
    _write_csv(out / "margin.csv", ["lambda", "margin"],
               zip(lam_grid, margins))
    _write_json(out / "spectrum.json", {
        "intervals": spec_set.merged_intervals.tolist(),
        "window": list(window),
        "merge_tol": merge_tol,
        "flux": str(flux),
    })
    return {"intervals": spec_set.merged_intervals.tolist()}


def cmd_scan(cfg, num, out: Path) -> dict:
    lattice, sym, bands, hops = _band_hoppings(cfg, num)
    flux = _parse_flux(cfg.get("flux", "0"))
    window = _window(cfg, num, sym, lattice)
    lam_grid = np.linspace(window[0], window[1],
                           int(cfg.get("lambda_points", 400)))
    margins = effective.lambda_scan(
        hops, flux, lam_grid, k_resolution=int(cfg.get("k_resolution", 64)))
    _write_csv(out / "scan.csv", ["lambda", "margin"], zip(lam_grid, margins))
    return {"lambda_points": int(lam_grid.size)}


def cmd_direct(cfg, num, out: Path) -> dict:
    lattice = build_lattice(cfg)
    sym = build_symbol(cfg, lattice)
    field = build_field(cfg)
    mode = cfg.get("mode", "zero_field_bloch")
    flux = _parse_flux(cfg.get("flux", "0"))
    window = _window(cfg, num, sym, lattice)
    disc = direct.assemble_direct(
        sym, field, mode, flux=flux,
        points_per_cell=int(cfg.get("points_per_cell", 16)),
        box_size=float(cfg.get("box_size", 0.0)),
        box_points=int(cfg.get("box_points", 0)),
    )
    spec_set = direct.direct_spectrum(
        disc, window, num["merge_tol"],
        k_resolution=int(cfg.get("k_resolution", 8)),
        n_bands=num["n_bands"],
        shell_radius=num["cutoff"],
    )
    _write_csv(out / "eigenvalues.csv", ["value"],
               ([v] for v in spec_set.points))
    return {
        "mode": mode,
        "count": int(spec_set.points.size),
        "intervals": spec_set.merged_intervals.tolist(),
    }


def cmd_compare(cfg, num, out: Path) -> dict:
    lattice, sym, bands, hops = _band_hoppings(cfg, num)
    window = _window(cfg, num, sym, lattice)
    merge_tol = num["merge_tol"]
    eps_flux = cfg.get("epsilons")  # list of [epsilon, "p/q"]
    if not eps_flux:
        raise ConfigError("compare needs an 'epsilons' list of [eps, flux]")
    k_res_eff = int(cfg.get("k_resolution", 32))
    k_res_dir = int(cfg.get("direct_k_resolution", 4))
    ppc = int(cfg.get("points_per_cell", 16))
    pairs = []
    detail = []
    for eps, flux_text in eps_flux:
        flux = _parse_flux(flux_text)
        field = effective.field_for_flux(flux, lattice)
        op = effective.assemble_effective(hops, "magnetic_bloch", flux)
        eff_set = effective.effective_spectrum(
            op, window, merge_tol, k_resolution=k_res_eff)
        disc = direct.assemble_direct(
            sym, field, "magnetic_bloch", flux=flux, points_per_cell=ppc)
        dir_set = direct.direct_spectrum(
            disc, window, merge_tol, k_resolution=k_res_dir,
            n_bands=num["n_bands"])
        d_h, flagged = spectra.hausdorff_distance(eff_set, dir_set)
        detail.append({
            "epsilon": float(eps), "flux": str(flux), "d_H": d_h,
            "flagged": flagged,
            "effective_intervals": eff_set.merged_intervals.tolist(),
            "direct_intervals": dir_set.merged_intervals.tolist(),
        })
        if not flagged:
            pairs.append((float(eps), d_h))
    payload = {"window": list(window), "merge_tol": merge_tol,
               "runs": detail}
    if len(pairs) >= 3:
        fit = spectra.lipschitz_fit(pairs)
        payload["fitted_slope"] = fit.fitted_slope
        payload["max_ratio"] = fit.max_ratio
        payload["residual"] = fit.residual
    _write_json(out / "compare.json", payload)
    return payload


COMMANDS = {
    "bands": cmd_bands,
    "section": cmd_section,
    "grushin": cmd_grushin,
    "effective": cmd_effective,
    "direct": cmd_direct,
    "compare": cmd_compare,
    "scan": cmd_scan,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="peierls",
        description="Bloch bands, effective lattice operators, and "
                    "magnetic spectra",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="JSON config file")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--flux", help="override flux ratio p/q")
    parser.add_argument("--mode", help="override mode")
    parser.add_argument("--radius", type=int, help="override hopping radius")
    parser.add_argument("--window", nargs=2, type=float,
                        help="override energy window")
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config)
        if args.flux is not None:
            cfg["flux"] = args.flux
        if args.mode is not None:
            cfg["mode"] = args.mode
        if args.window is not None:
            cfg["window"] = list(args.window)
        num = _numerics(cfg)
        if args.radius is not None:
            num["radius"] = args.radius
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        summary = COMMANDS[args.command](cfg, num, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"numeric error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return 3
    meta = {"command": args.command, "config": cfg, "summary": summary}
    _write_json(out / f"{args.command}_meta.json", meta)
    return 0


if __name__ == "__main__":
    sys.exit(main())
