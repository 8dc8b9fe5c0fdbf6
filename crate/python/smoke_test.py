#!/usr/bin/env python3
"""Build the extension module, import it, and exercise the main entry points.

Run from anywhere:  python3 python/smoke_test.py
"""

import math
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def build_extension() -> Path:
    subprocess.run(
        ["cargo", "build", "-p", "blochband-py"],
        cwd=ROOT,
        check=True,
    )
    built = ROOT / "target" / "debug" / "libblochband.so"
    if not built.exists():
        sys.exit(f"extension library not found at {built}")
    stage = Path(tempfile.mkdtemp(prefix="blochband-py-"))
    shutil.copy2(built, stage / "blochband.so")
    return stage


def main() -> None:
    sys.path.insert(0, str(build_extension()))
    import blochband as bb

    lat = bb.Lattice.unit_square()
    grid = bb.Grid(lat, 16)

    # Free operator against the exact dispersion |k + g|^2.
    exact = bb.free_bands(lat, [0.0, 0.0], 5)
    computed = bb.bands(grid, [0.0, 0.0], n_bands=5)
    assert exact[0] == 0.0 and abs(exact[1] - 4.0 * math.pi**2) < 1e-12
    for c, e in zip(computed, exact):
        assert abs(c - e) <= 0.2 * max(e, 1.0), (computed, exact)
    assert abs(computed[0]) < 1e-8, computed
    print(f"free dispersion: lambda_1(Gamma) = {computed[0]:.2e}, "
          f"lambda_2 = {computed[1]:.4f} vs 4 pi^2 = {4 * math.pi**2:.4f}")

    # The separation certificate sits on the floor 2 beta pi on the
    # hole-free grid, and the full operator bound dominates it.
    cert = bb.certificate(grid, c=10.0, beta=2.0)
    floor = 4.0 * math.pi
    assert cert["pass"] is True, cert
    assert abs(cert["sigma_min_B"] - floor) <= 1e-8 * floor, cert
    assert abs(cert["floor"] - floor) <= 1e-12, cert
    bound = bb.operator_bound(grid, c=10.0, beta=2.0)
    assert bound >= cert["sigma_min_B"] * (1.0 - 1e-8), (bound, cert)
    print(f"certificate: sigma_min(B) = {cert['sigma_min_B']:.9f} "
          f"(floor {floor:.9f}), operator bound {bound:.4f}")

    # Punching a hole raises the ground state.
    hole = bb.Hole.disk([0.5, 0.5], 0.25)
    perforated = bb.Grid(lat, 16, hole)
    assert perforated.n_free < grid.n_free
    lam_hole = bb.bands(perforated, [0.0, 0.0], n_bands=1)[0]
    assert lam_hole > 1.0, lam_hole
    print(f"hole monotonicity: lambda_1 rises 0 -> {lam_hole:.4f} "
          f"({grid.n_free} -> {perforated.n_free} dofs)")

    # Band path and spectrum projection shapes.
    path = bb.band_path(
        grid,
        [("Gamma", [0.0, 0.0]), ("X", [math.pi, 0.0]), ("M", [math.pi, math.pi])],
        points_per_segment=5,
        n_bands=3,
    )
    assert len(path["bands"]) == 3 and len(path["arclength"]) == len(path["bands"][0])
    assert [label for _, label in path["ticks"]] == ["Gamma", "X", "M"]
    vee = bb.Potential(c0=0.0, terms=[(2.0, (1, 0), 0.0), (2.0, (0, 1), 0.0)])
    report = bb.spectrum(perforated, dims=(3, 3), n_bands=3, potential=vee)
    assert len(report["bands"]) == 3 and report["N"] == 16
    assert all(lo <= hi for lo, hi in report["spectrum"])
    print(f"band path: {len(path['arclength'])} samples, "
          f"spectrum components: {len(report['spectrum'])}, gaps: {len(report['gaps'])}")

    # Deformation machinery: pullback and regrid agree on lambda_1 at a
    # small t, and the probe reports a positive growth rate for the
    # homothetic family.
    family = bb.Family(hole, [(0, 0.5, 0.0)], (0.27, 0.49), smoothness=3)
    lam_pb = bb.bands(bb.Grid.deformed(lat, 16, family, 0.02, "pullback"), [0.0, 0.0], 1)[0]
    lam_rg = bb.bands(bb.Grid.deformed(lat, 16, family, 0.02, "regrid"), [0.0, 0.0], 1)[0]
    assert abs(lam_pb - lam_rg) / lam_rg < 0.15, (lam_pb, lam_rg)
    result = bb.probe(lat, 16, family, k0=[0.0, 0.0], band=1, t_max=0.05, n_steps=9)
    assert result["d1"] > 0.0, result
    print(f"deformation: lambda_1(t=0.02) pullback {lam_pb:.4f} vs regrid {lam_rg:.4f}, "
          f"probe d1 = {result['d1']:.4f}")

    # Built-in self checks.
    rows = bb.validate()
    for name, passed, detail in rows:
        assert passed, (name, detail)
    print(f"validate: {len(rows)}/{len(rows)} checks passed")
    print("smoke test passed")


if __name__ == "__main__":
    main()
