"""Smoke test for the porosurf extension module.

Build and install with `pip install maturin && maturin develop -m crates/python/Cargo.toml`,
or copy target/release/libporosurf.so next to this file as porosurf.so.
"""

import math
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent))

import porosurf  # noqa: E402


def main():
    rows = porosurf.design_table()
    assert len(rows) == 6
    for row, eps, h_mm in zip(rows, [2.10, 2.00, 1.95, 1.91, 1.86, 1.63], [2.50, 2.63, 2.69, 2.77, 2.85, 3.40]):
        assert round(row["eps_eff"], 2) == eps, row
        assert abs(row["h"] * 1e3 - h_mm) <= 0.02, row

    spec = porosurf.SurfaceSpec(rho=porosurf.Lattice(4).porosity())
    h = spec.matched_thickness()
    delta = porosurf.skin_depth(59.6e6, 26e9)
    eps = porosurf.effective_permittivity(2.1, spec.rho)
    assert abs(porosurf.surface_reactance(eps, h, 26e9, delta) - 270.0) < 0.01

    vacuum = porosurf.design_table(porosurf.SurfaceSpec(eps_r=1.0))
    assert all(r["h"] is None and "infeasible" in r["note"] for r in vacuum)

    lattice = porosurf.Lattice(5)
    assert abs(lattice.porosity() - math.pi * 0.25 / 2.0) < 1e-12
    assert lattice.cavity_count() > 0
    assert "\nbbox " in lattice.geometry_text()

    try:
        porosurf.Lattice(9)
    except ValueError:
        pass
    else:
        raise AssertionError("unknown model accepted")

    f = [22e9 + 0.25e9 * k for k in range(45)]
    db = [-3.0 * ((x - 24.5e9) / 2e9) ** 2 for x in f]
    band = porosurf.band_metrics(f, db)
    assert abs(band["band_3db"][0] - 22.5e9) < 0.25e9 and abs(band["band_3db"][1] - 26.5e9) < 0.25e9

    field = porosurf.analytic_cylinder_scatter(0.5e-3, 1.23, 26e9, [(0.5e-3, 0.0)])
    assert abs(field[0]) < 1e-9

    err = porosurf.cylinder_error(0.05e-3)
    assert err < 0.05, err

    print("porosurf", porosurf.__version__, "smoke test passed; cylinder error %.4f" % err)


if __name__ == "__main__":
    main()
