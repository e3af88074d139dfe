import json
import math

import numpy as np
import pytest

import canard_lab as cl


@pytest.fixture(scope="module")
def sys():
    return cl.SlowFastSystem.canonical()


def test_system_round_trip(sys):
    again = cl.SlowFastSystem.from_json(sys.to_json())
    assert again.a2 == 1.0
    assert again.lam == sys.lam
    with pytest.raises(cl.ConfigError):
        cl.SlowFastSystem.from_json('{"a3": 1}')


def test_layer(sys):
    ev = sorted(cl.layer_eigenvalues(sys), key=lambda z: z.imag)
    assert abs(ev[0] + 1j) < 1e-12 and abs(ev[1] - 1j) < 1e-12
    o = cl.periodic_orbit(0.5)
    assert o["H_drift"] <= 1e-9
    assert o["states"].shape[1] == 2
    assert abs(cl.first_integral(-0.5, 0.0) + math.exp(-1.0)) < 1e-15
    assert abs(cl.periodic_orbit(1e-3)["period"] - 2 * math.pi) < 1e-2


def test_manifold_and_hopf(sys):
    m = cl.slow_manifold(sys, 0.05)
    assert m["N"] == 30
    mu = cl.hopf_mu(sys, 0.05)
    assert abs(cl.hopf_by_eigenvalues(sys, 0.05, mu) - mu) <= 1e-6
    p = cl.solve_small_branch(sys, 0.5, 0.01)
    assert p.residual <= 1e-8
    with pytest.raises(ValueError):
        cl.hopf_mu(sys, 0.0)


def test_shilnikov(sys):
    s = cl.shilnikov(sys, r10=0.05, y11=0.1)
    assert s["contraction_ratio"] <= 0.5
    with pytest.raises(cl.ConfigError):
        cl.shilnikov(sys, side="sideways")


def test_connection(sys):
    bp = cl.solve_connection(sys, 0.01, 0.05)
    assert bp.residual <= 1e-8
    assert bp.eps == 0.05 * 0.05 * 0.01
    orbit, gap = cl.reconstruct_cycle(sys, bp)
    assert isinstance(orbit, np.ndarray) and orbit.shape == (2001, 3)
    assert gap <= 1e-6
    h = 0.3
    ms = cl.singular_mu(sys, h)
    d3 = cl.hausdorff_to_singular(sys, cl.solve_connection(sys, 1e-3 / h**2, h), ms)
    d4 = cl.hausdorff_to_singular(sys, cl.solve_connection(sys, 1e-4 / h**2, h), ms)
    assert d4 < d3


def test_short_sweep(sys):
    fam = cl.branch_sweep(sys, 1e-4, 0.05, 0.15, 3, hausdorff=False)
    assert len(fam["points"]) == 3
    assert fam["seam"]["mismatch"] <= 1e-4
    assert fam["csv"].splitlines()[0] == "h,eps,mu_bar,y1_star,residual,hausdorff"
    with pytest.raises(cl.ConfigError):
        cl.branch_sweep(sys, 0.0, 0.05, 0.15, 3)


def test_cli(tmp_path):
    code, out, _ = cl.run_cli(["layer", "--h", "0.5", "--out", str(tmp_path)])
    assert code == 0 and "period" in out
    assert (tmp_path / "layer.csv").exists()
    code, _, err = cl.run_cli(["hopf", "--r2", "0", "--out", str(tmp_path / "bad")])
    assert code == 1 and "r2" in err
    manifest = json.loads((tmp_path / "bad" / "manifest.json").read_text())
    assert manifest["status"] == "config_error"
