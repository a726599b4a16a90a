import math

import pytest

import protocell


@pytest.fixture(scope="module")
def small():
    cfg = protocell.ModelConfig()
    cfg.sigma = 1
    cfg.q_ccm = [250.0]
    return cfg, protocell.solve(cfg, 250.0)


def test_config_round_trip():
    cfg = protocell.ModelConfig.from_text("mesh.sigma = 3\nkinetics.k1 = 1000\n")
    assert cfg.sigma == 3 and cfg.kinetics.k1 == 1000.0
    assert protocell.ModelConfig.from_text(cfg.to_text()).to_text() == cfg.to_text()


def test_bad_config_raises():
    with pytest.raises(protocell.ConfigError):
        protocell.ModelConfig.from_text("mesh.sigmma = 3\n")
    cfg = protocell.ModelConfig()
    cfg.q_ccm = []
    with pytest.raises(protocell.ValidationError):
        cfg.validate()


def test_mesh_summary():
    cfg = protocell.ModelConfig()
    cfg.sigma = 1
    assert "z_layers.cl" in protocell.mesh_summary(cfg)


def test_solve_and_responses(small):
    cfg, sol = small
    assert sol.converged
    r = protocell.responses(sol)
    assert r["Q_ccm"] == 250.0 and r["formulation"] == "beta"
    assert 0.0 < r["dchi"] < cfg.chi_in
    assert math.isclose(r["lambda_prime"], r["dchi"] / cfg.chi_in, rel_tol=1e-12)
    assert len(sol.chi) == sol.n_cells
    assert protocell.response_csv(sol).startswith("formulation,Q_ccm,")


def test_field_dump_header(small):
    cfg, sol = small
    text = protocell.field_dump(sol, cfg)
    assert text.startswith("PROTOCELL_FIELD_DUMP 1\nFINGERPRINT " + sol.fingerprint)


def test_budget_breach_raises():
    cfg = protocell.ModelConfig()
    cfg.sigma = 1
    cfg.cell_budget = 10
    with pytest.raises(protocell.ResourceError):
        protocell.mesh_summary(cfg)


def test_extrapolation_helpers():
    assert protocell.richardson_extrapolate(7, 13, 2, 2) == 5.0
    assert protocell.gci(5, 7) == 2.5
    o = protocell.observed_order(1.0, 3.0, 2.0, 6.0, 4.0, 18.0)
    assert abs(o["p_real"] - 2.0) < 1e-8
    f, g, band = protocell.mixed_order_extrapolate([1, 2, 4], [1.75, 3.0, 7.0])
    assert abs(f - 1.0) < 1e-12 and band == pytest.approx(1.25 * 0.75)
