import math

import numpy as np
import pytest

import nodalsets as ns


def test_spec_and_sampling_are_deterministic():
    spec = ns.kernel_spec("berry_mono", 2, 1, {"truncation.waves": 64})
    assert spec.model == "berry_mono" and spec.waves == 64
    a = ns.sample_field(spec, 3)
    b = ns.sample_field(spec, 3)
    assert a.coefficients == b.coefficients
    pts = np.array([[0.1, 0.2], [1.5, -0.7]])
    np.testing.assert_array_equal(a.values(pts), b.values(pts))
    assert a.values(pts).shape == (2, 1)
    assert ns.sample_field(spec, 4).coefficients != a.coefficients


def test_coefficient_sidecar_round_trip(tmp_path):
    spec = ns.kernel_spec("torus_arithmetic", 3, 2, {"params.lattice_norm": 9})
    f = ns.sample_field(spec, 5)
    path = str(tmp_path / "f.coef")
    ns.write_coefficients(path, f)
    g = ns.read_coefficients(path, spec)
    assert g.coefficients == f.coefficients


def test_bad_spec_raises():
    with pytest.raises(ValueError):
        ns.kernel_spec("no_such_model", 2, 1)
    with pytest.raises(ValueError):
        ns.kernel_spec("bargmann_fock", 2, 2)


def test_extraction_and_curvature():
    spec = ns.kernel_spec("bargmann_fock", 2, 1, {"truncation.radius": 6})
    f = ns.sample_field(spec, 1)
    out = ns.extract_zero_set(f, R=4.0, h=0.1)
    assert out["faults"] == 0
    for c in out["inside"]:
        assert c["closed"]
        assert c["vertices"].shape[1] == 2
        # Fenchel: closed curves turn by at least 2 pi.
        assert ns.total_curvature(c) >= 2 * math.pi * (1 - 1e-9)


def test_knot_classification_of_a_trefoil():
    t = np.linspace(0, 2 * math.pi, 300, endpoint=False)
    pts = np.stack([np.sin(t) + 2 * np.sin(2 * t), np.cos(t) - 2 * np.cos(2 * t), -np.sin(3 * t)], axis=1)
    r = ns.knot_classify({"vertices": pts})
    assert r["label"] == "3_1"
    assert r["determinant"] == 3
    circle = np.stack([np.cos(t), np.sin(t), 0 * t], axis=1)
    assert ns.knot_classify({"vertices": circle})["label"] == "unknot"


def test_kac_rice_density_of_planar_bargmann_fock():
    spec = ns.kernel_spec("bargmann_fock", 2, 1)
    e = ns.first_moment_density(spec, "volume", samples=200000)
    # p(0) E|grad f| = (2 pi)^{-1/2} sqrt(pi / 2) = 1/2.
    assert abs(e["value"] - 0.5) < 0.01
    assert e["method"] == "monte_carlo"


def test_diagnostics():
    spec = ns.kernel_spec("bargmann_fock", 2, 1)
    decay = ns.ergodicity_decay(spec, [2.0, 4.0, 8.0])
    assert decay == sorted(decay, reverse=True)
    assert ns.two_point_schur_check(spec, np.zeros(2), np.array([0.5, 0.0]))["pass"]
    sup, diag = ns.kostlan_local_limit(3, 200)
    assert sup <= 0.02 and diag < 1e-12


def test_run_experiment(tmp_path):
    cfg = "\n".join(
        [
            "scenario = kostlan_local_limit",
            "model = kostlan",
            "n = 3",
            "m = 1",
            "d_list = 50, 100",
            f"output_dir = {tmp_path}",
        ]
    )
    out = ns.run_experiment(cfg)
    assert out["pass"]
    assert (tmp_path / "checks.json").exists()
