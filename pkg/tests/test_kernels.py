"""Backend parity: the compiled and numpy kernels must agree."""

import numpy as np
import pytest

from rainlens import _kernels
from rainlens._kernels import _numpy as numpy_backend
from rainlens.protodrop import generate_protodrop

native_backend = _kernels.available_backends().get("native")
needs_native = pytest.mark.skipif(native_backend is None,
                                  reason="compiled extension not built")


def random_scene(rng, h=48, w=56, coverage=0.3):
    img = np.ascontiguousarray(rng.random((h, w, 3)))
    r = np.ascontiguousarray(rng.normal(0, 4, (h, w)))
    g = np.ascontiguousarray(rng.normal(0, 4, (h, w)))
    b = np.ascontiguousarray(rng.random((h, w)))
    alpha = np.ascontiguousarray(
        np.where(rng.random((h, w)) < coverage, rng.random((h, w)), 0.0))
    return img, r, g, b, alpha


def test_backend_name_is_valid():
    assert _kernels.backend_name() in ("native", "numpy")


def test_available_backends_always_includes_numpy():
    assert "numpy" in _kernels.available_backends()


@needs_native
@pytest.mark.parametrize("blend", [0, 1])
def test_refract_sample_parity(rng, blend):
    img, r, g, b, alpha = random_scene(rng)
    out_np = img.copy()
    out_nat = img.copy()
    numpy_backend.refract_sample(img, r, g, b, alpha, out_np, blend)
    native_backend.refract_sample(img, r, g, b, alpha, out_nat, blend)
    assert np.allclose(out_np, out_nat, atol=1e-12, rtol=0)


@needs_native
def test_refract_sample_parity_extreme_offsets(rng):
    img, r, g, b, alpha = random_scene(rng)
    r *= 100.0
    g *= 100.0
    out_np = img.copy()
    out_nat = img.copy()
    numpy_backend.refract_sample(img, r, g, b, alpha, out_np, 1)
    native_backend.refract_sample(img, r, g, b, alpha, out_nat, 1)
    assert np.allclose(out_np, out_nat, atol=1e-12, rtol=0)


@needs_native
def test_splat_drop_parity(rng):
    proto = generate_protodrop(radius_px=16, refraction_gain=30.0)
    tex_r = np.ascontiguousarray(proto.r_chan)
    tex_g = np.ascontiguousarray(proto.g_chan)
    tex_b = np.ascontiguousarray(proto.b_chan)
    h, w = 72, 96
    accs_np = [np.zeros((h, w)) for _ in range(4)]
    accs_nat = [np.zeros((h, w)) for _ in range(4)]
    for _ in range(12):
        u, v = rng.uniform(-10, w + 10), rng.uniform(-10, h + 10)
        ax, ay = rng.uniform(3, 25), rng.uniform(3, 25)
        args = (tex_r, tex_g, tex_b, u, v, ax, ay, proto.radius_px,
                ax / proto.radius_px, ay / proto.radius_px, 1.5)
        numpy_backend.splat_drop(*accs_np, *args)
        native_backend.splat_drop(*accs_nat, *args)
    for got, want in zip(accs_nat, accs_np):
        assert np.allclose(got, want, atol=1e-12, rtol=0)


@needs_native
def test_finalize_composite_parity(rng):
    h, w = 40, 52
    acc_f = rng.random((h, w)) * 1.5
    acc_f[acc_f < 0.5] = 0.0
    acc_wr = rng.normal(0, 5, (h, w))
    acc_wg = rng.normal(0, 5, (h, w))
    acc_b = rng.random((h, w)) * 2.0
    outs_np = [np.zeros((h, w)) for _ in range(4)]
    outs_nat = [np.zeros((h, w)) for _ in range(4)]
    numpy_backend.finalize_composite(acc_f, acc_wr, acc_wg, acc_b, 0.4, *outs_np)
    native_backend.finalize_composite(acc_f, acc_wr, acc_wg, acc_b, 0.4, *outs_nat)
    for got, want in zip(outs_nat, outs_np):
        assert np.allclose(got, want, atol=1e-12, rtol=0)
        assert np.array_equal(got == 0.0, want == 0.0)


@needs_native
def test_splat_drop_offscreen_is_noop_in_both(rng):
    proto = generate_protodrop(radius_px=8)
    accs = [np.zeros((16, 16)) for _ in range(4)]
    for backend in (numpy_backend, native_backend):
        backend.splat_drop(*accs, proto.r_chan, proto.g_chan, proto.b_chan,
                           -100.0, -100.0, 5.0, 5.0, proto.radius_px,
                           1.0, 1.0, 1.5)
    for acc in accs:
        assert not acc.any()


def test_forced_numpy_selection(monkeypatch):
    import importlib
    import rainlens._kernels as pkg
    monkeypatch.setenv("RAINLENS_KERNELS", "numpy")
    reloaded = importlib.reload(pkg)
    try:
        assert reloaded.backend_name() == "numpy"
    finally:
        monkeypatch.delenv("RAINLENS_KERNELS")
        importlib.reload(pkg)


def test_invalid_backend_request_rejected(monkeypatch):
    import importlib
    import rainlens._kernels as pkg
    monkeypatch.setenv("RAINLENS_KERNELS", "cuda")
    with pytest.raises(ImportError):
        importlib.reload(pkg)
    monkeypatch.delenv("RAINLENS_KERNELS")
    importlib.reload(pkg)
