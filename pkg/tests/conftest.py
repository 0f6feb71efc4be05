import sys

import numpy as np
import pytest

from lindskin.model import BlochModel, RealSpaceModel


def random_hermitian(rng, n, scale=1.0):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return scale * (a + a.conj().T) / 2


def random_coeffs(rng, m, n, scale=0.5):
    return scale * (rng.normal(size=(m, n)) + 1j * rng.normal(size=(m, n)))


def random_model(rng, n, n_loss=None, n_gain=None, boundary="open"):
    n_loss = rng.integers(1, n + 1) if n_loss is None else n_loss
    n_gain = rng.integers(1, n + 1) if n_gain is None else n_gain
    return RealSpaceModel(random_hermitian(rng, n), random_coeffs(rng, n_loss, n),
                          random_coeffs(rng, n_gain, n), boundary)


def random_bloch(rng, bands=1, reach=2, n_loss=1, n_gain=1, scale=0.5):
    """Random translation-invariant chain with hopping and jumps of range <= reach."""
    def cplx(*shape):
        return rng.normal(size=shape) + 1j * rng.normal(size=shape)

    hop = {0: random_hermitian(rng, bands)}
    for a in range(1, reach + 1):
        h = scale * cplx(bands, bands)
        hop[a], hop[-a] = h, h.conj().T

    def stencils(count):
        return [{a: scale * cplx(bands) for a in range(rng.integers(1, reach + 1) + 1)}
                for _ in range(count)]

    return BlochModel(bands, hop, stencils(n_loss), stencils(n_gain))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(results):
        title, ok, detail = results[num]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {num:2d}. {title}: {detail}")
