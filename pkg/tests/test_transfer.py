import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tracesweep.direct import factorize, solve
from tracesweep.errors import ExtentMismatchError
from tracesweep.geometry import AssemblyWeights, Box, SubdomainLayout, UniformGrid, partition_domain
from tracesweep.operator import scaled_rhs
from tracesweep.transfer import (TraceMailbox, TraceRecord, accumulate, cardinal_directions,
                                 equivalent_source, extract_trace, split_source, trace_to_source)

from conftest import pml_operator


def _partition(counts=(2, 2), n=9):
    dim = len(counts)
    g = UniformGrid(Box((0.0,) * dim, (1.0,) * dim), (n,) * dim)
    return partition_domain(g, counts)


def test_cardinal_directions_order():
    assert cardinal_directions(2) == [(1, 0), (-1, 0), (0, 1), (0, -1)]
    assert len(cardinal_directions(3)) == 6


def test_extract_zero_trace_and_boundary():
    p = _partition()
    lay = SubdomainLayout(p, (1, 1), 3)
    u = np.zeros(lay.grid.shape, dtype=complex)
    t = extract_trace(u, lay, (1, 0))
    assert t.is_zero() and t.u0.shape == (lay.grid.shape[1],)
    assert extract_trace(u, lay, (-1, 0)) is None
    assert extract_trace(u, lay, (0, -1)) is None


def test_plane_wave_trace_values():
    p = _partition()
    lay = SubdomainLayout(p, (1, 2), 2)
    g = lay.grid
    kappa = 7.0
    x = g.coordinates()[0]
    u = np.exp(1j * kappa * x) * np.ones(g.shape)
    t = extract_trace(u, lay, (1, 0))
    xf = 0.5
    h = g.h[0]
    np.testing.assert_allclose(t.u0, np.exp(1j * kappa * xf), atol=1e-13)
    np.testing.assert_allclose(t.um1, np.exp(1j * kappa * (xf - h)), atol=1e-13)


def test_zero_trace_gives_zero_source():
    p = _partition()
    lay = SubdomainLayout(p, (2, 1), 3)
    op = pml_operator(2, 5, 3)  # a 11^2 operator with the same local shape
    assert op.grid.shape == lay.grid.shape
    t = TraceRecord((1, 1), (1, 0), np.zeros(11), np.zeros(11))
    assert not np.any(trace_to_source(t, lay, op))


def test_trace_source_extent_mismatch():
    p = _partition()
    lay = SubdomainLayout(p, (2, 1), 3)
    op = pml_operator(2, 5, 3)
    t = TraceRecord((1, 1), (1, 0), np.ones(10), np.ones(10))
    with pytest.raises(ExtentMismatchError):
        trace_to_source(t, lay, op)
    with pytest.raises(ValueError):
        equivalent_source(op, 0, 0, 1, np.ones(11), np.ones(11))


@pytest.mark.parametrize("dim,n,width", [(2, 24, 8), (3, 10, 5)])
@pytest.mark.parametrize("sign", [1, -1])
def test_same_grid_identity(dim, n, width, sign, rng):
    """On one grid the two-line source reproduces the field in front of the face exactly."""
    op = pml_operator(dim, n, width, kappa=2 * np.pi * 1.5)
    F = factorize(op)
    N = op.grid.shape[0]
    y0 = N // 2
    f = np.zeros(op.grid.shape, dtype=complex)
    behind = slice(width, y0 - 1) if sign > 0 else slice(y0 + 2, N - width)
    f[behind] = rng.standard_normal(f[behind].shape)
    u = solve(F, scaled_rhs(op, f))
    v = solve(F, equivalent_source(op, 0, y0, sign, u[y0], u[y0 - sign]))
    front = slice(y0, None) if sign > 0 else slice(0, y0 + 1)
    back = slice(0, y0 - 1) if sign > 0 else slice(y0 + 2, None)
    scale = np.linalg.norm(u)
    assert np.linalg.norm(v[front] - u[front]) / scale < 1e-12
    assert np.linalg.norm(v[back]) / scale < 1e-12


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 31 - 1), st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False))
def test_equivalent_source_is_linear(seed, a):
    op = pml_operator(2, 6, 2)
    r = np.random.default_rng(seed)
    m = op.grid.shape[1]
    u0, um1, w0, wm1 = (r.standard_normal(m) + 1j * r.standard_normal(m) for _ in range(4))
    lhs = equivalent_source(op, 1, 4, -1, a * u0 + w0, a * um1 + wm1)
    rhs = a * equivalent_source(op, 1, 4, -1, u0, um1) + equivalent_source(op, 1, 4, -1, w0, wm1)
    np.testing.assert_allclose(lhs, rhs, atol=1e-10)


def test_accumulate_zero_and_constant():
    p = _partition((2, 2), 9)
    w = AssemblyWeights(p)
    u = np.zeros(p.grid.shape, dtype=complex)
    for idx in p.subdomains():
        lay = SubdomainLayout(p, idx, 2)
        accumulate(u, np.zeros(lay.grid.shape), w, lay)
    assert not np.any(u)
    for idx in p.subdomains():
        lay = SubdomainLayout(p, idx, 2)
        accumulate(u, np.ones(lay.grid.shape), w, lay)
    np.testing.assert_allclose(u, 1.0, atol=1e-15)


def test_accumulate_padded_constant():
    p = _partition((3, 2), 13)
    w = AssemblyWeights(p, 4)
    u = np.zeros(w.shape)
    for idx in p.subdomains():
        lay = SubdomainLayout(p, idx, 4)
        accumulate(u, np.ones(lay.grid.shape), w, lay)
    np.testing.assert_allclose(u, 1.0, atol=1e-15)


def test_split_and_accumulate_round_trip(rng):
    """Restricting a global field and assembling the pieces returns it."""
    p = _partition((2, 3), 13)
    w = AssemblyWeights(p, 3)
    f = rng.standard_normal(w.shape) + 1j * rng.standard_normal(w.shape)
    u = np.zeros(w.shape, dtype=complex)
    for idx in p.subdomains():
        lay = SubdomainLayout(p, idx, 3)
        accumulate(u, split_source(f, lay), w, lay)
    np.testing.assert_allclose(u, f, atol=1e-14)
    # the weighted split sums to the source directly
    total = np.zeros(w.shape, dtype=complex)
    for idx in p.subdomains():
        lay = SubdomainLayout(p, idx, 3)
        total[lay.global_owned] += split_source(f, lay, w)[lay.owned]
    np.testing.assert_allclose(total, f, atol=1e-14)


def test_mailbox_sums_in_canonical_order():
    p = _partition()
    lay = SubdomainLayout(p, (2, 2), 3)
    op = pml_operator(2, 5, 3)
    m = op.grid.shape[1]
    r = np.random.default_rng(5)
    traces = [TraceRecord((1, 2), (1, 0), r.standard_normal(m) * 1e8, r.standard_normal(m)),
              TraceRecord((2, 1), (0, 1), r.standard_normal(m), r.standard_normal(m) * 1e-8)]
    results = []
    for order in (traces, traces[::-1]):
        box = TraceMailbox()
        for t in order:
            box.deposit((2, 2), 1, t)
        assert box.pending() == 2
        results.append(box.source_for((2, 2), 1, lay, op))
        assert box.pending() == 0
    np.testing.assert_array_equal(results[0], results[1])
    assert TraceMailbox().source_for((2, 2), 1, lay, op) is None
