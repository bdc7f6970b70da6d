import numpy as np
import pytest
from scipy.special import expit

from tensorcells.cells import (
    CellState,
    ElmanCell,
    GRUCell,
    LSTMCell,
    cell_from_payload,
    cell_to_payload,
    elman_step,
    elman_step_backward,
    gru_step,
    gru_step_backward,
    lstm_step,
    lstm_step_backward,
    run_sequence,
)
from tensorcells.factorized import DenseMatrix, FactorizedLinear, TensorizedShape, init_factorized

from oracles import check_gradients


def dense_op(rng, rows, cols, scale=0.4):
    return FactorizedLinear(DenseMatrix(scale * rng.normal(size=(rows, cols))))


def make_gru(rng, n=4, m=5, kind="dense", ranks=None, m_dims=None, n_dims=None, zero=False):
    def op(rows, cols, dims_out, dims_in):
        if kind == "dense":
            w = dense_op(rng, rows, cols)
        else:
            w = init_factorized(
                kind, TensorizedShape(dims_out, dims_in), ranks, sigma_w=0.5, seed=rng, with_bias=False
            )
        if zero:
            for _, a in w.param_arrays():
                a[...] = 0.0
        return w

    mx, mh = (m_dims, m_dims) if m_dims else ((m,), (m,))
    nx = n_dims if n_dims else (n,)
    return GRUCell(
        w_xr=op(m, n, mx, nx), w_hr=op(m, m, mh, mx),
        w_xz=op(m, n, mx, nx), w_hz=op(m, m, mh, mx),
        w_xh=op(m, n, mx, nx), w_hh=op(m, m, mh, mx),
        b_r=np.zeros(m), b_z=np.zeros(m), b_h=np.zeros(m),
    )


def materialized_copy(cell: GRUCell) -> GRUCell:
    def dense(op):
        return FactorizedLinear(DenseMatrix(op.materialize()))

    return GRUCell(
        w_xr=dense(cell.w_xr), w_hr=dense(cell.w_hr),
        w_xz=dense(cell.w_xz), w_hz=dense(cell.w_hz),
        w_xh=dense(cell.w_xh), w_hh=dense(cell.w_hh),
        b_r=cell.b_r.copy(), b_z=cell.b_z.copy(), b_h=cell.b_h.copy(),
    )


class TestGRUStep:
    def test_zero_weights_halve_state(self):
        # r = z = sigmoid(0) = 1/2 and the candidate is tanh(0) = 0
        rng = np.random.default_rng(0)
        cell = make_gru(rng, zero=True)
        v = rng.normal(size=5)
        h = gru_step(cell, rng.normal(size=4), v)
        np.testing.assert_allclose(h, 0.5 * v)

    def test_update_gate_saturation(self):
        rng = np.random.default_rng(1)
        cell = make_gru(rng)
        cell.b_z[...] = 1e3  # z -> 1, so h_t -> candidate
        x, h_prev = rng.normal(size=4), rng.normal(size=5)
        h = gru_step(cell, x, h_prev)
        candidate = np.tanh(
            cell.w_xh.apply(x)
            + cell.w_hh.apply(expit(cell.w_xr.apply(x) + cell.w_hr.apply(h_prev)) * h_prev)
            + cell.b_h
        )
        np.testing.assert_allclose(h, candidate, atol=1e-12)

    @pytest.mark.parametrize("kind,ranks", [("cp", 3), ("tucker", (2, 2, 2, 2)), ("tt", (1, 3, 1))])
    def test_factorized_matches_materialized(self, kind, ranks):
        rng = np.random.default_rng(2)
        cell = make_gru(rng, n=6, m=6, kind=kind, ranks=ranks, m_dims=(2, 3), n_dims=(3, 2))
        dense = materialized_copy(cell)
        h = rng.normal(size=6)
        for _ in range(100):
            x = rng.normal(size=6)
            h_f = gru_step(cell, x, h)
            h_d = gru_step(dense, x, h)
            np.testing.assert_allclose(h_f, h_d, atol=1e-10)
            h = h_f

    def test_gate_ranges_and_convexity(self):
        rng = np.random.default_rng(3)
        cell = make_gru(rng, n=3, m=4)
        cell.b_r[...] = rng.normal(size=4)
        cell.b_z[...] = rng.normal(size=4)
        h = rng.uniform(-0.99, 0.99, size=4)
        for _ in range(50):
            x = rng.normal(size=3)
            cache = {}
            h = gru_step(cell, x, h, cache=cache)
            assert np.all(cache["r"] > 0) and np.all(cache["r"] < 1)
            assert np.all(cache["z"] > 0) and np.all(cache["z"] < 1)
            assert np.all(np.abs(h) < 1)

    def test_dropout_mask_multiplies_input_only(self):
        rng = np.random.default_rng(4)
        cell = make_gru(rng)
        x, h_prev = rng.normal(size=4), rng.normal(size=5)
        mask = np.array([0.0, 2.0, 2.0, 0.0])
        masked = gru_step(cell, x, h_prev, dropout_mask=mask)
        explicit = gru_step(cell, x * mask, h_prev)
        np.testing.assert_array_equal(masked, explicit)

    def test_shape_mismatch(self):
        rng = np.random.default_rng(5)
        cell = make_gru(rng)
        with pytest.raises(ValueError):
            gru_step(cell, np.zeros(3), np.zeros(5))


class TestLSTMStep:
    def make(self, rng, n=3, m=4, zero=False):
        def op(rows, cols):
            w = dense_op(rng, rows, cols)
            if zero:
                w.weights.matrix[...] = 0.0
            return w

        z = np.zeros(m)
        return LSTMCell(
            w_xi=op(m, n), w_hi=op(m, m), w_xf=op(m, n), w_hf=op(m, m),
            w_xc=op(m, n), w_hc=op(m, m), w_xo=op(m, n), w_ho=op(m, m),
            w_ci=z.copy(), w_cf=z.copy(), w_co=z.copy(),
            b_i=z.copy(), b_f=z.copy(), b_c=z.copy(), b_o=z.copy(),
        )

    def test_zero_weights_halve_cell(self):
        rng = np.random.default_rng(6)
        cell = self.make(rng, zero=True)
        c_prev = rng.normal(size=4)
        state = lstm_step(cell, rng.normal(size=3), CellState(rng.normal(size=4), c_prev))
        np.testing.assert_allclose(state.c, 0.5 * c_prev)
        np.testing.assert_allclose(state.h, 0.5 * np.tanh(0.5 * c_prev))

    def test_zero_everything_gives_zero_h(self):
        rng = np.random.default_rng(7)
        cell = self.make(rng, zero=True)
        state = lstm_step(cell, rng.normal(size=3), CellState(np.zeros(4), np.zeros(4)))
        np.testing.assert_array_equal(state.h, np.zeros(4))

    def test_against_straight_line_oracle(self):
        # independent per-coordinate evaluation of the five update equations
        rng = np.random.default_rng(8)
        cell = self.make(rng)
        for name in ("w_ci", "w_cf", "w_co", "b_i", "b_f", "b_c", "b_o"):
            getattr(cell, name)[...] = 0.3 * rng.normal(size=4)
        x = rng.normal(size=3)
        h_prev, c_prev = rng.normal(size=4), rng.normal(size=4)
        state = lstm_step(cell, x, CellState(h_prev, c_prev))

        def sig(v):
            return 1.0 / (1.0 + np.exp(-v))

        mats = {name: op.materialize() for name, op in cell.operators()}
        for j in range(4):
            a_i = mats["xi"][j] @ x + mats["hi"][j] @ h_prev + cell.w_ci[j] * c_prev[j] + cell.b_i[j]
            a_f = mats["xf"][j] @ x + mats["hf"][j] @ h_prev + cell.w_cf[j] * c_prev[j] + cell.b_f[j]
            a_c = mats["xc"][j] @ x + mats["hc"][j] @ h_prev + cell.b_c[j]
            c_j = sig(a_f) * c_prev[j] + sig(a_i) * np.tanh(a_c)
            a_o = mats["xo"][j] @ x + mats["ho"][j] @ h_prev + cell.w_co[j] * c_j + cell.b_o[j]
            h_j = sig(a_o) * np.tanh(c_j)
            assert abs(state.c[j] - c_j) < 1e-12
            assert abs(state.h[j] - h_j) < 1e-12

    def test_backward_finite_differences(self):
        rng = np.random.default_rng(9)
        cell = self.make(rng, n=2, m=3)
        for name in ("w_ci", "w_cf", "w_co"):
            getattr(cell, name)[...] = 0.3 * rng.normal(size=3)
        x = rng.normal(size=2)
        h_prev, c_prev = rng.normal(size=3), rng.normal(size=3)
        up_h, up_c = rng.normal(size=3), rng.normal(size=3)

        cache = {}
        lstm_step(cell, x, CellState(h_prev, c_prev), cache=cache)
        grads, dx, dh_prev, dc_prev = lstm_step_backward(cell, cache, up_h, up_c)

        def score():
            s = lstm_step(cell, x, CellState(h_prev, c_prev))
            return float(up_h @ s.h + up_c @ s.c)

        named = list(cell.param_arrays()) + [("x", x), ("h_prev", h_prev), ("c_prev", c_prev)]
        grads = dict(grads, x=dx, h_prev=dh_prev, c_prev=dc_prev)
        assert check_gradients(score, named, grads, rng) < 1e-6


class TestElmanStep:
    def make(self, rng, n=3, m=4, zero=False):
        cell = ElmanCell(w_xh=dense_op(rng, m, n), w_hh=dense_op(rng, m, m), b_h=np.zeros(m))
        if zero:
            cell.w_xh.weights.matrix[...] = 0.0
            cell.w_hh.weights.matrix[...] = 0.0
        return cell

    def test_zero_weights(self):
        rng = np.random.default_rng(10)
        cell = self.make(rng, zero=True)
        np.testing.assert_array_equal(elman_step(cell, rng.normal(size=3), rng.normal(size=4)), np.zeros(4))

    def test_memoryless_when_recurrent_zero(self):
        rng = np.random.default_rng(11)
        cell = self.make(rng)
        cell.w_hh.weights.matrix[...] = 0.0
        x = rng.normal(size=3)
        a = elman_step(cell, x, rng.normal(size=4))
        b = elman_step(cell, x, rng.normal(size=4))
        np.testing.assert_array_equal(a, b)

    def test_against_loop_oracle(self):
        rng = np.random.default_rng(12)
        cell = self.make(rng)
        cell.b_h[...] = rng.normal(size=4)
        x, h_prev = rng.normal(size=3), rng.normal(size=4)
        got = elman_step(cell, x, h_prev)
        w_x, w_h = cell.w_xh.materialize(), cell.w_hh.materialize()
        for j in range(4):
            pre = sum(w_x[j, i] * x[i] for i in range(3))
            pre += sum(w_h[j, i] * h_prev[i] for i in range(4))
            assert abs(got[j] - np.tanh(pre + cell.b_h[j])) < 1e-12

    def test_backward_finite_differences(self):
        rng = np.random.default_rng(13)
        cell = self.make(rng)
        x, h_prev, up = rng.normal(size=3), rng.normal(size=4), rng.normal(size=4)
        cache = {}
        elman_step(cell, x, h_prev, cache=cache)
        grads, dx, dh_prev = elman_step_backward(cell, cache, up)

        def score():
            return float(up @ elman_step(cell, x, h_prev))

        named = list(cell.param_arrays()) + [("x", x), ("h_prev", h_prev)]
        assert check_gradients(score, named, dict(grads, x=dx, h_prev=dh_prev), rng) < 1e-6


class TestRunSequence:
    def test_empty_sequence(self):
        cell = make_gru(np.random.default_rng(14))
        assert run_sequence(cell, []) == []

    def test_single_step(self):
        rng = np.random.default_rng(15)
        cell = make_gru(rng)
        x = rng.normal(size=4)
        states = run_sequence(cell, [x])
        np.testing.assert_array_equal(states[0], gru_step(cell, x, np.zeros(5)))

    @pytest.mark.parametrize("split_at", [1, 3, 6])
    def test_state_threading_split(self, split_at):
        rng = np.random.default_rng(16)
        cell = make_gru(rng)
        xs = [rng.normal(size=4) for _ in range(8)]
        full = run_sequence(cell, xs)
        head = run_sequence(cell, xs[:split_at])
        tail = run_sequence(cell, xs[split_at:], initial=head[-1])
        for a, b in zip(full, head + tail):
            np.testing.assert_array_equal(a, b)

    def test_lstm_sequence_returns_states(self):
        rng = np.random.default_rng(17)
        cell = TestLSTMStep().make(rng)
        states = run_sequence(cell, [rng.normal(size=3) for _ in range(4)])
        assert len(states) == 4
        assert all(isinstance(s, CellState) and s.c is not None for s in states)


class TestBackpropThroughTime:
    @pytest.mark.parametrize("kind,ranks", [("dense", None), ("cp", 2), ("tt", (1, 2, 1))])
    def test_ten_step_gradients(self, kind, ranks):
        rng = np.random.default_rng(18)
        if kind == "dense":
            cell = make_gru(rng, n=3, m=4)
        else:
            cell = make_gru(rng, n=4, m=4, kind=kind, ranks=ranks, m_dims=(2, 2), n_dims=(2, 2))
        xs = [rng.normal(size=cell.input_size) for _ in range(10)]
        ups = [rng.normal(size=4) for _ in range(10)]

        def score():
            h = np.zeros(4)
            total = 0.0
            for x, u in zip(xs, ups):
                h = gru_step(cell, x, h)
                total += float(u @ h)
            return total

        caches = []
        h = np.zeros(4)
        for x in xs:
            cache = {}
            h = gru_step(cell, x, h, cache=cache)
            caches.append(cache)
        grads = {name: np.zeros_like(a) for name, a in cell.param_arrays()}
        dh = np.zeros(4)
        for t in range(9, -1, -1):
            g, _, dh_prev = gru_step_backward(cell, caches[t], ups[t] + dh)
            for k, v in g.items():
                grads[k] += v
            dh = dh_prev
        assert check_gradients(score, cell.param_arrays(), grads, rng, samples=6) < 1e-4


class TestCellSerialization:
    def test_round_trip(self):
        import json

        rng = np.random.default_rng(19)
        cell = make_gru(rng, n=4, m=4, kind="tt", ranks=(1, 2, 1), m_dims=(2, 2), n_dims=(2, 2))
        cell.b_r[...] = rng.normal(size=4)
        payload = json.loads(json.dumps(cell_to_payload(cell)))
        back = cell_from_payload(payload)
        for (na, a), (nb, b) in zip(cell.param_arrays(), back.param_arrays()):
            assert na == nb
            assert a.tobytes() == b.tobytes()
