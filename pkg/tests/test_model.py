import math
import time

import numpy as np
import pytest
import torch

from cogtran.encoding import IGNORE, TokenGrid, collate
from cogtran.errors import NoSupervisedPositions, WidthExceeded
from cogtran.model import (ModelConfig, count_parameters, forward, init_params, loss, preset)

from oracles import cross_entropy_oracle

SMALL = ModelConfig(vocab_size=12, hidden_size=8, intermediate_size=16, num_heads=2,
                    num_layers=1, max_row_positions=16, dropout=0.0)


def random_grid(rng: np.random.Generator, vocab_size: int, rows=None, width=None) -> TokenGrid:
    rows = rows or int(rng.integers(2, 6))
    width = width or int(rng.integers(4, 10))
    ids = rng.integers(1, vocab_size, size=(rows, width))
    labels = np.full(width, IGNORE)
    labels[2:] = rng.integers(1, vocab_size, size=width - 2)
    return TokenGrid(ids, np.zeros((rows, width), dtype=bool), labels, rows - 1)


def padded(grid: TokenGrid, extra_rows: int, extra_cols: int) -> TokenGrid:
    r, w = grid.ids.shape
    ids = np.zeros((r + extra_rows, w + extra_cols), dtype=np.int64)
    pad = np.ones_like(ids, dtype=bool)
    ids[:r, :w] = grid.ids
    pad[:r, :w] = False
    labels = np.concatenate([grid.label_ids, np.full(extra_cols, IGNORE)])
    return TokenGrid(ids, pad, labels, grid.target_row)


class TestConfig:
    def test_paper_sizes(self):
        tiny = count_parameters(init_params(preset("tiny", 2300), 0))
        small = count_parameters(init_params(preset("small", 2300), 0))
        assert tiny == 1_037_692
        assert small == 4_472_828
        assert abs(tiny - 1.0e6) / 1.0e6 <= 0.15
        assert abs(small - 4.4e6) / 4.4e6 <= 0.15

    @pytest.mark.parametrize("kw", [dict(vocab_size=0), dict(vocab_size=5, num_heads=3),
                                    dict(vocab_size=5, dropout=1.0)])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            ModelConfig(**kw)

    def test_init_deterministic(self):
        a, b = init_params(SMALL, 4), init_params(SMALL, 4)
        for (na, pa), (nb, pb) in zip(a.state_dict().items(), b.state_dict().items()):
            assert na == nb and torch.equal(pa, pb)
        c = init_params(SMALL, 5)
        assert not torch.equal(a.embed_tokens.weight, c.embed_tokens.weight)

    def test_init_statistics(self):
        m = init_params(preset("tiny", 500), 0)
        w = m.embed_tokens.weight.detach()
        assert abs(float(w.std()) - 0.02) < 0.002
        assert float(m.head_norm.weight.detach().min()) == 1.0
        assert float(m.classifier.bias.detach().abs().max()) == 0.0


class TestForward:
    def test_shape(self):
        m = init_params(SMALL, 0)
        g = random_grid(np.random.default_rng(0), 12, rows=3, width=7)
        assert forward(m, g).shape == (7, 12)

    def test_width_exceeded(self):
        m = init_params(SMALL, 0)
        with pytest.raises(WidthExceeded):
            forward(m, random_grid(np.random.default_rng(0), 12, width=17))

    def test_invariances(self):
        start = time.perf_counter()
        m = init_params(ModelConfig(vocab_size=30, hidden_size=32, intermediate_size=64,
                                    num_heads=2, num_layers=2, max_row_positions=32), 1)
        rng = np.random.default_rng(1)
        for _ in range(50):
            g = random_grid(rng, 30)
            base = forward(m, g)
            perm = rng.permutation(g.num_rows)
            shuffled = TokenGrid(g.ids[perm], g.pad_mask[perm], g.label_ids,
                                 int(np.flatnonzero(perm == g.target_row)[0]))
            assert np.abs(forward(m, shuffled) - base).max() <= 1e-4
            big = padded(g, int(rng.integers(0, 3)), int(rng.integers(1, 4)))
            assert np.abs(forward(m, big)[: g.width] - base).max() <= 1e-4
        assert time.perf_counter() - start < 120

    def test_eval_mode_restored(self):
        m = init_params(SMALL, 0)
        m.train()
        forward(m, random_grid(np.random.default_rng(0), 12))
        assert m.training


class TestLoss:
    def test_uniform(self):
        for v in (2, 7, 100):
            logits = torch.zeros(3, 5, v)
            labels = torch.full((3, 5), IGNORE)
            labels[:, 2] = 1
            assert float(loss(logits, labels)) == pytest.approx(math.log(v))

    def test_confident(self):
        logits = torch.full((1, 3, 4), -50.0)
        labels = torch.tensor([[0, 3, IGNORE]])
        logits[0, 0, 0] = logits[0, 1, 3] = 50.0
        assert float(loss(logits, labels)) < 1e-12

    def test_oracle(self):
        gen = torch.Generator().manual_seed(0)
        logits = torch.randn(2, 6, 9, generator=gen, dtype=torch.float64) * 3
        labels = torch.randint(0, 9, (2, 6), generator=gen)
        labels[0, :2] = IGNORE
        labels[1, 4] = IGNORE
        expected = cross_entropy_oracle(logits.reshape(-1, 9).tolist(), labels.reshape(-1).tolist())
        assert float(loss(logits, labels)) == pytest.approx(expected, abs=1e-6)

    def test_no_supervised(self):
        with pytest.raises(NoSupervisedPositions):
            loss(torch.zeros(1, 3, 4), torch.full((1, 3), IGNORE))


def test_gradient_check():
    torch.manual_seed(0)
    model = init_params(SMALL, 3).double()
    assert count_parameters(model) <= 5000
    model.eval()
    rng = np.random.default_rng(3)
    grids = [padded(random_grid(rng, 12, rows=3, width=6), 1, 1), random_grid(rng, 12, 4, 7)]
    ids, pad, labels = (torch.as_tensor(a) for a in collate(grids))

    def objective():
        return loss(model(ids, pad), labels)

    model.zero_grad()
    objective().backward()
    params = list(model.parameters())
    analytic = torch.cat([p.grad.reshape(-1) for p in params])
    numeric = torch.empty_like(analytic)
    k, h = 0, 1e-5
    with torch.no_grad():
        for p in params:
            flat = p.view(-1)
            for i in range(flat.numel()):
                old = float(flat[i])
                flat[i] = old + h
                up = float(objective())
                flat[i] = old - h
                down = float(objective())
                flat[i] = old
                numeric[k] = (up - down) / (2 * h)
                k += 1
    rel = float((analytic - numeric).norm() / (analytic.norm() + numeric.norm()))
    assert rel <= 1e-3
    assert float((analytic - numeric).abs().max()) <= 1e-6


def test_few_steps_reduce_loss():
    model = init_params(SMALL, 0)
    rng = np.random.default_rng(0)
    ids, pad, labels = (torch.as_tensor(a) for a in collate([random_grid(rng, 12) for _ in range(4)]))
    opt = torch.optim.AdamW(model.parameters(), lr=1e-2)
    losses = []
    for _ in range(10):
        opt.zero_grad()
        value = loss(model(ids, pad), labels)
        value.backward()
        opt.step()
        losses.append(float(value.detach()))
    assert losses[-1] < losses[0]
