"""Encoders and building blocks."""

import numpy as np
import pytest

from fuselab import numcore as nc
from fuselab.exceptions import InputError, ShapeError
from fuselab.layers import (
    ConvVisualEncoder,
    DenseLayer,
    EmbeddingTable,
    RecurrentTextEncoder,
    dense_forward,
    encode_text,
    encode_visual,
)
from fuselab.numcore import Tensor


def _zero_params(params):
    for p in params:
        p.data[...] = 0.0


class TestDense:
    def test_identity_weights_pass_input_through(self):
        layer = DenseLayer(3, 3, "identity")
        layer.weights.data[...] = np.eye(3)
        layer.bias.data[...] = 0.0
        x = Tensor([1.0, -2.0, 3.0])
        assert dense_forward(x, layer).data.tolist() == [1.0, -2.0, 3.0]

    def test_zero_weights_softmax_is_uniform(self):
        layer = DenseLayer(5, 2, "softmax")
        _zero_params(layer.parameters())
        out = dense_forward(Tensor(np.ones(5)), layer)
        assert out.data.tolist() == [0.5, 0.5]

    def test_hand_arithmetic(self):
        layer = DenseLayer(2, 1, "identity")
        layer.weights.data[...] = [[1.0, 1.0]]
        layer.bias.data[...] = [1.0]
        assert dense_forward(Tensor([2.0, 3.0]), layer).data.tolist() == [6.0]

    def test_dim_mismatch(self):
        layer = DenseLayer(2, 1)
        with pytest.raises(ShapeError):
            dense_forward(Tensor([1.0, 2.0, 3.0]), layer)


class TestEmbedding:
    def test_out_of_range_ids_map_to_oov(self):
        table = EmbeddingTable(4, 3, oov_index=0)
        out = table.lookup([2, 99, -5])
        assert np.array_equal(out.data[1], table.matrix.data[0])
        assert np.array_equal(out.data[2], table.matrix.data[0])
        assert np.array_equal(out.data[0], table.matrix.data[2])


class TestTextEncoder:
    def _encoder(self, d=6, vocab=10, seed=0, **kw):
        rng = np.random.default_rng(seed)
        return RecurrentTextEncoder(vocab_size=vocab, embed_dim=4, hidden_dim=3,
                                    latent_dim=d, rng=rng, **kw)

    def test_single_token_attention_weight_is_one(self):
        z, attn = encode_text([3], self._encoder())
        assert attn.data.tolist() == [1.0]

    def test_all_zero_parameters_give_zero_latent(self):
        enc = self._encoder()
        _zero_params(enc.parameters())
        z, attn = encode_text([1, 2, 3], enc)
        assert np.allclose(z.data, 0.0, atol=0)
        # uniform attention over the zero states
        assert np.allclose(attn.data, 1.0 / 3.0)

    def test_latent_length_matches_configured_dim(self):
        z, _ = encode_text([1, 2], self._encoder(d=64))
        assert z.shape == (64,)

    def test_attention_weights_sum_to_one(self):
        enc = self._encoder(seed=5)
        for length in (1, 2, 7, 20):
            _, attn = encode_text(list(range(length)), enc)
            assert abs(attn.data.sum() - 1.0) < 1e-9

    def test_empty_sequence_rejected(self):
        with pytest.raises(InputError):
            encode_text([], self._encoder())

    def test_palindrome_with_tied_directions_mirrors_states(self):
        enc = self._encoder(seed=3, tied_directions=True)
        ids = np.array([[2, 5, 9, 5, 2]])
        fwd, bwd = enc.hidden_states(ids)
        for t in range(5):
            assert np.allclose(fwd[t].data, bwd[len(ids[0]) - 1 - t].data, atol=1e-12)
        # and the encoding is invariant under reversal of the palindrome
        z1, _ = encode_text([2, 5, 9, 5, 2], enc)
        z2, _ = encode_text([2, 5, 9, 5, 2][::-1], enc)
        assert np.array_equal(z1.data, z2.data)

    def test_gradients_through_recurrence_length_20(self):
        enc = self._encoder(seed=11)
        ids = np.random.default_rng(1).integers(0, 10, size=(2, 20))
        target = np.random.default_rng(2).normal(size=(2, enc.latent_dim))

        def loss():
            z, _ = enc.encode_batch(ids)
            return nc.squared_norm(nc.sub(z, Tensor(target)))

        reports = nc.grad_check_params(loss, enc.parameters(), h=1e-5, tol=1e-4)
        bad = {k: r for k, r in reports.items() if not r.passed}
        assert not bad, bad

    def test_batch_encoding_matches_single(self):
        enc = self._encoder(seed=9)
        ids = np.array([[4, 2, 7], [1, 1, 5]])
        batch, _ = enc.encode_batch(ids)
        for row, seq in zip(batch.data, ids):
            single, _ = encode_text(list(seq), enc)
            assert np.allclose(row, single.data, atol=1e-12)


class TestVisualEncoder:
    def _encoder(self, d=6, seed=0):
        return ConvVisualEncoder(in_channels=1, latent_dim=d,
                                 rng=np.random.default_rng(seed))

    def test_zero_grid_zero_bias_gives_zero_latent(self):
        enc = self._encoder()
        z = encode_visual(Tensor(np.zeros((12, 12, 1))), enc)
        assert np.allclose(z.data, 0.0, atol=0)

    def test_fixed_seed_fixed_grid_bitwise_identical(self):
        grid = Tensor(np.random.default_rng(5).normal(size=(12, 12, 1)))
        outs = [encode_visual(grid, self._encoder(seed=7)).data for _ in range(2)]
        assert np.array_equal(outs[0], outs[1])

    def test_shape_contract_16x16_d64(self):
        enc = self._encoder(d=64)
        z = encode_visual(Tensor(np.random.default_rng(0).normal(size=(16, 16, 1))), enc)
        assert z.shape == (64,)

    def test_latent_dim_independent_of_grid_size(self):
        enc = self._encoder(d=5)
        for size in (10, 12, 17):
            grid = Tensor(np.random.default_rng(size).normal(size=(size, size, 1)))
            assert encode_visual(grid, enc).shape == (5,)

    def test_grid_below_receptive_field_rejected(self):
        with pytest.raises(ShapeError):
            encode_visual(Tensor(np.zeros((2, 2, 1))), self._encoder())

    def test_gradients_through_conv_stack(self):
        enc = self._encoder(d=3, seed=13)
        grid = np.random.default_rng(3).normal(size=(2, 10, 10, 1))
        target = np.random.default_rng(4).normal(size=(2, 3))

        def loss():
            z = enc.encode_batch(Tensor(grid))
            return nc.squared_norm(nc.sub(z, Tensor(target)))

        reports = nc.grad_check_params(loss, enc.parameters(), h=1e-5, tol=1e-4)
        bad = {k: r for k, r in reports.items() if not r.passed}
        assert not bad, bad


def test_equal_latent_dims_across_encoders():
    rng = np.random.default_rng(0)
    text = RecurrentTextEncoder(10, 4, 3, latent_dim=8, rng=rng)
    visual = ConvVisualEncoder(1, latent_dim=8, rng=rng)
    z_t, _ = encode_text([1, 2], text)
    z_v = encode_visual(Tensor(np.zeros((12, 12, 1))), visual)
    assert z_t.shape == z_v.shape == (8,)
