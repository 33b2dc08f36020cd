"""Bidirectional LSTM that scores every sequence position as the denotation.

Per token the input is the trainable embedding, optionally a fixed pretrained
word vector and optionally the positional one-hot. A forward and a backward
LSTM read the sequence; a linear map of their concatenated states gives one
logit per position and a softmax over positions yields the probabilities.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .encoding import EncodedSequence, Vocabulary, pretrained_matrix

EMBEDDING_DIM = 8
HIDDEN = 8
INIT_SCALE = 0.08
LOG_FLOOR = 1e-12


def sigmoid(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * x))


@dataclass
class ModelFlags:
    use_positional_features: bool = True
    use_pretrained: bool = False


class NeuralModel:
    def __init__(
        self,
        vocab: Vocabulary,
        flags: ModelFlags | None = None,
        pretrained: dict[str, np.ndarray] | None = None,
        seed: int = 0,
        embedding_dim: int = EMBEDDING_DIM,
        hidden: int = HIDDEN,
    ):
        self.vocab = vocab
        self.flags = flags or ModelFlags()
        if self.flags.use_pretrained and not pretrained:
            raise ValueError("use_pretrained requires a pretrained vector table")
        self.pretrained = pretrained if self.flags.use_pretrained else None
        self.pretrained_dim = (
            len(next(iter(self.pretrained.values()))) if self.pretrained else 0
        )
        self.embedding_dim = embedding_dim
        self.hidden = hidden

        rng = np.random.default_rng(seed)
        d_in = self.input_dim
        H = hidden

        def uniform(*shape):
            return rng.uniform(-INIT_SCALE, INIT_SCALE, size=shape)

        self.params: dict[str, np.ndarray] = {"embeddings": uniform(len(vocab), embedding_dim)}
        for side in ("fw", "bw"):
            b = np.zeros(4 * H)
            b[H : 2 * H] = 1.0  # forget gate
            self.params[f"W_{side}"] = uniform(4 * H, d_in)
            self.params[f"U_{side}"] = uniform(4 * H, H)
            self.params[f"b_{side}"] = b
        # a scalar output bias would cancel in the softmax, so there is none
        self.params["w_out"] = uniform(2 * H)

    @property
    def input_dim(self) -> int:
        d = self.embedding_dim + self.pretrained_dim
        if self.flags.use_positional_features:
            d += self.vocab.positional_width
        return d

    def inputs(self, seq: EncodedSequence) -> np.ndarray:
        parts = [self.params["embeddings"][seq.token_indices]]
        if self.pretrained is not None:
            parts.append(pretrained_matrix(seq.words, self.pretrained, self.pretrained_dim))
        if self.flags.use_positional_features:
            parts.append(seq.positional_features)
        return np.concatenate(parts, axis=1)

    def _lstm(self, X: np.ndarray, side: str):
        W, U, b = self.params[f"W_{side}"], self.params[f"U_{side}"], self.params[f"b_{side}"]
        H = self.hidden
        T = X.shape[0]
        h = np.zeros(H)
        c = np.zeros(H)
        cache = []
        hs = np.zeros((T, H))
        for t in range(T):
            z = W @ X[t] + U @ h + b
            i, f = sigmoid(z[:H]), sigmoid(z[H : 2 * H])
            g, o = np.tanh(z[2 * H : 3 * H]), sigmoid(z[3 * H :])
            c_new = f * c + i * g
            tc = np.tanh(c_new)
            h_new = o * tc
            cache.append((X[t], h, c, i, f, g, o, tc))
            h, c = h_new, c_new
            hs[t] = h
        return hs, cache

    def _forward_full(self, seq: EncodedSequence):
        if len(seq) == 0:
            raise ValueError("cannot score an empty sequence")
        X = self.inputs(seq)
        hf, cache_f = self._lstm(X, "fw")
        hb_rev, cache_b = self._lstm(X[::-1], "bw")
        hb = hb_rev[::-1]
        Hc = np.concatenate([hf, hb], axis=1)
        logits = Hc @ self.params["w_out"]
        shifted = logits - logits.max()
        e = np.exp(shifted)
        d = e / e.sum()
        return d, (X, Hc, cache_f, cache_b)

    def forward(self, seq: EncodedSequence) -> np.ndarray:
        return self._forward_full(seq)[0]

    def logits(self, seq: EncodedSequence) -> np.ndarray:
        _, (_, Hc, _, _) = self._forward_full(seq)
        return Hc @ self.params["w_out"]

    def _lstm_backward(self, dhs: np.ndarray, cache, side: str):
        W, U = self.params[f"W_{side}"], self.params[f"U_{side}"]
        H = self.hidden
        dW = np.zeros_like(W)
        dU = np.zeros_like(U)
        db = np.zeros(4 * H)
        dX = np.zeros((len(cache), W.shape[1]))
        dh_next = np.zeros(H)
        dc_next = np.zeros(H)
        for t in reversed(range(len(cache))):
            x, h_prev, c_prev, i, f, g, o, tc = cache[t]
            dh = dhs[t] + dh_next
            do = dh * tc
            dc = dh * o * (1.0 - tc * tc) + dc_next
            dz = np.concatenate(
                [dc * g * i * (1 - i), dc * c_prev * f * (1 - f), dc * i * (1 - g * g), do * o * (1 - o)]
            )
            dW += np.outer(dz, x)
            dU += np.outer(dz, h_prev)
            db += dz
            dX[t] = W.T @ dz
            dh_next = U.T @ dz
            dc_next = dc * f
        return dW, dU, db, dX

    def loss_and_gradients(self, seq: EncodedSequence, gold_position: int | None = None):
        gold = seq.gold_position if gold_position is None else gold_position
        if gold is None:
            raise ValueError("sequence has no gold position")
        d, (X, Hc, cache_f, cache_b) = self._forward_full(seq)
        value = loss(d, gold)
        H = self.hidden
        dlogits = d.copy()
        dlogits[gold] -= 1.0
        grads = {"w_out": Hc.T @ dlogits}
        dHc = np.outer(dlogits, self.params["w_out"])
        dWf, dUf, dbf, dXf = self._lstm_backward(dHc[:, :H], cache_f, "fw")
        dWb, dUb, dbb, dXb_rev = self._lstm_backward(dHc[::-1, H:], cache_b, "bw")
        grads.update(W_fw=dWf, U_fw=dUf, b_fw=dbf, W_bw=dWb, U_bw=dUb, b_bw=dbb)
        dX = dXf + dXb_rev[::-1]
        dE = np.zeros_like(self.params["embeddings"])
        np.add.at(dE, seq.token_indices, dX[:, : self.embedding_dim])
        grads["embeddings"] = dE
        return value, grads

    def backward(self, seq: EncodedSequence, gold_position: int | None = None) -> dict[str, np.ndarray]:
        return self.loss_and_gradients(seq, gold_position)[1]

    def predict(self, seq: EncodedSequence) -> tuple[int, str | None]:
        return predict_position(self.forward(seq), seq.answer_entity_mask, seq.entity_ids)


def loss(d: np.ndarray, gold_position: int) -> float:
    """Cross-entropy against the one-hot gold position."""
    return float(-np.log(max(float(d[gold_position]), LOG_FLOOR)))


def predict_position(d: np.ndarray, mask: np.ndarray, entity_ids=None) -> tuple[int, str | None]:
    """Masked argmax, leftmost on ties."""
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise ValueError("no answer-hint entity to choose from")
    masked = np.where(mask, d, -np.inf)
    pos = int(np.argmax(masked))
    return pos, (entity_ids[pos] if entity_ids is not None else None)
