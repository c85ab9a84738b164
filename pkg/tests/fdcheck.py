"""Shared finite-difference gradient-check helpers for the test suite."""

import math

import numpy as np

from refreshrl.net import PARAM_ORDER, init_params


def finite_difference(loss_fn, params, delta=1e-6):
    """Central-difference gradient of loss_fn(params) over every coordinate."""
    grads = {}
    for name in PARAM_ORDER:
        arr = params.arrays[name]
        g = np.zeros_like(arr)
        flat = arr.ravel()
        gflat = g.ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + delta
            up = loss_fn(params)
            flat[i] = orig - delta
            down = loss_fn(params)
            flat[i] = orig
            gflat[i] = (up - down) / (2 * delta)
        grads[name] = g
    return grads


def rel_error(a, b):
    num = math.sqrt(sum(float(np.sum((a[k] - b[k]) ** 2)) for k in PARAM_ORDER))
    den = max(math.sqrt(sum(float(np.sum(b[k] ** 2)) for k in PARAM_ORDER)), 1e-12)
    return num / den


def draw_net_and_batch(rng, in_dim=4, n_actions=3, hidden=(7, 5), max_batch=6,
                       kink_margin=1e-4):
    """Random small net plus batch whose ReLU pre-activations avoid the kink.

    Central differences are invalid within ``delta`` of a ReLU corner, so
    draws that land a pre-activation inside the margin are rejected.
    """
    while True:
        params = init_params(in_dim, n_actions, hidden=hidden, seed=int(rng.integers(2**31)))
        for name in ("b1", "b2", "bp", "bv"):
            arr = params.arrays[name]
            arr += rng.normal(scale=0.1, size=arr.shape)
        n = int(rng.integers(1, max_batch))
        states = rng.normal(size=(n, in_dim))
        a = params.arrays
        z1 = states @ a["w1"] + a["b1"]
        z2 = np.maximum(z1, 0.0) @ a["w2"] + a["b2"]
        if min(np.abs(z1).min(), np.abs(z2).min()) > kink_margin:
            actions = rng.integers(0, n_actions, size=n)
            targets = rng.normal(size=n)
            return params, states, actions, targets
