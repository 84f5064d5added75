"""Membrane update, spike generation, and the surrogate gradient.

Closed-form values here were worked out by hand from the definitions
before being asserted, so they pin the implementation rather than echo it.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from delaysnn.errors import ContractError
from delaysnn.neuron import (
    DEFAULT_BETA,
    NeuronConfig,
    SurrogateConfig,
    alpha_from_decay_param,
    alpha_grad_wrt_decay_param,
    decay_param_for_tau,
    fast_sigmoid,
    fast_sigmoid_grad,
    lif_step,
    surrogate_grad,
    threshold,
)


# --- fast sigmoid ----------------------------------------------------------


def test_fast_sigmoid_hand_values():
    # s(0) = 0.5 for any slope
    assert fast_sigmoid(0.0) == 0.5
    assert fast_sigmoid(0.0, beta=0.3) == 0.5
    # beta*x = 1 -> 0.5 * (1 + 1/2) = 0.75
    assert fast_sigmoid(0.1, beta=10.0) == 0.75
    assert fast_sigmoid(-0.1, beta=10.0) == 0.25
    # saturates but never reaches the bounds
    assert 0.999 < fast_sigmoid(1e6) < 1.0
    assert 0.0 < fast_sigmoid(-1e6) < 0.001


def test_fast_sigmoid_grad_hand_values():
    # peak value beta/2 at the origin
    assert fast_sigmoid_grad(0.0, beta=10.0) == 5.0
    assert fast_sigmoid_grad(0.0, beta=4.0) == 2.0
    # beta*|x| = 1 -> beta / (2 * 2^2) = beta/8
    assert fast_sigmoid_grad(0.1, beta=10.0) == 1.25
    assert fast_sigmoid_grad(-0.1, beta=10.0) == 1.25


def test_fast_sigmoid_vectorised():
    x = np.array([-1.0, 0.0, 1.0])
    s = fast_sigmoid(x, beta=1.0)
    assert s.shape == (3,)
    assert np.allclose(s, [0.25, 0.5, 0.75])


@given(
    x=st.floats(-50.0, 50.0, allow_nan=False),
    beta=st.floats(0.1, 100.0, allow_nan=False),
)
def test_fast_sigmoid_bounds_and_symmetry(x, beta):
    s = fast_sigmoid(x, beta)
    assert 0.0 < s < 1.0
    assert abs(fast_sigmoid(-x, beta) + s - 1.0) < 1e-12


@given(
    x=st.floats(-50.0, 50.0, allow_nan=False),
    beta=st.floats(0.1, 100.0, allow_nan=False),
)
def test_fast_sigmoid_grad_positive_and_peaked(x, beta):
    g = fast_sigmoid_grad(x, beta)
    assert g > 0.0
    assert g <= beta / 2.0 + 1e-12


@settings(max_examples=200)
@given(
    x=st.floats(-5.0, 5.0, allow_nan=False).filter(lambda v: abs(v) > 1e-2),
    beta=st.floats(0.5, 20.0, allow_nan=False),
)
def test_fast_sigmoid_grad_matches_finite_difference(x, beta):
    # central FD away from the |x| kink at 0 (the analytic value there is
    # covered by the hand tests)
    h = 1e-6
    fd = (fast_sigmoid(x + h, beta) - fast_sigmoid(x - h, beta)) / (2 * h)
    g = fast_sigmoid_grad(x, beta)
    assert abs(g - fd) <= 1e-4 * max(abs(g), abs(fd), 1e-8)


# --- membrane update -------------------------------------------------------


def test_lif_step_hand_values():
    # u = u_prev * alpha * (1 - theta_prev) + I, on exactly representable numbers
    assert lif_step(1.5, 0.0, 0.25, 0.5) == 1.0
    # a spike on the previous step resets the carried membrane
    assert lif_step(1.5, 1.0, 0.25, 0.5) == 0.25
    # zero input leaves a pure decay
    assert lif_step(2.0, 0.0, 0.0, 0.75) == 1.5


def test_lif_step_broadcasts_alpha_per_neuron():
    u_prev = np.ones((2, 3))
    theta = np.zeros((2, 3))
    i_in = np.zeros((2, 3))
    alpha = np.array([0.25, 0.5, 0.75])
    u = lif_step(u_prev, theta, i_in, alpha)
    assert np.array_equal(u, np.tile(alpha, (2, 1)))


def test_lif_step_rejects_bad_arguments():
    with pytest.raises(ContractError):
        lif_step(np.zeros(3), np.zeros(2), np.zeros(3), 0.5)
    with pytest.raises(ContractError):
        lif_step(0.0, 0.0, 0.0, 1.0)
    with pytest.raises(ContractError):
        lif_step(0.0, 0.0, 0.0, 0.0)
    with pytest.raises(ContractError):
        lif_step(np.zeros(3), np.zeros(3), np.zeros(3), np.full(2, 0.5))


# --- spike generation ------------------------------------------------------


def test_threshold_is_inclusive():
    u = np.array([0.999999, 1.0, 1.000001, -5.0])
    assert np.array_equal(threshold(u, u_th=1.0), [0.0, 1.0, 1.0, 0.0])


def test_threshold_soft_mode_is_the_fast_sigmoid():
    u = np.linspace(-2, 3, 11)
    soft = threshold(u, u_th=1.0, mode="soft", beta=4.0)
    assert np.array_equal(soft, fast_sigmoid(u - 1.0, beta=4.0))


def test_threshold_unknown_mode():
    with pytest.raises(ContractError):
        threshold(np.zeros(2), mode="relu")


def test_surrogate_grad_peaks_at_threshold():
    assert surrogate_grad(1.0, u_th=1.0, beta=DEFAULT_BETA) == DEFAULT_BETA / 2
    # even around the threshold
    assert surrogate_grad(1.3, u_th=1.0, beta=6.0) == surrogate_grad(0.7, u_th=1.0, beta=6.0)
    with pytest.raises(ContractError):
        surrogate_grad(0.0, beta=0.0)


# --- trainable decay parameterisation --------------------------------------


@pytest.mark.parametrize("tau", [1.0, 3.0, 20.0, 50.0, 1000.0])
def test_decay_round_trip(tau):
    alpha = alpha_from_decay_param(decay_param_for_tau(tau))
    assert abs(alpha - np.exp(-1.0 / tau)) < 1e-12


def test_decay_param_zero_is_half():
    # alpha = 0.5 corresponds to tau = 1/ln 2
    assert abs(decay_param_for_tau(1.0 / np.log(2.0))) < 1e-12
    assert alpha_from_decay_param(0.0) == 0.5


def test_decay_param_rejects_nonpositive_tau():
    with pytest.raises(ContractError):
        decay_param_for_tau(0.0)
    with pytest.raises(ContractError):
        decay_param_for_tau(-3.0)


@given(p=st.floats(-30.0, 30.0, allow_nan=False))
def test_alpha_grad_matches_finite_difference(p):
    h = 1e-6
    fd = (alpha_from_decay_param(p + h) - alpha_from_decay_param(p - h)) / (2 * h)
    g = alpha_grad_wrt_decay_param(alpha_from_decay_param(p))
    assert abs(g - fd) <= 1e-6 * max(1.0, abs(g))


@given(p=st.floats(-700.0, 700.0, allow_nan=False))
def test_alpha_stays_in_unit_interval(p):
    # saturates to the closed bounds only in float underflow territory
    a = alpha_from_decay_param(p)
    assert 0.0 <= a <= 1.0


# --- config validation ------------------------------------------------------


def test_neuron_config_rejects_bad_values():
    with pytest.raises(ContractError):
        NeuronConfig(u_th=0.0)
    with pytest.raises(ContractError):
        NeuronConfig(tau_init=-1.0)
    NeuronConfig(u_th=0.5, tau_init=3.0)  # fine


def test_surrogate_config_rejects_bad_values():
    with pytest.raises(ContractError):
        SurrogateConfig(beta=0.0)
    with pytest.raises(ContractError):
        SurrogateConfig(mode="relu")
    assert SurrogateConfig(mode="soft").mode == "soft"
