"""Tests for the Q-network."""

import numpy as np
import pytest
from scipy import stats

from src.deepq_fuzz.errors import NonFiniteError, ShapeError, WeightFormatError
from src.deepq_fuzz.models import Activation, NetworkConfig
from src.deepq_fuzz.qnet import (
    Network,
    forward,
    hidden_size_for,
    init_network,
    load_weights,
    loss_gradients,
    save_weights,
    train_step,
)
from src.deepq_fuzz.qnet.activations import activate, activate_grad


def small_network(rng, activation=Activation.TANH, dims=(4, 5, 5, 3)) -> Network:
    """A network below the configurable hidden sizes, for exact gradient checks."""
    return Network(
        weights=[rng.normal(0, 0.5, size=(a, b)) for a, b in zip(dims[:-1], dims[1:])],
        biases=[rng.normal(0, 0.5, size=b) for b in dims[1:]],
        activation=activation,
    )


def zero_network(dims=(4, 6, 6, 3)) -> Network:
    return Network(
        weights=[np.zeros((a, b)) for a, b in zip(dims[:-1], dims[1:])],
        biases=[np.zeros(b) for b in dims[1:]],
    )


def numeric_gradient(net, params, index, state, action, target, eps=1e-6):
    """Central difference of the squared loss with respect to one parameter."""
    original = params[index]
    params[index] = original + eps
    plus = (target - forward(net, state)[action]) ** 2
    params[index] = original - eps
    minus = (target - forward(net, state)[action]) ** 2
    params[index] = original
    return (plus - minus) / (2 * eps)


class TestShape:
    """Tests for network construction."""

    @pytest.mark.parametrize("width,hidden", [(8, 64), (32, 64), (50, 100), (200, 180)])
    def test_hidden_size(self, width, hidden):
        """Test that hidden layers are twice the input, clamped to [64, 180]."""
        assert hidden_size_for(width) == hidden

    def test_init_shapes_and_range(self, rng):
        """Test initial shapes and that every parameter lies in [0, max]."""
        config = NetworkConfig(input_dim=32, hidden_dims=(64, 64), output_dim=8)
        net = init_network(config, rng)
        assert [w.shape for w in net.weights] == [(32, 64), (64, 64), (64, 8)]
        assert net.hidden_dims == (64, 64)
        for array in (*net.weights, *net.biases):
            assert array.min() >= 0.0
            assert array.max() <= 0.1

    def test_init_is_uniform(self, rng):
        """Test the pooled initial weights against a uniform distribution."""
        config = NetworkConfig(
            input_dim=32, hidden_dims=(64, 64), output_dim=8, weight_init_max=0.5
        )
        net = init_network(config, rng)
        pooled = np.concatenate([w.ravel() for w in net.weights]) / 0.5
        assert stats.kstest(pooled, "uniform").pvalue > 1e-3

    def test_hidden_size_bounds(self):
        """Test that hidden sizes outside [64, 180] are rejected."""
        with pytest.raises(ValueError):
            NetworkConfig(input_dim=8, hidden_dims=(32, 64), output_dim=8)

    def test_layers_must_chain(self):
        """Test that mismatched layer dimensions are rejected."""
        with pytest.raises(WeightFormatError, match="layer 1"):
            Network(
                weights=[np.zeros((4, 5)), np.zeros((6, 5)), np.zeros((5, 3))],
                biases=[np.zeros(5), np.zeros(5), np.zeros(3)],
            )

    def test_layer_count(self):
        """Test that a network needs exactly three weight layers."""
        with pytest.raises(WeightFormatError):
            Network(weights=[np.zeros((4, 3))], biases=[np.zeros(3)])


class TestForward:
    """Tests for the forward pass."""

    def test_output_per_action(self, rng):
        """Test that one pass yields one Q-value per action."""
        assert forward(small_network(rng), np.ones(4)).shape == (3,)

    def test_wrong_state_length(self, rng):
        """Test that a state of the wrong length is rejected."""
        with pytest.raises(ShapeError):
            forward(small_network(rng), np.ones(5))

    def test_zero_network(self):
        """Test that an all-zero network outputs zero for every action."""
        np.testing.assert_array_equal(forward(zero_network(), np.ones(4)), np.zeros(3))


class TestGradients:
    """Tests for the loss gradient."""

    @pytest.mark.parametrize("activation", list(Activation))
    def test_matches_finite_differences(self, rng, activation):
        """Test the analytic gradient against central differences."""
        net = small_network(rng, activation)
        state = rng.uniform(0.1, 1.0, size=4)
        action, target = 1, 0.7
        _, grad_w, grad_b = loss_gradients(net, state, action, target)
        for params, grads in ((net.weights, grad_w), (net.biases, grad_b)):
            for layer, grad in zip(params, grads):
                numeric = np.zeros_like(layer)
                for index in np.ndindex(layer.shape):
                    numeric[index] = numeric_gradient(net, layer, index, state, action, target)
                np.testing.assert_allclose(grad, numeric, rtol=1e-4, atol=1e-6)

    def test_other_actions_get_no_gradient(self, rng):
        """Test that only the chosen action's output column is updated."""
        net = small_network(rng)
        _, grad_w, grad_b = loss_gradients(net, np.ones(4), 2, 5.0)
        np.testing.assert_array_equal(grad_w[-1][:, :2], 0.0)
        np.testing.assert_array_equal(grad_b[-1][:2], 0.0)
        assert np.any(grad_w[-1][:, 2] != 0.0)

    def test_loss_value(self, rng):
        """Test that the loss is the squared TD error."""
        net = small_network(rng)
        state = np.ones(4)
        q = forward(net, state)[0]
        loss, _, _ = loss_gradients(net, state, 0, q + 3.0)
        assert loss == pytest.approx(9.0)

    def test_action_out_of_range(self, rng):
        """Test that an unknown action index is rejected."""
        with pytest.raises(ShapeError):
            loss_gradients(small_network(rng), np.ones(4), 3, 0.0)


class TestTrainStep:
    """Tests for online training."""

    def test_moves_toward_target(self, rng):
        """Test that one small step reduces the loss and moves Q toward the target."""
        net = small_network(rng)
        state = rng.uniform(size=4)
        before = forward(net, state)[1]
        loss_before = train_step(net, state, 1, before + 1.0, learning_rate=1e-3)
        after = forward(net, state)[1]
        assert before < after < before + 1.0
        assert (before + 1.0 - after) ** 2 < loss_before
        assert net.steps == 1

    def test_zero_network_updates_output_bias_only(self):
        """Test the exact step on an all-zero network."""
        net = zero_network()
        train_step(net, np.ones(4), 1, 1.0, learning_rate=0.5)
        np.testing.assert_array_equal(net.biases[-1], [0.0, 0.5, 0.0])
        for array in (*net.weights, *net.biases[:-1]):
            np.testing.assert_array_equal(array, 0.0)

    def test_non_finite_target(self, rng):
        """Test that a NaN target raises and leaves the network unchanged."""
        net = small_network(rng)
        pristine = net.copy()
        with pytest.raises(NonFiniteError) as exc_info:
            train_step(net, np.ones(4), 0, float("nan"))
        assert exc_info.value.snapshot["action_index"] == 0
        assert net.equals(pristine)

    def test_diverging_update(self, rng):
        """Test that an update overflowing to Inf is refused."""
        net = small_network(rng)
        pristine = net.copy()
        with pytest.raises(NonFiniteError):
            train_step(net, np.ones(4), 0, 1e300, learning_rate=1e10)
        assert net.equals(pristine)
        assert net.steps == 0

    def test_loss_never_increases_on_default_network(self, rng):
        """Test 100 steps at the default learning rate toward one fixed target."""
        config = NetworkConfig(input_dim=32, hidden_dims=(64, 64), output_dim=8)
        net = init_network(config, rng)
        state = rng.uniform(size=32)
        losses = [train_step(net, state, 3, 1.0) for _ in range(100)]
        assert all(later <= earlier + 1e-12 for earlier, later in zip(losses, losses[1:]))
        assert losses[-1] < losses[0]

    def test_same_seed_same_trajectory(self):
        """Test that equal seeds give identical weights after every step."""
        config = NetworkConfig(input_dim=8, hidden_dims=(64, 64), output_dim=4)
        nets = [init_network(config, np.random.default_rng(5)) for _ in range(2)]
        data = np.random.default_rng(6)
        for _ in range(50):
            state, action, target = data.uniform(size=8), int(data.integers(4)), data.normal()
            for net in nets:
                train_step(net, state, action, target)
            assert nets[0].equals(nets[1])


class TestWeightsFile:
    """Tests for saving and loading weights."""

    def test_round_trip(self, rng, tmp_path):
        """Test that loaded weights are bit-identical to the saved ones."""
        net = small_network(rng, Activation.SOFTSIGN)
        net.learning_rate = 0.005
        path = tmp_path / "weights.npz"
        save_weights(net, path)
        loaded = load_weights(path)
        assert loaded.equals(net)
        assert loaded.activation is Activation.SOFTSIGN

    def test_loaded_network_gives_same_q_values(self, rng, tmp_path):
        """Test that a reloaded network computes identical outputs on 100 states."""
        config = NetworkConfig(input_dim=16, hidden_dims=(64, 64), output_dim=8)
        net = init_network(config, rng)
        for _ in range(20):
            train_step(net, rng.uniform(size=16), int(rng.integers(8)), 1.0)
        path = tmp_path / "weights.npz"
        save_weights(net, path)
        loaded = load_weights(path)
        for state in rng.uniform(size=(100, 16)):
            np.testing.assert_array_equal(forward(loaded, state), forward(net, state))

    def test_truncated_file(self, rng, tmp_path):
        """Test that a truncated archive is reported as a format error."""
        path = tmp_path / "weights.npz"
        save_weights(small_network(rng), path)
        path.write_bytes(path.read_bytes()[:100])
        with pytest.raises(WeightFormatError):
            load_weights(path)

    def test_missing_layer(self, tmp_path):
        """Test that a missing layer array is named in the error."""
        path = tmp_path / "partial.npz"
        arrays = {f"W{i}": np.zeros((2, 2)) for i in range(2)}
        arrays |= {f"b{i}": np.zeros(2) for i in range(3)}
        np.savez(path, **arrays)
        with pytest.raises(WeightFormatError, match="layer 2"):
            load_weights(path)

    def test_missing_file(self, tmp_path):
        """Test that a missing file is not disguised as a format error."""
        with pytest.raises(FileNotFoundError):
            load_weights(tmp_path / "absent.npz")


class TestActivations:
    """Tests for activation functions."""

    def test_known_values(self):
        """Test a few exact activation values."""
        z = np.array([0.0])
        assert activate(Activation.SIGMOID, z)[0] == 0.5
        assert activate(Activation.SOFTSIGN, np.array([1.0]))[0] == 0.5
        assert activate(Activation.RELU, np.array([-2.0]))[0] == 0.0
        assert activate(Activation.ELU, np.array([-1.0]))[0] == pytest.approx(np.exp(-1) - 1)

    def test_softplus_is_stable(self):
        """Test that softplus does not overflow for large inputs."""
        assert activate(Activation.SOFTPLUS, np.array([1000.0]))[0] == pytest.approx(1000.0)
        assert activate_grad(Activation.SOFTPLUS, np.array([1000.0]))[0] == pytest.approx(1.0)
