"""Dense feedforward networks on flat float64 parameter vectors, with exact reverse-mode gradients.

Flat layout: for every layer in order, the weight matrix (out x in, row-major) followed by its
bias vector. Hidden layers use the architecture's activation, the output layer is linear.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .dynamics import State

LOG_STD_MIN = -20.0
LOG_STD_MAX = 2.0
TANH_JITTER = 1e-6
OMEGA_SCALE = 20.0
OBSERVATION_SIZE = 6
ACTION_SIZE = 1

LayerParams = Tuple[np.ndarray, np.ndarray]


class Activation(Enum):
    RELU = 'relu'
    TANH = 'tanh'


class DimensionError(ValueError):
    """Raised when an input, parameter or gradient vector does not fit the architecture."""


@dataclass(frozen=True)
class MlpArchitecture:
    layer_sizes: Tuple[int, ...]
    activation: Activation = Activation.RELU

    def __post_init__(self) -> None:
        object.__setattr__(self, 'layer_sizes', tuple(int(size) for size in self.layer_sizes))
        if len(self.layer_sizes) < 2:
            raise ValueError('An architecture needs at least an input and an output layer.')
        if any(size <= 0 for size in self.layer_sizes):
            raise ValueError('Layer sizes must be positive integers.')
        if not isinstance(self.activation, Activation):
            object.__setattr__(self, 'activation', Activation(self.activation))

    @property
    def input_size(self) -> int:
        return self.layer_sizes[0]

    @property
    def output_size(self) -> int:
        return self.layer_sizes[-1]

    @property
    def param_count(self) -> int:
        return sum(n_out * n_in + n_out for n_in, n_out in zip(self.layer_sizes[:-1], self.layer_sizes[1:]))

    @property
    def final_layer_slice(self) -> slice:
        """Slice of the flat vector holding the output layer's weights and bias."""
        n_in, n_out = self.layer_sizes[-2:]
        return slice(self.param_count - (n_out * n_in + n_out), self.param_count)

    def to_dict(self) -> Dict:
        return {'layer_sizes': list(self.layer_sizes), 'activation': self.activation.value}

    @classmethod
    def from_dict(cls, data: Dict) -> 'MlpArchitecture':
        return cls(layer_sizes=tuple(data['layer_sizes']), activation=Activation(data['activation']))


def policy_architecture(hidden_sizes: Sequence[int], activation: Activation = Activation.RELU) -> MlpArchitecture:
    """Observation -> (mean, log_std) for a one-dimensional action."""
    return MlpArchitecture((OBSERVATION_SIZE, *hidden_sizes, 2 * ACTION_SIZE), activation)


def q_architecture(hidden_sizes: Sequence[int], activation: Activation = Activation.RELU) -> MlpArchitecture:
    """(observation, action) -> scalar Q value."""
    return MlpArchitecture((OBSERVATION_SIZE + ACTION_SIZE, *hidden_sizes, 1), activation)


def unflatten(arch: MlpArchitecture, params: np.ndarray) -> List[LayerParams]:
    """Split a flat vector into per-layer (weights, bias) views."""
    params = np.asarray(params, dtype=np.float64)
    if params.ndim != 1 or params.size != arch.param_count:
        raise DimensionError(f'Expected {arch.param_count} parameters, got shape {params.shape}.')

    layers = []
    offset = 0
    for n_in, n_out in zip(arch.layer_sizes[:-1], arch.layer_sizes[1:]):
        weights = params[offset:offset + n_out * n_in].reshape(n_out, n_in)
        offset += n_out * n_in
        bias = params[offset:offset + n_out]
        offset += n_out
        layers.append((weights, bias))
    return layers


def flatten(layers: Sequence[LayerParams]) -> np.ndarray:
    parts = []
    for weights, bias in layers:
        parts.append(np.ravel(weights))
        parts.append(np.ravel(bias))
    return np.concatenate(parts).astype(np.float64)


def init_params(arch: MlpArchitecture, rng: np.random.Generator) -> np.ndarray:
    """Uniform fan-in initialization, U(-1/sqrt(n_in), 1/sqrt(n_in)) for weights and biases."""
    layers = []
    for n_in, n_out in zip(arch.layer_sizes[:-1], arch.layer_sizes[1:]):
        bound = 1.0 / np.sqrt(n_in)
        weights = rng.uniform(-bound, bound, size=(n_out, n_in))
        bias = rng.uniform(-bound, bound, size=n_out)
        layers.append((weights, bias))
    return flatten(layers)


def _activate(z: np.ndarray, activation: Activation) -> np.ndarray:
    if activation == Activation.RELU:
        return np.maximum(z, 0.0)
    return np.tanh(z)


def _activation_grad(z: np.ndarray, h: np.ndarray, activation: Activation) -> np.ndarray:
    if activation == Activation.RELU:
        return (z > 0.0).astype(np.float64)
    return 1.0 - h ** 2


def _as_batch(arch: MlpArchitecture, inputs: np.ndarray) -> Tuple[np.ndarray, bool]:
    x = np.asarray(inputs, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[np.newaxis, :]
    if x.ndim != 2 or x.shape[1] != arch.input_size:
        raise DimensionError(f'Expected input of size {arch.input_size}, got shape {np.shape(inputs)}.')
    return x, single


def _forward_cache(arch: MlpArchitecture, layers: List[LayerParams], x: np.ndarray):
    pre_activations = []
    activations = [x]
    h = x
    last = len(layers) - 1
    for index, (weights, bias) in enumerate(layers):
        z = h @ weights.T + bias
        pre_activations.append(z)
        h = z if index == last else _activate(z, arch.activation)
        activations.append(h)
    return pre_activations, activations


def forward(arch: MlpArchitecture, params: np.ndarray, inputs: np.ndarray) -> np.ndarray:
    """Network output for a single input vector or a (batch, input) matrix."""
    x, single = _as_batch(arch, inputs)
    _, activations = _forward_cache(arch, unflatten(arch, params), x)
    output = activations[-1]
    return output[0] if single else output


def backward(
    arch: MlpArchitecture,
    params: np.ndarray,
    inputs: np.ndarray,
    upstream: np.ndarray,
) -> Tuple[np.ndarray, np.ndarray]:
    """Gradient of sum(upstream * forward(inputs)) with respect to the parameters and the inputs.

    For a batch, the parameter gradient is summed over rows and the input gradient keeps one row
    per input.
    """
    layers = unflatten(arch, params)
    x, single = _as_batch(arch, inputs)
    grad_out = np.asarray(upstream, dtype=np.float64)
    if single:
        grad_out = grad_out[np.newaxis, :]
    if grad_out.shape != (x.shape[0], arch.output_size):
        raise DimensionError(f'Upstream gradient shape {np.shape(upstream)} does not match the output.')

    pre_activations, activations = _forward_cache(arch, layers, x)
    grads: List[LayerParams] = [None] * len(layers)
    delta = grad_out
    for index in range(len(layers) - 1, -1, -1):
        weights, _ = layers[index]
        grads[index] = (delta.T @ activations[index], delta.sum(axis=0))
        delta = delta @ weights
        if index > 0:
            delta = delta * _activation_grad(pre_activations[index - 1], activations[index], arch.activation)

    input_grad = delta[0] if single else delta
    return flatten(grads), input_grad


def featurize(state: Union[State, np.ndarray]) -> np.ndarray:
    """(cos t1, sin t1, cos t2, sin t2, w1/20, w2/20) for one state or an (n, 4) array of states."""
    x = state.as_array() if isinstance(state, State) else np.asarray(state, dtype=np.float64)
    theta1, theta2, omega1, omega2 = x[..., 0], x[..., 1], x[..., 2], x[..., 3]
    return np.stack([
        np.cos(theta1), np.sin(theta1), np.cos(theta2), np.sin(theta2),
        omega1 / OMEGA_SCALE, omega2 / OMEGA_SCALE,
    ], axis=-1)


@dataclass(frozen=True)
class GaussianHead:
    mean: np.ndarray
    log_std: np.ndarray

    def __post_init__(self) -> None:
        mean = np.asarray(self.mean, dtype=np.float64)
        log_std = np.clip(np.asarray(self.log_std, dtype=np.float64), LOG_STD_MIN, LOG_STD_MAX)
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(log_std))):
            raise ValueError('Gaussian head must be finite.')
        object.__setattr__(self, 'mean', mean)
        object.__setattr__(self, 'log_std', log_std)

    @property
    def std(self) -> np.ndarray:
        return np.exp(self.log_std)


def gaussian_head(output: np.ndarray) -> GaussianHead:
    """Split a policy network output (last axis = [means, log_stds]) into a clamped head."""
    output = np.asarray(output, dtype=np.float64)
    half = output.shape[-1] // 2
    return GaussianHead(mean=output[..., :half], log_std=output[..., half:])


def log_std_clamped(output: np.ndarray) -> np.ndarray:
    """Mask of raw log_std outputs that the clamp cut off (their gradient is zero)."""
    half = output.shape[-1] // 2
    raw = output[..., half:]
    return (raw < LOG_STD_MIN) | (raw > LOG_STD_MAX)


def sample_squashed(
    head: GaussianHead,
    rng: Optional[np.random.Generator],
    noise: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Draw u ~ N(mean, std^2), squash with tanh and return (u, action, log_prob).

    log_prob is summed over the action dimensions and includes the tanh change-of-variables
    correction. Pass noise to fix the standard-normal draw (reparameterization).
    """
    if noise is None:
        noise = rng.standard_normal(np.shape(head.mean))
    noise = np.asarray(noise, dtype=np.float64)
    u = head.mean + head.std * noise
    action = np.tanh(u)
    gaussian = -0.5 * noise ** 2 - head.log_std - 0.5 * np.log(2.0 * np.pi)
    correction = np.log(1.0 - action ** 2 + TANH_JITTER)
    log_prob = np.sum(gaussian - correction, axis=-1)
    return u, action, log_prob


class Network:
    """An architecture paired with its (mutable, single-owner) flat parameter vector."""

    def __init__(self, arch: MlpArchitecture, params: np.ndarray):
        self.arch = arch
        self.params = np.array(params, dtype=np.float64)
        if self.params.size != arch.param_count:
            raise DimensionError(f'Expected {arch.param_count} parameters, got {self.params.size}.')

    def __call__(self, inputs: np.ndarray) -> np.ndarray:
        return forward(self.arch, self.params, inputs)

    def backward(self, inputs: np.ndarray, upstream: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return backward(self.arch, self.params, inputs, upstream)

    def copy(self) -> 'Network':
        return Network(self.arch, self.params.copy())
