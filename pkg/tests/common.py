"""Small fixtures shared by the test modules."""
import numpy as np

from vision_state_fusion.nets.builder import make_arch
from vision_state_fusion.scene.dataset import Dataset


def tiny_arch(input_shape=(1, 8, 8), outputs=4, batchnorm=True,
              maxpool=True, id='tiny'):
    layers = [dict(kind='conv', out_ch=3, k=3, stride=2, pad=1)]
    if batchnorm:
        layers.append(dict(kind='batchnorm'))
    layers.append(dict(kind='relu'))
    if maxpool:
        layers.append(dict(kind='maxpool', k=2))
    layers += [dict(kind='flatten'), dict(kind='fc', units=outputs)]
    return make_arch(id, input_shape, layers, outputs=outputs)


def random_dataset(n=32, height=8, width=8, state_dim=1, label_dim=4,
                   n_groups=3, seed=0) -> Dataset:
    """Random images whose labels depend on the image mean and the state."""
    rng = np.random.default_rng(seed)
    images = rng.integers(0, 256, size=(n, height, width), dtype=np.uint8)
    states = rng.uniform(-0.3, 0.3, size=(n, state_dim))
    brightness = images.reshape(n, -1).mean(axis=1) / 255.
    labels = np.stack(
        [brightness + i * states[:, 0] for i in range(label_dim)], axis=1)
    group_ids = np.arange(n) % n_groups
    return Dataset(images, states, labels, group_ids, n_groups)


def numerical_gradient(f, x: np.ndarray, eps: float = 1e-6) -> np.ndarray:
    """Central differences of the scalar function f() w.r.t. x (in place)."""
    grad = np.zeros_like(x)
    it = np.nditer(x, flags=['multi_index'])
    for _ in it:
        i = it.multi_index
        saved = x[i]
        x[i] = saved + eps
        f_plus = f()
        x[i] = saved - eps
        f_minus = f()
        x[i] = saved
        grad[i] = (f_plus - f_minus) / (2. * eps)
    return grad


def relative_error(a: np.ndarray, b: np.ndarray) -> float:
    a, b = np.ravel(a), np.ravel(b)
    denom = max(np.linalg.norm(a) + np.linalg.norm(b), 1e-12)
    return float(np.linalg.norm(a - b) / denom)
