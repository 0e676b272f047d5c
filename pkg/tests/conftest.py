import numpy as np
import pytest

from rlrrt.neuralnet import NeuralNet
from rlrrt.world import OccupancyGrid, parse_ascii_map

_ACCEPTANCE = {}


def record_criterion(number: int, passed: bool, detail: str) -> None:
    """Remember one acceptance result for the end-of-run summary."""
    _ACCEPTANCE[number] = (passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        passed, detail = _ACCEPTANCE[number]
        terminalreporter.write_line(f"C{number:<2} {'PASS' if passed else 'FAIL'}  {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def empty_grid():
    return OccupancyGrid.empty(20.0, 20.0, 0.1)


def walled_grid(width=20.0, height=20.0, res=0.1):
    """Empty map with a one-cell border."""
    g = OccupancyGrid.empty(width, height, res)
    cells = g.cells.copy()
    cells[0, :] = cells[-1, :] = cells[:, 0] = cells[:, -1] = True
    return OccupancyGrid(g.width_cells, g.height_cells, res, cells)


def wall_at_x(x_wall: float, width=12.0, height=6.0, res=0.1):
    """Empty map with a full-height wall occupying cells from ``x_wall`` onward."""
    g = OccupancyGrid.empty(width, height, res)
    cells = g.cells.copy()
    cells[:, int(round(x_wall / res)):] = True
    return OccupancyGrid(g.width_cells, g.height_cells, res, cells)


def sealed_room_grid():
    """10 x 6 m map split by a solid wall at x = 5 m."""
    rows = ["." * 100] * 60
    text = "width 100\nheight 60\nresolution 0.1\n" + "\n".join(r[:49] + "##" + r[51:] for r in rows) + "\n"
    return parse_ascii_map(text)


def random_net(dims, act="identity", seed=0, dropout=0.0):
    """Network with random biases too, so no unit sits exactly on a ReLU kink."""
    net = NeuralNet(dims, output_activation=act, dropout=dropout, seed=seed)
    rng = np.random.default_rng(seed + 1)
    for b in net.biases:
        b[...] = rng.normal(scale=0.5, size=b.shape)
    return net


def gradient_check_error(net, x, t, eps=1e-5, dropout_seed=None):
    """Relative error between backprop and central differences over all parameters.

    With ``dropout_seed`` every evaluation reuses the same dropout masks.
    """
    from rlrrt.neuralnet import l2_loss_grad

    def loss_and_grad():
        rng = None if dropout_seed is None else np.random.default_rng(dropout_seed)
        return l2_loss_grad(net, x, t, train_mode=dropout_seed is not None, rng=rng)

    _, grads = loss_and_grad()
    analytic, numeric = [], []
    for p, g in zip(net.params, grads):
        flat = p.reshape(-1)
        for k in range(flat.size):
            orig = flat[k]
            flat[k] = orig + eps
            up = loss_and_grad()[0]
            flat[k] = orig - eps
            down = loss_and_grad()[0]
            flat[k] = orig
            numeric.append((up - down) / (2 * eps))
            analytic.append(g.reshape(-1)[k])
    a, n = np.array(analytic), np.array(numeric)
    return float(np.linalg.norm(a - n) / max(np.linalg.norm(a) + np.linalg.norm(n), 1e-300))


class DistanceScorer:
    """Straight-line travel time at full speed; a cheap stand-in for a trained estimator."""

    robot_kind = "diff_drive"

    def __init__(self):
        self.calls = 0

    def __call__(self, nodes, x_rnd, rng):
        self.calls += 1
        return np.array([np.hypot(n.state.x - x_rnd[0], n.state.y - x_rnd[1]) for n in nodes])


# Desk-scale estimator shared by the planner, bench and acceptance suites.
ESTIMATOR_EPISODES = 1000
ESTIMATOR_EPOCHS = 20


@pytest.fixture(scope="session")
def training_dataset():
    """``(dataset, seconds)`` from scripted DWA rollouts on the training map."""
    import time

    from rlrrt.estimator import TTRConfig, collect_training_data
    from rlrrt.maps import load_builtin
    from rlrrt.policy import make_scripted_policy

    grid = load_builtin("training")
    policy = make_scripted_policy("dwa", "diff_drive")
    t0 = time.perf_counter()
    ds = collect_training_data(policy, grid, TTRConfig(n_episodes=ESTIMATOR_EPISODES), np.random.default_rng(0))
    return ds, time.perf_counter() - t0


@pytest.fixture(scope="session")
def trained_estimator(training_dataset):
    """``(estimator, report, seconds)`` for the full dataset."""
    import time

    from rlrrt.estimator import train_estimator
    from rlrrt.neuralnet import TrainConfig

    t0 = time.perf_counter()
    est, report = train_estimator(training_dataset[0], TrainConfig(epochs=ESTIMATOR_EPOCHS, seed=0))
    return est, report, time.perf_counter() - t0
