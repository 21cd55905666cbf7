import json

import numpy as np
import pytest

from robust_bayes.distributions import RngStream
from robust_bayes.errors import ConfigError
from robust_bayes.gibbs import run_chain
from robust_bayes.io import (
    dataset_hash,
    load_dataset,
    read_dataset_csv,
    read_truth_json,
    save_dataset,
    write_dataset_csv,
    write_draws_csv,
    write_summary_json,
    write_truth_json,
)
from robust_bayes.model import GibbsConfig, PriorHyperparams
from robust_bayes.simulate import SimDesign, generate_dataset


@pytest.fixture(scope="module")
def data():
    return generate_dataset(SimDesign(60, 0.2, RngStream(1, 2)))


def test_csv_round_trip_is_bit_exact(data, tmp_path):
    path = write_dataset_csv(data, tmp_path / "d.csv")
    assert path.read_text().splitlines()[0] == "y," + ",".join(f"x{j}" for j in range(1, 13))
    back = read_dataset_csv(path)
    assert np.array_equal(back.X, data.X) and np.array_equal(back.Y, data.Y)
    assert not back.has_truth


def test_csv_header_checks(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("x1,y\n1,2\n3,4\n5,6\n")
    with pytest.raises(ConfigError):
        read_dataset_csv(bad)
    bad.write_text("y,x2\n1,2\n3,4\n5,6\n")
    with pytest.raises(ConfigError):
        read_dataset_csv(bad)


def test_npz_keeps_truth(data, tmp_path):
    back = load_dataset(save_dataset(data, tmp_path / "d.npz"))
    assert np.array_equal(back.beta0, data.beta0)
    assert np.array_equal(back.T0, data.T0)
    assert back.theta0 == data.theta0


def test_truth_json(data, tmp_path):
    beta0, theta0, T0 = read_truth_json(write_truth_json(data, tmp_path / "t.json"))
    assert np.array_equal(beta0, data.beta0)
    assert theta0 == data.theta0 and T0 == data.T0.tolist()


def test_hash_tracks_content(data):
    assert dataset_hash(data) == dataset_hash(generate_dataset(SimDesign(60, 0.2, RngStream(1, 2))))
    assert dataset_hash(data) != dataset_hash(generate_dataset(SimDesign(60, 0.2, RngStream(1, 3))))
    assert len(dataset_hash(data)) == 24


def test_draws_and_summary(data, tmp_path):
    draws = run_chain(data, PriorHyperparams.scaled(60, 0.2),
                      GibbsConfig(iterations=40, burn_in=20, thin=2, stream=RngStream(3)))
    path = write_draws_csv(draws, tmp_path / "draws.csv")
    table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    assert table.shape == (10, 5 + 2 * data.p)
    assert np.array_equal(table[:, 5:5 + data.p], draws.beta)
    assert np.array_equal(table[:, 1], draws.theta2)
    doc = json.loads(write_summary_json(draws, tmp_path / "s.json", {"seed": 3}).read_text())
    assert doc["seed"] == 3 and np.allclose(doc["beta_mean"], draws.beta_mean)
