"""Config parsing and delimited-table round trips."""

import numpy as np
import pytest

from fsnn.dynsys import IntegrationConfig, Trajectory
from fsnn.ground_truth import GroundTruthParams, generate_training_data
from fsnn.io import (
    InputError,
    RunConfig,
    read_link_table,
    read_trajectory,
    write_link_table,
    write_manifest,
    write_trajectory,
)
from fsnn.linkscores import link_profile
from fsnn.model import GeneratedModel


class TestRunConfig:
    def test_defaults_round_trip(self):
        cfg = RunConfig()
        assert RunConfig.parse(cfg.emit()) == cfg

    def test_overrides_round_trip(self):
        cfg = RunConfig(dt=0.125, budget=500, mask="110;011;101",
                        optimizer="fd-descent")
        assert RunConfig.parse(cfg.emit()) == cfg

    def test_comments_and_blank_lines(self):
        cfg = RunConfig.parse("# a comment\n\ndt = 0.5  # trailing\n")
        assert cfg.dt == 0.5

    def test_unknown_key_rejected(self):
        with pytest.raises(InputError, match="unknown key"):
            RunConfig.parse("no_such_option = 1\n")

    def test_duplicate_key_rejected(self):
        with pytest.raises(InputError, match="duplicate"):
            RunConfig.parse("dt = 0.5\ndt = 0.25\n")

    def test_bad_value_rejected(self):
        with pytest.raises(InputError, match="bad value"):
            RunConfig.parse("budget = lots\n")

    def test_missing_equals_rejected(self):
        with pytest.raises(InputError, match="key = value"):
            RunConfig.parse("just words\n")

    def test_typed_views(self):
        cfg = RunConfig()
        assert cfg.ground_truth_params() == GroundTruthParams()
        inits = cfg.initialization_list()
        np.testing.assert_array_equal(inits[0], [29.0, 96.0, 4.0])
        np.testing.assert_array_equal(inits[1], [22.0, 11.0, 78.0])
        assert cfg.integration_config() == IntegrationConfig()
        assert cfg.architecture(3).hidden_layers == ((8, 6, 4),) * 3
        assert tuple(cfg.adjacency_mask(3).sources_for(0)) == (0, 1, 2)
        assert tuple(cfg.scaling(3).magnitudes) == (100.0, 100.0, 100.0)
        assert cfg.sum_range_pair() == (30.0, 150.0)
        assert cfg.training_config().weight_decay == cfg.weight_decay

    def test_explicit_mask_view(self):
        cfg = RunConfig(mask="110;011;101")
        mask = cfg.adjacency_mask(3)
        assert tuple(mask.sources_for(0)) == (0, 2)
        assert tuple(mask.sources_for(1)) == (0, 1)
        assert tuple(mask.sources_for(2)) == (1, 2)

    def test_bad_mask_rejected(self):
        with pytest.raises(InputError):
            RunConfig(mask="11;00").adjacency_mask(3)
        with pytest.raises(InputError):
            RunConfig(mask="1a0;011;101").adjacency_mask(3)

    def test_save_load(self, tmp_path):
        cfg = RunConfig(seed=7)
        path = tmp_path / "run.cfg"
        cfg.save(path)
        assert RunConfig.load(path) == cfg


class TestTrajectoryTable:
    def _dataset(self):
        return generate_training_data([(29.0, 96.0, 4.0)],
                                      GroundTruthParams(),
                                      IntegrationConfig())[0]

    def test_round_trip(self, tmp_path):
        traj = self._dataset().trajectory
        path = tmp_path / "traj.csv"
        write_trajectory(traj, path)
        back = read_trajectory(path)
        assert back.state_names == traj.state_names
        assert back.includes_t0 == traj.includes_t0
        np.testing.assert_array_equal(back.times, traj.times)
        np.testing.assert_array_equal(back.samples, traj.samples)

    def test_write_is_byte_deterministic(self, tmp_path):
        traj = self._dataset().trajectory
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        write_trajectory(traj, a)
        write_trajectory(traj, b)
        assert a.read_bytes() == b.read_bytes()

    def test_t0_inference(self, tmp_path):
        path = tmp_path / "traj.csv"
        path.write_text("time,A\n0,1.5\n1,2.5\n")
        traj = read_trajectory(path)
        assert traj.includes_t0
        path.write_text("time,A\n1,1.5\n2,2.5\n")
        assert not read_trajectory(path).includes_t0

    def test_malformed_inputs(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("wrong,header\n1,2\n")
        with pytest.raises(InputError, match="header"):
            read_trajectory(path)
        path.write_text("time,A\n1,2,3\n")
        with pytest.raises(InputError, match="fields"):
            read_trajectory(path)
        path.write_text("time,A\n1,x\n")
        with pytest.raises(InputError, match="non-numeric"):
            read_trajectory(path)
        path.write_text("time,A\n1,1\n2,2\n4,3\n")
        with pytest.raises(InputError, match="uniform"):
            read_trajectory(path)
        path.write_text("time,A\n")
        with pytest.raises(InputError, match="no data"):
            read_trajectory(path)


class TestLinkTable:
    def _profile(self):
        model = GeneratedModel.default(
            params=0.3 * np.random.default_rng(3).standard_normal(357))
        dense = model.simulate_dense((29.0, 96.0, 4.0), IntegrationConfig())
        return link_profile(model.deriv_functions(), dense)

    def test_round_trip(self, tmp_path):
        profile = self._profile()
        path = tmp_path / "links.csv"
        write_link_table(profile, path)
        back = read_link_table(path)
        assert back.state_names == profile.state_names
        np.testing.assert_array_equal(back.times, profile.times)
        np.testing.assert_array_equal(back.raw, profile.raw)
        np.testing.assert_array_equal(back.normalized, profile.normalized)

    def test_missing_cell_rejected(self, tmp_path):
        path = tmp_path / "links.csv"
        path.write_text("time,source,target,raw,normalized\n"
                        "1,A,A,0.5,1\n1,A,B,0.5,1\n1,B,A,0.5,1\n")
        with pytest.raises(InputError, match="missing entry"):
            read_link_table(path)

    def test_bad_header_rejected(self, tmp_path):
        path = tmp_path / "links.csv"
        path.write_text("time,src,dst,raw,normalized\n")
        with pytest.raises(InputError, match="header"):
            read_link_table(path)


def test_manifest_contains_config_and_extras(tmp_path):
    cfg = RunConfig(seed=3)
    path = tmp_path / "manifest.txt"
    write_manifest(cfg, path, extra={"command": "generate"})
    text = path.read_text()
    assert text.startswith("# command: generate\n")
    assert RunConfig.parse(text) == cfg
