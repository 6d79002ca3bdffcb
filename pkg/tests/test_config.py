import json
import os
import shutil
import tempfile
import unittest
from pathlib import Path
from unittest.mock import patch
from src.layerctx.config import (
    AppConfig,
    Config,
    Granularity,
    Mode,
    SetpointEntry,
    app_config_from_dict,
    load_app_config,
)
from src.layerctx.errors import ConfigError


class TestConfig(unittest.TestCase):
    """Test cases for environment settings."""

    def setUp(self):
        """Set up test fixtures."""
        self.config = Config()

    def test_defaults(self):
        with patch.dict(os.environ, {}, clear=True):
            self.assertEqual(self.config.LOG_LEVEL, "INFO")
            self.assertEqual(self.config.OUTPUT_DIR, "out")
            self.assertIsNone(self.config.CONFIG_PATH)
            self.assertIsNone(self.config.SEED)

    def test_environment_overrides(self):
        env = {"LAYERCTX_LOG_LEVEL": "debug", "LAYERCTX_OUTPUT_DIR": "/tmp/x",
               "LAYERCTX_CONFIG": "cfg.json", "LAYERCTX_SEED": "42"}
        with patch.dict(os.environ, env, clear=True):
            self.assertEqual(self.config.LOG_LEVEL, "DEBUG")
            self.assertEqual(self.config.OUTPUT_DIR, "/tmp/x")
            self.assertEqual(self.config.CONFIG_PATH, "cfg.json")
            self.assertEqual(self.config.SEED, 42)

    def test_invalid_seed(self):
        with patch.dict(os.environ, {"LAYERCTX_SEED": "forty"}):
            with self.assertRaises(ConfigError) as cm:
                _ = self.config.SEED
        self.assertIn("LAYERCTX_SEED", cm.exception.errors[0])

    def test_negative_seed(self):
        with patch.dict(os.environ, {"LAYERCTX_SEED": "-1"}):
            with self.assertRaises(ConfigError) as cm:
                _ = self.config.SEED
        self.assertIn("must be >= 0", cm.exception.errors[0])


class TestAppConfig(unittest.TestCase):
    """Test cases for the JSON configuration."""

    def test_empty_object_gives_defaults(self):
        self.assertEqual(app_config_from_dict({}), AppConfig())

    def test_partial_override(self):
        cfg = app_config_from_dict({
            "simulation": {"n_users": 50, "granularity": "page"},
            "controller": {"kp": 1.2},
            "mode": "eca",
            "setpoints": [{"t": 0, "bytes_per_sec": 2e6}],
        })
        self.assertEqual(cfg.simulation.n_users, 50)
        self.assertEqual(cfg.simulation.granularity, Granularity.PAGE)
        self.assertEqual(cfg.simulation.ramp_interval, 200.0)
        self.assertEqual(cfg.controller.kp, 1.2)
        self.assertEqual(cfg.mode, Mode.ECA)
        self.assertEqual(cfg.setpoints, (SetpointEntry(0.0, 2e6),))

    def test_every_problem_is_reported(self):
        data = {
            "simulation": {"n_users": 0, "duration": "long", "colour": "red"},
            "controller": {"output_min": 0.9, "output_max": 0.1},
            "setpoints": [{"t": 10, "bytes_per_sec": 1e6}, {"t": 5, "bytes_per_sec": 1e6}],
            "extra": True,
        }
        with self.assertRaises(ConfigError) as cm:
            app_config_from_dict(data)
        errors = cm.exception.errors
        self.assertEqual(len(errors), 6, errors)
        joined = "\n".join(errors)
        for fragment in ("config.simulation.n_users", "config.simulation.duration",
                         "config.simulation.colour: unknown field", "output_min must not exceed output_max",
                         "strictly increasing", "config.extra: unknown field"):
            self.assertIn(fragment, joined)

    def test_page_bytes_validated(self):
        with self.assertRaises(ConfigError) as cm:
            app_config_from_dict({"simulation": {"page": {"second_level_bytes": {"high": 5, "low": 5}}}})
        self.assertIn("config.simulation.page.second_level_bytes", cm.exception.errors[0])

    def test_rules_and_constraints(self):
        cfg = app_config_from_dict({
            "rules": [{"name": "shed", "metric": "bandwidth", "op": ">=", "threshold": 1e6,
                       "activate": ["low_band"], "deactivate": ["high_band"]}],
            "constraints": {"excludes": [["a", "b"]], "requires": [["c", "a"]]},
        })
        self.assertEqual(cfg.rules[0].op, ">=")
        self.assertEqual(cfg.rules[0].activate, ("low_band",))
        self.assertEqual(cfg.constraints.excludes, (("a", "b"),))
        self.assertEqual(cfg.constraints.requires, (("c", "a"),))
        with self.assertRaises(ConfigError):
            app_config_from_dict({"rules": [{"op": "!="}]})
        with self.assertRaises(ConfigError):
            app_config_from_dict({"constraints": {"excludes": [["a"]]}})

    def test_not_an_object(self):
        with self.assertRaises(ConfigError) as cm:
            app_config_from_dict([1, 2])
        self.assertEqual(cm.exception.errors, ["config: expected an object"])

    def test_to_dict_reloads(self):
        cfg = AppConfig(mode=Mode.ECA).with_seed(17)
        data = cfg.to_dict()
        self.assertEqual(data["mode"], "eca")
        self.assertEqual(data["simulation"]["seed"], 17)
        self.assertEqual(app_config_from_dict(data), cfg)


class TestLoadAppConfig(unittest.TestCase):
    """Test cases for reading the config file."""

    def setUp(self):
        """Set up test fixtures."""
        self.tmp = Path(tempfile.mkdtemp())

    def tearDown(self):
        shutil.rmtree(self.tmp, ignore_errors=True)

    def test_from_file(self):
        path = self.tmp / "cfg.json"
        path.write_text(json.dumps({"simulation": {"seed": 3}}))
        self.assertEqual(load_app_config(str(path)).simulation.seed, 3)

    def test_path_from_environment(self):
        path = self.tmp / "cfg.json"
        path.write_text(json.dumps({"mode": "eca"}))
        with patch.dict(os.environ, {"LAYERCTX_CONFIG": str(path)}):
            self.assertEqual(load_app_config().mode, Mode.ECA)

    def test_no_path_gives_defaults(self):
        with patch.dict(os.environ, {"LAYERCTX_CONFIG": ""}):
            self.assertEqual(load_app_config(), AppConfig())

    def test_missing_file(self):
        with self.assertRaises(ConfigError) as cm:
            load_app_config(str(self.tmp / "nope.json"))
        self.assertIn("no such file", cm.exception.errors[0])

    def test_invalid_json(self):
        path = self.tmp / "bad.json"
        path.write_text("{not json")
        with self.assertRaises(ConfigError) as cm:
            load_app_config(str(path))
        self.assertIn("invalid JSON", cm.exception.errors[0])


if __name__ == '__main__':
    unittest.main()
