"""Tests for settings, versioned defaults and logging setup."""

import json
import logging
import os
import sys
import tempfile
import unittest
from pathlib import Path
from unittest.mock import patch

from pydantic import ValidationError

# Add interfaces to path for testing
sys.path.insert(0, str(Path(__file__).parent.parent / "interfaces"))

from src.config import Defaults, LabConfig, get_config, load_defaults, setup_logging


class TestLabConfig(unittest.TestCase):
    """Test cases for LabConfig."""

    def tearDown(self):
        get_config.cache_clear()

    def test_environment_override(self):
        with patch.dict(os.environ, {"LAB_ENUMERATION_CAP": "1024", "LAB_THREADS": "2"}):
            config = LabConfig()
        self.assertEqual(config.enumeration_cap, 1024)
        self.assertEqual(config.threads, 2)

    def test_invalid_override(self):
        with patch.dict(os.environ, {"LAB_THREADS": "0"}):
            with self.assertRaises(ValidationError):
                LabConfig()

    def test_process_wide_instance(self):
        self.assertIs(get_config(), get_config())

    def test_ensure_dirs(self):
        temp_dir = tempfile.mkdtemp()
        config = LabConfig(output_dir=Path(temp_dir) / "out", logs_dir=Path(temp_dir) / "logs")
        config.ensure_dirs()
        self.assertTrue((Path(temp_dir) / "out").is_dir())
        self.assertTrue((Path(temp_dir) / "logs").is_dir())


class TestDefaults(unittest.TestCase):
    """Test cases for the versioned defaults file."""

    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()
        with open(LabConfig().defaults_path, "r", encoding="utf-8") as f:
            self.raw = json.load(f)

    def tearDown(self):
        import shutil

        shutil.rmtree(self.temp_dir)

    def _write(self, data) -> str:
        path = os.path.join(self.temp_dir, "defaults.json")
        with open(path, "w", encoding="utf-8") as f:
            json.dump(data, f)
        return path

    def test_shipped_defaults(self):
        defaults = load_defaults()
        self.assertEqual(defaults.deviation_constant, 36)
        self.assertEqual(defaults.frequency_volume_ratio, 1.25)
        self.assertEqual(defaults.variance_ceiling_factor, 8)
        self.assertEqual(defaults.lambda_grid, sorted(defaults.lambda_grid))

    def test_bound_constants_are_pinned(self):
        with self.assertRaises(ValidationError):
            Defaults.model_validate({**self.raw, "deviation_constant": 30})
        with self.assertRaises(ValidationError):
            Defaults.model_validate({**self.raw, "entropy_slack": 0.7})

    def test_unknown_key_rejected(self):
        with self.assertRaises(ValidationError):
            Defaults.model_validate({**self.raw, "extra": 1})

    def test_lambda_grid_positive(self):
        with self.assertRaises(ValidationError):
            Defaults.model_validate({**self.raw, "lambda_grid": [0.5, -1.0]})

    def test_load_from_path(self):
        path = self._write({**self.raw, "version": 7})
        self.assertEqual(load_defaults(path).version, 7)


class TestLogging(unittest.TestCase):
    """Test cases for routing logging through loguru."""

    def tearDown(self):
        logging.basicConfig(handlers=[logging.StreamHandler()], level=logging.WARNING, force=True)

    def test_log_file_written(self):
        temp_dir = Path(tempfile.mkdtemp())
        config = LabConfig(output_dir=temp_dir / "out", logs_dir=temp_dir / "logs")
        setup_logging(config)
        logging.getLogger("src.tests").info("hello from the lab")

        from loguru import logger

        logger.complete()
        text = (temp_dir / "logs" / "lab.log").read_text(encoding="utf-8")
        self.assertIn("hello from the lab", text)


if __name__ == "__main__":
    unittest.main()
