"""Tests for ExperimentConfig and key = value files."""

from __future__ import annotations

from pathlib import Path

import pytest
from pydantic import ValidationError

from svepath.config import (
    RUN_CONFIG_NAME,
    ExperimentConfig,
    load_config,
    merge_config,
    parse_config_text,
    read_key_values,
    save_config,
    write_sidecar,
)
from svepath.exceptions import ParameterError
from svepath.kernels import FbmSimpleKernel
from svepath.testing import SMALL_CONFIG, small_config


class TestExperimentConfig:
    """Defaults and derived values."""

    def test_defaults(self):
        config = ExperimentConfig()
        assert config.kernel == "powerlaw:alpha=0.25"
        assert config.n == 512
        assert config.z_probes == 41
        assert config.strict_window

    def test_derived_values(self):
        config = small_config(kernel="fbm-simple:H=0.3,C=2")
        assert config.kernel_model == FbmSimpleKernel(H=0.3, C=2.0)
        assert config.alpha == pytest.approx(0.2)
        assert config.grid.n == 64

    def test_moment_order_defaults_above_window(self):
        assert SMALL_CONFIG.moment_order == 5.0
        assert small_config(kernel="powerlaw:alpha=0.1").moment_order == 4.0
        assert small_config(p=7.5).moment_order == 7.5

    def test_comma_separated_lists(self):
        config = ExperimentConfig(m_list="2, 8,32", levels="8,16", lags="0.1,0.2")
        assert config.m_list == [2, 8, 32]
        assert config.levels == [8, 16]
        assert config.lags == [0.1, 0.2]

    def test_bad_kernel(self):
        with pytest.raises(ValidationError, match="unknown kernel variant"):
            ExperimentConfig(kernel="cauchy:alpha=0.2")

    def test_frozen(self):
        with pytest.raises(ValidationError):
            SMALL_CONFIG.n = 8  # type: ignore[misc]


class TestConfigText:
    """``key = value`` parsing."""

    def test_comments_and_blanks(self):
        text = "# experiment\n\nn = 128  # steps\nkernel = fbm-exact:H=0.3\n"
        assert parse_config_text(text) == {"n": "128", "kernel": "fbm-exact:H=0.3"}

    def test_unknown_key(self):
        with pytest.raises(ParameterError, match="unknown key 'steps'"):
            parse_config_text("steps = 3", source="run.conf")

    def test_malformed_line(self):
        with pytest.raises(ParameterError, match="run.conf:2: expected"):
            parse_config_text("n = 3\njust words", source="run.conf")

    def test_missing_file(self, tmp_path):
        with pytest.raises(ParameterError, match="does not exist"):
            load_config(tmp_path / "absent.conf")


class TestMerge:
    """File values first, then overrides."""

    def test_overrides_win(self):
        config = merge_config({"n": "128", "seed": "3"}, {"n": 256, "seed": None})
        assert config.n == 256
        assert config.seed == 3

    def test_invalid_value(self):
        with pytest.raises(ParameterError, match="'paths'"):
            merge_config({"paths": "0"})

    def test_saved_config_reloads(self, tmp_path):
        config = small_config(out=tmp_path, lags=[0.125, 0.25], strict_window=False)
        path = save_config(config)
        assert path == tmp_path / RUN_CONFIG_NAME
        assert merge_config(load_config(path)) == config

    def test_unset_optionals_not_written(self, tmp_path):
        path = save_config(small_config(out=tmp_path))
        assert "p" not in read_key_values(path)
        assert "lags" not in read_key_values(path)


class TestSidecar:
    """Metadata next to CSV outputs."""

    def test_write_and_read(self, tmp_path):
        path = write_sidecar(tmp_path / "nested" / "field.csv.meta", {"t": 0.5, "paths": 1})
        assert path.exists()
        assert read_key_values(path) == {"t": "0.5", "paths": "1"}
        assert not Path(str(path) + ".tmp").exists()
