import json

import numpy as np
import pandas as pd
import pytest

from bmanova.cli import (EXIT_CONFIG, EXIT_FAILED, EXIT_NUMERICAL, EXIT_OK, ExperimentConfig, main,
                         make_grid, parse_grid)
from bmanova.errors import ParameterError

FIG1_FLAGS = ['--m', '7', '--n', '4', '--p', '5', '--beta', '2.5', '--omega', '1,2,2.5,2.7']


def read_csv(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# digest=")
    return pd.read_csv(path, comment='#')


@pytest.fixture
def fig1_config():
    return {
        'm': 7, 'n': 4, 'p': 5, 'beta': 2.5, 'omega': [1, 2, 2.5, 2.7],
        'n_samples': 10000, 'seed': 20130101,
        'grid': {'start': 0.01, 'step': 0.01, 'stop': 0.99}, 'alpha': 0.01,
    }


class TestGrid:
    def test_inclusive_stop(self):
        grid = make_grid(0.01, 0.01, 0.99)
        assert grid.size == 99
        assert grid[0] == 0.01 and grid[-1] == 0.99

    def test_parse(self):
        assert parse_grid("0.1:0.2:0.9") == (0.1, 0.2, 0.9)

    @pytest.mark.parametrize("text", ["0.1:0.9", "a:b:c", "0:0.1:0.5", "0.5:0.1:0.2"])
    def test_parse_rejects(self, text):
        with pytest.raises(ParameterError):
            parse_grid(text)


class TestSample:
    def test_writes_csv(self, tmp_path):
        out = tmp_path / "samples.csv"
        assert main(['sample', *FIG1_FLAGS, '--num', '300', '--seed', '1', '--out', str(out)]) == EXIT_OK
        frame = read_csv(out)
        assert list(frame.columns) == ['sample_index', 'c1', 'c2', 'c3', 'c4']
        assert len(frame) == 300
        values = frame[['c1', 'c2', 'c3', 'c4']].to_numpy()
        assert np.all((values > 0) & (values < 1))
        assert np.all(np.diff(values, axis=1) <= 0)

    def test_byte_identical_reruns(self, tmp_path):
        first, second = tmp_path / "a.csv", tmp_path / "b.csv"
        for out in (first, second):
            main(['sample', *FIG1_FLAGS, '--num', '2500', '--seed', '7', '--out', str(out)])
        assert first.read_bytes() == second.read_bytes()

    def test_missing_seed(self, tmp_path):
        assert main(['sample', *FIG1_FLAGS, '--num', '10', '--out', str(tmp_path / "x.csv")]) == EXIT_CONFIG

    def test_invalid_omega(self, tmp_path):
        flags = FIG1_FLAGS[:-1] + ['1,2']
        assert main(['sample', *flags, '--num', '10', '--seed', '1',
                     '--out', str(tmp_path / "x.csv")]) == EXIT_CONFIG


class TestCdf:
    def test_monotone_grid(self, tmp_path):
        out = tmp_path / "cdf.csv"
        assert main(['cdf', *FIG1_FLAGS, '--grid', '0.01:0.01:0.99', '--out', str(out)]) == EXIT_OK
        frame = read_csv(out)
        assert list(frame.columns) == ['x', 'analytic_cdf']
        values = frame['analytic_cdf'].to_numpy()
        assert len(values) == 99
        assert np.all(np.diff(values) >= -1e-12)
        assert 0.0 <= values[0] < values[-1] <= 1.0

    def test_gauss_form_matches(self, tmp_path):
        poly, gauss = tmp_path / "poly.csv", tmp_path / "gauss.csv"
        main(['cdf', *FIG1_FLAGS, '--grid', '0.1:0.2:0.9', '--out', str(poly)])
        assert main(['cdf', *FIG1_FLAGS, '--grid', '0.1:0.2:0.9', '--form', '2f1',
                     '--out', str(gauss)]) == EXIT_OK
        np.testing.assert_allclose(read_csv(gauss)['analytic_cdf'], read_csv(poly)['analytic_cdf'],
                                   rtol=0, atol=1e-10)

    def test_fractional_truncation_is_config_error(self, tmp_path, caplog):
        flags = ['--m', '7', '--n', '4', '--p', '5', '--beta', '2.2', '--omega', '1,2,2.5,2.7']
        code = main(['cdf', *flags, '--grid', '0.1:0.1:0.9', '--out', str(tmp_path / "x.csv")])
        assert code == EXIT_CONFIG
        assert "t=" in caplog.text

    def test_stalled_gauss_series_is_numerical_error(self, tmp_path):
        flags = ['--m', '7', '--n', '4', '--p', '5', '--beta', '2.2', '--omega', '1,2,2.5,2.7']
        code = main(['cdf', *flags, '--grid', '0.9:0.1:0.9', '--form', '2f1', '--max-weight', '2',
                     '--out', str(tmp_path / "x.csv")])
        assert code == EXIT_NUMERICAL

    def test_from_config(self, tmp_path, fig1_config):
        path = tmp_path / "fig.json"
        path.write_text(json.dumps(fig1_config))
        out = tmp_path / "cdf.csv"
        assert main(['cdf', '--config', str(path), '--out', str(out)]) == EXIT_OK
        assert len(read_csv(out)) == 99

    def test_missing_out_is_usage_error(self):
        with pytest.raises(SystemExit) as excinfo:
            main(['cdf', *FIG1_FLAGS, '--grid', '0.1:0.1:0.9'])
        assert excinfo.value.code == 2


class TestVerify:
    def test_writes_artifacts(self, tmp_path):
        code = main(['verify', '--figure', '1', '--num', '400', '--out-dir', str(tmp_path)])
        assert code in (EXIT_OK, EXIT_FAILED)
        report = json.loads((tmp_path / "report.json").read_text())
        assert report['n_samples'] == 400
        assert 'runtime_ms' not in report
        assert len(report['config_digest']) == 64
        curve = read_csv(tmp_path / "curve.csv")
        assert list(curve.columns) == ['x', 'empirical', 'analytic']
        assert (tmp_path / "overlay.svg").read_text().startswith('<svg')
        assert 'id="overlay"' in (tmp_path / "overlay.html").read_text()

    def test_reports_are_reproducible(self, tmp_path):
        first, second = tmp_path / "a", tmp_path / "b"
        for out in (first, second):
            main(['verify', '--figure', '2', '--num', '300', '--out-dir', str(out)])
        for name in ("report.json", "curve.csv", "overlay.svg"):
            assert (first / name).read_bytes() == (second / name).read_bytes()

    def test_invalid_config(self, tmp_path, fig1_config):
        del fig1_config['alpha']
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(fig1_config))
        assert main(['verify', '--config', str(path), '--out-dir', str(tmp_path)]) == EXIT_CONFIG

    def test_unreadable_config(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        assert main(['verify', '--config', str(path)]) == EXIT_CONFIG

    @pytest.mark.slow
    def test_wrong_analytic_model_fails(self, tmp_path, fig1_config):
        fig1_config['analytic'] = {'p': 4}
        path = tmp_path / "wrong.json"
        path.write_text(json.dumps(fig1_config))
        assert main(['verify', '--config', str(path), '--out-dir', str(tmp_path / "out")]) == EXIT_FAILED


def test_config_digest_ignores_output_dir(fig1_config):
    first = ExperimentConfig.from_dict(fig1_config)
    second = ExperimentConfig.from_dict({**fig1_config, 'output_dir': 'elsewhere'})
    assert first.digest == second.digest
    assert first.digest_for(500) != first.digest


def test_selftest(capsys):
    assert main(['selftest']) == EXIT_OK
    assert "8/8 checks passed" in capsys.readouterr().out
