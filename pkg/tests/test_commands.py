"""CLI commands and exit codes"""

import logging

import numpy as np
import pandas as pd
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from src import main as main_module
from src.commands import (
    EXIT_CONFIG, EXIT_DATA, EXIT_NUMERICAL, EXIT_OK, cmd_figures, cmd_gradcheck, cmd_mix, cmd_stability,
    source_range,
)
from src.main import main
from src.models import (
    DistributionKind, ExperimentConfig, GradcheckSettings, JacobianSignClass, MixingParams, SignalBatch,
    SourceDistribution,
)
from src.separation.mixing import jacobian, permuted_solution
from src.services import read_report, read_signal_file, write_signal_file

W_STAR = MixingParams(-0.2, 0.2, -0.8, 0.8)


@pytest.fixture(autouse=True)
def quiet_logging(monkeypatch):
    monkeypatch.setattr(main_module, 'setup_logging', lambda: None)


def _config(tmp_path, text: str):
    path = tmp_path / 'experiment.env'
    path.write_text(text)
    return str(path)


# ============================================================================
# generate / mix
# ============================================================================

def test_generate_is_deterministic_per_seed(tmp_path):
    first, again, other = tmp_path / 'a.csv', tmp_path / 'b.csv', tmp_path / 'c.csv'
    assert main(['generate', '--out', str(first)]) == EXIT_OK
    assert main(['generate', '--out', str(again)]) == EXIT_OK
    assert main(['generate', '--seed', '8', '--out', str(other)]) == EXIT_OK

    batch = read_signal_file(first)
    assert len(batch) == 1000
    assert np.all(np.abs(batch.samples) <= 0.5)
    assert first.read_bytes() == again.read_bytes()
    assert first.read_bytes() != other.read_bytes()


def test_generate_rejects_invalid_distribution(tmp_path):
    config = _config(tmp_path, "source1.kind=gaussian\nsource1.std=0\n")
    assert main(['generate', '--config', config, '--out', str(tmp_path / 's.csv')]) == EXIT_CONFIG


@pytest.mark.parametrize('half, expected', [
    (0.5, JacobianSignClass.ALWAYS_POSITIVE),
    (2.0, JacobianSignClass.MIXED_SIGN),
])
def test_mix_reports_sign_class(tmp_path, rng, half, expected):
    sources = write_signal_file(tmp_path / 'sources.csv', rng.uniform(-half, half, size=(500, 2)))
    result = cmd_mix(sources, W_STAR)
    assert result['sign_class'] is expected
    assert result['path'] == tmp_path / 'mixtures.csv'


def test_mix_with_zero_parameters_copies_values(tmp_path, rng):
    sources = write_signal_file(tmp_path / 'sources.csv', rng.uniform(-0.5, 0.5, size=(100, 2)))
    config = _config(tmp_path, "mixing.l1=0\nmixing.l2=0\nmixing.q1=0\nmixing.q2=0\n")
    out = tmp_path / 'mixed.csv'
    assert main(['mix', '--config', config, '--input', str(sources), '--out', str(out)]) == EXIT_OK
    assert_array_equal(read_signal_file(out).samples, read_signal_file(sources).samples)


# ============================================================================
# separate
# ============================================================================

def _pipeline(tmp_path, *extra: str) -> int:
    config = _config(tmp_path, "optimizer.max_epochs=3\nn_samples=300\n")
    sources = tmp_path / 'sources.csv'
    mixtures = tmp_path / 'mixtures.csv'
    assert main(['generate', '--config', config, '--out', str(sources)]) == EXIT_OK
    assert main(['mix', '--config', config, '--input', str(sources)]) == EXIT_OK
    return main([
        'separate', '--config', config, '--input', str(mixtures), '--truth', str(sources),
        '--out', str(tmp_path / 'run'), *extra,
    ])


def test_separate_writes_report_and_outputs(tmp_path):
    assert _pipeline(tmp_path) == EXIT_OK
    fields, sections = read_report(tmp_path / 'run' / 'separation_report.txt')
    assert fields['status'] == 'MaxEpochs'
    assert fields['epochs_run'] == '3'
    assert fields['gradient_variant'] == 'corrected'
    assert 'sir_db.1' in fields
    assert len(sections['trajectory']) == 3
    assert len(read_signal_file(tmp_path / 'run' / 'separated.csv')) == 300


def test_legacy_gradient_flag_is_recorded(tmp_path):
    assert _pipeline(tmp_path, '--gradient', 'legacy') == EXIT_OK
    fields, _ = read_report(tmp_path / 'run' / 'separation_report.txt')
    assert fields['gradient_variant'] == 'legacy'


def test_pipeline_is_byte_reproducible(tmp_path):
    first, second = tmp_path / 'first', tmp_path / 'second'
    first.mkdir()
    second.mkdir()
    assert _pipeline(first) == EXIT_OK
    assert _pipeline(second) == EXIT_OK
    for name in ('separated.csv', 'separation_report.txt'):
        assert (first / 'run' / name).read_bytes() == (second / 'run' / name).read_bytes()


def test_separate_rejects_malformed_input(tmp_path, caplog):
    bad = tmp_path / 'bad.csv'
    bad.write_text("ch1,ch2\n0.1,0.2\n0.3,oops\n")
    with caplog.at_level(logging.ERROR):
        code = main(['separate', '--input', str(bad), '--out', str(tmp_path)])
    assert code == EXIT_DATA
    assert 'row 2' in caplog.text


def test_missing_input_is_a_data_error(tmp_path):
    assert main(['separate', '--input', str(tmp_path / 'absent.csv')]) == EXIT_DATA


def test_truth_length_mismatch_is_a_data_error(tmp_path, caplog):
    mixtures = write_signal_file(tmp_path / 'mixtures.csv', SignalBatch(np.zeros((40, 2))))
    truth = write_signal_file(tmp_path / 'sources.csv', SignalBatch(np.zeros((39, 2))))
    with caplog.at_level(logging.ERROR):
        code = main([
            'separate', '--input', str(mixtures), '--truth', str(truth), '--out', str(tmp_path / 'run'),
        ])
    assert code == EXIT_DATA
    assert '39 truth rows for 40 observations' in caplog.text
    assert not (tmp_path / 'run' / 'separation_report.txt').exists()


def test_usage_and_config_errors(tmp_path):
    assert main(['separate']) == EXIT_CONFIG
    assert main(['separate', '--input', 'x.csv', '--gradient', 'approximate']) == EXIT_CONFIG
    config = _config(tmp_path, "optimizer.speed=1\n")
    assert main(['gradcheck', '--config', config]) == EXIT_CONFIG


# ============================================================================
# gradcheck
# ============================================================================

def test_gradcheck_default_campaign_passes(tmp_path):
    assert main(['gradcheck', '--out', str(tmp_path)]) == EXIT_OK
    fields, sections = read_report(tmp_path / 'gradcheck_report.txt')
    assert fields['passed'] == 'True'
    assert fields['cases'] == '100'
    assert len(sections['cases']) == 100


def test_gradcheck_linear_campaign_waives_legacy(tmp_path):
    cfg = ExperimentConfig(gradcheck=GradcheckSettings(n_configs=10, linear_only=True))
    result = cmd_gradcheck(cfg, tmp_path)
    assert result['exit_code'] == EXIT_OK
    assert result['summary'].legacy_waived


def test_gradcheck_fails_below_finite_difference_accuracy(tmp_path):
    cfg = ExperimentConfig(gradcheck=GradcheckSettings(n_configs=10, tolerance=1e-12))
    result = cmd_gradcheck(cfg, tmp_path)
    assert result['exit_code'] == EXIT_NUMERICAL
    fields, _ = read_report(result['report_path'])
    assert fields['passed'] == 'False'


# ============================================================================
# figures / stability
# ============================================================================

@pytest.fixture(scope='module')
def figure_files(tmp_path_factory):
    out = tmp_path_factory.mktemp('figures')
    return cmd_figures(ExperimentConfig(n_samples=400), out)['files']


def test_bounded_scenario_second_structure_recovers_sources(figure_files):
    bounded = figure_files['bounded']
    assert 'locus_sources' not in bounded
    sources = read_signal_file(bounded['sources']).samples
    assert_allclose(read_signal_file(bounded['structure2']).samples, sources, atol=1e-10)


def test_wide_scenario_mixes_both_branches(figure_files):
    wide = figure_files['wide']
    sources = read_signal_file(wide['sources']).samples
    permuted = permuted_solution(W_STAR, sources)
    structure1 = read_signal_file(wide['structure1']).samples
    near_identity = np.max(np.abs(structure1 - sources), axis=1) < 1e-6
    near_permuted = np.max(np.abs(structure1 - permuted), axis=1) < 1e-6
    assert near_identity.any()
    assert near_permuted.any()
    assert np.all(near_identity | near_permuted)


def test_wide_scenario_emits_singular_locus(figure_files):
    wide = figure_files['wide']
    locus = read_signal_file(wide['locus_sources']).samples
    assert len(locus) > 0
    assert np.all(np.abs(jacobian(W_STAR, locus)) <= 1e-9)
    assert len(read_signal_file(wide['locus_mixtures'])) == len(locus)


def test_stability_grid_file(tmp_path):
    result = cmd_stability(ExperimentConfig(), tmp_path, size=5)
    frame = pd.read_csv(result['path'])
    assert list(frame.columns) == ['s1', 's2', 'magnitude_small', 'magnitude_large', 'stable']
    assert len(frame) == 25
    assert frame['stable'].all()
    assert frame['magnitude_large'].max() < 1.0


def test_source_ranges():
    assert source_range(SourceDistribution()) == (-0.5, 0.5)
    assert source_range(SourceDistribution(DistributionKind.GAUSSIAN, mean=1.0, std=0.5)) == (-0.5, 2.5)
    assert source_range(SourceDistribution(DistributionKind.LAPLACE, scale=0.1)) == pytest.approx((-0.5, 0.5))


def test_signal_batch_accepted_by_writer(tmp_path):
    batch = SignalBatch([[0.1, 0.2]])
    assert_array_equal(read_signal_file(write_signal_file(tmp_path / 'one.csv', batch)).samples, batch.samples)
