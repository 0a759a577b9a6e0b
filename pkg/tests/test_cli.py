"""
Tests for the lerw-lab command line.
"""

import json

import pandas as pd
import pytest

from lerw_lab.main import main


def _error(capsys):
    return json.loads(capsys.readouterr().err.strip().splitlines()[-1])


def test_estimate_mn_radius_one(tmp_path):
    """Test M_1 = 1 end to end, with the manifest written next to the CSV."""
    out = tmp_path / 'mn.csv'
    assert main(['estimate-mn', '--n', '1', '--samples', '100', '--seed', '7', '--out', str(out)]) == 0
    table = pd.read_csv(out)
    assert table['estimate'].iloc[0] == 1.0
    assert table['stderr'].iloc[0] == 0.0
    assert table['count'].iloc[0] == 100
    fields = pd.read_csv(out, dtype=str).iloc[0]
    assert fields['estimate'] == '1.0'
    assert fields['stderr'] == '0.0'
    assert fields['count'] == '100'

    manifest = json.loads((tmp_path / 'mn.csv.manifest.json').read_text())
    assert manifest['command'] == 'estimate-mn'
    assert manifest['seed'] == 7
    assert manifest['config']['n'] == [1]
    assert str(out) in manifest['outputs']


def test_green_evaluation(tmp_path, capsys):
    """Test G(0.5) = 1.6817928 is printed."""
    assert main(['green', 'eval', '--kappa', '2', '--z', '0.5,0', '--out', str(tmp_path / 'g.csv')]) == 0
    assert '1.6817928' in capsys.readouterr().out
    assert main(['green', '--kappa', '2', '--z', '0.5,0', '--out', str(tmp_path / 'g2.csv')]) == 0
    assert '1.6817928' in capsys.readouterr().out


def test_output_independent_of_workers(tmp_path):
    """Test one and two workers write byte-identical CSVs."""
    texts = []
    for workers in ('1', '2'):
        out = tmp_path / f'w{workers}.csv'
        assert main(['estimate-mn', '--n', '4', '--samples', '40', '--seed', '3',
                     '--workers', workers, '--out', str(out)]) == 0
        texts.append(out.read_text())
    assert texts[0] == texts[1]


def test_unknown_flag_is_usage_error(tmp_path, capsys):
    """Test bad flags exit with code 2 and a JSON error on stderr."""
    assert main(['estimate-mn', '--bogus', '--out', str(tmp_path / 'x.csv')]) == 2
    error = _error(capsys)
    assert error['error'] == 'UsageError'
    assert error['exit_code'] == 2


def test_missing_required_flag(tmp_path, capsys):
    """Test a missing --n is a usage error."""
    assert main(['estimate-mn', '--out', str(tmp_path / 'x.csv')]) == 2
    assert '--n' in _error(capsys)['message']


def test_precondition_exit_code(tmp_path, capsys):
    """Test a ball reaching outside the disk exits with code 3."""
    code = main(['occupation', '--z', '0.8,0', '--eps', '0.15', '--n', '8', '--samples', '10',
                 '--out', str(tmp_path / 'occ.csv')])
    assert code == 3
    assert _error(capsys)['error'] == 'BallOutsideDisk'


def test_config_file_supplies_flags(tmp_path):
    """Test flags can come from a JSON config and explicit flags win."""
    config = tmp_path / 'run.json'
    config.write_text(json.dumps({'n': 1, 'samples': 10, 'seed': 5}))
    out = tmp_path / 'cfg.csv'
    assert main(['estimate-mn', '--config', str(config), '--seed', '9', '--out', str(out)]) == 0
    table = pd.read_csv(out)
    assert table['count'].iloc[0] == 10
    assert table['seed'].iloc[0] == 9


def test_unknown_config_key(tmp_path):
    """Test config keys must name flags of the command."""
    config = tmp_path / 'bad.json'
    config.write_text(json.dumps({'n': 1, 'radius': 3}))
    assert main(['estimate-mn', '--config', str(config), '--out', str(tmp_path / 'x.csv')]) == 2


def test_lerw_sample_json(tmp_path):
    """Test LERW samples are written as a JSON list."""
    out = tmp_path / 'samples.json'
    assert main(['lerw-sample', '--n', '4', '--samples', '2', '--seed', '1', '--out', str(out)]) == 0
    docs = json.loads(out.read_text())
    assert len(docs) == 2
    assert docs[0]['points'][-1] == [0, 0]


def test_plots_are_recorded(tmp_path):
    """Test figures are written and listed in the manifest."""
    out = tmp_path / 'field.csv'
    figure = tmp_path / 'field.png'
    assert main(['edge-prob', '--n', '6', '--samples', '30', '--plot', str(figure), '--out', str(out)]) == 0
    assert figure.exists()
    assert (tmp_path / 'field.edges.csv').exists()
    manifest = json.loads((tmp_path / 'field.csv.manifest.json').read_text())
    assert str(figure) in manifest['outputs']

    curves = tmp_path / 'curves.png'
    assert main(['lerw-sample', '--n', '4', '--samples', '3', '--plot', str(curves),
                 '--out', str(tmp_path / 'curves.json')]) == 0
    assert curves.exists()


def test_green_integrate(tmp_path):
    """Test integrate mode reports the Riemann sum next to the exact integral."""
    out = tmp_path / 'int.csv'
    assert main(['green', 'integrate', '--n', '32', '--annulus', '0.2,0.8', '--out', str(out)]) == 0
    row = pd.read_csv(out).iloc[0]
    assert row['riemann_sum'] == pytest.approx(row['integral'], rel=0.05)

def test_green_mode_flag_is_gone(tmp_path, capsys):
    """Test green takes its mode as a subcommand, not a flag."""
    assert main(['green', '--mode', 'integrate', '--out', str(tmp_path / 'g.csv')]) == 2
    assert _error(capsys)['error'] == 'UsageError'
    assert main(['green', 'eval', '--n', '32', '--out', str(tmp_path / 'g.csv')]) == 2


def test_es_radii_out_of_order_exit_code(tmp_path, capsys):
    """Test Es(m, n) with m = n exits with code 3."""
    assert main(['es', '--n', '4', '--m', '4', '--samples', '10', '--out', str(tmp_path / 'es.csv')]) == 3
    error = _error(capsys)
    assert error['error'] == 'PreconditionViolation'
    assert error['exit_code'] == 3


def test_handler_value_error_exit_code(tmp_path, capsys):
    """Test a negative hitting radius exits with code 3."""
    code = main(['hit-prob', '--z', '0.5,0', '--eps', '-0.1', '--n', '4', '--samples', '5',
                 '--out', str(tmp_path / 'hit.csv')])
    assert code == 3
    assert _error(capsys)['exit_code'] == 3


def test_bad_eps_list_exit_code(tmp_path, capsys):
    """Test eps outside (0, 1) in an eps scan exits with code 3."""
    assert main(['es', '--n', '8', '--eps', '0.5', '1.5', '--out', str(tmp_path / 'es.csv')]) == 3
    assert 'eps' in _error(capsys)['message']


def test_zero_samples_is_usage_error(tmp_path, capsys):
    """Test a non-positive sample count is rejected before any sampling."""
    assert main(['estimate-mn', '--n', '4', '--samples', '0', '--out', str(tmp_path / 'x.csv')]) == 2
    error = _error(capsys)
    assert error['error'] == 'UsageError'
    assert 'samples' in error['message']


def test_ball_check_without_doubling(tmp_path, capsys):
    """Test B(z, eps) itself leaving the disk is refused even without the containment check."""
    code = main(['occupation', '--z', '0.9,0', '--eps', '0.2', '--n', '8', '--samples', '10',
                 '--no-containment', '--out', str(tmp_path / 'occ.csv')])
    assert code == 3
    assert _error(capsys)['error'] == 'BallOutsideDisk'


def test_lerw_sample_measure_outputs(tmp_path):
    """Test the mean occupation measure and its raster are written and readable by lp-distance."""
    measures = []
    for seed in ('1', '2'):
        measure = tmp_path / f'mu{seed}.csv'
        raster = tmp_path / f'raster{seed}.csv'
        out = tmp_path / f'samples{seed}.json'
        assert main(['lerw-sample', '--n', '4', '--samples', '5', '--seed', seed,
                     '--measure-out', str(measure), '--raster-out', str(raster), '--cell', '0.25',
                     '--out', str(out)]) == 0
        frame = pd.read_csv(measure)
        assert list(frame.columns) == ['x1', 'y1', 'x2', 'y2', 'mass']
        assert frame['mass'].sum() == pytest.approx(1.0)
        cells = pd.read_csv(raster)
        assert list(cells.columns) == ['x', 'y', 'mass']
        assert cells['mass'].sum() == pytest.approx(1.0)
        manifest = json.loads((tmp_path / f'samples{seed}.json.manifest.json').read_text())
        assert str(measure) in manifest['outputs'] and str(raster) in manifest['outputs']
        measures.append(measure)

    out = tmp_path / 'lp.csv'
    assert main(['lp-distance', '--measure-a', str(measures[0]), '--measure-b', str(measures[1]),
                 '--level', '4', '--out', str(out)]) == 0
    row = pd.read_csv(out).iloc[0]
    assert 0 <= row['lower'] <= row['upper']
    assert row['total_mass_gap'] == pytest.approx(0.0, abs=1e-9)


def test_ideal_speed_measure(tmp_path):
    """Test the ideal speed gives mass M_n / c_n per sample instead of one."""
    measure = tmp_path / 'mu.csv'
    out = tmp_path / 'samples.json'
    assert main(['lerw-sample', '--n', '4', '--samples', '3', '--speed', 'ideal',
                 '--measure-out', str(measure), '--out', str(out)]) == 0
    docs = json.loads(out.read_text())
    mean = sum(d['M_n'] for d in docs) / len(docs)
    assert pd.read_csv(measure)['mass'].sum() == pytest.approx(mean / 4 ** 1.25)


if __name__ == '__main__':
    pytest.main([__file__, '-v'])
