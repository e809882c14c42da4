import json
import math

import pytest
from click.testing import CliRunner

from app import cli


@pytest.fixture
def runner():
    return CliRunner(mix_stderr=False)


def _write(path, data):
    path.write_text(json.dumps(data))
    return str(path)


def test_run_on_a_tree_matches_the_oracle(runner, model_path):
    result = runner.invoke(cli, ['run', model_path('diamond'), '--oracle'])
    assert result.exit_code == 0, result.stderr
    report = json.loads(result.stdout)
    assert report['converged'] and not report['failed']
    assert report['tree_like']
    assert report['oracle']['max_belief_error'] <= 1e-7
    assert abs(report['oracle']['bethe_gap']) <= 1e-6
    assert report['residuals']['consistency'] <= 1e-9


def test_run_on_a_loop(runner, model_path):
    result = runner.invoke(cli, ['run', model_path('triangle_loop'), '--tau', '0.5'])
    assert result.exit_code == 0, result.stderr
    report = json.loads(result.stdout)
    assert report['converged']
    assert not report['tree_like']
    assert report['config']['tau'] == 0.5
    assert report['residuals']['criticality'] <= 1e-6


def test_run_options_override_the_file(runner, model_path):
    result = runner.invoke(cli, ['run', model_path('ternary_chain'), '--form', 'message',
                                 '--schedule', 'sequential', '--no-normalize'])
    assert result.exit_code == 0, result.stderr
    config = json.loads(result.stdout)['config']
    assert config['form'] == 'message'
    assert config['schedule'] == 'sequential'
    assert config['normalize'] is False


def test_non_convergence_exits_with_two(runner, model_path):
    result = runner.invoke(cli, ['run', model_path('triangle_loop'), '--steps', '2', '--tol', '1e-300'])
    assert result.exit_code == 2
    report = json.loads(result.stdout)
    assert not report['converged']
    assert report['steps'] == 2


def test_trace_file(runner, model_path, tmp_path):
    trace = tmp_path / 'trace.csv'
    result = runner.invoke(cli, ['run', model_path('diamond'), '--trace', str(trace)])
    assert result.exit_code == 0, result.stderr
    lines = trace.read_text().splitlines()
    assert lines[0] == 'step,residual,consistency,conserved_drift'
    assert len(lines) - 1 == json.loads(result.stdout)['steps']


@pytest.mark.parametrize('contents', ['{"format": "bethe-flow/1", "variables": [',
                                      '{"format": "bethe-flow/1", "variables": [], "regions": [[4]]}'])
def test_malformed_model(runner, tmp_path, contents):
    path = tmp_path / 'bad.json'
    path.write_text(contents)
    result = runner.invoke(cli, ['run', str(path)])
    assert result.exit_code == 1
    assert result.stderr.startswith('error:')
    assert result.stdout == ''


def test_missing_model(runner, tmp_path):
    result = runner.invoke(cli, ['check', str(tmp_path / 'nope.json')])
    assert result.exit_code == 1


def test_check_passes_and_is_deterministic(runner, model_path):
    first = runner.invoke(cli, ['check', model_path('triangle_loop'), '--seed', '7', '--trials', '3'])
    second = runner.invoke(cli, ['check', model_path('triangle_loop'), '--seed', '7', '--trials', '3'])
    assert first.exit_code == 0, first.stderr
    assert first.stdout == second.stdout
    report = json.loads(first.stdout)
    assert report['passed'] and report['seed'] == 7
    assert all(item['passed'] for item in report['invariants'])


def test_energy_at_the_oracle_on_a_tree(runner, model_path):
    result = runner.invoke(cli, ['energy', model_path('diamond')])
    assert result.exit_code == 0, result.stderr
    report = json.loads(result.stdout)
    assert report['bethe_free_energy'] == pytest.approx(-report['log_partition'], abs=1e-8)
    assert report['criticality_residual'] <= 1e-7


def test_energy_of_uniform_beliefs_at_zero_potential(runner, tmp_path):
    model = _write(tmp_path / 'free.json', {
        'format': 'bethe-flow/1',
        'variables': [{'id': i, 'cardinality': 2} for i in (1, 2, 3)],
        'regions': [[1, 2], [2, 3]],
    })
    beliefs = _write(tmp_path / 'uniform.json', [
        {'region': [1, 2], 'table': [.25] * 4},
        {'region': [2, 3], 'table': [.25] * 4},
        {'region': [2], 'table': [.5, .5]},
        {'region': [], 'table': [1.0]},
    ])
    result = runner.invoke(cli, ['energy', model, '--beliefs', beliefs])
    assert result.exit_code == 0, result.stderr
    # -(ln 4 + ln 4 - ln 2)
    assert json.loads(result.stdout)['bethe_free_energy'] == pytest.approx(-math.log(8), abs=1e-12)


def test_energy_reads_a_run_report(runner, model_path, tmp_path):
    run = runner.invoke(cli, ['run', model_path('triangle_loop')])
    assert run.exit_code == 0, run.stderr
    report = tmp_path / 'report.json'
    report.write_text(run.stdout)
    result = runner.invoke(cli, ['energy', model_path('triangle_loop'), '--beliefs', str(report)])
    assert result.exit_code == 0, result.stderr
    energy = json.loads(result.stdout)
    assert energy['bethe_free_energy'] == pytest.approx(json.loads(run.stdout)['bethe_free_energy'], abs=1e-10)


def test_energy_with_missing_beliefs(runner, model_path, tmp_path):
    result = runner.invoke(cli, ['energy', model_path('diamond'), '--beliefs', str(tmp_path / 'none.json')])
    assert result.exit_code == 1
    assert 'cannot read' in result.stderr


def test_run_is_deterministic(runner, model_path):
    first = runner.invoke(cli, ['run', model_path('triangle_loop')])
    second = runner.invoke(cli, ['run', model_path('triangle_loop')])
    assert first.exit_code == 0, first.stderr
    assert first.stdout == second.stdout


@pytest.fixture
def steep_model(model_path, tmp_path):
    with open(model_path('diamond')) as f:
        data = json.load(f)
    # e^-800 underflows to 0
    data['potentials'][0]['table'] = [0.0, 800.0, 0.0, 0.0]
    return _write(tmp_path / 'steep.json', data)


def test_run_with_a_vanishing_belief(runner, steep_model):
    result = runner.invoke(cli, ['run', steep_model, '--oracle'])
    assert result.exit_code == 0, result.stderr
    report = json.loads(result.stdout)
    assert report['converged'] and not report['failed']
    assert report['beliefs']
    assert report['oracle']['max_belief_error'] <= 1e-7
    assert math.isfinite(report['residuals']['criticality'])


def test_energy_with_a_vanishing_belief(runner, steep_model):
    result = runner.invoke(cli, ['energy', steep_model])
    assert result.exit_code == 0, result.stderr
    report = json.loads(result.stdout)
    assert report['bethe_free_energy'] == pytest.approx(-report['log_partition'], abs=1e-8)
    assert report['criticality_residual'] <= 1e-7
