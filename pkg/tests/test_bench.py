import test_helper

import json
import os

import numpy as np
import pytest

from dualtpd.bench import (
    BenchConfig,
    fitted_slope,
    load_config,
    main,
    observed_rates,
    problem_for,
    read_csv,
    run_experiment)
from dualtpd.global_variables import ROOT_PATH
from dualtpd.kernels import ConfigurationError
from dualtpd.problems import linear_reference


def write_config(tmpdir, **values):
    path = str(tmpdir.join('config.json'))
    with open(path, 'w') as f:
        json.dump(values, f)
    return path


def test_load_config_rejects_unknown_keys(tmpdir):
    path = write_config(tmpdir, experiment='iteration-table', tolerance=1e-6)
    with pytest.raises(ConfigurationError):
        load_config(path)


def test_load_config_experiment_override(tmpdir):
    path = write_config(tmpdir, experiment='iteration-table', p=1.5,
                        levels=[2, 3])
    cfg = load_config(path, 'solver-compare')
    assert cfg.experiment == 'solver-compare'
    assert cfg.p_list == [1.5]
    with pytest.raises(ConfigurationError):
        load_config(write_config(tmpdir, p=4.0))


def test_bench_config_validation():
    with pytest.raises(ConfigurationError):
        BenchConfig('table-9')
    with pytest.raises(ConfigurationError):
        BenchConfig('iteration-table', solvers=['sor'])
    with pytest.raises(ConfigurationError):
        BenchConfig('iteration-table', levels=[])


def test_step_size_lookup():
    """ 'solver@p' beats 'solver', which beats alpha.
    """
    cfg = BenchConfig('iteration-table', alpha=0.9,
                      step_sizes={'dual-tpd-m@4': 1.2, 'pgd-fixed': 0.2})
    assert cfg.step_size('dual-tpd-m', 4.0) == 1.2
    assert cfg.step_size('dual-tpd-m', 3.0) == 0.9
    assert cfg.step_size('pgd-fixed', 1.5) == 0.2
    assert cfg.solver_config('pgd-fixed', 1.5).alpha == 0.2


def test_eps0_for_small_p():
    cfg = BenchConfig('iteration-table', eps0=1e-16, eps0_p_below_2=1e-10)
    assert cfg.eps0_for(1.5) == 1e-10
    assert cfg.eps0_for(4.0) == 1e-16


def test_observed_rates():
    h = [1 / 8, 1 / 16, 1 / 32]
    err = [0.4, 0.1, 0.025]
    rates = observed_rates(h, err)
    assert np.isnan(rates[0])
    assert np.allclose(rates[1:], 2.0)
    assert np.isclose(fitted_slope(h, err), 2.0)


def test_fitted_slope_needs_two_points():
    assert np.isnan(fitted_slope([1.0], [2.0]))
    assert np.isclose(fitted_slope([10, 100, 1000], [1, 10, 100]), 1.0)


def test_iteration_table_csv(tmpdir):
    """ Small run: one row per (solver, p, h) and a config comment line.
    """
    cfg = BenchConfig('iteration-table', p_values=[2.0], levels=[2, 3],
                      solvers=['dual-tpd-j', 'dual-tpd-m'])
    out = str(tmpdir)
    df = run_experiment(cfg, out)
    assert len(df) == 4
    assert df['converged'].all()
    path = os.path.join(out, 'iteration_table.csv')
    with open(path) as f:
        assert f.readline().startswith('# config: {')
    loaded = read_csv(path)
    assert list(loaded['solver']) == list(df['solver'])
    assert list(loaded['h']) == [1 / 8, 1 / 16, 1 / 8, 1 / 16]


def test_iteration_table_every_init(tmpdir):
    cfg = BenchConfig('iteration-table', p=2.0, levels=[2],
                      inits=['zero', 'random'])
    df = run_experiment(cfg, str(tmpdir))
    assert sorted(df['init']) == ['random', 'zero']
    assert df['converged'].all()


def test_disk_table_h_is_nominal(tmpdir):
    cfg = BenchConfig('iteration-table', domain='disk', p=2.0, levels=[2])
    df = run_experiment(cfg, str(tmpdir))
    assert df['table_h'].iloc[0] == df['h'].iloc[0] == 0.5


def test_error_table_columns(tmpdir):
    """ DoF columns in both conventions plus rates.
    """
    cfg = BenchConfig('error-table', p=2.0, levels=[2, 3])
    df = run_experiment(cfg, str(tmpdir))
    assert list(df['table_dof']) == [128 + 81, 512 + 289]
    assert list(df['dof']) == [256 + 49, 1024 + 225]
    assert list(df['table_h']) == [2 * h for h in df['h']]
    assert np.isnan(df['rate_u'].iloc[0])
    assert np.all(df['err_u'] > 0) and np.all(df['err_sigma'] > 0)


def test_single_level_time_growth(tmpdir):
    """ One mesh: one CSV row, NaN slope and an SVG with a single point.
    """
    cfg = BenchConfig('time-growth', p=2.0, levels=[2])
    df = run_experiment(cfg, str(tmpdir))
    assert len(df) == 1
    assert np.isnan(df['slope'].iloc[0])
    with open(os.path.join(str(tmpdir), 'time_growth.svg')) as f:
        svg = f.read()
    assert svg.startswith('<svg') and svg.count('<circle') == 1


def test_time_growth_takes_one_init_and_solver(tmpdir):
    with pytest.raises(ConfigurationError):
        run_experiment(BenchConfig('time-growth', p=2.0, levels=[2],
                                   inits=['zero', 'random']), str(tmpdir))
    with pytest.raises(ConfigurationError):
        run_experiment(BenchConfig('time-growth', p=2.0, levels=[2],
                                   solvers=['dual-tpd-j', 'dual-tpd-m']),
                       str(tmpdir))


def test_main_exit_codes(tmpdir):
    out = str(tmpdir.join('out'))
    good = write_config(tmpdir, experiment='iteration-table', p=2.0,
                        levels=[2])
    assert main(['iteration-table', '--config', good, '--out', out]) == 0

    capped = str(tmpdir.join('capped.json'))
    with open(capped, 'w') as f:
        json.dump({'experiment': 'iteration-table', 'p': 4.0, 'levels': [2],
                   'max_outer': 1}, f)
    assert main(['iteration-table', '--config', capped, '--out', out]) == 1

    bad = str(tmpdir.join('bad.json'))
    with open(bad, 'w') as f:
        json.dump({'experiment': 'iteration-table', 'solvers': ['sor']}, f)
    assert main(['iteration-table', '--config', bad, '--out', out]) == 2


def test_error_table_linear_oracle(tmpdir):
    """ At p = 2 the tabulated errors are those of the direct FEM solve.
    """
    cfg = BenchConfig('error-table', p=2.0, levels=[3])
    df = run_experiment(cfg, str(tmpdir))
    problem = problem_for(cfg, 2.0, 3)
    err_u, err_sigma = problem.errors(*linear_reference(problem))
    assert abs(df['err_u'].iloc[0] - err_u) <= 1e-9
    assert abs(df['err_sigma'].iloc[0] - err_sigma) <= 1e-9


@pytest.mark.slow
def test_error_table_config_rates(tmpdir):
    """ The shipped p = 4 error-table config converges on every mesh with
        second order in u and first order in sigma.
    """
    cfg = load_config(os.path.join(ROOT_PATH, 'configs', 'table1_error.json'))
    df = run_experiment(cfg, str(tmpdir))
    assert df['converged'].all()
    assert np.all(df['rate_u'].iloc[1:] >= 1.9)
    assert np.all(np.abs(df['rate_sigma'].iloc[1:] - 1.0) <= 0.1)
