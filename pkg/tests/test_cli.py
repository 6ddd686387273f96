import csv
import hashlib
import json
import subprocess
import sys

import numpy as np
import pytest

from polyops.cmx import write_cmx


def run(*args, cwd=None):
    proc = subprocess.run([sys.executable, '-m', 'polyops.cli', *map(str, args)],
                          capture_output=True, text=True, cwd=cwd)
    return proc


@pytest.fixture
def diag_cmx(tmp_path):
    p = tmp_path / 'diag.cmx'
    write_cmx(p, np.diag(1 / np.arange(1.0, 17.0)))
    return p


def _report(path):
    with open(path) as fh:
        return json.load(fh)


def test_project_report(diag_cmx, tmp_path):
    out = tmp_path / 'r.json'
    proc = run('project', '--matrix', diag_cmx, '--eps', 0.1, '--theta', 4, '--json', out)
    assert proc.returncode == 0, proc.stderr
    rep = _report(out)
    assert set(rep) == {'command', 'params', 'seed', 'version', 'inputs', 'results',
                        'assertions', 'timings'}
    assert rep['results']['bound_rhs'] > 0
    assert all(a['pass'] for a in rep['assertions'])
    assert all(a['anchor'] for a in rep['assertions'])
    digest = hashlib.sha256(diag_cmx.read_bytes()).hexdigest()
    assert list(rep['inputs'].values()) == [digest]


def test_results_block_is_deterministic(diag_cmx, tmp_path):
    blocks = []
    for i in range(2):
        out = tmp_path / f'r{i}.json'
        assert run('capacity', '--matrix', diag_cmx, '--nmax', 3, '--seed', 7, '--json', out).returncode == 0
        blocks.append(json.dumps(_report(out)['results'], sort_keys=True))
    assert blocks[0] == blocks[1]


def test_verify_suite_small():
    proc = run('verify', '--suite', 'block', '--count', 3, '--seed', 1)
    assert proc.returncode == 0, proc.stderr
    rep = json.loads(proc.stdout)
    assert rep['seed'] == 1 and rep['results']['block']['failures'] == 0
    assert len(rep['assertions']) == 18


def test_zoo_circulant_sum():
    proc = run('zoo', 'run', '--family', 'circulant-sum')
    assert proc.returncode == 0, proc.stderr
    rep = json.loads(proc.stdout)
    first = rep['assertions'][0]
    assert first['lhs'] < 1e-9 and first['pass']


def test_failed_assertion_exit_code(diag_cmx):
    proc = run('classify', '--matrix', diag_cmx, '--class', 'unitary', '--dmax', 1)
    assert proc.returncode == 1
    assert 'certified' in proc.stderr


def test_input_errors(tmp_path):
    bad = tmp_path / 'bad.cmx'
    bad.write_text('2 2\n1 2\n')
    assert run('growth', '--matrix', bad).returncode == 2
    assert run('growth', '--matrix', tmp_path / 'missing.cmx').returncode == 2
    assert run('frobnicate').returncode == 2


def test_growth_csv(diag_cmx, tmp_path):
    out = tmp_path / 'g.csv'
    assert run('growth', '--matrix', diag_cmx, '--radii', '1,4,16', '--csv', out).returncode == 0
    rows = list(csv.reader(open(out)))
    assert rows[0] == ['r', 'm', 'N', 'T'] and len(rows) == 4
    r, m, N, T = map(float, rows[-1])
    assert T == pytest.approx(m + N)


def test_config_file(diag_cmx, tmp_path):
    cfg = tmp_path / 'run.cfg'
    cfg.write_text('# growth settings\nradii = 2,8\nnodes = 128\n')
    proc = run('growth', '--matrix', diag_cmx, '--config', cfg)
    assert proc.returncode == 0, proc.stderr
    rep = json.loads(proc.stdout)
    assert rep['params']['nodes'] == 128 and len(rep['results']['radii']) == 2
    cfg.write_text('colour = blue\n')
    assert run('growth', '--matrix', diag_cmx, '--config', cfg).returncode == 2


def test_block_and_multicentric(tmp_path):
    for name, M in (('a', [[2.0]]), ('b', [[1.0]]), ('c', [[5.0]])):
        write_cmx(tmp_path / f'{name}.cmx', np.array(M))
    proc = run('block', '--a', 'a.cmx', '--b', 'b.cmx', '--c', 'c.cmx', cwd=tmp_path)
    assert proc.returncode == 0, proc.stderr
    write_cmx(tmp_path / 'm.cmx', np.diag([1.02, 0.97, -1.01]))
    proc = run('multicentric', '--matrix', 'm.cmx', '--centers', '1,-1', '--phi', 'exp', cwd=tmp_path)
    assert proc.returncode == 0, proc.stderr
    assert json.loads(proc.stdout)['results']['relative_error_vs_direct'] < 1e-8
