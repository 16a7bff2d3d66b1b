"""Tests for cli.main — subcommands, exit codes, config files and sweeps."""

import json

import pytest

from cli.main import (EXIT_FAILURE, EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE, RunConfig, main,
                      parse_sweep)
from engine.errors import ParameterError


def run_json(capsys, *argv):
    code = main(list(argv))
    return code, json.loads(capsys.readouterr().out)


def run_metrics(capsys, tmp_path, *argv):
    """Reconstruct with the CSV sent to a file so stdout holds the JSON."""
    return run_json(capsys, *argv, '--out', str(tmp_path / "reconstructed.csv"))


def check(report, name):
    return next(c for c in report['checks'] if c['name'] == name)


def data_lines(path):
    return [line for line in path.read_text().splitlines()[1:] if not line.startswith('#')]


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

class TestVerify:

    def test_elliptic_passes(self, capsys):
        code, report = run_json(capsys, 'verify', '--system', 'elliptic')
        assert code == EXIT_OK
        assert report['passed'] is True
        assert report['parameters'] == {'k': '1/2'}

    def test_elliptic_displayed_forms(self, capsys):
        _, report = run_json(capsys, 'verify', '--system', 'elliptic', '--k', '0.5')
        forms = check(report, 'displayed-forms')['forms']
        assert forms[2]['displayed'] == "-k^2*J1*J2"
        assert forms[2]['f'] == "-1/4*J1*J2"
        assert all(form['matches'] for form in forms)

    def test_elliptic_isotropy_is_information(self, capsys):
        _, report = run_json(capsys, 'verify')
        isotropy = check(report, 'isotropy')
        assert isotropy['status'] == 'info'
        assert isotropy['samples'][0]['displayed_in_kernel'] is False

    def test_linear_gravity(self, capsys):
        code, report = run_json(capsys, 'verify', '--system', 'linear-gravity')
        assert code == EXIT_OK
        assert check(report, 'closure')['entries'][0]['f'] == "-1"
        assert check(report, 'split-commutation')['status'] == 'skip'
        assert check(report, 'stratum')['status'] == 'skip'

    def test_free_particle(self, capsys):
        code, report = run_json(capsys, 'verify', '--system', 'free-particle')
        assert code == EXIT_OK
        assert check(report, 'collective')['collective'] is True

    def test_raw_field_is_a_usage_error(self):
        assert main(['verify', '--system', 'halfplane-demo']) == EXIT_USAGE

    def test_report_file(self, tmp_path, capsys):
        path = tmp_path / "verify.json"
        assert main(['verify', '--report', str(path)]) == EXIT_OK
        assert capsys.readouterr().out == ''
        assert json.loads(path.read_text())['system'] == 'elliptic'

    def test_low_degree_fails_closure(self, capsys):
        code, report = run_json(capsys, 'verify', '--max-degree', '1')
        assert code == EXIT_FAILURE
        assert check(report, 'closure')['status'] == 'fail'


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

class TestSimulate:

    def test_elliptic_csv(self, tmp_path):
        path = tmp_path / "elliptic.csv"
        code = main(['simulate', '--t1', '1', '--samples', '11', '--out', str(path)])
        assert code == EXIT_OK
        lines = path.read_text().splitlines()
        assert lines[0] == "t,x,y,px,py,h,j1,j2,j3,sigma"
        assert len(data_lines(path)) == 11
        assert lines[-1] == "# status: completed"
        sigma = [float(line.split(',')[-1]) for line in data_lines(path)]
        assert max(abs(s - 1.0) for s in sigma) <= 1e-9

    def test_stdout(self, capsys):
        assert main(['simulate', '--system', 'linear-gravity', '--t1', '1', '--samples', '3']) == EXIT_OK
        out = capsys.readouterr().out
        assert out.startswith("t,q,p,h,j1,inv1\n0,0,1,0.5,1,1\n")

    def test_halfplane_blows_up(self, tmp_path):
        path = tmp_path / "halfplane.csv"
        assert main(['simulate', '--system', 'halfplane-demo', '--out', str(path)]) == EXIT_NUMERICAL
        text = path.read_text()
        assert text.endswith("# status: blow-up\n")
        assert all(float(line.split(',')[0]) < 1.0 for line in data_lines(path))

    def test_free_particle_momenta_are_constant(self, tmp_path):
        path = tmp_path / "free.csv"
        assert main(['simulate', '--system', 'free-particle', '--state', '0.5,-1,0.3,0.4',
                     '--t1', '3', '--samples', '31', '--out', str(path)]) == EXIT_OK
        rows = [[float(v) for v in line.split(',')] for line in data_lines(path)]
        for column in range(5, 10):
            assert max(abs(row[column] - rows[0][column]) for row in rows) <= 1e-12

    def test_drift_report(self, tmp_path):
        out, report = tmp_path / "run.csv", tmp_path / "run.json"
        assert main(['simulate', '--t1', '2', '--samples', '21', '--out', str(out),
                     '--report', str(report)]) == EXIT_OK
        drift = json.loads(report.read_text())['drift']
        assert set(drift) == {'h', 'j1', 'j2', 'j3', 'sigma'}
        assert drift['h'] <= 1e-9

    def test_byte_identical_reruns(self, tmp_path):
        first, second = tmp_path / "a.csv", tmp_path / "b.csv"
        for path in (first, second):
            main(['simulate', '--t1', '2', '--samples', '21', '--out', str(path)])
        assert first.read_bytes() == second.read_bytes()

    def test_rk4(self, tmp_path):
        path = tmp_path / "rk4.csv"
        assert main(['simulate', '--method', 'rk4-fixed', '--step', '0.01', '--t1', '1',
                     '--samples', '5', '--out', str(path)]) == EXIT_OK
        assert len(data_lines(path)) == 5

    @pytest.mark.parametrize("argv", [
        ['simulate', '--state', '1,2'],
        ['simulate', '--state', 'a,b,c,d'],
        ['simulate', '--t0', '2', '--t1', '1'],
        ['simulate', '--samples', '1'],
        ['simulate', '--system', 'pendulum'],
        ['simulate', '--k', '1.5'],
        ['simulate', '--method', 'euler'],
    ])
    def test_usage_errors(self, argv):
        assert main(argv) == EXIT_USAGE


# ---------------------------------------------------------------------------
# reconstruct
# ---------------------------------------------------------------------------

class TestReconstruct:

    def test_line(self, capsys, tmp_path):
        code, metrics = run_metrics(capsys, tmp_path, 'reconstruct', '--mode', 'line', '--t1', '2',
                                    '--samples', '201')
        assert code == EXIT_OK
        assert metrics['passed'] is True
        assert metrics['s_dot_mean'] == pytest.approx(1.875, abs=1e-8)
        assert max(metrics['max_error'].values()) <= 1e-6

    def test_split(self, capsys, tmp_path):
        code, metrics = run_metrics(capsys, tmp_path, 'reconstruct', '--mode', 'split', '--t1', '2',
                                    '--samples', '201')
        assert code == EXIT_OK
        assert metrics['mode'] == 'split'
        assert metrics['s_dot_mean'] is None

    def test_second(self, capsys, tmp_path):
        code, metrics = run_metrics(capsys, tmp_path, 'reconstruct', '--mode', 'second', '--t1', '2',
                                    '--samples', '201')
        assert code == EXIT_OK
        assert metrics['second_mode'] == 'full'
        assert metrics['residual'] <= 1e-6

    def test_perturbed_lift_fails(self):
        assert main(['reconstruct', '--mode', 'second', '--t1', '2', '--samples', '201',
                     '--perturb-lift', '1e-3']) == EXIT_FAILURE

    def test_tolerance_failure(self, capsys, tmp_path):
        code, metrics = run_metrics(capsys, tmp_path, 'reconstruct', '--t1', '1', '--samples', '101',
                                    '--tol', '1e-300')
        assert code == EXIT_FAILURE
        assert metrics['passed'] is False

    def test_csv_and_report_files(self, tmp_path, capsys):
        out, report = tmp_path / "line.csv", tmp_path / "line.json"
        assert main(['reconstruct', '--t1', '1', '--samples', '101', '--out', str(out),
                     '--report', str(report)]) == EXIT_OK
        assert capsys.readouterr().out == ''
        assert len(data_lines(out)) == 101
        assert json.loads(report.read_text())['mode'] == 'line'

    def test_csv_on_stdout_by_default(self, capsys):
        assert main(['reconstruct', '--t1', '1', '--samples', '101']) == EXIT_OK
        captured = capsys.readouterr()
        lines = captured.out.splitlines()
        assert lines[0] == "t,x,y,px,py,h,j1,j2,j3,sigma"
        assert lines[-1] == "# status: completed"
        assert '"mode": "line"' in captured.err

    def test_report_file_leaves_stdout_to_the_csv(self, tmp_path, capsys):
        report = tmp_path / "line.json"
        assert main(['reconstruct', '--t1', '1', '--samples', '101',
                     '--report', str(report)]) == EXIT_OK
        assert capsys.readouterr().out.startswith("t,x,y,px,py,")
        assert json.loads(report.read_text())['passed'] is True

    def test_linear_gravity_split_is_a_usage_error(self):
        assert main(['reconstruct', '--system', 'linear-gravity', '--mode', 'split']) == EXIT_USAGE

    def test_linear_gravity_second(self, capsys, tmp_path):
        code, metrics = run_metrics(capsys, tmp_path, 'reconstruct', '--system', 'linear-gravity',
                                    '--mode', 'second', '--samples', '201')
        assert code == EXIT_OK
        assert metrics['passed'] is True

    def test_zero_momentum(self):
        assert main(['reconstruct', '--state', '1,1,0,0', '--t1', '1']) == EXIT_USAGE


# ---------------------------------------------------------------------------
# elliptic-table and systems
# ---------------------------------------------------------------------------

class TestEllipticTable:

    def test_first_row(self, capsys):
        assert main(['elliptic-table', '--samples', '3']) == EXIT_OK
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "t,sn,cn,dn"
        assert lines[1] == "0,0,1,1"
        assert lines[2].startswith("5,")
        assert len(lines) == 4

    def test_circular_case(self, capsys):
        assert main(['elliptic-table', '--k', '0', '--t1', '1', '--samples', '2']) == EXIT_OK
        last = capsys.readouterr().out.splitlines()[-1].split(',')
        assert float(last[3]) == 1.0

    def test_modulus_out_of_range(self):
        assert main(['elliptic-table', '--k', '1.5']) == EXIT_USAGE

    def test_no_sweep(self):
        assert main(['elliptic-table', '--sweep', 'k=0.1:0.2:0.1']) == EXIT_USAGE


class TestSystems:

    def test_listing(self, capsys):
        code, listing = run_json(capsys, 'systems')
        assert code == EXIT_OK
        names = [s['name'] for s in listing['systems']]
        assert names == ['linear-gravity', 'elliptic', 'free-particle', 'halfplane-demo']


# ---------------------------------------------------------------------------
# Config files, sweeps and argument handling
# ---------------------------------------------------------------------------

class TestConfigFile:

    def test_flags_win(self, tmp_path):
        config = tmp_path / "run.json"
        config.write_text(json.dumps({'system': 'linear-gravity', 't1': 1.0, 'samples': 5}))
        out = tmp_path / "out.csv"
        assert main(['simulate', '--config', str(config), '--samples', '7',
                     '--out', str(out)]) == EXIT_OK
        assert out.read_text().startswith("t,q,p,")
        assert len(data_lines(out)) == 7

    def test_dashed_keys(self, tmp_path):
        config = tmp_path / "run.json"
        config.write_text(json.dumps({'abs-tol': 1e-8, 'rel-tol': 1e-8, 't1': 1.0, 'samples': 3}))
        assert main(['simulate', '--config', str(config)]) == EXIT_OK

    @pytest.mark.parametrize("content", ['{"colour": "blue"}', '[1, 2]', '{not json'])
    def test_bad_config(self, tmp_path, content):
        config = tmp_path / "bad.json"
        config.write_text(content)
        assert main(['simulate', '--config', str(config)]) == EXIT_USAGE

    def test_missing_config(self, tmp_path):
        assert main(['simulate', '--config', str(tmp_path / "absent.json")]) == EXIT_USAGE

    def test_state_string(self):
        assert RunConfig(state='-1,0,0,1').state == [-1.0, 0.0, 0.0, 1.0]


class TestSweep:

    def test_parse(self):
        name, values = parse_sweep('k=0.1:0.5:0.2')
        assert name == 'k'
        assert values == [0.1, 0.3, 0.5]

    @pytest.mark.parametrize("text", ['k=0.1:0.5', 'mass=0.1:0.5:0.1', 'k=0.5:0.1:0.1',
                                      'k=0.1:0.5:0'])
    def test_parse_rejects(self, text):
        with pytest.raises(ParameterError):
            parse_sweep(text)

    def test_suffixed_outputs(self, tmp_path):
        out = tmp_path / "run.csv"
        assert main(['simulate', '--sweep', 'k=0.3:0.5:0.1', '--t1', '1', '--samples', '11',
                     '--out', str(out)]) == EXIT_OK
        produced = sorted(p.name for p in tmp_path.iterdir())
        assert produced == ['run-k0.3.csv', 'run-k0.4.csv', 'run-k0.5.csv']

    def test_worst_exit_wins(self, tmp_path):
        assert main(['reconstruct', '--sweep', 'k=0.3:0.4:0.1', '--t1', '1', '--samples', '101',
                     '--tol', '1e-300', '--report', str(tmp_path / "r.json")]) == EXIT_FAILURE

    def test_sweep_out_of_range(self, tmp_path):
        assert main(['verify', '--sweep', 'k=0.5:1.5:0.5',
                     '--report', str(tmp_path / "v.json")]) == EXIT_USAGE


class TestArguments:

    def test_no_command(self):
        assert main([]) == EXIT_USAGE

    def test_unknown_command(self):
        assert main(['explode']) == EXIT_USAGE

    def test_help(self, capsys):
        assert main(['--help']) == EXIT_OK
        assert 'reconstruct' in capsys.readouterr().out
