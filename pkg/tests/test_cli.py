#!/usr/bin/env python
# -*- coding: utf-8 -*-
import json
import math
import unittest

import mock
from click.testing import CliRunner
from fs.memoryfs import MemoryFS

from cpqbm import __version__, cli

from .utils import dedent_config

CSV_HEADER = "t,mean_x,mean_p,var_x,var_p,cov_xp,energy,purity,trace_drift,min_eig,truncation_health"

GAS = """
    gas.m = 0.05
    gas.beta = 1
    gas.n = 1
    particle.M = 1
    tmatrix.t0 = 0.09
    hamiltonian.kind = harmonic
    hamiltonian.omega = 1
    basis.dim = 12
    integrator.dt = 0.01
    integrator.t_end = 0.5
"""

QUICK = """
    scenario.name = quick
""" + GAS


def all_numbers(value):
    if isinstance(value, dict):
        for v in value.values():
            yield from all_numbers(v)
    elif isinstance(value, list):
        for v in value:
            yield from all_numbers(v)
    elif isinstance(value, float):
        yield value


class TestHelp(unittest.TestCase):
    def test_help(self):
        runner = CliRunner()
        help_result = runner.invoke(cli.main, ["--help"])
        assert help_result.exit_code == 0
        assert "Show this message and exit." in help_result.output

    def test_run_help(self):
        result = CliRunner().invoke(cli.main, ["run", "--help"])
        assert result.exit_code == 0
        assert "--override-brownian-limit" in result.output
        assert "CPQBM_OUT_DIR" in result.output

    def test_version(self):
        result = CliRunner().invoke(cli.main, ["--version"])
        self.assertEqual(result.output.strip(), "cpqbm {0}".format(__version__))


class MemoryFSMixin(object):
    def setUp(self):
        super(MemoryFSMixin, self).setUp()
        self.runner = CliRunner()
        self.config_fs = MemoryFS()
        self.output_fs = MemoryFS()

        def get_config_fs(path):
            return self.config_fs.opendir(path)

        def get_output_fs(path):
            return self.output_fs.opendir(path)

        self.config_fs_patcher = mock.patch('cpqbm.cli.get_config_fs', new=get_config_fs)
        self.config_fs_patcher.start()
        self.output_fs_patcher = mock.patch('cpqbm.cli.get_output_fs', new=get_output_fs)
        self.output_fs_patcher.start()

    def tearDown(self):
        self.config_fs_patcher.stop()
        self.output_fs_patcher.stop()
        super(MemoryFSMixin, self).tearDown()

    def write_config(self, contents, path="scenarios.cfg"):
        self.config_fs.writetext(path, dedent_config(contents))

    def run_main(self, args, env=None):
        result = self.runner.invoke(cli.main, args=args, env=env)
        if result.exception is not None and not isinstance(result.exception, SystemExit):
            exc_info = result.exc_info
            raise exc_info[0].with_traceback(exc_info[1], exc_info[2])
        return result

    def read_json(self, path):
        return json.loads(self.output_fs.readtext(path))

    def csv_lines(self, path):
        return self.output_fs.readtext(path).splitlines()


class TestRun(MemoryFSMixin, unittest.TestCase):
    maxDiff = None

    def test_success(self):
        self.write_config(QUICK)
        result = self.run_main(["run", "scenarios.cfg"])
        self.assertEqual(result.exit_code, 0)
        self.assertEqual(result.output.strip(), "")
        lines = self.csv_lines("quick.csv")
        self.assertEqual(lines[0], CSV_HEADER)
        # record_every defaults to 10: t = 0, 0.1, ..., 0.5
        self.assertEqual(len(lines), 7)
        self.assertEqual(lines[-1].split(",")[0], "0.5")

        summary = self.read_json("quick.json")
        self.assertEqual(summary["name"], "quick")
        self.assertEqual(summary["cp_report"]["coefficient_check"]["verdict"], "Saturated")
        self.assertLess(summary["oracle_max_rel_dev"], 1e-3)
        self.assertGreater(summary["min_eig_overall"], -1e-8)
        self.assertLess(abs(summary["max_trace_drift"]), 1e-10)
        self.assertAlmostEqual(summary["hamiltonian_anticommutator_weight"], 0.0)
        c = summary["coefficients"]
        self.assertAlmostEqual(c["D_qq"], (1 / 4.0) ** 2 * c["D_pp"])
        self.assertAlmostEqual(summary["gao_D_qq"], c["D_qq"])
        self.assertTrue(all(math.isfinite(v) for v in all_numbers(summary)))

    def test_verbose(self):
        self.write_config(QUICK)
        result = self.run_main(["run", "scenarios.cfg", "--verbose"])
        self.assertEqual(result.exit_code, 0)
        self.assertIn("Running scenario 'quick' (qbm4)", result.output)
        self.assertIn("Complete positivity:", result.output)
        self.assertIn("Success!", result.output)

    def test_zero_scattering_is_unitary(self):
        self.write_config(QUICK.replace("tmatrix.t0 = 0.09", "tmatrix.t0 = 0"))
        result = self.run_main(["run", "scenarios.cfg"])
        self.assertEqual(result.exit_code, 0)
        summary = self.read_json("quick.json")
        self.assertEqual(summary["coefficients"]["D_pp"], 0.0)
        self.assertEqual(summary["cp_report"]["coefficient_check"]["verdict"], "Saturated")
        self.assertEqual(summary["stationary"]["var_p"], None)
        purity = summary["axes"][0]["final"]["purity"]
        self.assertAlmostEqual(purity, 1.0, places=9)

    def test_qbm5_reports_anticommutator_weight(self):
        self.write_config(QUICK + "    scenario.form = qbm5\n")
        result = self.run_main(["run", "scenarios.cfg"])
        self.assertEqual(result.exit_code, 0)
        summary = self.read_json("quick.json")
        self.assertAlmostEqual(summary["hamiltonian_anticommutator_weight"],
                               summary["coefficients"]["gamma"] / 2)

    def test_choi_scan(self):
        self.write_config(QUICK + "    output.choi = true\n    output.choi_dim = 4\n")
        result = self.run_main(["run", "scenarios.cfg"])
        self.assertEqual(result.exit_code, 0)
        report = self.read_json("quick.json")["cp_report"]
        self.assertEqual(report["dim_used"], 4)
        self.assertGreater(report["choi_min_eig"], -1e-8)

    def test_missing_config(self):
        result = self.run_main(["run", "nothere.cfg"])
        self.assertEqual(result.exit_code, 1)
        self.assertIn("Errors:", result.output)
        self.assertIn("Config file 'nothere.cfg' does not exist", result.output)

    def test_config_not_utf8(self):
        self.config_fs.writebytes("scenarios.cfg", b"scenario.name = caf\xe9\n")
        result = self.run_main(["run", "scenarios.cfg"])
        self.assertEqual(result.exit_code, 1)
        self.assertIn("Config file 'scenarios.cfg' is not valid UTF-8", result.output)

    def test_out_dir_is_a_file(self):
        self.write_config(QUICK)
        self.output_fs.writetext("results", "")
        result = self.run_main(["run", "scenarios.cfg", "--out-dir", "results"])
        self.assertEqual(result.exit_code, 1)
        self.assertIn("Output path 'results' exists and is not a directory", result.output)

    def test_bad_option_is_an_error_not_an_abort(self):
        self.write_config(QUICK)
        result = self.run_main(["run", "scenarios.cfg", "--jobs", "0"])
        self.assertEqual(result.exit_code, 1)
        self.assertEqual(list(self.output_fs.walk.files()), [])

    def test_config_errors(self):
        self.write_config(QUICK + "    basis.size = 12\n    gas.n = 0\n")
        result = self.run_main(["run", "scenarios.cfg"])
        self.assertEqual(result.exit_code, 1)
        self.assertEqual(result.output.strip(), """
Errors:

scenarios.cfg:13: basis.size: unknown key
scenarios.cfg:14: gas.n: must be positive
""".strip())
        self.assertEqual(list(self.output_fs.walk.files()), [])

    def test_brownian_limit_failure(self):
        self.write_config(QUICK.replace("gas.m = 0.05", "gas.m = 0.6"))
        result = self.run_main(["run", "scenarios.cfg"])
        self.assertEqual(result.exit_code, 1)
        self.assertIn("outside the Brownian limit", result.output)
        self.assertEqual(list(self.output_fs.walk.files()), [])

    def test_brownian_limit_override(self):
        self.write_config(QUICK.replace("gas.m = 0.05", "gas.m = 0.6")
                          .replace("tmatrix.t0 = 0.09", "tmatrix.t0 = 0.005"))
        result = self.run_main(["run", "scenarios.cfg", "--override-brownian-limit"])
        self.assertEqual(result.exit_code, 0)
        self.assertTrue(self.read_json("quick.json")["brownian_limit"]["overridden"])

    def test_brownian_limit_override_in_config(self):
        self.write_config(QUICK.replace("gas.m = 0.05", "gas.m = 0.6")
                          .replace("tmatrix.t0 = 0.09", "tmatrix.t0 = 0.005")
                          + "    scenario.override_brownian_limit = true\n")
        result = self.run_main(["run", "scenarios.cfg"])
        self.assertEqual(result.exit_code, 0)

    def test_brownian_limit_warning(self):
        self.write_config(QUICK.replace("gas.m = 0.05", "gas.m = 0.3")
                          .replace("tmatrix.t0 = 0.09", "tmatrix.t0 = 0.01"))
        result = self.run_main(["run", "scenarios.cfg"])
        self.assertEqual(result.exit_code, 0)
        self.assertIn("Warnings:", result.output)
        self.assertIn("m/M = 0.3 (WARN)", result.output)

    def test_warnings_stay_with_their_scenario(self):
        large = GAS.replace("basis.dim = 12", "basis.dim = 20") + """
    initial.kind = coherent
    initial.alpha = 2.3
"""
        self.write_config("    scenario.name = a\n" + large + "    scenario.name = b\n" + large)
        result = self.run_main(["run", "scenarios.cfg", "--jobs", "2"])
        self.assertEqual(result.exit_code, 0)
        self.assertIn("Warnings:", result.output)
        for name in ["a", "b"]:
            self.assertEqual(result.output.count("Scenario '{0}': Coherent amplitude".format(name)), 1)

    def test_truncation_overflow(self):
        self.write_config(QUICK.replace("basis.dim = 12", "basis.dim = 8") + "    initial.n = 7\n")
        result = self.run_main(["run", "scenarios.cfg"])
        self.assertEqual(result.exit_code, 2)
        self.assertIn("increase basis.dim", result.output)
        # Partial trajectory: header plus the initial row.
        self.assertEqual(len(self.csv_lines("quick.csv")), 2)
        self.assertIsNotNone(self.read_json("quick.json")["axes"][0]["aborted"])

    def test_worst_status_wins(self):
        self.write_config(QUICK + """
    scenario.name = overflow
""" + GAS.replace("basis.dim = 12", "basis.dim = 8") + """
    initial.n = 7
    scenario.name = heavy
""" + GAS.replace("gas.m = 0.05", "gas.m = 0.6"))
        result = self.run_main(["run", "scenarios.cfg"])
        self.assertEqual(result.exit_code, 1)
        self.assertTrue(self.output_fs.exists("quick.csv"))
        self.assertTrue(self.output_fs.exists("overflow.csv"))
        self.assertFalse(self.output_fs.exists("heavy.csv"))

    def test_out_dir(self):
        self.write_config(QUICK)
        result = self.run_main(["run", "scenarios.cfg", "--out-dir", "results"])
        self.assertEqual(result.exit_code, 0)
        self.assertTrue(self.output_fs.exists("results/quick.csv"))
        self.assertTrue(self.output_fs.exists("results/quick.json"))

    def test_out_dir_from_environment(self):
        self.write_config(QUICK)
        result = self.run_main(["run", "scenarios.cfg"], env={"CPQBM_OUT_DIR": "from_env"})
        self.assertEqual(result.exit_code, 0)
        self.assertTrue(self.output_fs.exists("from_env/quick.csv"))

    def test_out_dir_flag_beats_environment(self):
        self.write_config(QUICK)
        result = self.run_main(["run", "scenarios.cfg", "--out-dir", "from_flag"],
                               env={"CPQBM_OUT_DIR": "from_env"})
        self.assertEqual(result.exit_code, 0)
        self.assertTrue(self.output_fs.exists("from_flag/quick.csv"))
        self.assertFalse(self.output_fs.exists("from_env"))

    def test_tabulated_relative_to_config(self):
        self.config_fs.makedir("configs")
        # Constant |t|^2 = 0.0081 out past the Boltzmann cutoff
        rows = "\n".join("{0} 0.0081".format(i * 0.5) for i in range(0, 30))
        self.config_fs.writetext("configs/t.dat", rows + "\n")
        self.write_config(QUICK.replace("tmatrix.t0 = 0.09", "tmatrix.model = tabulated\n"
                                        "    tmatrix.file = t.dat"),
                          path="configs/scenarios.cfg")
        result = self.run_main(["run", "configs/scenarios.cfg"])
        self.assertEqual(result.exit_code, 0)
        self.assertEqual(self.read_json("quick.json")["coefficients"]["tmatrix"], "Tabulated")

    def test_axes(self):
        self.write_config(QUICK + """
    scenario.axes = 3
    initial.kind = coherent
    initial.alpha = 0.5, -0.5, 0.5
""")
        result = self.run_main(["run", "scenarios.cfg"])
        self.assertEqual(result.exit_code, 0)
        for i in [1, 2, 3]:
            self.assertEqual(self.csv_lines("quick.axis{0}.csv".format(i))[0], CSV_HEADER)
        self.assertFalse(self.output_fs.exists("quick.csv"))
        summary = self.read_json("quick.json")
        self.assertEqual([a["axis"] for a in summary["axes"]], [0, 1, 2])
        # Axes 1 and 3 start from the same state.
        self.assertEqual(self.output_fs.readtext("quick.axis1.csv"),
                         self.output_fs.readtext("quick.axis3.csv"))
        self.assertAlmostEqual(summary["total_final_energy"],
                               sum(a["final"]["energy"] for a in summary["axes"]))

    def test_deterministic_with_jobs(self):
        config = QUICK + """
    scenario.name = rand
""" + GAS + """
    initial.kind = squeezed
    initial.r = 0.3
    initial.alpha = 0.2
"""
        self.write_config(config)
        result = self.run_main(["run", "scenarios.cfg", "--jobs", "1"])
        self.assertEqual(result.exit_code, 0)
        first = {p: self.output_fs.readtext(p) for p in ["quick.csv", "rand.csv"]}

        self.output_fs = MemoryFS()
        result = self.run_main(["run", "scenarios.cfg", "--jobs", "2"])
        self.assertEqual(result.exit_code, 0)
        second = {p: self.output_fs.readtext(p) for p in ["quick.csv", "rand.csv"]}
        self.assertEqual(first, second)


class TestCompare(MemoryFSMixin, unittest.TestCase):
    def test_compare(self):
        self.write_config(GAS + """
    basis.dim = 20
    scenario.name = full
    scenario.form = qbm4
    scenario.name = cl
    scenario.form = caldeira_leggett
    scenario.name = lindblad
    scenario.form = qbm5
""")
        result = self.run_main(["compare", "scenarios.cfg"])
        self.assertEqual(result.exit_code, 0)
        self.assertIn("caldeira_leggett", result.output)
        lines = self.csv_lines("compare.csv")
        self.assertEqual(lines[0], "name,form,D_pp,D_qq,gamma,cp_verdict,stationary_var_p,"
                                   "final_var_p,min_eig_overall,max_dev_vs_first")
        rows = {line.split(",")[0]: line.split(",") for line in lines[1:]}
        self.assertEqual(rows["cl"][3], "0")
        self.assertEqual(rows["cl"][5], "Violated")
        self.assertEqual(rows["full"][5], "Saturated")
        self.assertEqual(float(rows["full"][9]), 0.0)
        # The two forms of the same equation agree.
        self.assertLess(float(rows["lindblad"][9]), 1e-6)
        self.assertEqual(float(rows["full"][3]), (1 / 4.0) ** 2 * float(rows["full"][2]))
        for name in ["full", "cl", "lindblad"]:
            self.assertTrue(self.output_fs.exists("{0}.csv".format(name)))

    def test_incompatible(self):
        self.write_config(QUICK + """
    scenario.name = other
""" + GAS.replace("particle.M = 1", "particle.M = 2"))
        result = self.run_main(["compare", "scenarios.cfg"])
        self.assertEqual(result.exit_code, 1)
        self.assertIn("scenario 'other' has a different M from 'quick'", result.output)
        self.assertFalse(self.output_fs.exists("compare.csv"))

    def test_needs_two(self):
        self.write_config(QUICK)
        result = self.run_main(["compare", "scenarios.cfg"])
        self.assertEqual(result.exit_code, 1)
        self.assertIn("compare needs at least two scenarios", result.output)
