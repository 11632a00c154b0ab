# -*- coding: utf-8 -*-
import csv
import json
import math
import unittest

import pytest
from click.testing import CliRunner

from cpqbm import cli
from cpqbm.coefficients import GasParameters, boltzmann_exponent, dpp_prefactor

from .utils import dedent_config


def t0_for_Dpp(D_pp, gas):
    # Constant |t|^2 gives D_pp = prefactor * 2 pi t0^2 / c^2
    c = boltzmann_exponent(gas)
    return math.sqrt(D_pp * c ** 2 / (2 * math.pi * dpp_prefactor(gas)))


GAS = GasParameters(m=0.05, beta=1.0, n=1.0)

TRAPPED = """
    gas.m = 0.05
    gas.beta = 1
    gas.n = 1
    particle.M = 1
    tmatrix.t0 = {t0!r}
    hamiltonian.kind = harmonic
    hamiltonian.omega = 1
    basis.dim = 40
    initial.kind = coherent
    initial.alpha = 1
    integrator.dt = 0.01
    integrator.t_end = {t_end}
    integrator.record_every = 1000
"""


@pytest.mark.slow
class TestEndToEnd(unittest.TestCase):

    def run_config(self, text, command):
        runner = CliRunner()
        with runner.isolated_filesystem():
            with open("scenarios.cfg", "w") as f:
                f.write(dedent_config(text))
            result = runner.invoke(cli.main, [command, "scenarios.cfg", "--out-dir", "out"],
                                   catch_exceptions=False)
            outputs = {}
            for name in ["relax.json", "relax.csv", "compare.csv"]:
                try:
                    with open("out/" + name) as f:
                        outputs[name] = f.read()
                except IOError:
                    pass
        return result, outputs

    def test_relaxes_to_equilibrium(self):
        t0 = t0_for_Dpp(0.2, GAS)
        result, outputs = self.run_config(
            "scenario.name = relax\n" + TRAPPED.format(t0=t0, t_end=100), "run")
        self.assertEqual(result.exit_code, 0, result.output)

        summary = json.loads(outputs["relax.json"])
        c = summary["coefficients"]
        self.assertAlmostEqual(c["D_pp"], 0.2, places=7)
        self.assertAlmostEqual(c["gamma"], 0.1, places=7)
        self.assertAlmostEqual(summary["stationary"]["var_p"], 1.0625)
        self.assertLessEqual(summary["oracle_max_rel_dev"], 1e-3)
        self.assertGreater(summary["min_eig_overall"], -1e-8)

        rows = list(csv.DictReader(outputs["relax.csv"].splitlines()))
        self.assertEqual(len(rows), 11)
        self.assertEqual(float(rows[-1]["t"]), 100.0)
        final_var_p = float(rows[-1]["var_p"])
        self.assertLess(abs(final_var_p - 1.0625) / 1.0625, 0.01)

    def test_two_forms_agree(self):
        t0 = t0_for_Dpp(0.2, GAS)
        result, outputs = self.run_config(
            TRAPPED.format(t0=t0, t_end=20) + """
    scenario.name = four
    scenario.form = qbm4
    scenario.name = five
    scenario.form = qbm5
""", "compare")
        self.assertEqual(result.exit_code, 0, result.output)
        rows = {r["name"]: r for r in csv.DictReader(outputs["compare.csv"].splitlines())}
        self.assertEqual(rows["four"]["cp_verdict"], "Saturated")
        self.assertLess(float(rows["five"]["max_dev_vs_first"]), 1e-6)
