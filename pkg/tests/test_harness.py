import csv
import math

import numpy as np
import pytest

from pgsim.psystem import harness
from pgsim.psystem import photonic_device as pd
from pgsim.psystem import error_models as em
from pgsim.psystem.harness import ExperimentSpec
from pgsim.psystem.content.device_config import DeviceConfig, ErrorParams, RpegMode
from pgsim.psystem.log_system import LogSystem, RuntimeErrorWithLog, ConfigErrorWithLog, NumericErrorWithLog


def sigma_device(sigma, rpeg = RpegMode.FUSION):
    return DeviceConfig.default(rpeg, error = ErrorParams(sigma = sigma))


def test_integration_time_of_table_counts():
    assert harness.integration_time(2640, 5.7e-3) == pytest.approx(4.63e5, rel = 1e-3)
    assert harness.DEFAULT_INTEGRATION_TIME * 16 == pytest.approx(4.63e5, rel = 1e-3)
    with pytest.raises(RuntimeErrorWithLog):
        harness.integration_time(10, 0.)


def test_spec_validation():
    with pytest.raises(ConfigErrorWithLog):
        ExperimentSpec("tomography", DeviceConfig.default())
    with pytest.raises(ConfigErrorWithLog):
        ExperimentSpec("stabilizers", DeviceConfig.default(), integration_time = 0.)
    with pytest.raises(ConfigErrorWithLog):
        ExperimentSpec("stabilizers", DeviceConfig.default(), rate_scale = -1.)
    with pytest.raises(ConfigErrorWithLog):
        ExperimentSpec("stabilizers", DeviceConfig.default(), options = {"remove" : {3}})


def test_spec_from_document():
    text = sigma_device(0.9).serialize() + "experiment\n    kind = mermin ;\n    seed = 7 ;\n" \
        "    exact = true ;\n    remove = [3] ;\nend\n"
    spec = ExperimentSpec.from_document(text)
    assert spec.kind == "mermin"
    assert spec.seed == 7 and spec.exact
    assert spec.device.error.sigma == 0.9
    assert spec.options == {"remove" : [3.]}

    spec = ExperimentSpec.from_document(text, kind = "project", seed = 1)
    assert spec.kind == "project" and spec.seed == 1


def test_spec_from_document_without_kind():
    with pytest.raises(ConfigErrorWithLog):
        ExperimentSpec.from_document(DeviceConfig.default().serialize())


def test_calibrated_rate():
    # the first order star state has postselection 1/2 in every setting
    assert harness.calibrated_rate_scale(DeviceConfig.default()) == pytest.approx(2 * 5.7e-3)


def test_exact_ideal_star():
    report = harness.run(ExperimentSpec("stabilizers", DeviceConfig.default(), exact = True))
    assert report.derived["F"] == pytest.approx(1., abs = 1e-9)
    assert report.derived["F_err"] < 1e-5
    assert report.derived["witness"]
    columns, rows = report.tables["expectations"]
    assert columns == ("label", "stabilizer", "expectation", "error")
    assert len(rows) == 16


def test_exact_ideal_line_mermin():
    report = harness.run(ExperimentSpec("mermin", DeviceConfig.default(RpegMode.CZ), exact = True))
    assert report.derived["F"] == pytest.approx(1., abs = 1e-6)
    assert report.derived["M_III"] == pytest.approx(16., abs = 1e-6)
    assert report.derived["M_II"] == pytest.approx(4., abs = 1e-6)
    assert report.derived["M_II_violates"] and report.derived["M_III_violates"]


def test_sampled_error_bar_at_table_counts():
    report = harness.run(ExperimentSpec("stabilizers", sigma_device(0.82), seed = 0))
    n_settings = len(report.counts.settings)
    assert report.counts.total() == pytest.approx(165 * n_settings, rel = 0.15)
    assert 0.005 <= report.derived["F_err"] <= 0.025
    assert 0.6 <= report.derived["F"] <= 0.95


def test_same_seed_same_report():
    spec = ExperimentSpec("mermin", sigma_device(0.82), seed = 5)
    a, b = harness.run(spec), harness.run(spec)
    assert a.counts == b.counts
    assert harness.summary_text(a) == harness.summary_text(b)
    c = harness.run(ExperimentSpec("mermin", sigma_device(0.82), seed = 6))
    assert c.counts != a.counts


def test_sampled_fidelity_is_unbiased():
    model = em.predict_distinguishability("S4", 0.82).fidelity
    fs = np.array([harness.run(ExperimentSpec("stabilizers", sigma_device(0.82), seed = s)).derived["F"]
        for s in range(100)])
    se = fs.std(ddof = 1) / math.sqrt(len(fs))
    assert abs(fs.mean() - model) < 3 * se


def test_zero_probability_experiment(monkeypatch):
    zero = pd.OutcomeDistribution({k : 0. for k in pd.PATTERNS})
    monkeypatch.setattr(harness.pd, "simulate_setting", lambda config, letters : zero)
    with pytest.raises(NumericErrorWithLog):
        harness.run(ExperimentSpec("stabilizers", DeviceConfig.default(), rate_scale = 1.))


def test_phase_errors_need_ideal_photons():
    device = DeviceConfig.default(error = ErrorParams(sigma = 0.9, delta = 0.1))
    with pytest.raises(RuntimeErrorWithLog):
        harness.run(ExperimentSpec("stabilizers", device))


def test_phase_error_run():
    device = DeviceConfig.default(error = ErrorParams(delta = 0.185))
    report = harness.run(ExperimentSpec("stabilizers", device, exact = True, options = {"mc_samples" : 2000}))
    assert 0.7 <= report.derived["F"] < 1.


def test_round_trip(tmp_path):
    report = harness.run(ExperimentSpec("mermin", sigma_device(0.82), seed = 3))
    harness.export(report, tmp_path)
    LogSystem.open_default()
    LogSystem("warning").summary()
    back = harness.import_report(tmp_path, "mermin")
    assert back.derived == report.derived
    assert back.counts == report.counts
    assert back.device == report.device
    assert back.provenance == report.provenance
    assert LogSystem("warning").empty


def test_export_is_reproducible(tmp_path):
    spec = ExperimentSpec("stabilizers", sigma_device(0.9), seed = 2)
    harness.export(harness.run(spec), tmp_path / "a")
    harness.export(harness.run(spec), tmp_path / "b")
    for name in ("stabilizers_counts.csv", "stabilizers_expectations.csv", "stabilizers_summary.txt"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_export_unknown_format(tmp_path):
    report = harness.run(ExperimentSpec("loss", DeviceConfig.default()))
    with pytest.raises(ConfigErrorWithLog):
        harness.export(report, tmp_path, ("xlsx",))


def test_import_wrong_kind(tmp_path):
    harness.export(harness.run(ExperimentSpec("loss", DeviceConfig.default())), tmp_path)
    (tmp_path / "sim_summary.txt").write_text((tmp_path / "loss_summary.txt").read_text())
    (tmp_path / "sim_device.cfg").write_text((tmp_path / "loss_device.cfg").read_text())
    with pytest.raises(ConfigErrorWithLog):
        harness.import_report(tmp_path, "sim")


def test_hom_ideal_and_operating_point():
    ideal = harness.run(ExperimentSpec("hom", sigma_device(1.), exact = True))
    assert ideal.derived["V"] == pytest.approx(1., abs = 1e-4)
    report = harness.run(ExperimentSpec("hom", sigma_device(0.82), exact = True))
    assert report.derived["V"] == pytest.approx(0.82, abs = 0.01)
    assert report.derived["V_hom"] == pytest.approx(0.80, abs = 0.02)


def test_hom_export_refits(tmp_path):
    report = harness.run(ExperimentSpec("hom", sigma_device(0.82), seed = 4))
    harness.export(report, tmp_path)
    with open(tmp_path / "hom_fringe.csv", newline = "") as f:
        rows = list(csv.reader(f))
    assert tuple(rows[0]) == ("phase_rad", "counts")
    samples = [(float(x), float(c)) for x, c in rows[1:]]
    v, v_hom = pd.fringe_visibility(samples)
    assert v == report.derived["V"]
    assert v_hom == report.derived["V_hom"]
    assert harness.import_report(tmp_path, "hom").derived == report.derived


def test_bayes_round_trip(tmp_path):
    spec = ExperimentSpec("bayes", sigma_device(0.82), exact = True,
        options = {"model" : "sigma", "grid" : [0.75, 0.9, 0.01], "shots" : 165})
    report = harness.run(spec)
    assert abs(report.derived["mean"] - 0.82) < 0.03
    assert report.derived["interval_low"] < 0.82 < report.derived["interval_high"]
    harness.export(report, tmp_path)
    with open(tmp_path / "bayes_posterior.csv", newline = "") as f:
        rows = list(csv.DictReader(f))
    assert sum(float(r["probability"]) for r in rows) == pytest.approx(1., abs = 1e-9)
    assert harness.import_report(tmp_path, "bayes").derived == report.derived


@pytest.mark.parametrize("remove, vertices, quantum, classical", [
    ([3], "1,2,4", 8., 6.),
    ([2, 3], "1,4", 4., 2.),
])
def test_project_ideal(remove, vertices, quantum, classical):
    report = harness.run(ExperimentSpec("project", DeviceConfig.default(), exact = True,
        options = {"remove" : remove}))
    assert report.derived["vertices"] == vertices
    assert report.derived["F"] == pytest.approx(1., abs = 1e-6)
    assert report.derived["M_III"] == pytest.approx(quantum, abs = 1e-6)
    assert report.derived["M_III_quantum"] == quantum
    assert report.derived["M_III_classical"] == classical


def test_bell_ideal():
    report = harness.run(ExperimentSpec("bell", DeviceConfig.default(), exact = True))
    assert report.derived["S"] == pytest.approx(2. * math.sqrt(2.), abs = 1e-6)
    assert report.derived["F_bell"] == pytest.approx(1., abs = 1e-6)
    assert report.counts.n_qubits == 2


def test_bell_unknown_pair():
    with pytest.raises(RuntimeErrorWithLog):
        harness.run(ExperimentSpec("bell", DeviceConfig.default(), options = {"pair" : [1, 2]}))


def test_sim_postselection():
    report = harness.run(ExperimentSpec("sim", DeviceConfig.default()))
    assert report.derived["postselection"] == pytest.approx(0.5, abs = 1e-9)
    assert len(report.tables["probabilities"][1]) == 16


def test_loss_budget():
    report = harness.run(ExperimentSpec("loss", DeviceConfig.default()))
    assert report.derived["total_dB"] == pytest.approx(19.3, abs = 0.1)
    report = harness.run(ExperimentSpec("loss", DeviceConfig.default(), options = {"entries" : [4, 0.65, 3]}))
    assert report.derived["total_dB"] == pytest.approx(7.65)


def test_calibrate_from_files(tmp_path):
    rho1, f, phi0 = 2e-3, 20., 0.3
    power = np.linspace(0., 0.7, 60)
    v = np.sqrt(power / rho1)
    lines = ["voltage,current,transmission"]
    for vk, pk in zip(v, power):
        lines.append(repr(float(vk)) + "," + repr(float(rho1 * vk)) + "," + repr(float(0.5 * math.sin(f * pk + phi0) + 0.5)))
    (tmp_path / "fringe.csv").write_text("\n".join(lines) + "\n")
    (tmp_path / "powers.csv").write_text("configuration_id,power_mW\na,100\nb,140\nc,120\n")

    spec = ExperimentSpec("calibrate", DeviceConfig.default(), options = {
        "fringe_csv" : str(tmp_path / "fringe.csv"), "power_csv" : str(tmp_path / "powers.csv"), "targets" : [1.5]})
    report = harness.run(spec)
    assert report.derived["fit_f"] == pytest.approx(f, abs = 1e-4)
    assert report.derived["rho1"] == pytest.approx(rho1, rel = 1e-6)
    target, voltage, phase = report.tables["dial"][1][0]
    assert abs(np.mod(phase - target + np.pi, 2 * np.pi) - np.pi) < 1e-6
    assert report.derived["power_mean"] == pytest.approx(120.)
    assert report.derived["phase_error_mad"] == pytest.approx(0.003 * 40. / 3.)


def test_calibrate_needs_files():
    with pytest.raises(ConfigErrorWithLog):
        harness.run(ExperimentSpec("calibrate", DeviceConfig.default()))
