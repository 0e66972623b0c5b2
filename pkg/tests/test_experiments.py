import numpy as np
import pytest

from neuralgates import exact, experiments, quantum, realrep
from neuralgates import net as nn
from neuralgates.errors import ConfigError, MissingWeights
from neuralgates.experiments import CSV_COLUMNS, ExperimentConfig


def tiny(experiment="fig1", **kw):
    base = dict(experiment=experiment, samples=400, epochs=4, batch=100, eval_batch=50)
    base.update(kw)
    return ExperimentConfig(**base)


class TestConfig:
    def test_desk_defaults(self):
        c = ExperimentConfig("fig1").resolve()
        assert (c.samples, c.epochs, c.batch, c.m, c.optimizer) == (10_000, 500, 1000, 15, "adagrad")
        assert c.n_max == 1024 and c.eval_batch == 1000 and c.activation == "linear"
        q = ExperimentConfig("quantumness").resolve()
        assert q.samples == 100_000 and q.optimizer == "adadelta" and q.activation == "relu"
        assert q.batch_schedule == [32, 64, 128, 256, 512]
        assert ExperimentConfig("fig3", oracle=True).resolve().n_max == 2 ** 15

    def test_full_scale(self):
        c = ExperimentConfig("fig1", full_scale=True).resolve()
        assert c.samples == 100_000 and c.epochs == 3000
        assert ExperimentConfig("quantumness", full_scale=True).resolve().samples == 1_000_000

    def test_fig2_epochs_follow_checkpoints(self):
        c = ExperimentConfig("fig2", checkpoints=[5, 10]).resolve()
        assert c.epochs == 10

    def test_invalid(self):
        with pytest.raises(ConfigError):
            ExperimentConfig("fig9").resolve()
        with pytest.raises(ConfigError):
            ExperimentConfig("fig1", samples=5).resolve()
        with pytest.raises(ConfigError):
            ExperimentConfig("fig1", optimizer="sgd").resolve()

    def test_lines_round_trip(self):
        c = ExperimentConfig("fig2", m_list=[12, 13, 20], lr=0.05, oracle=True).resolve()
        parsed = experiments.parse_config_text("\n".join(c.to_lines()))
        assert ExperimentConfig(**parsed) == c

    def test_parse_ranges_and_comments(self):
        v = experiments.parse_config_text("m_list = 12..14, 20  # sweep\n\nseed = 3\n")
        assert v == {"m_list": [12, 13, 14, 20], "seed": 3}

    def test_unknown_key(self):
        with pytest.raises(ConfigError):
            experiments.parse_config_text("colour = blue")
        with pytest.raises(ConfigError):
            experiments.parse_config_text("just words")

    def test_run_id_stable(self):
        assert tiny().resolve().run_id() == tiny().resolve().run_id()
        assert tiny().resolve().run_id() != tiny(seed=2).resolve().run_id()


class TestRuns:
    def test_fig1_records_and_files(self, tmp_path):
        res = experiments.run_fig1(tiny())
        assert [r["index"] for r in res.rows] == [0, 1, 2, 3, 4]
        assert all(r["experiment"] == "fig1-cnot-m15" for r in res.rows)
        assert all(r["loss"] >= 0 for r in res.rows)
        run = experiments.write_run(res, tmp_path)
        assert run == tmp_path / "fig1" / res.config.run_id()
        assert (run / "records.csv").read_text().splitlines()[0] == ",".join(CSV_COLUMNS)
        assert (run / "weights-cnot.txt").is_file()
        cfg = experiments.parse_config_text((run / "config.txt").read_text())
        assert ExperimentConfig(**cfg) == res.config

    def test_fig1_deterministic(self, tmp_path):
        a = experiments.write_run(experiments.run_fig1(tiny()), tmp_path / "a")
        b = experiments.write_run(experiments.run_fig1(tiny()), tmp_path / "b")
        for name in ("records.csv", "weights-cnot.txt", "config.txt"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_records_recomputable_from_weights(self, tmp_path):
        cfg = tiny()
        res = experiments.run_fig1(cfg)
        run = experiments.write_run(res, tmp_path)
        model = nn.load_network(run / "weights-cnot.txt")
        data = experiments.gate_dataset(res.config)
        rec = nn.evaluate(model, data.heldout_x, data.heldout_y)
        last = experiments.read_records(run / "records.csv")[-1]
        assert last["loss"] == rec.loss
        assert last["antiherm_max"] == rec.antiherm_max

    def test_fig2_sweep(self):
        res = experiments.run_fig2(tiny("fig2", m_list=[3, 15], checkpoints=[2, 4]))
        assert sorted({r["experiment"] for r in res.rows}) == ["fig2-m15", "fig2-m3"]
        assert set(res.extra["loss"][3]) == {2, 4}
        assert set(res.networks) == {"cnot-m3", "cnot-m15"}

    def test_fig2_continues_after_divergence(self):
        res = experiments.run_fig2(tiny("fig2", m_list=[4, 5], checkpoints=[2], lr=1e300))
        assert set(res.extra["diverged"]) == {4, 5}
        assert res.rows == []

    def test_quantumness_small(self):
        cfg = ExperimentConfig("quantumness", samples=300, epochs=5, hidden=[16], seed=2)
        res = experiments.run_quantumness(cfg)
        assert res.config.batch_schedule == [32, 64, 128, 256, 512]
        assert len(res.rows) == 6
        assert res.extra["redraws"] == 0
        assert res.networks["quantumness"].dims == [64, 16, 64]


class TestChains:
    def test_layers(self):
        assert experiments.chain_layers(8) == [0, 1, 2, 4, 8]
        assert experiments.chain_layers(0) == [0]

    def test_oracle_chain(self):
        res = experiments.run_fig3(ExperimentConfig("fig3", oracle=True, n_max=256, eval_batch=64))
        assert [r["index"] for r in res.rows] == experiments.chain_layers(256)
        assert max(r["loss"] for r in res.rows) < 1e-20

    def test_n1_equals_single_layer_loss(self):
        rng = np.random.default_rng(0)
        nets = {g: exact.exact_gate_network(g) for g in ("hr", "cnot")}
        for g in nets:
            nets[g].layers[1].bias += rng.normal(scale=1e-3, size=64)
        cfg = ExperimentConfig("fig3", n_max=1, eval_batch=20)
        res = experiments.run_fig3(cfg, nets=nets)
        rho = experiments.chain_probe(res.config)
        x = realrep.flatten(realrep.embed(rho))
        want = realrep.flatten(realrep.embed(
            quantum.evolve(rho, quantum.gate_cnot() @ quantum.gate_hr())))
        assert res.rows[1]["loss"] == nn.loss_mse(nets["cnot"](nets["hr"](x)), want)
        assert res.rows[0]["loss"] == 0.0

    def test_missing_weights(self, tmp_path):
        with pytest.raises(MissingWeights):
            experiments.run_fig3(ExperimentConfig("fig3", n_max=2))
        with pytest.raises(MissingWeights):
            experiments.run_fig3(ExperimentConfig("fig3", n_max=2, weights_hr=str(tmp_path / "x"),
                                                  weights_cnot=str(tmp_path / "y")))

    def test_order_swap(self):
        res = experiments.run_order_swap(ExperimentConfig("order_swap", oracle=True, n_max=4, eval_batch=16))
        dist = res.extra["exact_distance"]
        assert dist[0] == 0.0
        assert dist[2] > 0.01
        for name in ("order_swap-hr_cnot", "order_swap-cnot_hr"):
            assert max(r["loss"] for r in res.series(name)) < 1e-20

    def test_weight_files_feed_chain(self, tmp_path):
        for g in ("hr", "cnot"):
            nn.save_network(exact.exact_gate_network(g), tmp_path / f"{g}.txt")
        cfg = ExperimentConfig("fig3", n_max=4, eval_batch=8,
                               weights_hr=str(tmp_path / "hr.txt"), weights_cnot=str(tmp_path / "cnot.txt"))
        assert max(r["loss"] for r in experiments.run_fig3(cfg).rows) < 1e-20


class TestVerify:
    def test_exact_net(self):
        rep = experiments.verify_network(exact.exact_gate_network("cnot"), gate="cnot", count=200)
        assert rep["density_loss"] < 1e-24
        for name in ("trace_residual", "antiherm_norm", "complex_residual"):
            assert rep["density_inputs"][name]["max"] < 1e-12
        # the 15-dim bottleneck keeps only hermitian coordinates: off-manifold inputs stay valid
        assert rep["raw_inputs_hermitian_normalized"]

    def test_untrained_net(self):
        rep = experiments.verify_network(nn.init_network([64, 15, 64], seed=1), count=200)
        assert rep["density_inputs"]["trace_residual"]["mean"] > 0.1
        assert rep["density_inputs"]["antiherm_norm"]["mean"] > 0.1
        assert not rep["raw_inputs_hermitian_normalized"]
