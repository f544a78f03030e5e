from __future__ import annotations

import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from halfwave.errors import BadMagic, HeaderMismatch, SnapshotError, TruncatedFile, VersionMismatch
from halfwave.harness import config, snapshot_io
from halfwave.harness.cli import EXIT_FAILURE, EXIT_OK, EXIT_USAGE, main
from halfwave.harness.manifest import build_manifest, csv_text, read_csv
from halfwave.harness.verify import Check

from conftest import philox


def snap(dim=1, n=8, comps=3, t=0.25, seed=0):
    return snapshot_io.Snapshot(dim, n, 2 * np.pi, t, philox(seed).standard_normal((comps,) + (n,) * dim))


class TestConfig:
    def test_precedence(self):
        cfg = config.resolve({"n": 64, "epsilon": 0.2}, {"n": 32, "epsilon": None})
        assert cfg["n"] == 32 and cfg["epsilon"] == 0.2 and cfg["dim"] == 1

    def test_unknown_key(self):
        with pytest.raises(config.ConfigError):
            config.resolve({"bogus": 1})

    @pytest.mark.parametrize("key,value", [("n", 2.5), ("n", "64"), ("renormalize", 1), ("epsilon", "x"), ("dim", True)])
    def test_type_checks(self, key, value):
        with pytest.raises(config.ConfigError):
            config.resolve({key: value})

    def test_integral_float_accepted(self):
        assert config.resolve({"n": 64.0})["n"] == 64

    def test_load_file(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text('{"T": 0.5}')
        assert config.load_file(p) == {"T": 0.5}
        p.write_text("[1, 2]")
        with pytest.raises(config.ConfigError):
            config.load_file(p)
        with pytest.raises(config.ConfigError):
            config.load_file(tmp_path / "missing.json")


class TestSnapshot:
    @pytest.mark.parametrize("dim,n,comps", [(1, 16, 3), (2, 8, 1), (3, 4, 3)])
    def test_round_trip_bit_identical(self, dim, n, comps, tmp_path):
        s = snap(dim, n, comps)
        path = tmp_path / "s.hwm"
        snapshot_io.write(path, s, {"k": 1})
        back = snapshot_io.read(path)
        assert back.samples.tobytes() == s.samples.tobytes()
        assert (back.dim, back.n, back.L, back.t, back.components) == (dim, n, s.L, s.t, comps)
        assert snapshot_io.encode(back) == path.read_bytes()
        assert json.loads(snapshot_io.manifest_path(path).read_text()) == {"k": 1}

    def test_header_layout(self):
        buf = snapshot_io.encode(snap(1, 8, 1))
        assert buf[:4] == b"HWM1" and len(buf) == 4 + 3 * 4 + 2 * 8 + 4 + 8 * 8

    def test_bad_magic(self):
        buf = snapshot_io.encode(snap())
        with pytest.raises(BadMagic):
            snapshot_io.decode(b"XXXX" + buf[4:])

    def test_version(self):
        buf = bytearray(snapshot_io.encode(snap()))
        buf[4] = 2
        with pytest.raises(VersionMismatch) as info:
            snapshot_io.decode(bytes(buf))
        assert not isinstance(info.value, HeaderMismatch)

    def test_cross_dim_payload(self):
        # a 2-D payload behind a 1-D header
        s2 = snap(2, 8, 3)
        head = snapshot_io.HEADER.pack(b"HWM1", 1, 1, 8, s2.L, s2.t, 3)
        with pytest.raises(VersionMismatch) as info:
            snapshot_io.decode(head + s2.samples.astype("<f8").tobytes())
        assert isinstance(info.value, HeaderMismatch)

    def test_expectation(self):
        buf = snapshot_io.encode(snap(1, 8))
        assert snapshot_io.decode(buf, {"dim": 1, "n": 8}).n == 8
        with pytest.raises(HeaderMismatch):
            snapshot_io.decode(buf, {"n": 16})

    @pytest.mark.parametrize("keep", [0, 3, 10, 35, 36 + 8, -8])
    def test_truncated(self, keep):
        buf = snapshot_io.encode(snap(1, 8))
        with pytest.raises(TruncatedFile):
            snapshot_io.decode(buf[:keep])

    def test_shape_validation(self):
        with pytest.raises(ValueError):
            snapshot_io.encode(snapshot_io.Snapshot(2, 8, 1.0, 0.0, np.zeros((3, 8))))

    @settings(max_examples=200, deadline=None)
    @given(st.integers(0, 80), st.integers(0, 255), st.integers(0, 200))
    def test_fuzz_only_snapshot_errors(self, pos, byte, cut):
        buf = bytearray(snapshot_io.encode(snap(1, 4, 3)))
        if pos < len(buf):
            buf[pos] = byte
        buf = bytes(buf[: max(0, len(buf) - cut)]) if cut < 140 else bytes(buf)
        try:
            s = snapshot_io.decode(buf)
        except SnapshotError:
            return
        assert s.samples.size * 8 + snapshot_io.HEADER.size == len(buf)


class TestManifest:
    def test_fields_and_location_keys(self):
        a = build_manifest("simulate", {"n": 32, "seed": 3, "out": "a.csv"})
        b = build_manifest("simulate", {"n": 32, "seed": 3, "out": "b.csv"})
        assert a == b and "out" not in a["config"]
        assert a["seed"] == 3 and a["rng"] == "numpy.random.Philox"
        assert set(a["versions"]) == {"halfwave", "numpy", "scipy", "python"}
        assert build_manifest("simulate", {"n": 64, "seed": 3})["config_hash"] != a["config_hash"]

    def test_csv_round_trip(self, tmp_path):
        cols = {"t": np.array([0.0, 0.1]), "energy": np.array([1.0 / 3, 2e-17])}
        man = build_manifest("x", {"seed": 0})
        p = tmp_path / "x.csv"
        p.write_text(csv_text(cols, man))
        m2, c2 = read_csv(p)
        assert m2 == json.loads(json.dumps(man))
        assert np.array_equal(c2["energy"], cols["energy"]) and list(c2) == ["t", "energy"]


class TestCheck:
    def test_relations(self):
        assert Check(1, "a", 1.0, 2.0, "<=").passed
        assert not Check(1, "a", float("nan"), 2.0, "<=").passed
        assert not Check(1, "a", 2.0, 2.0, ">").passed
        assert Check(1, "a", 1.0, 1.0, "==").passed
        assert Check(1, "a", 1.0, 2.0, "<=").line().startswith("[PASS] criterion 1 a")


class TestCli:
    def run(self, capsys, *argv):
        code = main(list(argv))
        out = capsys.readouterr()
        return code, out.out, out.err

    def test_simulate_zero_epsilon(self, capsys, tmp_path):
        out = tmp_path / "s.csv"
        code, _, _ = self.run(capsys, "simulate", "--epsilon", "0", "--n", "32", "--T", "0.05", "--out", str(out))
        assert code == EXIT_OK
        man, cols = read_csv(out)
        assert man["command"] == "simulate" and np.all(cols["energy"] == 0.0)

    def test_same_config_bit_identical(self, capsys, tmp_path):
        outs = []
        for name in ("a", "b"):
            csv, sh = tmp_path / f"{name}.csv", tmp_path / f"{name}.hwm"
            argv = ["simulate", "--n", "64", "--T", "0.05", "--out", str(csv), "--snapshot", str(sh)]
            assert self.run(capsys, *argv)[0] == EXIT_OK
            outs.append((csv.read_bytes(), sh.read_bytes()))
        assert outs[0] == outs[1]

    def test_config_file_and_flag(self, capsys, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"n": 64, "T": 0.05, "M": 4}))
        out = tmp_path / "w.csv"
        code, _, _ = self.run(capsys, "waveform", "--config", str(cfg), "--n", "32", "--out", str(out))
        assert code == EXIT_OK
        man, cols = read_csv(out)
        assert man["config"]["n"] == 32 and "M" not in man["config"]

    def test_snapshot_norms(self, capsys, tmp_path):
        sh = tmp_path / "s.hwm"
        self.run(capsys, "simulate", "--n", "64", "--T", "0.05", "--out", str(tmp_path / "x.csv"), "--snapshot", str(sh))
        code, out, _ = self.run(capsys, "norms", "--input", str(sh))
        assert code == EXIT_OK and json.loads(out)["metadata"]["besov2_sobolev"] > 0

    def test_corrupt_snapshot(self, capsys, tmp_path):
        sh = tmp_path / "bad.hwm"
        sh.write_bytes(b"NOPE" + bytes(60))
        code, _, err = self.run(capsys, "norms", "--input", str(sh))
        assert code == EXIT_FAILURE and "BadMagic" in err

    @pytest.mark.parametrize(
        "argv",
        [
            ["simulate", "--n", "100"],
            ["simulate", "--bogus"],
            ["norms"],
            ["verify", "--criteria", "12"],
            ["expand-symbol", "--symbol", "nope"],
            [],
        ],
    )
    def test_usage_errors(self, capsys, argv):
        assert self.run(capsys, *argv)[0] == EXIT_USAGE

    def test_bad_config_key(self, capsys, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text('{"bogus": 1}')
        assert self.run(capsys, "simulate", "--config", str(cfg))[0] == EXIT_USAGE

    def test_bump_too_large_is_usage(self, capsys):
        assert self.run(capsys, "simulate", "--n", "32", "--radius", "3.0", "--T", "0.01")[0] == EXIT_USAGE

    def test_picard(self, capsys):
        code, out, _ = self.run(capsys, "picard", "--n", "64", "--T", "0.25", "--epsilon", "0.05")
        assert code == EXIT_OK
        assert json.loads(out)["outer"][-1]["diff_h2"] < 1e-10

    def test_expand_unit_symbol(self, capsys, tmp_path):
        out = tmp_path / "e.csv"
        assert self.run(capsys, "expand-symbol", "--symbol", "unit", "--M", "2", "--out", str(out))[0] == EXIT_OK
        _, cols = read_csv(out)
        big = np.abs(cols["abs"]) > 1e-12
        assert big.sum() == 1 and cols["m0"][big][0] == 0 and cols["re"][big][0] == pytest.approx(1.0)

    @pytest.mark.parametrize("crit", ["2", "8"])
    def test_verify_exit_matches_report(self, capsys, tmp_path, crit):
        out = tmp_path / "r.json"
        code, stdout, _ = self.run(capsys, "verify", "--quick", "--criteria", crit, "--out", str(out))
        rep = json.loads(out.read_text())
        assert code == (EXIT_OK if rep["summary"]["all_passed"] else EXIT_FAILURE)
        assert stdout.count("criterion") == rep["summary"]["total"]
