import json
import math
import struct
import tempfile
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vortlyap.config import ConfigError, config_hash, git_blob_hash, load_config, parse_config
from vortlyap.fieldio import HEADER, field_bytes, read_field, read_trajectory, write_checkpoint, write_field
from vortlyap.spectral import PhysicalField, SpectralField, make_grid

from _util import CONFIGS, random_vort


class TestConfig:
    def test_defaults(self):
        cfg = parse_config({})
        assert cfg.grid.n == 32 and cfg.monitor.m == 3
        assert cfg.monitor.besov == ((0.5, 2.0, 2.0),)
        assert cfg.solver.dt is None

    def test_dt_auto(self):
        assert parse_config({"solver": {"dt": "auto"}}).solver.dt is None
        assert parse_config({"solver": {"dt": 0.02}}).solver.dt == 0.02

    @pytest.mark.parametrize(
        "raw,path",
        [
            ({"solver": {"nu": "x"}}, "solver.nu"),
            ({"solver": {"nuu": 1}}, "solver.nuu"),
            ({"grid": {"n": 33}}, "grid"),
            ({"grid": {"n": 32.5}}, "grid.n"),
            ({"bogus": {}}, "bogus"),
            ({"initial": {"kind": "vortex"}}, "initial.kind"),
            ({"initial": {"peak_band": 7}}, "initial.peak_band"),
            ({"monitor": {"p_list": [1.5]}}, "monitor.p_list[0]"),
            ({"monitor": {"m": 2}}, "monitor.m"),
            ({"monitor": {"besov": [[0.5, 4, 2]]}}, "monitor.besov[0]"),
            ({"monitor": {"besov": [[0.5, 2]]}}, "monitor.besov[0]"),
            ({"dissipativity": {"samples": 0}}, "dissipativity.samples"),
            ({"dissipativity": {"amplitudes": [-1]}}, "dissipativity.amplitudes[0]"),
            ({"solver": {"record_every": 0}}, "solver"),
            ({"output": {"dir": 3}}, "output.dir"),
        ],
    )
    def test_errors_name_field(self, raw, path):
        with pytest.raises(ConfigError) as exc:
            parse_config(raw)
        assert exc.value.path == path

    def test_besov_hypotheses(self):
        # s = 3/p - 1 with p, q >= 2 and 3/p + 2/q > 1
        parse_config({"monitor": {"besov": [[0.5, 2, 2], [-0.25, 4, 2], "0,3,4"]}})
        with pytest.raises(ConfigError):
            parse_config({"monitor": {"besov": [[-0.5, 6, 1]]}})
        with pytest.raises(ConfigError):
            parse_config({"monitor": {"besov": [[-0.7, 10, 4]]}})

    def test_output_dir_relative_to_config(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"output": {"dir": "res"}}))
        assert load_config(path).output_dir() == tmp_path / "res"

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text("{nope")
        with pytest.raises(ConfigError):
            load_config(path)

    def test_hash_stable_and_sensitive(self):
        a, b = parse_config({}), parse_config({})
        assert config_hash(a) == config_hash(b)
        assert config_hash(parse_config({"solver": {"nu": 0.2}})) != config_hash(a)

    def test_git_blob_hash(self):
        # `git hash-object` of an empty file and of "hello\n"
        assert git_blob_hash(b"") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391"
        assert git_blob_hash(b"hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a"

    @pytest.mark.parametrize("name", ["small_data.json", "dissipativity.json", "lemmas.json"])
    def test_bundled_configs_load(self, name):
        load_config(CONFIGS / name)


class TestFieldIO:
    def test_header_layout(self, grid16):
        f = random_vort(grid16, 1, peak=1)
        raw = field_bytes(f)
        magic, ver, dim, n, rep, ncomp, _, length = HEADER.unpack_from(raw)
        assert HEADER.size == 40
        assert (magic, ver, dim, n, rep, ncomp) == (b"VLYPFLD\0", 1, 3, 16, 1, 3)
        assert length == pytest.approx(2 * math.pi)
        assert len(raw) == 40 + 3 * 16**3 * 16
        # first payload value is Re f[0, 0, 0, 0] as little-endian float64
        assert struct.unpack_from("<d", raw, 40)[0] == f.data[0, 0, 0, 0].real

    @given(st.integers(0, 1000), st.sampled_from([1, 3]), st.booleans())
    @settings(max_examples=10, deadline=None)
    def test_roundtrip(self, seed, ncomp, spectral):
        g = make_grid(3, 8)
        rng = np.random.default_rng(seed)
        f = PhysicalField(g, rng.standard_normal((ncomp,) + g.shape))
        if spectral:
            f = SpectralField(g, np.fft.fftn(f.data, axes=(1, 2, 3), norm="forward"))
        with tempfile.TemporaryDirectory() as d:
            path = Path(d) / "f.vlf"
            write_field(f, path)
            back = read_field(path)
        assert type(back) is type(f) and back.grid == g
        assert np.array_equal(back.data, f.data)

    def test_rejects_corrupt(self, grid16, tmp_path):
        f = random_vort(grid16, 1, peak=1)
        path = tmp_path / "f.vlf"
        write_field(f, path)
        raw = path.read_bytes()
        (tmp_path / "short.vlf").write_bytes(raw[:-8])
        (tmp_path / "magic.vlf").write_bytes(b"X" + raw[1:])
        (tmp_path / "tiny.vlf").write_bytes(raw[:10])
        for name in ("short.vlf", "magic.vlf", "tiny.vlf"):
            with pytest.raises(ValueError):
                read_field(tmp_path / name)

    def test_checkpoints(self, grid16, tmp_path):
        w = random_vort(grid16, 2, peak=1)
        for i in range(3):
            write_checkpoint(tmp_path, i, 0.1 * i, 5 * i, w * float(i + 1), "abc")
        snaps = read_trajectory(tmp_path)
        assert [s.step_index for s in snaps] == [0, 5, 10]
        assert snaps[2].omega_hat.l2_norm() == pytest.approx(3 * w.l2_norm())
        side = json.loads((tmp_path / "snap_00001.json").read_text())
        assert side == {"config_hash": "abc", "step_index": 5, "t": 0.1}

    def test_missing_trajectory(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            read_trajectory(tmp_path)
