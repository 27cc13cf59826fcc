"""Tests for config parsing, sweep running, CSV output, and the CLI."""

import dataclasses

import pytest

from arqcomb.cli import load_preset, main, preset_names
from arqcomb.harness import (
    CSV_HEADER,
    BlerRecord,
    ConfigError,
    emit_records,
    format_records,
    load_config,
    parse_config,
    parse_records,
    run_sweep,
    wilson_interval,
)

MINIMAL = """
n_tx = 2
n_rx = 2
ebn0_db = 4
n_frames = 10
"""


class TestParseConfig:
    def test_minimal_with_defaults(self):
        s = parse_config(MINIMAL)
        assert (s.n_tx, s.n_rx, s.n_frames) == (2, 2, 10)
        assert s.ebn0_db == (4.0,)
        assert s.max_rounds == 3 and s.turbo_iters == 5 and s.seed == 0
        assert s.sir_db is None and s.scaled_cci() is None
        assert s.schemes == ("proposed", "llr_level")
        assert s.tap_powers == (0.5, 0.5)
        assert s.num_uses == 258

    def test_sir_none_disables_interferer(self):
        s = parse_config(MINIMAL + "sir_db = none\n")
        assert s.sir_db is None

    def test_interferer_block(self):
        text = MINIMAL + (
            "sir_db = 3\ncci_n_tx = 1\ncci_L = 1\ncci_scatter_rank = 1\n"
            "cci_delta_rx = 0.2\n"
        )
        s = parse_config(text)
        scaled = s.scaled_cci()
        assert scaled.n_tx == 1
        assert sum(scaled.tap_powers) == pytest.approx(2 / 10 ** 0.3)

    def test_negative_count_names_key(self):
        with pytest.raises(ConfigError, match="n_tx"):
            parse_config(MINIMAL.replace("n_tx = 2", "n_tx = -1"))

    def test_unknown_key_with_line_number(self):
        with pytest.raises(ConfigError, match="line 2.*bogus"):
            parse_config("n_tx = 2\nbogus = 1\n")

    def test_missing_required_key(self):
        with pytest.raises(ConfigError, match="ebn0_db"):
            parse_config("n_tx = 2\nn_rx = 2\nn_frames = 5\n")

    def test_malformed_value(self):
        with pytest.raises(ConfigError, match="line 2"):
            parse_config("n_tx = 2\nn_rx = two\nebn0_db = 4\nn_frames = 5\n")

    def test_duplicate_key(self):
        with pytest.raises(ConfigError, match="duplicate"):
            parse_config(MINIMAL + "n_tx = 4\n")

    def test_cci_keys_without_sir(self):
        with pytest.raises(ConfigError, match="sir_db"):
            parse_config(MINIMAL + "cci_n_tx = 2\n")

    def test_comments_and_blank_lines(self):
        s = parse_config("# header\n\n" + MINIMAL + "seed = 7  # trailing\n")
        assert s.seed == 7


class TestWilson:
    def test_known_values(self):
        lo, hi = wilson_interval(0, 100)
        assert lo == 0.0
        assert hi == pytest.approx(0.0370, abs=2e-3)
        lo, hi = wilson_interval(50, 100)
        assert lo == pytest.approx(0.4038, abs=2e-3)
        assert hi == pytest.approx(0.5962, abs=2e-3)

    def test_degenerate(self):
        assert wilson_interval(0, 0) == (0.0, 1.0)


class TestRecordsIo:
    def test_header_and_roundtrip(self, tmp_path):
        records = [
            BlerRecord("proposed", 4.0, 1, 100, 37),
            BlerRecord("proposed", 4.0, 2, 100, 11),
        ]
        path = tmp_path / "out.csv"
        emit_records(records, str(path))
        data = path.read_bytes()
        assert data.startswith(CSV_HEADER.encode())
        assert b"\r" not in data
        assert parse_records(data.decode()) == records

    def test_empty_records_emit_header_only(self, tmp_path):
        path = tmp_path / "empty.csv"
        emit_records([], str(path))
        assert path.read_text() == CSV_HEADER + "\n"

    def test_single_record_two_lines(self):
        text = format_records([BlerRecord("llr_level", 8.0, 3, 2000, 3)])
        lines = text.splitlines()
        assert len(lines) == 2
        assert lines[1].startswith("llr_level,8,3,2000,3,0.0015,")

    def test_six_significant_digits(self):
        text = format_records([BlerRecord("proposed", 4.0, 1, 3, 1)])
        assert ",0.333333," in text


def _scenario(**overrides):
    base = {"n_tx": 2, "n_rx": 2, "ebn0_db": 4, "n_frames": 10}
    base.update(overrides)
    text = "".join(f"{key} = {value}\n" for key, value in base.items())
    return parse_config(text)


class TestRunSweep:
    def test_clean_channel_has_zero_bler(self):
        s = _scenario(scheme="proposed", K=2)
        records = run_sweep(dataclasses.replace(s, ebn0_db=(60.0,), n_frames=5))
        assert all(rec.frame_errors == 0 for rec in records)

    def test_hopeless_snr_fails_round_one(self):
        s = _scenario(scheme="proposed", K=2, n_frames=4)
        records = run_sweep(dataclasses.replace(s, ebn0_db=(-20.0,)))
        first = [r for r in records if r.round_index == 1]
        assert all(rec.bler == 1.0 for rec in first)

    def test_monotone_in_rounds_and_sorted(self):
        s = _scenario(scheme="both", n_frames=6, seed=3)
        records = run_sweep(dataclasses.replace(s, ebn0_db=(2.0, 6.0)))
        keys = [(r.scheme, r.ebn0_db, r.round_index) for r in records]
        assert keys == sorted(keys)
        by_cell = {}
        for rec in records:
            by_cell.setdefault((rec.scheme, rec.ebn0_db), []).append(rec.frame_errors)
        for errors in by_cell.values():
            assert errors == sorted(errors, reverse=True)

    def test_worker_count_does_not_change_output(self):
        s = _scenario(scheme="proposed", n_frames=6, seed=1)
        solo = format_records(run_sweep(s, workers=1))
        dual = format_records(run_sweep(s, workers=2))
        assert solo == dual

    def test_interrupt_flushes_partial_records(self, monkeypatch):
        import arqcomb.harness as harness

        s = _scenario(scheme="proposed", n_frames=8, seed=2, K=1)
        real_task = harness._chunk_task
        calls = {"n": 0}

        def flaky(args):
            calls["n"] += 1
            if calls["n"] > 1:
                raise KeyboardInterrupt
            return real_task(args)

        monkeypatch.setattr(harness, "_chunk_task", flaky)
        from arqcomb.harness import SweepInterrupted

        with pytest.raises(SweepInterrupted) as excinfo:
            run_sweep(s, workers=1)
        records = excinfo.value.records
        # one scheme, one point, K=1: a single record covering one chunk
        assert len(records) == 1
        assert records[0].trials == 1  # honest partial denominator


class TestPresets:
    def test_all_presets_parse(self):
        names = preset_names()
        assert len(names) == 6
        for name in names:
            scenario = load_preset(name)
            assert scenario.n_frames == 2000
            assert scenario.max_rounds == 3
            assert scenario.turbo_iters == 5
            assert scenario.sir_db is not None

    def test_reference_preset_parameters(self):
        s = load_preset("mimo2x2_sir3db")
        assert (s.n_tx, s.n_rx, s.sir_db) == (2, 2, 3.0)
        assert s.cci.n_tx == 2 and len(s.cci.tap_powers) == 2
        rank1 = load_preset("mimo2x2_rank1_sir3db")
        assert rank1.cci.n_tx == 1 and len(rank1.cci.tap_powers) == 1


class TestCli:
    def test_run_writes_csv(self, tmp_path):
        cfg = tmp_path / "tiny.cfg"
        cfg.write_text(MINIMAL + "scheme = proposed\nK = 1\n")
        out = tmp_path / "result.csv"
        code = main(["run", str(cfg), "--frames", "2", "--out", str(out)])
        assert code == 0
        assert out.exists()
        assert parse_records(out.read_text())[0].trials == 2

    def test_config_error_exit_code(self, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("n_tx = -2\nn_rx = 2\nebn0_db = 4\nn_frames = 2\n")
        assert main(["run", str(cfg)]) == 1

    def test_missing_file_exit_code(self, tmp_path):
        assert main(["run", str(tmp_path / "nope.cfg")]) == 2

    def test_presets_listing(self, capsys):
        assert main(["presets"]) == 0
        out = capsys.readouterr().out
        assert "mimo2x2_sir3db" in out

    def test_load_config_from_disk(self, tmp_path):
        cfg = tmp_path / "ok.cfg"
        cfg.write_text(MINIMAL)
        assert load_config(str(cfg)).n_tx == 2
