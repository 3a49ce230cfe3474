"""Map text format, policy snapshot files, and the command-line front end."""

import json
import struct
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from sweeprl.cli import main, parse_hidden, parse_seeds
from sweeprl.errors import (ArchMismatchError, BadMagicError, EmptyMapError,
                            MultipleStartsError, RaggedRowsError,
                            TruncatedFileError, UnknownCharError)
from sweeprl.maps import (builtin_map, fully_reachable, get_map, list_builtin_maps,
                          load_map, parse_map, reachable_mask, render_map, save_map)
from sweeprl.metrics import read_csv
from sweeprl.neural import NetSpec, init_params
from sweeprl.percept import ObservationSpec
from sweeprl.policyio import MAGIC, load_policy, save_policy
from sweeprl.world import GridMap

TINY = "S..\n...\n...\n"
SPLIT = "S#.\n###\n...\n"


# ---------------------------------------------------------------------------
# map parsing
# ---------------------------------------------------------------------------
class TestParseMap:
    def test_simple(self):
        g = parse_map(".#\nS.")
        assert (g.height, g.width) == (2, 2)
        assert g.obstacle[0, 1] and not g.obstacle[0, 0]
        assert g.start == (1, 0)
        assert g.free_count == 3

    def test_no_start_is_allowed(self):
        g = parse_map("..\n..")
        assert g.start is None and g.free_count == 4

    def test_blank_edge_lines_are_stripped(self):
        g = parse_map("\n\n..\n.#\n\n")
        assert (g.height, g.width) == (2, 2) and g.obstacle[1, 1]

    def test_crlf_text_parses(self):
        g = parse_map("S.\r\n.#\r\n")
        assert g.start == (0, 0) and g.obstacle[1, 1]

    def test_ragged_rows(self):
        with pytest.raises(RaggedRowsError, match="row 1"):
            parse_map("...\n..")

    def test_unknown_char(self):
        with pytest.raises(UnknownCharError, match=r"'x' at \(0, 1\)"):
            parse_map(".x\n..")

    def test_multiple_starts(self):
        with pytest.raises(MultipleStartsError):
            parse_map("SS")

    def test_empty_text(self):
        for text in ("", "\n", "\n\n\n"):
            with pytest.raises(EmptyMapError):
                parse_map(text)

    def test_render_parse_roundtrip(self):
        rng = np.random.default_rng(7)
        for trial in range(20):
            h, w = rng.integers(1, 9, size=2)
            obstacle = rng.random((h, w)) < 0.3
            free = np.argwhere(~obstacle)
            if free.size == 0:
                continue
            start = tuple(int(v) for v in free[rng.integers(len(free))])
            g = GridMap(obstacle, start=start)
            text = render_map(g)
            assert text.endswith("\n") and not text.endswith("\n\n")
            back = parse_map(text)
            assert np.array_equal(back.obstacle, g.obstacle)
            assert back.start == g.start
        print("render/parse roundtrip held on 20 random maps")

    def test_save_load_roundtrip(self, tmp_path):
        g = parse_map(TINY)
        path = tmp_path / "tiny.txt"
        save_map(path, g)
        back = load_map(path)
        assert np.array_equal(back.obstacle, g.obstacle) and back.start == g.start


class TestBuiltinMaps:
    def test_listing(self):
        names = list_builtin_maps()
        assert {"hall12", "room5", "room7", "room20"} <= set(names)
        assert names == sorted(names)

    def test_shapes(self):
        for name, side in (("room5", 5), ("room7", 7), ("room20", 20)):
            g = builtin_map(name)
            assert (g.height, g.width) == (side, side)
            assert g.free_count == side * side and g.start == (0, 0)
        hall = builtin_map("hall12")
        assert (hall.height, hall.width) == (12, 12)
        assert hall.obstacle.any() and fully_reachable(hall)

    def test_unknown_name(self):
        with pytest.raises(KeyError, match="nope"):
            builtin_map("nope")

    def test_get_map_resolves_builtin_then_path(self, tmp_path):
        assert get_map("room5").free_count == 25
        path = tmp_path / "mine.txt"
        path.write_text(TINY, encoding="ascii")
        assert get_map(str(path)).free_count == 9

    def test_get_map_missing_path(self, tmp_path):
        with pytest.raises(OSError):
            get_map(str(tmp_path / "absent.txt"))


class TestReachability:
    def test_wall_splits_rooms(self):
        g = parse_map(SPLIT)
        mask = reachable_mask(g, (0, 0))
        assert mask[0, 0] and not mask[0, 2] and not mask[2, 0]
        assert not fully_reachable(g)

    def test_diagonal_gap_is_passable(self):
        g = parse_map(".#\n#.")
        mask = reachable_mask(g, (0, 0))
        assert mask[1, 1]
        assert fully_reachable(g, (0, 0))

    def test_open_room_fully_reachable(self):
        assert fully_reachable(parse_map(TINY))


# ---------------------------------------------------------------------------
# policy snapshot files
# ---------------------------------------------------------------------------
def _bundle_parts(head="pv"):
    net = NetSpec(19, (8,), head)
    flat = init_params(net, np.random.default_rng(3))
    return net, flat, ObservationSpec()


class TestPolicyIO:
    def test_roundtrip(self, tmp_path):
        net, flat, spec = _bundle_parts()
        path = tmp_path / "p.sweeprl"
        save_policy(path, flat, net, spec, "ppo", meta={"seed": 4, "note": "hi"})
        b = load_policy(path)
        assert np.array_equal(b.flat, flat)
        assert b.net == net and b.algo == "ppo"
        assert b.obs_spec == spec
        assert b.meta == {"seed": 4, "note": "hi"}
        print(f"roundtripped {net.num_params} params exactly")

    def test_roundtrip_q_head_and_global_obs(self, tmp_path):
        net = NetSpec(27, (6, 5), "q")
        flat = init_params(net, np.random.default_rng(0))
        spec = ObservationSpec(mode="global")
        path = tmp_path / "q.sweeprl"
        save_policy(path, flat, net, spec, "dqn")
        b = load_policy(path)
        assert b.net.head == "q" and b.obs_spec.mode == "global"
        assert np.array_equal(b.flat, flat)

    def test_save_rejects_wrong_param_count(self, tmp_path):
        net, flat, spec = _bundle_parts()
        with pytest.raises(ArchMismatchError):
            save_policy(tmp_path / "bad.sweeprl", flat[:-1], net, spec, "ppo")

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "junk.sweeprl"
        path.write_bytes(b"NOTMINE1" + b"\x00" * 32)
        with pytest.raises(BadMagicError):
            load_policy(path)

    def test_truncated_header_length(self, tmp_path):
        path = tmp_path / "short.sweeprl"
        path.write_bytes(MAGIC + b"\x01")
        with pytest.raises(TruncatedFileError):
            load_policy(path)

    def test_truncated_header_body(self, tmp_path):
        path = tmp_path / "cut.sweeprl"
        path.write_bytes(MAGIC + struct.pack("<I", 100) + b"{}")
        with pytest.raises(TruncatedFileError):
            load_policy(path)

    def test_unreadable_header(self, tmp_path):
        blob = b"not json at all!"
        path = tmp_path / "garbled.sweeprl"
        path.write_bytes(MAGIC + struct.pack("<I", len(blob)) + blob)
        with pytest.raises(TruncatedFileError, match="unreadable header"):
            load_policy(path)

    def test_short_payload(self, tmp_path):
        net, flat, spec = _bundle_parts()
        path = tmp_path / "p.sweeprl"
        save_policy(path, flat, net, spec, "ppo")
        data = path.read_bytes()
        path.write_bytes(data[:-8])
        with pytest.raises(TruncatedFileError, match="payload"):
            load_policy(path)

    def test_header_architecture_mismatch(self, tmp_path):
        net, flat, spec = _bundle_parts()
        path = tmp_path / "p.sweeprl"
        save_policy(path, flat, net, spec, "ppo")
        data = path.read_bytes()
        (hlen,) = struct.unpack_from("<I", data, len(MAGIC))
        off = len(MAGIC) + 4
        header = json.loads(data[off:off + hlen])
        header["num_params"] = header["num_params"] - 1
        blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
        path.write_bytes(MAGIC + struct.pack("<I", len(blob)) + blob + data[off + hlen:])
        with pytest.raises(ArchMismatchError):
            load_policy(path)


# ---------------------------------------------------------------------------
# CLI helpers
# ---------------------------------------------------------------------------
class TestArgHelpers:
    def test_parse_seeds_forms(self):
        assert parse_seeds("0,1,2") == [0, 1, 2]
        assert parse_seeds("0-4") == [0, 1, 2, 3, 4]
        assert parse_seeds("2..4") == [2, 3, 4]
        assert parse_seeds("7") == [7]
        assert parse_seeds("-3") == [-3]
        assert parse_seeds(" 1, 2 ,3 ") == [1, 2, 3]

    def test_parse_hidden_forms(self):
        assert parse_hidden("64,64") == (64, 64)
        assert parse_hidden("8") == (8,)
        assert parse_hidden([32, 16]) == (32, 16)
        assert parse_hidden((4,)) == (4,)


# ---------------------------------------------------------------------------
# CLI end to end (tiny map, tiny net, few episodes)
# ---------------------------------------------------------------------------
@pytest.fixture(scope="module")
def tiny_map(tmp_path_factory):
    path = tmp_path_factory.mktemp("maps") / "tiny.txt"
    path.write_text(TINY, encoding="ascii")
    return path


@pytest.fixture(scope="module")
def trained_run(tmp_path_factory, tiny_map):
    """One small PPO training run shared by the train/eval/compare/plot tests."""
    outdir = tmp_path_factory.mktemp("run") / "ppo_tiny"
    rc = main(["train", "--map", str(tiny_map), "--algo", "ppo",
               "--episodes", "40", "--seed", "0", "--hidden", "8",
               "--out", str(outdir)])
    return rc, outdir


class TestCliTrain:
    def test_writes_run_directory(self, trained_run):
        rc, outdir = trained_run
        assert rc == 0
        for name in ("config.json", "metrics.csv", "policy.sweeprl"):
            assert (outdir / name).is_file(), name

    def test_metrics_rows_match_episodes(self, trained_run):
        _, outdir = trained_run
        records = read_csv(outdir / "metrics.csv")
        assert len(records) == 40
        assert [r.episode for r in records] == list(range(40))
        assert records[-1].coverage <= 1.0

    def test_config_echo(self, trained_run, tiny_map):
        _, outdir = trained_run
        cfg = json.loads((outdir / "config.json").read_text())
        assert cfg["command"] == "train"
        assert cfg["algo"] == "ppo" and cfg["episodes"] == 40
        assert cfg["map"] == str(tiny_map) and cfg["seed"] == 0
        assert cfg["variant"] == "all" and cfg["out"] == str(outdir)

    def test_policy_file_loads(self, trained_run):
        _, outdir = trained_run
        b = load_policy(outdir / "policy.sweeprl")
        assert b.algo == "ppo" and b.net.head == "pv"
        assert b.net.hidden == (8,) and b.net.input_size == 19
        assert b.meta["episodes"] == 40 and b.meta["variant"] == "all"

    def test_dueling_head_selected(self, tiny_map, tmp_path):
        out = tmp_path / "duel"
        rc = main(["train", "--map", str(tiny_map), "--algo", "dueling",
                   "--episodes", "6", "--hidden", "8", "--max-steps", "60",
                   "--out", str(out)])
        assert rc == 0
        assert load_policy(out / "policy.sweeprl").net.head == "dueling"

    def test_default_out_under_runs(self, tiny_map, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        rc = main(["train", "--map", str(tiny_map), "--episodes", "4",
                   "--hidden", "8", "--max-steps", "40"])
        assert rc == 0
        assert (tmp_path / "runs" / "train_ppo_all_tiny_seed0" / "metrics.csv").is_file()

    def test_config_file_with_cli_override(self, tiny_map, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({"map": str(tiny_map), "episodes": 5,
                                        "hidden": "8", "max_steps": 60}))
        out = tmp_path / "out"
        rc = main(["train", "--config", str(cfg_path), "--episodes", "9",
                   "--out", str(out)])
        assert rc == 0
        assert len(read_csv(out / "metrics.csv")) == 9
        echo = json.loads((out / "config.json").read_text())
        assert echo["episodes"] == 9 and echo["hidden"] == "8"

    def test_config_file_unknown_key(self, tiny_map, tmp_path, capsys):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({"map": str(tiny_map), "episode": 5}))
        rc = main(["train", "--config", str(cfg_path)])
        assert rc == 1
        assert "error:" in capsys.readouterr().err

    def test_scripted_algo_rejected(self, tiny_map, tmp_path, capsys):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({"map": str(tiny_map), "algo": "zigzag"}))
        rc = main(["train", "--config", str(cfg_path)])
        assert rc == 1
        assert "learnable algo" in capsys.readouterr().err

    def test_bad_flag_value_exits(self, tiny_map):
        with pytest.raises(SystemExit):
            main(["train", "--map", str(tiny_map), "--algo", "zigzag"])


class TestCliEval:
    def test_zigzag_baseline(self, tiny_map, tmp_path, capsys):
        out = tmp_path / "ev"
        rc = main(["eval", "--map", str(tiny_map), "--algo", "zigzag",
                   "--out", str(out)])
        assert rc == 0
        text = capsys.readouterr().out
        assert "episode 0:" in text and "coverage 1.000" in text
        records = read_csv(out / "eval.csv")
        assert len(records) == 1 and records[0].coverage == 1.0
        assert (out / "config.json").is_file()

    def test_saved_policy(self, trained_run, tiny_map, capsys):
        _, outdir = trained_run
        rc = main(["eval", "--map", str(tiny_map), "--policy",
                   str(outdir / "policy.sweeprl"), "--episodes", "2",
                   "--max-steps", "80"])
        assert rc == 0
        assert capsys.readouterr().out.count("episode ") == 2

    def test_needs_policy_or_algo(self, tiny_map, capsys):
        rc = main(["eval", "--map", str(tiny_map)])
        assert rc == 1
        assert "error:" in capsys.readouterr().err


class TestCliCompare:
    def test_baseline_table(self, tiny_map, tmp_path, capsys):
        out = tmp_path / "cmp"
        rc = main(["compare", "--map", str(tiny_map), "--seeds", "0-2",
                   "--out", str(out)])
        assert rc == 0
        text = capsys.readouterr().out
        assert "random" in text and "zigzag" in text
        assert (out / "baseline_table.csv").is_file()

    def test_with_policy_row(self, trained_run, tiny_map, capsys):
        _, outdir = trained_run
        rc = main(["compare", "--map", str(tiny_map), "--seeds", "0,1",
                   "--policy", str(outdir / "policy.sweeprl")])
        assert rc == 0
        assert "policy" in capsys.readouterr().out


class TestCliPlot:
    def test_renders_svg(self, trained_run, tmp_path, capsys):
        _, outdir = trained_run
        svg_path = tmp_path / "steps.svg"
        rc = main(["plot", str(outdir / "metrics.csv"), "--out", str(svg_path),
                   "--column", "steps", "--smooth", "10"])
        assert rc == 0
        root = ET.fromstring(svg_path.read_text())
        assert root.tag.endswith("svg")
        assert "wrote" in capsys.readouterr().out

    def test_missing_csv(self, tmp_path, capsys):
        rc = main(["plot", str(tmp_path / "absent.csv"), "--out",
                   str(tmp_path / "o.svg")])
        assert rc == 1
        assert "error:" in capsys.readouterr().err


class TestCliMapValidate:
    def test_connected_map(self, tiny_map, capsys):
        rc = main(["map-validate", str(tiny_map), "--show"])
        assert rc == 0
        text = capsys.readouterr().out
        assert "fully reachable" in text and TINY in text

    def test_disconnected_map(self, tmp_path, capsys):
        path = tmp_path / "split.txt"
        path.write_text(SPLIT, encoding="ascii")
        rc = main(["map-validate", str(path)])
        assert rc == 1
        assert "UNREACHABLE" in capsys.readouterr().out

    def test_unparseable_map(self, tmp_path, capsys):
        path = tmp_path / "bad.txt"
        path.write_text("..\n.q\n", encoding="ascii")
        rc = main(["map-validate", str(path)])
        assert rc == 1
        assert "error:" in capsys.readouterr().err


class TestCliAblate:
    def test_all_arms_over_one_seed(self, tiny_map, tmp_path, capsys):
        out = tmp_path / "abl"
        rc = main(["ablate", "--map", str(tiny_map), "--episodes", "6",
                   "--seeds", "0", "--hidden", "8", "--out", str(out)])
        assert rc == 0
        text = capsys.readouterr().out
        assert "'all' best on" in text and "plain" in text
        assert (out / "ablation_summary.csv").is_file()
        assert (out / "config.json").is_file()
        print(text.splitlines()[-2])
