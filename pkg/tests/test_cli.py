import json
import math
import subprocess
import sys
import xml.etree.ElementTree as ET

import pytest
import yaml

from srpnav.cli import main
from srpnav.scenario import ParseError, ValidationError, load_scenario, parse_scenario
from srpnav.sim import read_csv

SVG = "{http://www.w3.org/2000/svg}"


def write_yaml(path, data):
    path.write_text(yaml.safe_dump(data))
    return str(path)


def base_dict(**changes):
    data = {"room": {"x": [-5, 5], "y": [-5, 5]}, "obstacles": [], "start": [-3, -3, 0], "targets": [[3, 3]]}
    data.update(changes)
    return data


class TestScenarioFile:
    def test_default_room(self):
        sc = load_scenario()
        assert len(sc.obstacles) == 13
        assert len(sc.interior_obstacles) == 9
        assert (sc.start.x, sc.start.y, sc.start.theta) == (-4.0, -4.0, 0.0)
        assert len(sc.targets) == 3
        assert sc.safe_radius == 0.1

    def test_disks_enclose_tables(self):
        sc = load_scenario()
        for d in sc.disks[:9]:
            assert d.radius == pytest.approx(math.sqrt(2) / 2)

    def test_empty_file(self, tmp_path):
        p = tmp_path / "empty.yaml"
        p.write_text("")
        with pytest.raises(ParseError):
            load_scenario(p)

    def test_malformed_yaml(self, tmp_path):
        p = tmp_path / "bad.yaml"
        p.write_text("room: [1, 2\n")
        with pytest.raises(ParseError):
            load_scenario(p)

    def test_unknown_key(self):
        with pytest.raises(ParseError):
            parse_scenario(base_dict(colour="red"))

    def test_missing_section(self):
        data = base_dict()
        del data["start"]
        with pytest.raises(ParseError):
            parse_scenario(data)

    def test_start_inside_obstacle(self):
        with pytest.raises(ValidationError):
            parse_scenario(base_dict(obstacles=[{"center": [-3, -3], "size": 1.0}]))

    def test_target_outside_room(self):
        with pytest.raises(ValidationError):
            parse_scenario(base_dict(targets=[[7, 0]]))

    def test_indefinite_clf_matrix(self):
        with pytest.raises(ValidationError):
            parse_scenario(base_dict(controller={"P": {"p1": 1, "p2": 2, "p3": 1, "p4": 0, "p5": 1}}))

    def test_explicit_target(self):
        sc = load_scenario().with_target([2.0, -4.0])
        assert (sc.target.x, sc.target.y) == (2.0, -4.0)
        assert not sc.target_has_heading


class TestRun:
    def test_writes_csv_and_svg(self, tmp_path, capsys):
        assert main(["run", "--planner", "clf-cbf", "--target", "3", "--out", str(tmp_path)]) == 0
        traj = read_csv(tmp_path / "clf-cbf_target3.csv")
        assert math.hypot(traj.final_pose.x - 0.0, traj.final_pose.y - 1.5) <= 0.1
        root = ET.parse(tmp_path / "clf-cbf_target3.svg").getroot()
        assert root.tag == SVG + "svg"
        assert len(root.findall(f".//{SVG}path")) == 1
        assert "Reached" in capsys.readouterr().out

    @pytest.mark.parametrize("planner", ["apf", "voronoi"])
    def test_baselines(self, tmp_path, planner):
        assert main(["run", "--planner", planner, "--target", "1", "--out", str(tmp_path)]) == 0
        assert (tmp_path / f"{planner}_target1.csv").exists()

    def test_unknown_planner(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main(["run", "--planner", "rrt", "--out", str(tmp_path)])
        assert exc.value.code == 2

    @pytest.mark.parametrize("target", ["0", "9", "a,b", "1,2,3,4", "0,0"])
    def test_bad_target(self, tmp_path, target):
        assert main(["run", "--target", target, "--out", str(tmp_path)]) == 2

    def test_invalid_scenario(self, tmp_path):
        path = write_yaml(tmp_path / "s.yaml", base_dict(obstacles=[{"center": [-3, -3], "size": 1.0}]))
        assert main(["run", "--scenario", path, "--target", "1", "--out", str(tmp_path)]) == 2

    def test_missing_scenario_file(self, tmp_path):
        assert main(["run", "--scenario", str(tmp_path / "nope.yaml"), "--out", str(tmp_path)]) == 3

    def test_output_path_is_a_file(self, tmp_path):
        f = tmp_path / "file"
        f.write_text("")
        assert main(["run", "--out", str(f / "sub"), "--max-steps", "5"]) == 3

    def test_timeout_exits_nonzero(self, tmp_path):
        assert main(["run", "--max-steps", "3", "--out", str(tmp_path)]) == 1

    def test_console_entry_point(self, tmp_path):
        out = subprocess.run(
            [sys.executable, "-m", "srpnav.cli", "run", "--planner", "voronoi", "--target", "2", "--out", str(tmp_path)],
            capture_output=True, text=True,
        )
        assert out.returncode == 0, out.stderr
        assert (tmp_path / "voronoi_target2.svg").exists()


class TestBench:
    def test_full_table(self, tmp_path):
        assert main(["bench", "--repeats", "1", "--out", str(tmp_path)]) == 0
        report = json.loads((tmp_path / "bench.json").read_text())
        assert len(report["rows"]) == 9
        assert {(r["target"], r["planner"]) for r in report["rows"]} == {
            (t, p) for t in (1, 2, 3) for p in ("clf-cbf", "apf", "voronoi")
        }
        assert all(not r["failed"] for r in report["rows"])
        assert len(list(tmp_path.glob("*_target*.csv"))) == 9
        for t in (1, 2, 3):
            root = ET.parse(tmp_path / f"bench_target{t}.svg").getroot()
            assert len(root.findall(f".//{SVG}path")) == 3

    def test_zero_repeats(self, tmp_path):
        assert main(["bench", "--repeats", "0", "--out", str(tmp_path)]) == 2

    def test_unknown_planner(self, tmp_path):
        assert main(["bench", "--planners", "apf,rrt", "--out", str(tmp_path)]) == 2

    def test_failed_cell_is_marked(self, tmp_path):
        half = (10 - 0.15) / 4
        data = base_dict(
            obstacles=[{"center": [0, -5 + half], "size": [0.5, 2 * half]}, {"center": [0, 5 - half], "size": [0.5, 2 * half]}],
            start=[-4, 0, 0],
            targets=[[4, 0]],
        )
        path = write_yaml(tmp_path / "wall.yaml", data)
        out = tmp_path / "out"
        assert main(["bench", "--scenario", path, "--planners", "voronoi", "--repeats", "1", "--out", str(out)]) == 0
        (row,) = json.loads((out / "bench.json").read_text())["rows"]
        assert row["failed"] and row["status"] == "NoPath"
        assert "NoPath" in (out / "bench.txt").read_text()


class TestVisionSelftest:
    def test_passes(self, tmp_path, capsys):
        assert main(["vision-selftest", "--out", str(tmp_path)]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        names = [ln.split(":")[0] for ln in lines if "[PASS]" in ln or "[FAIL]" in ln]
        assert len(names) == 10 and len(set(names)) == 10
        assert (tmp_path / "vision_selftest.txt").exists()

    def test_heavy_noise_fails(self):
        assert main(["vision-selftest", "--noise", "50"]) == 1

    def test_negative_noise(self):
        assert main(["vision-selftest", "--noise", "-1"]) == 2
