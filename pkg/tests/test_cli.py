"""Command-line surface: exit codes, printed summaries and written artifacts."""
import json
from fractions import Fraction

import pytest

from kolmo.cli.main import main
from kolmo.cli.schemas import load_system, parse_system
from kolmo.cli.verify import SuiteContext, list_criteria, run_criteria
from kolmo.core.errors import InputError
from kolmo.models.results import Stability
from kolmo.services.polyroots_service import GAMMA
from kolmo.utils import tables
from kolmo.utils.published_polynomials import PublishedPolynomialTable


def run(*argv):
    return main(list(argv))


def test_classify_cc_build(samples_dir, out_dir, capsys):
    code = run("classify", "--input", str(samples_dir / "cc_build.json"), "--out", str(out_dir))
    assert code == 0
    assert "CC-equilibrium at (1, 1), D1=1, D2=1" in capsys.readouterr().out
    report = tables.read_json(out_dir / "classify.json")
    assert report["equilibrium"]["classification"] == "CC-equilibrium"
    assert report["sigma_arcs"]


def test_missing_coefficient_is_an_input_error(samples_dir, tmp_path, out_dir):
    data = json.loads((samples_dir / "lotka_volterra.json").read_text())
    del data["zone1"]["f"]
    path = tmp_path / "broken.json"
    path.write_text(json.dumps(data))
    assert run("classify", "--input", str(path), "--out", str(out_dir)) == 1
    with pytest.raises(InputError):
        parse_system(data)


def test_missing_input_file(tmp_path, out_dir):
    assert run("classify", "--input", str(tmp_path / "nope.json"), "--out", str(out_dir)) == 1


def test_command_needs_input(out_dir):
    assert run("cycles", "--out", str(out_dir)) == 1


def test_samples_parse(samples_dir):
    for path in sorted(samples_dir.glob("*.json")):
        spec = load_system(path)
        assert spec.build() is not None


def test_lyapunov_on_exact_center(samples_dir, out_dir, capsys):
    code = run("lyapunov", "--input", str(samples_dir / "c3_ii_center.json"), "--precision", "rational",
               "--out", str(out_dir))
    assert code == 0
    assert "center-suspected" in capsys.readouterr().out
    df = tables.read_csv(out_dir / "lyapunov.csv")
    assert list(df.columns[:2]) == ["k", "W"]
    assert (df["W"] == 0).all()


def test_displacement_csv_is_deterministic(samples_dir, tmp_path):
    paths = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert run("displacement", "--input", str(samples_dir / "lotka_volterra.json"), "--out", str(out)) == 0
        paths.append(out / "displacement.csv")
    assert paths[0].read_bytes() == paths[1].read_bytes()
    df = tables.read_csv(paths[0])
    assert list(df.columns[:2]) == ["rho", "delta"]
    assert df["delta"].abs().max() < 1e-8


def test_lotka_volterra_has_no_cycles(samples_dir, out_dir, capsys):
    assert run("cycles", "--input", str(samples_dir / "lotka_volterra.json"), "--out", str(out_dir)) == 0
    assert "0 cycle(s)" in capsys.readouterr().out
    assert tables.read_csv(out_dir / "cycles.csv").empty
    report = tables.read_json(out_dir / "cycles.json")
    assert report["count"] == 0
    assert report["center_suspected"]


def test_verify_list(out_dir, capsys):
    assert run("verify", "--list", "--out", str(out_dir)) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 9
    assert lines == list_criteria()


def test_verify_unknown_criterion(out_dir):
    assert run("verify", "--only", "42", "--out", str(out_dir)) == 1


class _WrongG(PublishedPolynomialTable):
    def get(self, name):
        if name == "g":
            return GAMMA ** 2 + 1
        return super().get(name)


def test_corrupted_locus_polynomial_fails_its_criterion(cfg):
    (result,) = run_criteria(SuiteContext(cfg=cfg, table=_WrongG()), only=5)
    assert result.number == 5
    assert not result.passed
    assert result.detail["real_roots"] == 0


@pytest.mark.slow
def test_portrait_shows_the_segment(samples_dir, out_dir):
    assert run("portrait", "--input", str(samples_dir / "pseudo_hopf.json"), "--out", str(out_dir)) == 0
    svg = (out_dir / "pseudo_hopf.svg").read_text()
    assert svg.startswith("<svg") or "<svg" in svg
    assert 'class="sliding"' in svg or 'class="escaping"' in svg


def test_jsonable_conversions():
    data = tables.to_jsonable({"w": (Fraction(1, 3), Fraction(4)), "s": Stability.STABLE, 2: None})
    assert data == {"w": ["1/3", 4], "s": "stable", "2": None}
