from pathlib import Path

import pytest

from src.main import build_parser, main
from src.utils.models import (
    BoundsRequest,
    CheckFamilyRequest,
    KloostermanRequest,
    SieveRequest,
    SweepSummary,
)
from src.utils.sweep_service import SweepService, get_sweep_service


@pytest.fixture
def service() -> SweepService:
    return get_sweep_service()


def test_service_is_shared():
    assert get_sweep_service() is get_sweep_service()


def test_sieve(service):
    assert service.sieve(SieveRequest(lo=3, hi=20)) == "7 primes: 3, 5, 7, 11, 13, 17, 19"
    assert service.sieve(SieveRequest(lo=2040, hi=2048)) == "No primes in [2040, 2048]."


def test_list_presets(service):
    names = [line.split(":")[0] for line in service.list_presets().splitlines()]
    assert names == ["kloosterman", "inverse", "small_d", "gkrs"]


def test_check_certifies_grendel(service):
    outcome = service.check(CheckFamilyRequest(family="grendel:d=3", p=13, mode="cross_check"))
    assert outcome.error is None
    assert outcome.violations == 0
    assert outcome.cross_mismatches == 0
    assert "certified: yes" in outcome.text
    assert "cross-check: agree" in outcome.text


def test_check_reports_skipped_instances(service):
    outcome = service.check(CheckFamilyRequest(family="kloosterman:m=2,5", p=13))
    assert outcome.error is None
    assert "skipped" in outcome.text


def test_check_errors_render_as_text(service):
    outcome = service.check(CheckFamilyRequest(family="aes:d=3", p=13))
    assert outcome.error is not None
    assert outcome.text.startswith("Error: Error checking family - ")

    outcome = service.check(CheckFamilyRequest(family="grendel:d=3", p=15))
    assert outcome.error is not None


def test_check_renders_invalid_parameters(service):
    outcome = service.check(CheckFamilyRequest(family="grendel:d=0", p=13))
    assert outcome.error is not None
    assert outcome.text.startswith("Error: Error checking family - ")
    assert "grendel" in outcome.text

    text = service.evaluate_bounds(BoundsRequest(family="grendel:d=0", p=13))
    assert "no bounds" in text


def test_check_does_not_certify_linear_polynomials(service):
    outcome = service.check(
        CheckFamilyRequest(
            family="polynomial_residue:m=2:f=0,1:t=identity", p=13, mode="cross_check"
        )
    )
    assert outcome.violations == 0
    assert outcome.error is not None
    assert "deg f >= 2" in outcome.text

    outcome = service.check(
        CheckFamilyRequest(family="polynomial_residue:m=2:f=1,0,1", p=13, mode="cross_check")
    )
    assert outcome.error is None
    assert outcome.cross_mismatches == 0


def test_kloosterman_report(service):
    text = service.kloosterman_report(KloostermanRequest(p=13, m=2))
    assert text.startswith("kloosterman spectrum of kloosterman over F_13")
    assert "subgroup order: 6" in text

    text = service.kloosterman_report(KloostermanRequest(p=13, m=5))
    assert text.startswith("Error: Error computing Kloosterman spectrum - ")


def test_evaluate_bounds(service):
    text = service.evaluate_bounds(BoundsRequest(family="power_residue:d=inverse:m=2,4", p=13))
    assert text.count("walsh bounds for power_residue over F_13") == 2
    assert "reference: conjecture" in text

    text = service.evaluate_bounds(BoundsRequest(family="grendel:d=7", p=11))
    assert "[trivial] (non-informative)" in text


def test_parser_requires_a_sweep_source():
    with pytest.raises(SystemExit):
        build_parser().parse_args(["sweep"])


def test_main_check_exit_codes(capsys):
    assert main(["--quiet", "check", "--family", "kloosterman:m=2", "--p", "13"]) == 0
    assert "kloosterman spectrum" in capsys.readouterr().out
    assert main(["--quiet", "check", "--family", "aes", "--p", "13"]) == 2
    assert main(["--quiet", "check", "--family", "grendel:d=3", "--p", "13", "--mode", "fast"]) == 2


def test_main_sweep_writes_outputs(tmp_path: Path, capsys):
    config = tmp_path / "tiny.conf"
    config.write_text(
        "name = tiny\nprimes = 5:19\nfamily = kloosterman:m=2\nfamily = grendel:d=2,3\n",
        encoding="utf-8",
    )
    code = main(
        ["--quiet", "sweep", "--config", str(config), "--out", str(tmp_path), "--workers", "1"]
    )
    assert code == 0
    assert (tmp_path / "tiny.csv").read_text(encoding="utf-8").startswith("# seed=none\n")
    assert (tmp_path / "tiny.json").exists()
    assert str(tmp_path / "tiny.csv") in capsys.readouterr().out


def test_main_sweep_parameter_errors(tmp_path: Path):
    assert main(["--quiet", "sweep", "--config", str(tmp_path / "missing.conf")]) == 2
    assert main(["--quiet", "sweep", "--preset", "gkrs", "--primes", "9:3"]) == 2


@pytest.mark.parametrize("tightness, code", [(0.93, 0), (0.5, 1)])
def test_main_sweep_enforces_kloosterman_tightness(monkeypatch, tmp_path: Path, tightness, code):
    def fake_sweep(cfg):
        summary = SweepSummary(
            name=cfg.name,
            mode=cfg.mode,
            seed=cfg.seed,
            prime_range=cfg.prime_range,
            jobs=1,
            evaluated=1,
            skipped=0,
            rows=1,
            certified=1,
            violations=0,
            non_informative=0,
            cross_mismatches=0,
            family_max_ratio={"kloosterman": tightness},
            kloosterman_tightness=tightness,
        )
        return [], summary

    monkeypatch.setattr("src.main.run_sweep", fake_sweep)
    monkeypatch.setattr("src.main.write_outputs", lambda cfg, rows, summary: [])
    argv = ["--quiet", "sweep", "--preset", "kloosterman", "--primes", "5:7", "--out", str(tmp_path)]
    assert main(argv) == code
