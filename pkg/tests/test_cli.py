import csv
from pathlib import Path

import numpy as np
import pytest

from compnull.cli import ConfigError, main, parse_config, write_outputs
from compnull.model import table1_preset
from compnull.simharness import SimConfig, run_simulation

GOOD = """
n: 300
reps: 2
alpha: 0.2
seed: 5
methods: [mix, max]
variant:
  sum_lower: 0.9
model:
  a: 0.05
  region: lower
  nulls:
    - {kind: normal, mu: 0, sigma: 1}
    - {kind: noncentral_t, df: 20, delta: -1}
  nu: [0.8, 0.2]
  alt: {kind: normal, mu: -4}
"""


def _write(tmp_path, text, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_preset_config():
    cfg = parse_config(preset=1)
    assert cfg.model == table1_preset(1) and cfg.model.a == 0.05 and cfg.alpha == 0.25


def test_file_config_and_override(tmp_path):
    cfg = parse_config(_write(tmp_path, GOOD), overrides={"alpha": 0.25, "pair_margin": "tight"})
    assert cfg.alpha == 0.25 and cfg.n == 300 and cfg.methods == ("mix", "max")
    assert cfg.variant.sum_lower == 0.9 and cfg.variant.pair_margin == "tight"
    assert cfg.model.family.components[1].kind == "noncentral_t"


@pytest.mark.parametrize(
    "old,new,path",
    [
        ("nu: [0.8, 0.2]", "nu: [0.8, 0.3]", "model.nu"),
        ("  region: lower", "  region: lower\n  colour: red", "model.colour"),
        ("seed: 5", "seed: 5\nrepeats: 3", "repeats"),
        ("{kind: normal, mu: 0, sigma: 1}", "{kind: normal, mu: 0, sigma: -1}", "model.nulls[0]"),
        ("{kind: normal, mu: -4}", "{kind: gumbel, mu: -4}", "model.alt.kind"),
        ("n: 300", "n: many", "n"),
        ("sum_lower: 0.9", "sum_lower: 0.9\n  beta: 1", "variant.beta"),
        ("methods: [mix, max]", "methods: [mix, fisher]", "methods"),
    ],
)
def test_schema_errors_carry_key_path(tmp_path, old, new, path):
    with pytest.raises(ConfigError) as e:
        parse_config(_write(tmp_path, GOOD.replace(old, new)))
    assert e.value.path == path


def test_write_outputs_round_trip(tmp_path):
    rep = run_simulation(SimConfig(table1_preset(1), n=200, reps=2))
    paths = write_outputs(rep, tmp_path)
    assert [p.name for p in paths] == ["metrics.csv", "curves.csv", "coeffs.csv"]
    rows = list(csv.DictReader(open(tmp_path / "curves.csv")))
    assert [r["method"] for r in rows[::200]] == ["glb", "max", "mix", "seq"]
    glb = np.array([float(r["scaled_p"]) for r in rows if r["method"] == "glb"])
    assert np.allclose(glb, rep.curves["glb"][1], rtol=5e-6, atol=0)
    coeffs = list(csv.DictReader(open(tmp_path / "coeffs.csv")))
    assert len(coeffs) == 2 * 200 * 3 and coeffs[0]["k"] == "1"
    metrics = list(csv.DictReader(open(tmp_path / "metrics.csv")))
    assert [m["method"] for m in metrics] == ["glb", "max", "mix", "seq"]


def test_empty_methods_header_only(tmp_path):
    rep = run_simulation(SimConfig(table1_preset(1), n=50, reps=1, methods=()))
    write_outputs(rep, tmp_path)
    assert (tmp_path / "metrics.csv").read_text() == "method,power,fdr,pfdr,sd_tpp\n"


def test_unwritable_directory(tmp_path):
    rep = run_simulation(SimConfig(table1_preset(1), n=50, reps=1, methods=("max",)))
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError) as e:
        write_outputs(rep, blocker / "sub")
    assert str(blocker / "sub") in str(e.value)


def test_cli_end_to_end_byte_identical(tmp_path, capsys):
    args = ["simulate", "--preset", "1", "--n", "200", "--reps", "2", "--methods", "mix,seq"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b"), "--threads", "2"]) == 0
    for name in ("metrics.csv", "curves.csv", "coeffs.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_cli_errors(tmp_path, capsys):
    assert main(["simulate", "--config", str(tmp_path / "missing.yaml")]) != 0
    assert main(["simulate", "--preset", "1", "--methods", "seq,nope"]) != 0
    assert "--methods" in capsys.readouterr().err


def test_cli_mle_from_file(tmp_path, capsys):
    rng = np.random.default_rng(0)
    data = np.concatenate([rng.normal(0, 1, 3000), rng.normal(-2, 1, 1000)])
    p = tmp_path / "sample.txt"
    p.write_text("\n".join(f"{v:.10g}" for v in data))
    assert main(["mle", "--preset", "1", "--sample", str(p)]) == 0
    out = capsys.readouterr().out
    nu = [float(v) for v in out.splitlines()[0].split()[1:]]
    assert nu[0] == pytest.approx(0.75, abs=0.05) and nu[2] == pytest.approx(0.25, abs=0.05)
    bad = tmp_path / "bad.txt"
    bad.write_text("1.0\nabc\n")
    assert main(["mle", "--preset", "1", "--sample", str(bad)]) != 0


def test_shipped_example_config_parses():
    cfg = parse_config(Path(__file__).parent.parent / "configs" / "example.yaml")
    assert cfg.n == 2000 and cfg.model.family.size == 2
