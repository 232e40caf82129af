import hashlib
import io
import json
import subprocess
import sys

import pytest

from outdyn.cli import main
from outdyn.dynamics import ns_experiment
from outdyn.errors import ValidationError
from outdyn.graph import Circuit
from outdyn.io import CORPUS, dumps_map, export_traces, load_graph_map, map_from_document, save_graph_map


def test_load_corpus():
    f = load_graph_map("corpus/fib.json")
    G = f.graph
    assert G.format(f.edge_image(1)) == "ab" and G.format(f.edge_image(2)) == "a"
    g = load_graph_map("fibc")
    assert g.graph.format(g.edge_image(3)) == "c"


@pytest.mark.parametrize("name", CORPUS)
def test_roundtrip(name, tmp_path):
    f = load_graph_map(name)
    p = tmp_path / f"{name}.json"
    save_graph_map(f, p)
    g = load_graph_map(p)
    assert dumps_map(g) == dumps_map(f)
    assert json.loads(p.read_text()) == json.loads(dumps_map(f))


def test_bad_documents(tmp_path):
    doc = {"vertices": ["v"], "edges": [{"id": "a", "from": "v", "to": "v"}], "images": {"a": "a-a"}}
    with pytest.raises(ValidationError) as info:
        map_from_document(doc)
    assert "'a'" in str(info.value)
    with pytest.raises(ValidationError):
        map_from_document({"vertices": ["v"], "edges": []})
    p = tmp_path / "broken.json"
    p.write_text('{"vertices": [\n  "v",\n')
    with pytest.raises(ValidationError) as info:
        load_graph_map(p)
    assert "line" in str(info.value)


def test_inconsistent_vertex_map():
    doc = {"vertices": ["u", "w"],
           "edges": [{"id": "x", "from": "u", "to": "w"}, {"id": "y", "from": "u", "to": "w"},
                     {"id": "z", "from": "w", "to": "u"}],
           "images": {"x": "x", "y": "z", "z": "z"},
           "marking": ["xz", "yz"], "generators": ["a", "b"]}
    with pytest.raises(ValidationError):
        map_from_document(doc)


def _traces(fib, fib_inv, seeds):
    return ns_experiment(fib, fib_inv, seeds, nmax=4, max_len=5000)


def test_export_traces(fib, fib_inv, tmp_path):
    tr = _traces(fib, fib_inv, [Circuit((1,))])
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    export_traces(tr, p1)
    export_traces(tr, p2)
    assert p1.read_bytes() == p2.read_bytes()
    lines = p1.read_text().splitlines()
    assert lines[0].split(",")[:2] == ["seed", "n"]
    assert len(lines) == 1 + len(tr[0].rows)
    assert b"\r" not in p1.read_bytes()
    buf = io.StringIO()
    export_traces(tr, buf)
    assert buf.getvalue() == p1.read_text()
    with pytest.raises(ValueError):
        export_traces([], p1)


def _run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_cli_strata(capsys):
    code, out, err = _run(["strata", "corpus/fib.json"], capsys)
    assert code == 0 and "seed=0" in err
    doc = json.loads(out)
    (s,) = doc["strata"]
    assert s["kind"] == "EG" and abs(s["lambda"] - 1.618033988749) < 1e-9


def test_cli_classify(capsys):
    code, out, _ = _run(["classify", "corpus/fib.json", "--word", "aba-b-"], capsys)
    assert code == 0 and json.loads(out)["growth"] == "polynomial"
    code, out, _ = _run(["classify", "fib", "--word", "a"], capsys)
    assert json.loads(out)["growth"] == "exponential"


def test_cli_current_and_reports(capsys):
    code, out, _ = _run(["current", "fib", "--word", "a"], capsys)
    assert code == 0
    fn = json.loads(out)["functionals"]
    assert fn == {"norm": 2, "norm_F": 1, "psi0": 1}
    for cmd in ("gpg", "inps", "report"):
        code, out, _ = _run([cmd, "fibc"], capsys)
        assert code == 0 and json.loads(out)


def test_cli_subst(tmp_path, capsys):
    p = tmp_path / "fib_sub.json"
    p.write_text(json.dumps({"alphabet": ["a", "b"], "rules": {"a": "ab", "b": "a"}}))
    code, out, _ = _run(["subst", str(p), "--letter", "a"], capsys)
    assert code == 0
    rows = {r["word"]: r["limit"] for r in json.loads(out)["frequencies"]}
    assert abs(rows["a"] - 0.6180339887) < 1e-8 and rows["bb"] == 0


def test_cli_exit_codes(capsys, tmp_path):
    assert _run(["growth-audit", "pg1"], capsys)[0] == 2
    assert _run(["ns", "id", "--inverse", "id"], capsys)[0] == 2
    assert _run(["strata", str(tmp_path / "nope.json")], capsys)[0] == 2
    with pytest.raises(SystemExit) as info:
        main(["bogus"])
    assert info.value.code == 64
    with pytest.raises(SystemExit) as info:
        main(["classify", "fib"])
    assert info.value.code == 64


def test_cli_ns_csv(tmp_path, capsys):
    p = tmp_path / "t.csv"
    code, out, _ = _run(["--seed", "5", "ns", "fib", "--inverse", "fib_inv", "--seeds", "2",
                         "--iters", "6", "--csv", str(p)], capsys)
    assert code == 0
    summary = json.loads(out)
    assert summary["seed"] == 5 and summary["seeds"] == 2
    assert p.read_text().startswith("seed,n,")


def test_cli_deterministic():
    def digest():
        r = subprocess.run([sys.executable, "-m", "outdyn.cli", "--seed", "3", "growth-audit", "fib",
                            "--seeds", "3", "--iters", "1"], capture_output=True, check=True)
        return hashlib.sha256(r.stdout).hexdigest()
    assert digest() == digest()
