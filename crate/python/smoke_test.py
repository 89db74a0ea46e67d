"""Smoke test for the perctri extension module.

Build first:  pip install --no-build-isolation -e crates/perctri-py
Run:          python python/smoke_test.py
"""

import json
import pathlib
import tempfile

import jsonschema

import perctri

SCHEMAS = pathlib.Path(__file__).resolve().parent.parent / "crates" / "perctri-core" / "schemas"


def schema(name):
    return json.loads((SCHEMAS / f"{name}.schema.json").read_text())


def check_configuration():
    c = perctri.Configuration.sample(8, seed=3, trial=1)
    assert c.n == 8 and len(c) == 17 * 17
    assert perctri.Configuration.from_bytes(c.to_bytes()) == c
    assert perctri.Configuration.from_states(8, c.states()).states() == c.states()
    try:
        perctri.Configuration.from_bytes(b"NOTMAGIC" + c.to_bytes()[8:])
    except ValueError:
        pass
    else:
        raise AssertionError("bad magic accepted")

    opened = perctri.Configuration.all_open(2)
    assert opened.feature_counts() == (5, 5, 0)
    fs = opened.features()
    assert fs.gamma == [(x, -2) for x in range(-2, 3)]
    assert perctri.Configuration.all_closed(2).feature_counts() == (0, 0, 0)

    l, f, q = c.feature_counts()
    assert q <= l <= f
    fs = c.features()
    assert set(fs.q) <= set(fs.l) <= set(fs.f)
    assert set(fs.q) == set(c.pivotal_flip_oracle())
    assert c.render_svg("LFQG").startswith("<svg")


def check_arms():
    row = perctri.Configuration.from_states(5, [y == 0 for y in range(-5, 6) for _ in range(-5, 6)])
    assert perctri.ArmSpec.annulus(4, 0, 5).occurs(row)
    assert not perctri.ArmSpec.annulus(2, 0, 5).occurs(perctri.Configuration.all_open(5))
    spec = perctri.ArmSpec.restricted(4, 8)
    assert perctri.ArmSpec.from_json(spec.to_json()).to_json() == spec.to_json()


def check_estimates():
    a = perctri.run_moments([4, 8], [1, 2], 64, 7)
    assert a == perctri.run_moments([4, 8], [1, 2], 64, 7)
    assert a.splitlines()[0] == "n,quantity,tau,trials,mean,stderr,seed"
    csv = perctri.run_annulus_arms(2, [4, 8, 16], 200, 1)
    slope, _, _ = perctri.fit_exponent(csv, "U2:oc:m=0")
    assert slope < 0

    exact = json.loads(perctri.exact_enumeration(1, 2))
    jsonschema.validate(exact, schema("oracle"))
    by = {(m["quantity"], m["tau"]): m["value"] for m in exact["moments"]}
    assert by[("L", 1)] == "819/512"

    assert [perctri.choose_c(t) for t in (1, 2, 3, 11)] == [2, 2, 3, 4]
    g = json.loads(perctri.chain_graph(256, [(0, 0), (1, 0), (100, 100)]))
    assert sorted(sum(([c["root"]] + c["members"] for c in g["components"]), [])) == [0, 1, 2]


def check_cli():
    with tempfile.TemporaryDirectory() as d:
        d = pathlib.Path(d)
        cfg, svg = d / "c.bin", d / "c.svg"
        assert perctri.cli(["sample", "--n", "6", "--seed", "1", "--out", str(cfg)]) == 0
        assert perctri.cli(["render", "--config", str(cfg), "--overlays", "LQG", "--out", str(svg)]) == 0
        manifest = json.loads((d / "c.svg.manifest.json").read_text())
        jsonschema.validate(manifest, schema("manifest"))
        assert perctri.cli(["replay", "--manifest", str(d / "c.svg.manifest.json")]) == 0

        oracle = d / "o.json"
        assert perctri.cli(["oracle", "--n", "1", "--out", str(oracle)]) == 0
        jsonschema.validate(json.loads(oracle.read_text()), schema("oracle"))

        table = d / "t.csv"
        assert perctri.cli(["features", "--n", "4,8,16", "--trials", "100", "--seed", "2", "--out", str(table)]) == 0
        fit = d / "fit.json"
        assert perctri.cli(["fit", "--in", str(table), "--quantity", "L", "--tau", "1", "--out", str(fit)]) == 0
        jsonschema.validate(json.loads(fit.read_text()), schema("fit"))

        tuple_file, graph = d / "tuple.json", d / "g.json"
        tuple_file.write_text(json.dumps({"n": 64, "vertices": [{"x": 0, "y": 0}, {"x": 3, "y": 1}, {"x": -40, "y": 20}]}))
        assert perctri.cli(["graph", "--tuple-file", str(tuple_file), "--check", "--out", str(graph)]) == 0
        jsonschema.validate(json.loads(graph.read_text()), schema("graph"))

        ratio = d / "r.json"
        assert perctri.cli(["ratio", "--kappa", "3", "--n", "16", "--trials", "200", "--seed", "4", "--out", str(ratio)]) == 0
        jsonschema.validate(json.loads(ratio.read_text()), schema("ratio"))

        assert perctri.cli(["oracle", "--n", "3"]) == 2
        assert perctri.cli(["sample", "--bogus"]) == 2


if __name__ == "__main__":
    check_configuration()
    check_arms()
    check_estimates()
    check_cli()
    print("smoke test passed")
