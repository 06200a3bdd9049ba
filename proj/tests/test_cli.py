# Copyright 2026 The LinearVC Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#  http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.


"""End-to-end checks of the linearvc command-line tool.

Usage: test_cli.py PATH_TO_LINEARVC
"""

import json
import os
import struct
import subprocess
import sys
import tempfile
import unittest
from pathlib import Path

BIN = None


def run(*args, env=None, cwd=None):
    full_env = dict(os.environ)
    full_env.pop("LINEARVC_SEED", None)
    full_env.pop("LINEARVC_THREADS", None)
    full_env.update(env or {})
    return subprocess.run([BIN, *map(str, args)], capture_output=True, text=True,
                          env=full_env, cwd=cwd)


def ok(*args, **kw):
    p = run(*args, **kw)
    if p.returncode != 0:
        raise AssertionError(f"{args} exited {p.returncode}: {p.stderr}")
    lines = p.stdout.strip().splitlines()
    assert len(lines) == 1, p.stdout
    return json.loads(lines[0])


def lvcf_shape(path):
    data = Path(path).read_bytes()
    assert data[:4] == b"LVCF"
    rows, cols = struct.unpack("<QQ", data[8:24])
    assert len(data) == 24 + 4 * rows * cols
    return rows, cols


def write_lvcf(path, rows):
    r, c = len(rows), len(rows[0])
    payload = b"".join(struct.pack("<f", v) for row in rows for v in row)
    Path(path).write_bytes(b"LVCF\x01\x01\x00\x00" + struct.pack("<QQ", r, c) + payload)


class CliTest(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls._tmp = tempfile.TemporaryDirectory()
        cls.dir = Path(cls._tmp.name)
        ok("synth", "--out", cls.dir / "plant", "--frames", 400, "--dim", 16,
           "--rank", 4, "--speakers", 3)
        cls.s0 = cls.dir / "plant" / "speaker_0.lvcf"
        cls.s1 = cls.dir / "plant" / "speaker_1.lvcf"
        cls.s2 = cls.dir / "plant" / "speaker_2.lvcf"

    @classmethod
    def tearDownClass(cls):
        cls._tmp.cleanup()

    def test_synth_layout_and_determinism(self):
        plant = self.dir / "plant"
        for name in ["speaker_0.lvcf", "T_0.lvcf", "b_0.lvcf", "labels.lvcf",
                     "content.lvcf", "centroids.lvcf", "manifest.txt"]:
            self.assertTrue((plant / name).exists(), name)
        self.assertEqual(lvcf_shape(plant / "labels.lvcf"), (400, 1))
        self.assertEqual(lvcf_shape(plant / "T_1.lvcf"), (4, 16))
        again = ok("synth", "--out", self.dir / "again", "--frames", 400, "--dim", 16,
                   "--rank", 4, "--speakers", 3)
        self.assertEqual(again["seed"], 17)
        self.assertEqual(self.s0.read_bytes(), (self.dir / "again" / "speaker_0.lvcf").read_bytes())
        other = ok("synth", "--out", self.dir / "seeded", "--frames", 400, "--dim", 16,
                   "--rank", 4, "--speakers", 3, env={"LINEARVC_SEED": "5"})
        self.assertEqual(other["seed"], 5)
        self.assertNotEqual(self.s0.read_bytes(),
                            (self.dir / "seeded" / "speaker_0.lvcf").read_bytes())

    def test_fit_writes_map_directory(self):
        out = self.dir / "map"
        s = ok("fit", "--src", self.s0, "--tgt", self.s1, "--kind", "unconstrained", "--out", out)
        self.assertEqual(s["subcommand"], "fit")
        self.assertFalse(s["with_bias"])
        for name in ["weight.lvcf", "bias.lvcf", "manifest.txt"]:
            self.assertTrue((out / name).exists())
        self.assertEqual(lvcf_shape(out / "weight.lvcf"), (16, 16))
        self.assertEqual(lvcf_shape(out / "bias.lvcf"), (1, 16))
        ok("apply", "--map", out, "--in", self.s2, "--out", self.dir / "applied.lvcf")
        self.assertEqual(lvcf_shape(self.dir / "applied.lvcf"), (400, 16))

    def test_aligned_orthogonal_fit_on_plant(self):
        s = ok("fit", "--src", self.s0, "--tgt", self.s1, "--kind", "orthogonal", "--bias",
               "--aligned", "--out", self.dir / "omap")
        self.assertTrue(s["with_bias"])
        self.assertLess(s["relative_fit_error"], 0.05)

    def test_match_and_knn_convert(self):
        s = ok("match", "--src", self.s0, "--tgt", self.s1, "--k", 3, "--out", self.dir / "p.lvcf")
        self.assertEqual(s["pairs"], 1200)
        self.assertEqual(lvcf_shape(self.dir / "p.lvcf"), (1200, 3))
        s = ok("knn-convert", "--src", self.s0, "--pool", self.s1, "--out", self.dir / "k.lvcf")
        self.assertEqual(s["k"], 4)
        self.assertEqual(lvcf_shape(self.dir / "k.lvcf"), (400, 16))

    def test_thread_count_does_not_change_outputs(self):
        outs = []
        for t in ["1", "4"]:
            path = self.dir / f"m{t}.lvcf"
            ok("match", "--src", self.s0, "--tgt", self.s1, "--k", 2, "--out", path,
               env={"LINEARVC_THREADS": t})
            outs.append(path.read_bytes())
        path = self.dir / "m_flag.lvcf"
        ok("--threads", 3, "match", "--src", self.s0, "--tgt", self.s1, "--k", 2, "--out", path)
        outs.append(path.read_bytes())
        self.assertEqual(outs[0], outs[1])
        self.assertEqual(outs[0], outs[2])

    def test_factorize_and_convert(self):
        fdir = self.dir / "fac"
        s = ok("factorize", "--speakers", self.s0, self.s1, self.s2, "--ids", "s1,s2,s3",
               "--rank", 4, "--out", fdir)
        self.assertEqual(s["pivot"], "s1")
        for name in ["sigma.lvcf", "S_s1.lvcf", "S_s2.lvcf", "S_s3.lvcf", "manifest.txt"]:
            self.assertTrue((fdir / name).exists(), name)
        self.assertEqual(lvcf_shape(fdir / "S_s2.lvcf"), (4, 16))
        ok("convert", "--fact", fdir, "--src-id", "s1", "--tgt-id", "s2", "--in", self.s0,
           "--out", self.dir / "y.lvcf")
        self.assertEqual(lvcf_shape(self.dir / "y.lvcf"), (400, 16))
        p = run("convert", "--fact", fdir, "--src-id", "s1", "--tgt-id", "nobody", "--in",
                self.s0, "--out", self.dir / "z.lvcf")
        self.assertEqual(p.returncode, 1)
        self.assertIn("nobody", p.stderr)

    def test_factorize_default_rank_is_100(self):
        p = run("factorize", "--speakers", self.s0, self.s1, "--out", self.dir / "f100")
        # Two 16-dimensional speakers cannot support rank 100.
        self.assertEqual(p.returncode, 1)
        self.assertIn("rank 100", p.stderr)

    def test_rank_sweep_csv(self):
        out = self.dir / "sweep.csv"
        s = ok("rank-sweep", "--truth", self.dir / "plant", "--ranks", "1,2,4,8,48", "--out", out)
        self.assertEqual(s["ranks"], [1, 2, 4, 8, 48])
        lines = out.read_text().splitlines()
        self.assertEqual(lines[0], "rank,metric_name,value")
        rows = [l.split(",") for l in lines[1:]]
        self.assertEqual({r[0] for r in rows}, {"1", "2", "4", "8", "48"})
        metrics = {r[1] for r in rows}
        self.assertEqual(metrics, {"relative_reconstruction_error", "effective_rank",
                                   "content_accuracy", "speaker_score"})
        acc = {r[0]: float(r[2]) for r in rows if r[1] == "content_accuracy"}
        self.assertGreaterEqual(acc["4"], 0.95)
        self.assertLess(acc["1"], acc["4"])

    def test_rank_sweep_default_grid(self):
        ok("synth", "--out", self.dir / "wide", "--frames", 300, "--dim", 64, "--speakers", 2)
        out = self.dir / "wide.csv"
        ok("rank-sweep", "--speakers", self.dir / "wide" / "speaker_0.lvcf",
           self.dir / "wide" / "speaker_1.lvcf", "--out", out)
        rows = [l.split(",") for l in out.read_text().splitlines()[1:]]
        ranks = sorted({int(r[0]) for r in rows})
        self.assertEqual(ranks, [2, 4, 8, 16, 32, 64, 100])
        self.assertEqual(len([r for r in rows if r[1] == "relative_reconstruction_error"]), 7)

    def test_rank_sweep_is_byte_identical_across_runs(self):
        a, b = self.dir / "a.csv", self.dir / "b.csv"
        ok("rank-sweep", "--speakers", self.s0, self.s1, "--ranks", "2,4", "--out", a)
        ok("rank-sweep", "--speakers", self.s0, self.s1, "--ranks", "2,4", "--out", b,
           "--threads", 2)
        self.assertEqual(a.read_bytes(), b.read_bytes())

    def test_eval(self):
        (self.dir / "ref.tsv").write_text("u1\tthe cat sat\nu2\tHello world\n")
        (self.dir / "hyp.tsv").write_text("u2\thello, world!\nu1\tthe bat sat on\n")
        s = ok("eval", "wer", "--ref", self.dir / "ref.tsv", "--hyp", self.dir / "hyp.tsv")
        self.assertEqual(s["errors"], 2)
        self.assertAlmostEqual(s["value"], 2 / 5)
        s = ok("eval", "cer", "--ref", self.dir / "ref.tsv", "--hyp", self.dir / "hyp.tsv")
        self.assertEqual(s["metric"], "cer")
        (self.dir / "s.csv").write_text(
            "label,score\ngenuine,0.9\ngenuine,0.8\ngenuine,0.2\n"
            "impostor,0.7\nimpostor,0.1\nimpostor,0.05\n")
        s = ok("eval", "eer", "--scores", self.dir / "s.csv")
        self.assertAlmostEqual(s["value"], 1 / 3)
        (self.dir / "empty.tsv").write_text("u1\t...\n")
        p = run("eval", "wer", "--ref", self.dir / "empty.tsv", "--hyp", self.dir / "empty.tsv")
        self.assertEqual(p.returncode, 1)

    def test_export_viz(self):
        ok("fit", "--src", self.s0, "--tgt", self.s1, "--out", self.dir / "vmap", "--aligned")
        s = ok("export-viz", "--map", self.dir / "vmap", "--out", self.dir / "w.pgm")
        self.assertEqual(s["dims"], 16)
        data = (self.dir / "w.pgm").read_bytes()
        self.assertTrue(data.startswith(b"P5\n16 16\n255\n"))
        body = data[len(b"P5\n16 16\n255\n"):]
        self.assertEqual(len(body), 256)
        self.assertTrue(set(body) <= {0, 255})
        ok("export-viz", "--map", self.dir / "vmap", "--out", self.dir / "w8.pgm",
           "--threshold", 0.0, "--dims", 8)
        self.assertEqual((self.dir / "w8.pgm").read_bytes()[len(b"P5\n8 8\n255\n"):],
                         bytes([255]) * 64)

    def test_usage_errors_exit_2(self):
        self.assertEqual(run().returncode, 2)
        self.assertEqual(run("frobnicate").returncode, 2)
        self.assertEqual(run("fit", "--src", self.s0).returncode, 2)
        self.assertEqual(run("fit", "--src", self.dir / "missing.lvcf", "--tgt", self.s1,
                             "--out", self.dir / "x").returncode, 2)
        self.assertEqual(run("fit", "--src", self.s0, "--tgt", self.s1, "--kind", "affine",
                             "--out", self.dir / "x").returncode, 2)
        self.assertEqual(run("knn-convert", "--src", self.s0, "--pool", self.s1, "--k", 0,
                             "--out", self.dir / "x").returncode, 2)
        self.assertEqual(run("rank-sweep", "--speakers", self.s0, self.s1, "--ranks", "2,x",
                             "--out", self.dir / "x").returncode, 2)

    def test_runtime_errors_exit_1(self):
        bad = self.dir / "bad.lvcf"
        bad.write_bytes(self.s0.read_bytes()[:30])
        p = run("apply", "--map", self.dir / "plant", "--in", bad, "--out", self.dir / "o.lvcf")
        self.assertEqual(p.returncode, 1)
        p = run("knn-convert", "--src", bad, "--pool", self.s1, "--out", self.dir / "o.lvcf")
        self.assertEqual(p.returncode, 1)
        self.assertIn("truncated", p.stderr)
        self.assertFalse((self.dir / "o.lvcf").exists())

    def test_hand_written_file_is_readable(self):
        write_lvcf(self.dir / "hand.lvcf", [[1.0, 0.0], [0.0, 1.0]])
        write_lvcf(self.dir / "pool.lvcf", [[0.0, 1.0], [1.0, 1.0], [1.0, 0.0]])
        s = ok("match", "--src", self.dir / "hand.lvcf", "--tgt", self.dir / "pool.lvcf",
               "--k", 2, "--out", self.dir / "hp.lvcf")
        self.assertEqual(s["pairs"], 4)
        data = (self.dir / "hp.lvcf").read_bytes()[24:]
        vals = struct.unpack("<12f", data)
        self.assertEqual(vals[1], 2.0)  # first source frame matches pool row 2
        self.assertEqual(vals[4], 1.0)  # then row 1

    def test_help_lists_defaults(self):
        for sub, needle in [("knn-convert", "[4]"), ("factorize", "[100]"),
                            ("convert", "1e-10"), ("export-viz", "[256]"),
                            ("fit", "[unconstrained]"), ("rank-sweep", "2,4,8,16,32,64,100")]:
            p = run(sub, "--help")
            self.assertEqual(p.returncode, 0)
            self.assertIn(needle, p.stdout, sub)
        p = run("--help")
        self.assertIn("LINEARVC_SEED", p.stdout)
        self.assertIn("[17]", p.stdout)


if __name__ == "__main__":
    BIN = os.path.abspath(sys.argv.pop(1))
    unittest.main(verbosity=2)
